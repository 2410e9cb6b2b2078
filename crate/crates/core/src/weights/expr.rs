//! Expression mini-language for user-supplied weights.
//!
//! Variables `r`, `t` (the angle), `x`, `y`; constants `pi`, `e`; the usual
//! arithmetic with `^` for powers; functions `exp log abs cos sin sqrt pow
//! re im`. Printing and parsing are mutual inverses up to whitespace, which
//! the round-trip tests lock down.

use std::fmt;

use crate::error::{Error, Result};
use crate::funcmodel::PolarPoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    R,
    T,
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedConst {
    Pi,
    E,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Abs,
    Cos,
    Sin,
    Sqrt,
    Pow,
    Re,
    Im,
}

impl Func {
    fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Cos => "cos",
            Func::Sin => "sin",
            Func::Sqrt => "sqrt",
            Func::Pow => "pow",
            Func::Re => "re",
            Func::Im => "im",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightExpr {
    Num(f64),
    Var(Var),
    Const(NamedConst),
    Neg(Box<WeightExpr>),
    Bin(BinOp, Box<WeightExpr>, Box<WeightExpr>),
    Call(Func, Vec<WeightExpr>),
}

impl WeightExpr {
    /// Evaluate at a polar point. All variables are real, so `re` is the
    /// identity and `im` is identically zero.
    pub fn eval(&self, p: PolarPoint) -> f64 {
        match self {
            WeightExpr::Num(c) => *c,
            WeightExpr::Var(Var::R) => p.r,
            WeightExpr::Var(Var::T) => p.theta,
            WeightExpr::Var(Var::X) => p.x(),
            WeightExpr::Var(Var::Y) => p.y(),
            WeightExpr::Const(NamedConst::Pi) => std::f64::consts::PI,
            WeightExpr::Const(NamedConst::E) => std::f64::consts::E,
            WeightExpr::Neg(e) => -e.eval(p),
            WeightExpr::Bin(op, a, b) => {
                let (a, b) = (a.eval(p), b.eval(p));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            WeightExpr::Call(f, args) => {
                let a = args[0].eval(p);
                match f {
                    Func::Exp => a.exp(),
                    Func::Log => a.ln(),
                    Func::Abs => a.abs(),
                    Func::Cos => a.cos(),
                    Func::Sin => a.sin(),
                    Func::Sqrt => a.sqrt(),
                    Func::Pow => a.powf(args[1].eval(p)),
                    Func::Re => a,
                    Func::Im => 0.0,
                }
            }
        }
    }

    /// True when the expression mentions the variable (after re/im folding
    /// this is purely syntactic).
    pub fn mentions(&self, v: Var) -> bool {
        match self {
            WeightExpr::Var(u) => *u == v,
            WeightExpr::Num(_) | WeightExpr::Const(_) => false,
            WeightExpr::Neg(e) => e.mentions(v),
            WeightExpr::Bin(_, a, b) => a.mentions(v) || b.mentions(v),
            WeightExpr::Call(_, args) => args.iter().any(|a| a.mentions(v)),
        }
    }

    pub fn parse(src: &str) -> Result<WeightExpr> {
        Parser::new(src)?.parse_all()
    }

    fn precedence(&self) -> u8 {
        match self {
            WeightExpr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            WeightExpr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            WeightExpr::Neg(_) => 3,
            WeightExpr::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = self.precedence();
        if prec < min {
            write!(f, "(")?;
        }
        match self {
            WeightExpr::Num(c) => write!(f, "{c}")?,
            WeightExpr::Var(Var::R) => write!(f, "r")?,
            WeightExpr::Var(Var::T) => write!(f, "t")?,
            WeightExpr::Var(Var::X) => write!(f, "x")?,
            WeightExpr::Var(Var::Y) => write!(f, "y")?,
            WeightExpr::Const(NamedConst::Pi) => write!(f, "pi")?,
            WeightExpr::Const(NamedConst::E) => write!(f, "e")?,
            WeightExpr::Neg(e) => {
                write!(f, "-")?;
                e.fmt_prec(f, 3)?;
            }
            WeightExpr::Bin(op, a, b) => {
                let (sym, l, r) = match op {
                    BinOp::Add => ("+", 1, 2),
                    BinOp::Sub => ("-", 1, 2),
                    BinOp::Mul => ("*", 2, 3),
                    BinOp::Div => ("/", 2, 3),
                    // right-associative: a^b^c = a^(b^c)
                    BinOp::Pow => ("^", 5, 4),
                };
                a.fmt_prec(f, l)?;
                write!(f, " {sym} ")?;
                b.fmt_prec(f, r)?;
            }
            WeightExpr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    a.fmt_prec(f, 0)?;
                }
                write!(f, ")")?;
            }
        }
        if prec < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for WeightExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self> {
        let mut toks = Vec::new();
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            let start = i;
            match c {
                ' ' | '\t' | '\n' | '\r' => {
                    i += 1;
                }
                '+' => {
                    toks.push((Tok::Plus, start));
                    i += 1;
                }
                '-' => {
                    toks.push((Tok::Minus, start));
                    i += 1;
                }
                '*' => {
                    toks.push((Tok::Star, start));
                    i += 1;
                }
                '/' => {
                    toks.push((Tok::Slash, start));
                    i += 1;
                }
                '^' => {
                    toks.push((Tok::Caret, start));
                    i += 1;
                }
                '(' => {
                    toks.push((Tok::LParen, start));
                    i += 1;
                }
                ')' => {
                    toks.push((Tok::RParen, start));
                    i += 1;
                }
                ',' => {
                    toks.push((Tok::Comma, start));
                    i += 1;
                }
                '0'..='9' | '.' => {
                    while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                        i += 1;
                    }
                    // exponent part, careful not to eat a trailing ident `e`
                    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                        let mut j = i + 1;
                        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                            j += 1;
                        }
                        if j < bytes.len() && bytes[j].is_ascii_digit() {
                            i = j;
                            while i < bytes.len() && bytes[i].is_ascii_digit() {
                                i += 1;
                            }
                        }
                    }
                    let text = &src[start..i];
                    let v: f64 = text.parse().map_err(|_| Error::WeightParse {
                        src: src.to_string(),
                        pos: start,
                        msg: format!("bad number literal `{text}`"),
                    })?;
                    toks.push((Tok::Num(v), start));
                }
                'a'..='z' | 'A'..='Z' | '_' => {
                    while i < bytes.len()
                        && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                    {
                        i += 1;
                    }
                    toks.push((Tok::Ident(src[start..i].to_string()), start));
                }
                other => {
                    return Err(Error::WeightParse {
                        src: src.to_string(),
                        pos: start,
                        msg: format!("unexpected character `{other}`"),
                    });
                }
            }
        }
        Ok(Self { src, toks, at: 0 })
    }

    fn err(&self, pos: usize, msg: impl Into<String>) -> Error {
        Error::WeightParse { src: self.src.to_string(), pos, msg: msg.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.src.len(), |(_, p)| *p)
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        let pos = self.pos();
        match self.bump() {
            Some((t, _)) if t == want => Ok(()),
            _ => Err(self.err(pos, format!("expected {what}"))),
        }
    }

    fn parse_all(mut self) -> Result<WeightExpr> {
        if self.toks.is_empty() {
            return Err(self.err(0, "empty expression"));
        }
        let e = self.parse_expr(0)?;
        if self.at != self.toks.len() {
            return Err(self.err(self.pos(), "trailing input after expression"));
        }
        Ok(e)
    }

    fn parse_expr(&mut self, min_bp: u8) -> Result<WeightExpr> {
        let mut lhs = self.parse_prefix()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                Some(Tok::Caret) => BinOp::Pow,
                _ => break,
            };
            let (l_bp, r_bp) = match op {
                BinOp::Add | BinOp::Sub => (10, 11),
                BinOp::Mul | BinOp::Div => (20, 21),
                BinOp::Pow => (31, 30),
            };
            if l_bp < min_bp {
                break;
            }
            self.bump();
            let rhs = self.parse_expr(r_bp)?;
            lhs = WeightExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_prefix(&mut self) -> Result<WeightExpr> {
        let pos = self.pos();
        match self.bump() {
            Some((Tok::Num(v), _)) => Ok(WeightExpr::Num(v)),
            Some((Tok::Minus, _)) => {
                let inner = self.parse_expr(25)?;
                Ok(WeightExpr::Neg(Box::new(inner)))
            }
            Some((Tok::LParen, _)) => {
                let e = self.parse_expr(0)?;
                self.expect(Tok::RParen, "closing `)`")?;
                Ok(e)
            }
            Some((Tok::Ident(name), ident_pos)) => self.parse_ident(&name, ident_pos),
            _ => Err(self.err(pos, "expected a value")),
        }
    }

    fn parse_ident(&mut self, name: &str, pos: usize) -> Result<WeightExpr> {
        match name {
            "r" => return Ok(WeightExpr::Var(Var::R)),
            "t" => return Ok(WeightExpr::Var(Var::T)),
            "x" => return Ok(WeightExpr::Var(Var::X)),
            "y" => return Ok(WeightExpr::Var(Var::Y)),
            "pi" => return Ok(WeightExpr::Const(NamedConst::Pi)),
            "e" => return Ok(WeightExpr::Const(NamedConst::E)),
            _ => {}
        }
        let func = match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "cos" => Func::Cos,
            "sin" => Func::Sin,
            "sqrt" => Func::Sqrt,
            "pow" => Func::Pow,
            "re" => Func::Re,
            "im" => Func::Im,
            _ => return Err(self.err(pos, format!("unknown name `{name}`"))),
        };
        self.expect(Tok::LParen, &format!("`(` after function `{name}`"))?;
        let mut args = vec![self.parse_expr(0)?];
        while self.peek() == Some(&Tok::Comma) {
            self.bump();
            args.push(self.parse_expr(0)?);
        }
        self.expect(Tok::RParen, "closing `)`")?;
        if args.len() != func.arity() {
            return Err(self.err(
                pos,
                format!("`{name}` takes {} argument(s), got {}", func.arity(), args.len()),
            ));
        }
        Ok(WeightExpr::Call(func, args))
    }
}
