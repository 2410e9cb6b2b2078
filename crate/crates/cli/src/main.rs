//! `bergman-lab`: weight condition checks, norms, and approximation studies
//! as CSV-emitting subcommands.
//!
//! Exit codes: 0 success, 2 condition-check failure (CI gating), 1 usage or
//! runtime error.  All numeric output uses 17 significant digits and every
//! run is reproducible byte for byte from its flags; `BERGMAN_LAB_THREADS`
//! caps the worker pool without affecting output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use bergman_core::conditions::{BIHARMONIC_H, BOUNDARY_RADII};
use bergman_core::{
    approximate, best_l2_projection, bergman_norm, boundary_ls_polyfit, check_boundary_vanishing,
    check_dilation_bound, check_monotone_rk, check_superbiharmonic, degree_study, dilation_study,
    farrell_dilate, jordan_approximate, make_test_function, parse_domain, parse_weight,
    pullback_norm, rule_id, space_norm, suggest_k, ConditionReport, ConvergenceTable,
    FunctionModel, GridSpec, Method, NormSpace, Polynomial, QuadratureRule, StudyRow,
};

#[derive(Parser)]
#[command(
    name = "bergman-lab",
    version,
    about = "Weighted Bergman/Dirichlet/Besov norms, weight condition checkers, and polynomial approximation studies on the disk"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct RuleArgs {
    /// Radial Gauss-Legendre node count
    #[arg(long, default_value_t = 64)]
    nr: usize,
    /// Angular node count
    #[arg(long, default_value_t = 128)]
    ntheta: usize,
    /// Disk radius
    #[arg(long = "R", default_value_t = 1.0)]
    radius: f64,
}

impl RuleArgs {
    fn build(&self) -> Result<QuadratureRule, bergman_core::Error> {
        QuadratureRule::new(self.nr, self.ntheta, self.radius)
    }
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Write the CSV here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a gnuplot script next to --out
    #[arg(long, requires = "out")]
    plot: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run weight condition checkers; the selected condition gates the exit code
    CheckWeight {
        /// Weight source string (catalog:... or expr:...)
        #[arg(long)]
        weight: String,
        /// Dilation exponent k; defaults to the suggest-k search result
        #[arg(long)]
        k: Option<u32>,
        /// Lower end of the dilation range
        #[arg(long, default_value_t = 0.5)]
        r0: f64,
        /// Largest admissible constant C
        #[arg(long, default_value_t = 16.0)]
        cmax: f64,
        /// Search cap used when --k is omitted
        #[arg(long, default_value_t = 16)]
        kmax: u32,
        /// Gate: dilation, monotone, boundary, biharmonic, or all
        #[arg(long, default_value = "dilation")]
        condition: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Smallest k whose dilation bound passes; exit 2 when none is found
    SuggestK {
        #[arg(long)]
        weight: String,
        #[arg(long, default_value_t = 16)]
        kmax: u32,
        #[arg(long, default_value_t = 0.5)]
        r0: f64,
        #[arg(long, default_value_t = 16.0)]
        cmax: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Weighted norm of a corpus function
    Norm {
        #[arg(long)]
        weight: String,
        /// Function id with named parameters, e.g. geometric,lambda=1,beta=0.3
        #[arg(long)]
        f: String,
        #[arg(long)]
        p: f64,
        /// bergman, dirichlet, or besov
        #[arg(long, default_value = "bergman")]
        space: String,
        #[command(flatten)]
        rule: RuleArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Error of dilation f - f_r over a list of radii
    DilationStudy {
        #[arg(long)]
        weight: String,
        #[arg(long)]
        f: String,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value = "bergman")]
        space: String,
        /// Comma-separated dilation radii, strictly increasing
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<f64>,
        /// Measure wall-clock seconds (off by default: keeps output byte-stable)
        #[arg(long)]
        timings: bool,
        #[command(flatten)]
        rule: RuleArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Error of a polynomial construction over a list of degrees
    DegreeStudy {
        #[arg(long)]
        weight: String,
        #[arg(long)]
        f: String,
        #[arg(long)]
        p: f64,
        /// taylor, projection, or mergelyan
        #[arg(long)]
        method: String,
        #[arg(long, value_delimiter = ',', required = true)]
        degrees: Vec<usize>,
        #[arg(long)]
        timings: bool,
        #[command(flatten)]
        rule: RuleArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Best L2(w) polynomial projection at a fixed degree
    Project {
        #[arg(long)]
        weight: String,
        #[arg(long)]
        f: String,
        #[arg(long)]
        degree: usize,
        #[command(flatten)]
        rule: RuleArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Polynomial approximation to a target A^p(w) error
    Approximate {
        #[arg(long)]
        weight: String,
        #[arg(long)]
        f: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        rule: RuleArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Farrell dilation + boundary fit on a Jordan domain phi(D)
    JordanStudy {
        #[arg(long)]
        weight: String,
        #[arg(long)]
        f: String,
        #[arg(long)]
        p: f64,
        /// disk, or poly:c2=..[,c3=..]
        #[arg(long, default_value = "disk")]
        domain: String,
        /// Run the two-stage pipeline to this target error
        #[arg(long, conflicts_with = "degrees")]
        eps: Option<f64>,
        /// Sweep boundary-fit degrees at a fixed rho instead
        #[arg(long, value_delimiter = ',')]
        degrees: Option<Vec<usize>>,
        /// Farrell dilation parameter for the degree sweep
        #[arg(long, default_value_t = 0.99)]
        rho: f64,
        #[arg(long)]
        timings: bool,
        #[command(flatten)]
        rule: RuleArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

type DynError = Box<dyn std::error::Error>;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parse `id[,key=value...]` into a corpus function.
fn parse_function(src: &str) -> Result<FunctionModel, DynError> {
    let mut parts = src.split(',');
    let id = parts.next().unwrap_or("").trim();
    let expected: &[&str] = match id {
        "monomial" => &["n"],
        "geometric" => &["lambda", "beta"],
        "exp" => &[],
        other => return Err(format!("unknown function `{other}` (expected monomial, geometric or exp)").into()),
    };
    let mut vals: Vec<Option<f64>> = vec![None; expected.len()];
    for seg in parts {
        let Some((key, value)) = seg.split_once('=') else {
            return Err(format!("expected key=value in function parameters, got `{seg}`").into());
        };
        let Some(idx) = expected.iter().position(|e| *e == key.trim()) else {
            return Err(format!("`{id}` takes parameters {expected:?}, got `{}`", key.trim()).into());
        };
        vals[idx] = Some(value.trim().parse::<f64>().map_err(|_| format!("bad number `{}`", value.trim()))?);
    }
    let params: Vec<f64> = expected
        .iter()
        .zip(&vals)
        .map(|(name, v)| v.ok_or_else(|| format!("missing parameter `{name}` for `{id}`")))
        .collect::<Result<_, _>>()?;
    Ok(make_test_function(id, &params)?)
}

fn parse_space(src: &str) -> Result<NormSpace, DynError> {
    match src {
        "bergman" => Ok(NormSpace::Bergman),
        "dirichlet" => Ok(NormSpace::Dirichlet),
        "besov" => Ok(NormSpace::Besov),
        other => Err(format!("unknown space `{other}` (expected bergman, dirichlet or besov)").into()),
    }
}

/// Write the machine output, keeping standard output clean for one stream:
/// CSV goes to --out (summary to stdout) or to stdout (summary to stderr).
fn emit(out: &OutArgs, machine: &str, summary: &str) -> Result<(), DynError> {
    match &out.out {
        Some(path) => {
            std::fs::write(path, machine)?;
            if out.plot {
                write_plot(path)?;
            }
            println!("{summary}");
            println!("wrote {}", path.display());
        }
        None => {
            print!("{machine}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn write_plot(csv: &Path) -> Result<(), DynError> {
    let gp = csv.with_extension("gp");
    let name = csv
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or("--out path has no printable file name")?;
    let script = format!(
        "set datafile separator ','\n\
         set logscale y\n\
         set xlabel 'param'\n\
         set ylabel 'error_p'\n\
         plot '{name}' using 1:2 with linespoints title 'error_p'\n"
    );
    std::fs::write(&gp, script)?;
    Ok(())
}

/// `key,value` CSV block for a condition report (the report serializes to
/// key=value lines; values never contain commas).
fn report_csv(rep: &ConditionReport) -> String {
    let mut s = String::new();
    for line in rep.to_kv().lines() {
        let (k, v) = line.split_once('=').expect("report lines are key=value");
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

fn report_summary(rep: &ConditionReport) -> String {
    format!(
        "{}: {} (C = {:.6e}, worst ratio {:.6e} at r = {:.4})",
        rep.condition_id,
        if rep.passed { "PASS" } else { "FAIL" },
        rep.estimated_c,
        rep.worst_ratio,
        rep.worst_r,
    )
}

fn kv_preamble(command: &str, fields: &[(&str, &str)]) -> String {
    let mut s = format!("# command={command}\n");
    for (k, v) in fields {
        let _ = writeln!(s, "# {k}={v}");
    }
    s.push_str("key,value\n");
    s
}

fn poly_rows(q: &Polynomial) -> String {
    let mut s = String::new();
    let d = q.degree().unwrap_or(0);
    let _ = writeln!(s, "degree,{d}");
    for n in 0..=d {
        let c = q.coeff(n);
        let _ = writeln!(s, "coeff_{n}_re,{}", num(c.re));
        let _ = writeln!(s, "coeff_{n}_im,{}", num(c.im));
    }
    s
}

fn run(cmd: Cmd) -> Result<u8, DynError> {
    match cmd {
        Cmd::CheckWeight { weight, k, r0, cmax, kmax, condition, out } => {
            let w = parse_weight(&weight)?;
            let grid = GridSpec::default();
            let k = match k {
                Some(k) => k,
                None => suggest_k(&w, kmax, r0, cmax, &grid)?.ok_or_else(|| {
                    format!("no k <= {kmax} satisfies the dilation bound; pass --k explicitly")
                })?,
            };
            let reports: Vec<ConditionReport> = match condition.as_str() {
                "dilation" => vec![check_dilation_bound(&w, k, r0, cmax, &grid)?],
                "monotone" => vec![check_monotone_rk(&w, k, r0, &grid)?],
                "boundary" => vec![check_boundary_vanishing(&w, &BOUNDARY_RADII)?],
                "biharmonic" => vec![check_superbiharmonic(&w, BIHARMONIC_H, &grid)?],
                "all" => vec![
                    check_dilation_bound(&w, k, r0, cmax, &grid)?,
                    check_monotone_rk(&w, k, r0, &grid)?,
                    check_boundary_vanishing(&w, &BOUNDARY_RADII)?,
                    check_superbiharmonic(&w, BIHARMONIC_H, &grid)?,
                ],
                other => {
                    return Err(format!(
                        "unknown condition `{other}` (expected dilation, monotone, boundary, biharmonic or all)"
                    )
                    .into())
                }
            };
            let mut machine = kv_preamble(
                "check-weight",
                &[
                    ("weight", &weight),
                    ("k", &k.to_string()),
                    ("r0", &num(r0)),
                    ("cmax", &num(cmax)),
                    ("condition", &condition),
                ],
            );
            for rep in &reports {
                machine.push_str(&report_csv(rep));
            }
            let summary = reports.iter().map(report_summary).collect::<Vec<_>>().join("\n");
            emit(&out, &machine, &summary)?;
            Ok(if reports.iter().all(|r| r.passed) { 0 } else { 2 })
        }

        Cmd::SuggestK { weight, kmax, r0, cmax, out } => {
            let w = parse_weight(&weight)?;
            let grid = GridSpec::default();
            let found = suggest_k(&w, kmax, r0, cmax, &grid)?;
            let mut machine = kv_preamble(
                "suggest-k",
                &[("weight", &weight), ("kmax", &kmax.to_string()), ("r0", &num(r0)), ("cmax", &num(cmax))],
            );
            match found {
                Some(k) => {
                    let rep = check_dilation_bound(&w, k, r0, cmax, &grid)?;
                    let _ = writeln!(machine, "k,{k}");
                    let _ = writeln!(machine, "estimated_C,{}", num(rep.estimated_c));
                    emit(&out, &machine, &format!("k = {k} (C = {:.6e})", rep.estimated_c))?;
                    Ok(0)
                }
                None => {
                    machine.push_str("k,none\n");
                    emit(&out, &machine, &format!("no k <= {kmax} passes at Cmax = {cmax}"))?;
                    Ok(2)
                }
            }
        }

        Cmd::Norm { weight, f, p, space, rule, out } => {
            let w = parse_weight(&weight)?;
            let func = parse_function(&f)?;
            let sp = parse_space(&space)?;
            let rule = rule.build()?;
            let res = space_norm(sp, &func, &w, p, &rule)?;
            let mut machine = kv_preamble(
                "norm",
                &[("weight", &weight), ("f", &f), ("space", &space), ("rule", &rule_id(&rule))],
            );
            let _ = writeln!(machine, "p,{}", num(p));
            let _ = writeln!(machine, "norm,{}", num(res.value));
            let _ = writeln!(machine, "norm_p,{}", num(res.value_p));
            let _ = writeln!(machine, "metric_only,{}", res.metric_only);
            if let Some(warning) = &res.warning {
                let _ = writeln!(machine, "warning,{}", warning.replace(',', ";"));
            }
            emit(&out, &machine, &format!("{space} norm = {:.10e} (p = {p})", res.value))?;
            Ok(0)
        }

        Cmd::DilationStudy { weight, f, p, space, r, timings, rule, out } => {
            let w = parse_weight(&weight)?;
            let func = parse_function(&f)?;
            let sp = parse_space(&space)?;
            let rule = rule.build()?;
            let table = dilation_study(&func, &w, p, sp, &r, &rule, timings)?;
            let last = table.rows.last().expect("non-empty study");
            let summary = format!(
                "dilation study: {} radii, error_p({}) = {:.6e}",
                table.rows.len(),
                last.param,
                last.error_p
            );
            emit(&out, &table.to_csv(), &summary)?;
            Ok(0)
        }

        Cmd::DegreeStudy { weight, f, p, method, degrees, timings, rule, out } => {
            let w = parse_weight(&weight)?;
            let func = parse_function(&f)?;
            let method = Method::from_str(&method)?;
            let rule = rule.build()?;
            let table = degree_study(&func, &w, p, method, &degrees, &rule, timings)?;
            let last = table.rows.last().expect("non-empty study");
            let summary = format!(
                "degree study: {} degrees, error_p({}) = {:.6e}",
                table.rows.len(),
                last.param,
                last.error_p
            );
            emit(&out, &table.to_csv(), &summary)?;
            Ok(0)
        }

        Cmd::Project { weight, f, degree, rule, out } => {
            let w = parse_weight(&weight)?;
            let func = parse_function(&f)?;
            let rule = rule.build()?;
            let q = best_l2_projection(&func, &w, degree, &rule)?;
            let err = bergman_norm(&func.minus(&FunctionModel::from_polynomial(&q)), &w, 2.0, &rule)?;
            let mut machine = kv_preamble(
                "project",
                &[("weight", &weight), ("f", &f), ("rule", &rule_id(&rule))],
            );
            machine.push_str(&poly_rows(&q));
            let _ = writeln!(machine, "residual,{}", num(err.value));
            emit(&out, &machine, &format!("projection degree {degree}: residual = {:.6e}", err.value))?;
            Ok(0)
        }

        Cmd::Approximate { weight, f, p, eps, rule, out } => {
            let w = parse_weight(&weight)?;
            let func = parse_function(&f)?;
            let rule = rule.build()?;
            let (q, achieved) = approximate(&func, &w, p, eps, &rule)?;
            let mut machine = kv_preamble(
                "approximate",
                &[("weight", &weight), ("f", &f), ("rule", &rule_id(&rule))],
            );
            let _ = writeln!(machine, "p,{}", num(p));
            let _ = writeln!(machine, "eps,{}", num(eps));
            let _ = writeln!(machine, "achieved_error,{}", num(achieved));
            machine.push_str(&poly_rows(&q));
            emit(
                &out,
                &machine,
                &format!("achieved {:.6e} <= eps = {:.1e} at degree {}", achieved, eps, q.degree().unwrap_or(0)),
            )?;
            Ok(0)
        }

        Cmd::JordanStudy { weight, f, p, domain, eps, degrees, rho, timings, rule, out } => {
            let w = parse_weight(&weight)?;
            let func = parse_function(&f)?;
            let map = parse_domain(&domain)?;
            let rule = rule.build()?;
            match (eps, degrees) {
                (Some(eps), None) => {
                    let (q, achieved) = jordan_approximate(&func, &w, p, &map, eps, &rule)?;
                    let mut machine = kv_preamble(
                        "jordan-study",
                        &[("weight", &weight), ("f", &f), ("domain", &domain), ("rule", &rule_id(&rule))],
                    );
                    let _ = writeln!(machine, "p,{}", num(p));
                    let _ = writeln!(machine, "eps,{}", num(eps));
                    let _ = writeln!(machine, "achieved_error,{}", num(achieved));
                    machine.push_str(&poly_rows(&q));
                    emit(
                        &out,
                        &machine,
                        &format!(
                            "achieved {:.6e} <= eps = {:.1e} at degree {} on {domain}",
                            achieved,
                            eps,
                            q.degree().unwrap_or(0)
                        ),
                    )?;
                    Ok(0)
                }
                (None, Some(degrees)) => {
                    let approx = farrell_dilate(&func, &map, rho, p)?;
                    let norm_p = pullback_norm(&func, &w, p, &map, &rule)?.value_p;
                    let mut rows = Vec::with_capacity(degrees.len());
                    for &d in &degrees {
                        let start = std::time::Instant::now();
                        let (q, _sup) =
                            boundary_ls_polyfit(&|u| approx.eval_at_param(u), &map, d, 4 * (d + 1))?;
                        let diff = func.minus(&FunctionModel::from_polynomial(&q));
                        let error_p = pullback_norm(&diff, &w, p, &map, &rule)?.value_p;
                        let wall = if timings { start.elapsed().as_secs_f64() } else { 0.0 };
                        rows.push(StudyRow { param: d as f64, error_p, norm_p, wall_seconds: wall });
                    }
                    let table = ConvergenceTable {
                        space: NormSpace::Bergman,
                        p,
                        weight: weight.clone(),
                        function: format!("{} on {map} (rho={rho})", func.name()),
                        rule: rule_id(&rule),
                        rows,
                    };
                    let last = table.rows.last().expect("non-empty study");
                    let summary = format!(
                        "jordan degree sweep on {domain}: error_p({}) = {:.6e}",
                        last.param, last.error_p
                    );
                    emit(&out, &table.to_csv(), &summary)?;
                    Ok(0)
                }
                _ => Err("pass exactly one of --eps (pipeline) or --degrees (sweep)".into()),
            }
        }
    }
}
