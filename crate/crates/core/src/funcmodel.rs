//! Complex points, polynomials, and the analytic-function abstraction the
//! rest of the crate consumes.

use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};

pub type Complex = num_complex::Complex64;

/// Point of the closed disk in polar form, angle normalized into `[0, 2 pi)`.
///
/// Angular weights are defined on `[0, 2 pi)` and several of them jump at
/// `theta = 0`, so normalization here is load-bearing: every consumer sees
/// the same branch of the angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarPoint {
    pub r: f64,
    pub theta: f64,
}

impl PolarPoint {
    pub fn new(r: f64, theta: f64) -> Self {
        debug_assert!(r >= 0.0, "negative radius {r}");
        let mut theta = theta.rem_euclid(2.0 * std::f64::consts::PI);
        // rem_euclid can return exactly 2 pi when theta is a tiny negative.
        if theta >= 2.0 * std::f64::consts::PI {
            theta = 0.0;
        }
        Self { r, theta }
    }

    pub fn from_complex(z: Complex) -> Self {
        Self::new(z.norm(), z.arg())
    }

    pub fn to_complex(self) -> Complex {
        Complex::from_polar(self.r, self.theta)
    }

    pub fn x(self) -> f64 {
        self.r * self.theta.cos()
    }

    pub fn y(self) -> f64 {
        self.r * self.theta.sin()
    }
}

/// Polynomial in `z` with complex coefficients, index `n` holding the
/// coefficient of `z^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Complex>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<Complex>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    fn trim(&mut self) {
        while let Some(last) = self.coeffs.last() {
            if last.norm() == 0.0 {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[Complex] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> Complex {
        self.coeffs.get(n).copied().unwrap_or_default()
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex) -> Complex {
        let mut acc = Complex::default();
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::zero();
        }
        Polynomial::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(k, &c)| c * (k as f64 + 1.0))
                .collect(),
        )
    }

    /// `p(r z)` as a polynomial: coefficients scaled by `r^n`.
    pub fn dilate(&self, r: f64) -> Polynomial {
        let mut rn = 1.0;
        Polynomial::new(
            self.coeffs
                .iter()
                .map(|&c| {
                    let out = c * rn;
                    rn *= r;
                    out
                })
                .collect(),
        )
    }
}

type PointFn = Arc<dyn Fn(Complex) -> Complex + Send + Sync>;
type CoeffFn = Arc<dyn Fn(usize) -> Complex + Send + Sync>;

/// An analytic function on a disk about the origin: point evaluation, exact
/// derivative, and (when available) a Taylor coefficient generator.
#[derive(Clone)]
pub struct FunctionModel {
    name: String,
    eval: PointFn,
    deriv: PointFn,
    taylor: Option<CoeffFn>,
    analyticity_radius: f64,
}

impl std::fmt::Debug for FunctionModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionModel")
            .field("name", &self.name)
            .field("analyticity_radius", &self.analyticity_radius)
            .field("taylor", &self.taylor.is_some())
            .finish()
    }
}

impl FunctionModel {
    pub fn new(
        name: impl Into<String>,
        analyticity_radius: f64,
        eval: impl Fn(Complex) -> Complex + Send + Sync + 'static,
        deriv: impl Fn(Complex) -> Complex + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
            taylor: None,
            analyticity_radius,
        }
    }

    pub fn with_taylor(mut self, gen: impl Fn(usize) -> Complex + Send + Sync + 'static) -> Self {
        self.taylor = Some(Arc::new(gen));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, z: Complex) -> Complex {
        (self.eval)(z)
    }

    pub fn deriv(&self, z: Complex) -> Complex {
        (self.deriv)(z)
    }

    pub fn analyticity_radius(&self) -> f64 {
        self.analyticity_radius
    }

    pub fn has_taylor(&self) -> bool {
        self.taylor.is_some()
    }

    /// Taylor coefficient `a_n` about 0, if the model carries a generator.
    pub fn taylor_coeff(&self, n: usize) -> Option<Complex> {
        self.taylor.as_ref().map(|g| g(n))
    }

    /// `z^n`.
    pub fn monomial(n: usize) -> Self {
        let nf = n as f64;
        Self::new(
            format!("z^{n}"),
            f64::INFINITY,
            move |z| z.powu(n as u32),
            move |z| {
                if n == 0 {
                    Complex::default()
                } else {
                    z.powu(n as u32 - 1) * nf
                }
            },
        )
        .with_taylor(move |k| if k == n { Complex::new(1.0, 0.0) } else { Complex::default() })
    }

    /// `exp(z)`.
    pub fn exp() -> Self {
        // a_n = a_{n-1} / n, memoized; avoids computing n! (which overflows
        // around n = 171) and degrades gracefully to 0 in subnormal range.
        let memo = Mutex::new(vec![1.0f64]);
        Self::new("exp(z)", f64::INFINITY, |z| z.exp(), |z| z.exp()).with_taylor(move |n| {
            let mut memo = memo.lock().unwrap();
            while memo.len() <= n {
                let k = memo.len();
                let next = memo[k - 1] / k as f64;
                memo.push(next);
            }
            Complex::new(memo[n], 0.0)
        })
    }

    /// `(1 - lambda z)^(-beta)` on the branch with value 1 at the origin
    /// (principal log of `1 - lambda z`, which misses `(-inf, 0]` on the
    /// disk when `|lambda| <= 1`).
    pub fn geometric(lambda: f64, beta: f64) -> Result<Self> {
        if !(lambda.abs() <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "geometric kind needs |lambda| <= 1, got {lambda}"
            )));
        }
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "geometric kind needs beta > 0, got {beta}"
            )));
        }
        let radius = if lambda == 0.0 { f64::INFINITY } else { 1.0 / lambda.abs() };
        let pow = move |z: Complex, e: f64| ((Complex::new(1.0, 0.0) - z * lambda).ln() * -e).exp();
        // a_n = a_{n-1} * lambda * (beta + n - 1) / n, memoized.
        let memo = Mutex::new(vec![Complex::new(1.0, 0.0)]);
        Ok(Self::new(
            format!("(1-{lambda}z)^-{beta}"),
            radius,
            move |z| pow(z, beta),
            move |z| pow(z, beta + 1.0) * (lambda * beta),
        )
        .with_taylor(move |n| {
            let mut memo = memo.lock().unwrap();
            while memo.len() <= n {
                let k = memo.len() as f64;
                let next = *memo.last().unwrap() * (lambda * (beta + k - 1.0) / k);
                memo.push(next);
            }
            memo[n]
        }))
    }

    pub fn from_polynomial(p: &Polynomial) -> Self {
        let coeffs: Vec<Complex> = p.coeffs().to_vec();
        let poly = p.clone();
        let dp = p.derivative();
        Self::new(
            format!("poly(deg {})", p.degree().map_or(-1i64, |d| d as i64)),
            f64::INFINITY,
            move |z| poly.eval(z),
            move |z| dp.eval(z),
        )
        .with_taylor(move |n| coeffs.get(n).copied().unwrap_or_default())
    }

    /// `f - p`, used to measure approximation errors in norm.
    pub fn difference(f: &FunctionModel, p: &Polynomial) -> Self {
        let (fe, fd) = (f.eval.clone(), f.deriv.clone());
        let poly = p.clone();
        let dp = p.derivative();
        let mut out = Self {
            name: format!("{} - poly", f.name),
            eval: Arc::new(move |z| fe(z) - poly.eval(z)),
            deriv: Arc::new(move |z| fd(z) - dp.eval(z)),
            taylor: None,
            analyticity_radius: f.analyticity_radius,
        };
        if let Some(g) = f.taylor.clone() {
            let coeffs: Vec<Complex> = p.coeffs().to_vec();
            out.taylor = Some(Arc::new(move |n| {
                g(n) - coeffs.get(n).copied().unwrap_or_default()
            }));
        }
        out
    }

    /// `f - g` as a model (dilation errors `f - f_r`, truncation errors).
    pub fn minus(&self, other: &FunctionModel) -> Self {
        let (fe, fd) = (self.eval.clone(), self.deriv.clone());
        let (ge, gd) = (other.eval.clone(), other.deriv.clone());
        let mut out = Self {
            name: format!("{} - {}", self.name, other.name),
            eval: Arc::new(move |z| fe(z) - ge(z)),
            deriv: Arc::new(move |z| fd(z) - gd(z)),
            taylor: None,
            analyticity_radius: self.analyticity_radius.min(other.analyticity_radius),
        };
        if let (Some(a), Some(b)) = (self.taylor.clone(), other.taylor.clone()) {
            out.taylor = Some(Arc::new(move |n| a(n) - b(n)));
        }
        out
    }

    /// The dilatation `f_r(z) = f(r z)`, analytic past the closed disk for
    /// `r <` the analyticity radius.
    pub fn dilated(&self, r: f64) -> Self {
        let (fe, fd) = (self.eval.clone(), self.deriv.clone());
        let mut out = Self {
            name: format!("{}@r={r}", self.name),
            eval: Arc::new(move |z| fe(z * r)),
            deriv: Arc::new(move |z| fd(z * r) * r),
            taylor: None,
            analyticity_radius: self.analyticity_radius / r,
        };
        if let Some(g) = self.taylor.clone() {
            out.taylor = Some(Arc::new(move |n| g(n) * r.powi(n as i32)));
        }
        out
    }
}

/// Catalog constructor used by the CLI and the test corpus.
///
/// Kinds: `monomial` (one param, the exponent), `geometric` (params
/// `lambda`, `beta`), `exp` (no params).
pub fn make_test_function(kind: &str, params: &[f64]) -> Result<FunctionModel> {
    match kind {
        "monomial" => {
            let [n] = params else {
                return Err(Error::InvalidParameter(format!(
                    "monomial takes one parameter (the exponent), got {params:?}"
                )));
            };
            if *n < 0.0 || n.fract() != 0.0 || *n > u32::MAX as f64 {
                return Err(Error::InvalidParameter(format!(
                    "monomial exponent must be a nonnegative integer, got {n}"
                )));
            }
            Ok(FunctionModel::monomial(*n as usize))
        }
        "geometric" => {
            let [lambda, beta] = params else {
                return Err(Error::InvalidParameter(format!(
                    "geometric takes parameters (lambda, beta), got {params:?}"
                )));
            };
            FunctionModel::geometric(*lambda, *beta)
        }
        "exp" => {
            if !params.is_empty() {
                return Err(Error::InvalidParameter("exp takes no parameters".into()));
            }
            Ok(FunctionModel::exp())
        }
        other => Err(Error::InvalidParameter(format!("unknown function kind `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_points(n: usize, rho: f64) -> Vec<Complex> {
        // Golden-angle spiral: deterministic, well-spread interior points.
        let phi = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
        (0..n)
            .map(|k| {
                let r = rho * ((k as f64 + 0.5) / n as f64).sqrt();
                Complex::from_polar(r, phi * k as f64)
            })
            .collect()
    }

    #[test]
    fn polar_angle_normalized() {
        let p = PolarPoint::new(0.5, -0.25);
        assert!((0.0..2.0 * std::f64::consts::PI).contains(&p.theta));
        assert!((p.to_complex() - Complex::from_polar(0.5, -0.25)).norm() < 1e-15);
        let q = PolarPoint::new(0.3, 7.0 * std::f64::consts::PI);
        assert!((q.theta - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn horner_oracles() {
        let one = Polynomial::from_real(&[1.0]);
        assert_eq!(one.eval(Complex::new(3.0, -7.0)), Complex::new(1.0, 0.0));
        let zsq = Polynomial::from_real(&[0.0, 0.0, 1.0]);
        assert_eq!(zsq.eval(Complex::new(0.0, 2.0)), Complex::new(-4.0, 0.0));
        let p = Polynomial::from_real(&[1.0, 1.0, 0.5]);
        assert_eq!(p.eval(Complex::new(1.0, 0.0)), Complex::new(2.5, 0.0));
    }

    #[test]
    fn trim_and_degree() {
        let p = Polynomial::from_real(&[1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), Some(1));
        assert_eq!(Polynomial::zero().degree(), None);
        assert_eq!(Polynomial::from_real(&[0.0]).degree(), None);
    }

    #[test]
    fn derivative_and_dilate() {
        let p = Polynomial::from_real(&[1.0, -2.0, 3.0]); // 1 - 2z + 3z^2
        let dp = p.derivative();
        assert_eq!(dp.coeffs(), &[Complex::new(-2.0, 0.0), Complex::new(6.0, 0.0)]);
        let pr = p.dilate(0.5); // 1 - z + 0.75 z^2
        assert!((pr.eval(Complex::new(1.0, 0.0)) - p.eval(Complex::new(0.5, 0.0))).norm() < 1e-15);
    }

    #[test]
    fn catalog_point_values() {
        let m3 = FunctionModel::monomial(3);
        assert!((m3.eval(Complex::new(0.5, 0.0)).re - 0.125).abs() < 1e-15);
        assert!((m3.deriv(Complex::new(0.5, 0.0)).re - 0.75).abs() < 1e-15);

        let g = FunctionModel::geometric(1.0, 1.0).unwrap();
        for n in 0..20 {
            assert!((g.taylor_coeff(n).unwrap() - Complex::new(1.0, 0.0)).norm() < 1e-15);
        }

        let e = FunctionModel::exp();
        assert!((e.eval(Complex::new(1.0, 0.0)).re - 2.718281828).abs() < 1e-9);
        let mut fact = 1.0;
        for n in 1..=10 {
            fact *= n as f64;
            assert!((e.taylor_coeff(n).unwrap().re - 1.0 / fact).abs() < 1e-15);
        }
    }

    #[test]
    fn geometric_rejects_bad_params() {
        assert!(FunctionModel::geometric(1.5, 1.0).is_err());
        assert!(FunctionModel::geometric(0.5, 0.0).is_err());
        assert!(make_test_function("nope", &[]).is_err());
        assert!(make_test_function("monomial", &[2.5]).is_err());
    }

    #[test]
    fn deriv_matches_central_differences() {
        let h = 1e-5;
        let models = [
            FunctionModel::monomial(3),
            FunctionModel::exp(),
            FunctionModel::geometric(1.0, 1.0).unwrap(),
            FunctionModel::geometric(0.7, 0.5).unwrap(),
        ];
        for f in &models {
            for &z in &sample_points(100, 0.85) {
                let d = f.deriv(z);
                let fd_re = (f.eval(z + h) - f.eval(z - h)) / (2.0 * h);
                let fd_im =
                    (f.eval(z + Complex::new(0.0, h)) - f.eval(z - Complex::new(0.0, h)))
                        / Complex::new(0.0, 2.0 * h);
                let scale = d.norm().max(1.0);
                assert!((d - fd_re).norm() / scale < 1e-6, "{} at {z}", f.name());
                assert!((d - fd_im).norm() / scale < 1e-6, "{} at {z}", f.name());
            }
        }
    }

    #[test]
    fn taylor_partial_sums_converge_monotonically() {
        let models = [
            FunctionModel::monomial(5),
            FunctionModel::exp(),
            FunctionModel::geometric(1.0, 1.0).unwrap(),
            FunctionModel::geometric(0.5, 2.0).unwrap(),
        ];
        for f in &models {
            let rho = 0.9 * f.analyticity_radius().min(1.0);
            for &z in &sample_points(8, rho) {
                let target = f.eval(z);
                let mut sum = Complex::default();
                let mut zn = Complex::new(1.0, 0.0);
                let mut prev = f64::INFINITY;
                for n in 0..=200usize {
                    sum += f.taylor_coeff(n).unwrap() * zn;
                    zn *= z;
                    let err = (sum - target).norm();
                    assert!(
                        err <= prev * (1.0 + 1e-9) + 1e-14,
                        "{} at {z}: err {err} after n={n}, prev {prev}",
                        f.name()
                    );
                    prev = err;
                }
                assert!(prev < 1e-9, "{} at {z}: final error {prev}", f.name());
            }
        }
    }

    #[test]
    fn difference_and_dilation_are_consistent() {
        let f = FunctionModel::exp();
        let p = Polynomial::from_real(&[1.0, 1.0, 0.5]);
        let d = FunctionModel::difference(&f, &p);
        let z = Complex::new(0.3, -0.2);
        assert!((d.eval(z) - (f.eval(z) - p.eval(z))).norm() < 1e-15);
        assert!((d.taylor_coeff(1).unwrap()).norm() < 1e-15);
        assert!((d.taylor_coeff(3).unwrap() - f.taylor_coeff(3).unwrap()).norm() < 1e-15);

        let fr = f.dilated(0.5);
        assert!((fr.eval(z) - f.eval(z * 0.5)).norm() < 1e-15);
        assert!((fr.deriv(z) - f.deriv(z * 0.5) * 0.5).norm() < 1e-15);
        assert!((fr.taylor_coeff(4).unwrap().re - (1.0 / 24.0) * 0.0625).abs() < 1e-15);
    }
}
