//! Product quadrature on disks `{|z| < R}`.
//!
//! Radial direction: Gauss–Legendre in the substituted variable `t = r^2`,
//! so the area element `r dr = dt/2` makes radial monomial moments exact.
//! Angular direction: a uniform (trapezoidal) grid, which is spectrally
//! accurate for smooth periodic integrands, or 8 composite Gauss–Legendre
//! panels for weights with a jump at `theta = 0` (the uniform rule loses its
//! accuracy the moment the integrand is not periodic-smooth).
//!
//! `integrate` evaluates all nodes (in parallel when the `parallel` feature
//! is on) and reduces with a compensated sum in fixed node order, so the
//! value is bit-identical for any worker count.

use crate::error::{Error, Result};
use crate::exec;
use crate::funcmodel::PolarPoint;

/// How the angular direction is discretised.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AngularScheme {
    /// Uniform grid `theta_j = 2 pi j / n`, weight `2 pi / n` each.
    Uniform,
    /// 8 composite Gauss–Legendre panels over `[0, 2 pi)`; panel edges sit on
    /// multiples of `pi/4`, which covers the kinks of `|cos theta|` and the
    /// jump of non-periodic angular profiles at `0`.
    Panels,
}

const N_PANELS: usize = 8;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the Legendre recurrence; roots are computed for one
/// half and mirrored so the rule is exactly symmetric.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut xi = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, xi);
            dp = d;
            let dx = p / d;
            xi -= dx;
            if dx.abs() < 1e-15 {
                let (_, d2) = legendre_with_deriv(n, xi);
                dp = d2;
                break;
            }
        }
        let wi = 2.0 / ((1.0 - xi * xi) * dp * dp);
        x[i] = -xi;
        w[i] = wi;
        x[n - 1 - i] = xi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0f64;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Tensor-product rule on the disk of radius `radius`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    r: Vec<f64>,
    /// Radial weights with the area element absorbed: `sum_i wr[i] = R^2 / 2`.
    wr: Vec<f64>,
    theta: Vec<f64>,
    wt: Vec<f64>,
    radius: f64,
    scheme: AngularScheme,
}

impl QuadratureRule {
    /// Uniform-angle rule with `n_r` radial and `n_theta` angular nodes.
    pub fn new(n_r: usize, n_theta: usize, radius: f64) -> Result<Self> {
        Self::with_scheme(n_r, n_theta, radius, AngularScheme::Uniform)
    }

    pub fn with_scheme(
        n_r: usize,
        n_theta: usize,
        radius: f64,
        scheme: AngularScheme,
    ) -> Result<Self> {
        if n_r < 2 || n_theta < 4 {
            return Err(Error::InvalidParameter(format!(
                "rule needs N_r >= 2 and N_theta >= 4, got ({n_r}, {n_theta})"
            )));
        }
        if !(radius > 0.0 && radius <= 1.0) {
            return Err(Error::InvalidParameter(format!("radius {radius} outside (0, 1]")));
        }
        let (gx, gw) = gauss_legendre(n_r);
        let rr = radius * radius;
        let r: Vec<f64> = gx.iter().map(|x| ((x + 1.0) / 2.0 * rr).sqrt()).collect();
        let wr: Vec<f64> = gw.iter().map(|w| w * rr / 4.0).collect();

        let (theta, wt) = match scheme {
            AngularScheme::Uniform => {
                let step = 2.0 * std::f64::consts::PI / n_theta as f64;
                ((0..n_theta).map(|j| j as f64 * step).collect(), vec![step; n_theta])
            }
            AngularScheme::Panels => {
                let m = n_theta.div_ceil(N_PANELS);
                let (px, pw) = gauss_legendre(m);
                let mut theta = Vec::with_capacity(N_PANELS * m);
                let mut wt = Vec::with_capacity(N_PANELS * m);
                for k in 0..N_PANELS {
                    let a = 2.0 * std::f64::consts::PI * k as f64 / N_PANELS as f64;
                    let b = 2.0 * std::f64::consts::PI * (k + 1) as f64 / N_PANELS as f64;
                    for (x, w) in px.iter().zip(&pw) {
                        theta.push((x + 1.0) / 2.0 * (b - a) + a);
                        wt.push(w * (b - a) / 2.0);
                    }
                }
                (theta, wt)
            }
        };
        Ok(Self { r, wr, theta, wt, radius, scheme })
    }

    pub fn n_radial(&self) -> usize {
        self.r.len()
    }

    pub fn n_angular(&self) -> usize {
        self.theta.len()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn scheme(&self) -> AngularScheme {
        self.scheme
    }

    /// Same nodes re-built on a different disk radius.
    pub fn rescaled(&self, radius: f64) -> Result<Self> {
        Self::with_scheme(self.r.len(), self.theta.len(), radius, self.scheme)
    }

    /// Same node counts with the angular scheme replaced.
    pub fn with_angular(&self, scheme: AngularScheme) -> Result<Self> {
        if scheme == self.scheme {
            return Ok(self.clone());
        }
        Self::with_scheme(self.r.len(), self.theta.len(), self.radius, scheme)
    }

    /// Rule with both directions refined by `factor` (for stability probes).
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::with_scheme(self.r.len() * factor, self.theta.len() * factor, self.radius, self.scheme)
    }

    /// Nodes in the fixed evaluation order together with their area weights.
    pub fn nodes(&self) -> impl Iterator<Item = (PolarPoint, f64)> + '_ {
        let nt = self.theta.len();
        (0..self.r.len() * nt).map(move |idx| {
            let (i, j) = (idx / nt, idx % nt);
            (PolarPoint::new(self.r[i], self.theta[j]), self.wr[i] * self.wt[j])
        })
    }

    /// `integral of g dA` over the disk, compensated and order-fixed.
    ///
    /// A non-finite integrand value aborts with the offending node named.
    pub fn integrate<G: Fn(PolarPoint) -> f64 + Sync>(&self, g: G) -> Result<f64> {
        let terms = exec::map_indexed(self.r.len() * self.theta.len(), self.term_fn(&g));
        self.reduce(&terms, &g)
    }

    /// Sequential reference path; always produces the same bits as
    /// [`QuadratureRule::integrate`].
    pub fn integrate_seq<G: Fn(PolarPoint) -> f64 + Sync>(&self, g: G) -> Result<f64> {
        let terms = exec::map_indexed_seq(self.r.len() * self.theta.len(), self.term_fn(&g));
        self.reduce(&terms, &g)
    }

    fn term_fn<'a, G: Fn(PolarPoint) -> f64 + Sync>(
        &'a self,
        g: &'a G,
    ) -> impl Fn(usize) -> f64 + Sync + 'a {
        let nt = self.theta.len();
        move |idx| {
            let (i, j) = (idx / nt, idx % nt);
            self.wr[i] * self.wt[j] * g(PolarPoint::new(self.r[i], self.theta[j]))
        }
    }

    fn reduce<G: Fn(PolarPoint) -> f64 + Sync>(&self, terms: &[f64], g: &G) -> Result<f64> {
        if let Some(idx) = terms.iter().position(|t| !t.is_finite()) {
            let nt = self.theta.len();
            let p = PolarPoint::new(self.r[idx / nt], self.theta[idx % nt]);
            return Err(Error::NonFiniteSample { index: idx, r: p.r, theta: p.theta, value: g(p) });
        }
        Ok(exec::compensated_sum(terms))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn legendre_five_point_is_ninth_order() {
        let (x, w) = gauss_legendre(5);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-15);
        for i in 0..5 {
            assert_eq!(x[i], -x[4 - i]); // exact mirror symmetry
            assert_eq!(w[i], w[4 - i]);
        }
        for k in 0..=9usize {
            let num: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((num - exact).abs() < 1e-14, "k={k}: {num} vs {exact}");
        }
    }

    #[test]
    fn weights_sum_to_disk_area() {
        for (nr, nt, rad) in [(64, 128, 1.0), (64, 128, 0.5), (17, 31, 0.9)] {
            let rule = QuadratureRule::new(nr, nt, rad).unwrap();
            let total: f64 = rule.integrate(|_| 1.0).unwrap();
            assert!(
                (total - PI * rad * rad).abs() < 1e-13,
                "area mismatch at ({nr},{nt},{rad}): {total}"
            );
        }
        let rule = QuadratureRule::with_scheme(32, 64, 1.0, AngularScheme::Panels).unwrap();
        assert!((rule.integrate(|_| 1.0).unwrap() - PI).abs() < 1e-13);
    }

    #[test]
    fn tiny_rule_integrates_abs_z_squared_exactly() {
        // |z|^2 = t is degree 1 in t; a 2-point radial rule is exact.
        let rule = QuadratureRule::new(2, 4, 1.0).unwrap();
        let v = rule.integrate(|p| p.r * p.r).unwrap();
        assert!((v - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn smooth_oracles() {
        let rule = QuadratureRule::new(8, 16, 1.0).unwrap();
        let a = rule.integrate(|p| (p.r * p.theta.cos()).powi(2)).unwrap();
        assert!((a - PI / 4.0).abs() < 1e-14); // integral of x^2 over the disk
        let b = rule.integrate(|p| 1.0 - p.r * p.r).unwrap();
        assert!((b - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn uniform_theta_rule_is_spectral_for_smooth_periodic() {
        let f = |p: PolarPoint| p.theta.cos().exp() * (1.0 - p.r * p.r);
        let coarse = QuadratureRule::new(32, 32, 1.0).unwrap().integrate(f).unwrap();
        let fine = QuadratureRule::new(32, 64, 1.0).unwrap().integrate(f).unwrap();
        assert!((coarse - fine).abs() < 1e-12);
    }

    #[test]
    fn truncated_rule_matches_smoothly_cutoff_integrand() {
        // g vanishes to fifth order at r = 1/2, so integrating g * 1_{r<1/2}
        // with the full-disk rule agrees with the rule built on radius 1/2.
        let g = |p: PolarPoint| {
            let s = 0.25 - p.r * p.r;
            if s > 0.0 { s.powi(5) } else { 0.0 }
        };
        let full = QuadratureRule::new(64, 64, 1.0).unwrap().integrate(g).unwrap();
        let inner = QuadratureRule::new(64, 64, 0.5).unwrap().integrate(g).unwrap();
        assert!((full - inner).abs() < 1e-12, "{full} vs {inner}");
    }

    #[test]
    fn non_finite_integrand_names_the_node() {
        let rule = QuadratureRule::new(16, 8, 1.0).unwrap();
        let err = rule.integrate(|p| if p.r > 0.9 { f64::NAN } else { 1.0 }).unwrap_err();
        match err {
            crate::error::Error::NonFiniteSample { r, value, .. } => {
                assert!(r > 0.9);
                assert!(value.is_nan());
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let rule = QuadratureRule::new(48, 96, 1.0).unwrap();
        let g = |p: PolarPoint| (3.0 * p.theta).cos() * p.r.exp() + (1.0 - p.r).sqrt();
        let a = rule.integrate(g).unwrap();
        let b = rule.integrate_seq(g).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn panel_scheme_handles_jump_at_zero() {
        // 1 - theta/(2 pi) jumps at theta = 0; panels converge fast, the
        // uniform rule is stuck at first order.
        let f = |p: PolarPoint| (1.0 - p.theta / (2.0 * PI)) * p.r.cos();
        let exact = QuadratureRule::with_scheme(64, 512, 1.0, AngularScheme::Panels)
            .unwrap()
            .integrate(f)
            .unwrap();
        let panels = QuadratureRule::with_scheme(64, 64, 1.0, AngularScheme::Panels)
            .unwrap()
            .integrate(f)
            .unwrap();
        assert!((panels - exact).abs() < 1e-12);
    }
}
