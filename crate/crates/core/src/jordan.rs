//! The Carleman–Farrell construction on Jordan domains `G = phi(D)` for a
//! catalog of polynomial conformal maps `phi(u) = u + c2 u^2 + c3 u^3`.
//!
//! The shrinking maps used here are the interior analogue
//! `psi_rho = phi o (rho .) o phi^{-1}`; they reproduce the limit behaviour
//! of the exterior-domain maps in the source construction and reduce exactly
//! to disk dilation when `phi = id`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exec;
use crate::funcmodel::{Complex, FunctionModel, PolarPoint, Polynomial};
use crate::quadrature::QuadratureRule;
use crate::spaces::{adapted, check_p, NormResult, NormSpace};
use crate::weights::WeightSpec;

use std::f64::consts::PI;

/// A certified univalent polynomial map `phi(u) = u + c2 u^2 + c3 u^3` of
/// the unit disk onto a Jordan domain `G`.
#[derive(Clone, Debug)]
pub struct ConformalMap {
    c2: f64,
    c3: f64,
}

impl ConformalMap {
    /// Construct and certify a catalog map.
    ///
    /// The coefficient region `2|c2| + 3|c3| < 1` guarantees univalence
    /// (it forces `|phi(a) - phi(b)| >= |a - b| (1 - 2|c2| - 3|c3|)`); on
    /// top of it three numeric certificates run: separation of 4096
    /// boundary pairs, `|phi'| > 0` on a 64 x 64 grid, and `Re phi' > 0`
    /// on the closed disk (which keeps principal-branch powers of
    /// derivative ratios off the cut).
    pub fn new(c2: f64, c3: f64) -> Result<Self> {
        if !(c2.is_finite() && c3.is_finite()) {
            return Err(Error::InvalidParameter("map coefficients must be finite".into()));
        }
        let map = ConformalMap { c2, c3 };
        let margin = 1.0 - 2.0 * c2.abs() - 3.0 * c3.abs();
        if !(margin > 0.0) {
            return Err(Error::NotUnivalent(format!(
                "coefficients outside the region 2|c2| + 3|c3| < 1 (got {:.3})",
                2.0 * c2.abs() + 3.0 * c3.abs()
            )));
        }

        // 4096 boundary pairs: consecutive points plus a multiplicative-hash
        // partner, covering separations at all scales deterministically.
        let n = 4096usize;
        let pts: Vec<Complex> = (0..n)
            .map(|i| Complex::from_polar(1.0, 2.0 * PI * i as f64 / n as f64))
            .collect();
        let imgs: Vec<Complex> = pts.iter().map(|&u| map.forward(u)).collect();
        let mut min_ratio = f64::INFINITY;
        for i in 0..n {
            for j in [(i + 1) % n, (i.wrapping_mul(2654435761) >> 16) % n] {
                let den = (pts[i] - pts[j]).norm();
                if den < 1e-12 {
                    continue;
                }
                min_ratio = min_ratio.min((imgs[i] - imgs[j]).norm() / den);
            }
        }
        if !(min_ratio > 1e-9) {
            return Err(Error::NotUnivalent(format!(
                "boundary separation ratio degenerates (min {min_ratio:.3e})"
            )));
        }

        let mut min_abs = f64::INFINITY;
        let mut min_re = f64::INFINITY;
        for i in 0..64 {
            let r = (i as f64 + 1.0) / 64.0; // includes r = 1
            for j in 0..64 {
                let u = Complex::from_polar(r, 2.0 * PI * j as f64 / 64.0);
                let d = map.derivative(u);
                min_abs = min_abs.min(d.norm());
                min_re = min_re.min(d.re);
            }
        }
        if !(min_abs > 1e-9) {
            return Err(Error::NotUnivalent(format!("|phi'| degenerates (min {min_abs:.3e})")));
        }
        if !(min_re > 0.0) {
            return Err(Error::NotUnivalent(format!(
                "Re phi' reaches {min_re:.3e} <= 0 on the closed disk"
            )));
        }
        Ok(map)
    }

    pub fn identity() -> Self {
        ConformalMap { c2: 0.0, c3: 0.0 }
    }

    pub fn is_identity(&self) -> bool {
        self.c2 == 0.0 && self.c3 == 0.0
    }

    pub fn coeffs(&self) -> (f64, f64) {
        (self.c2, self.c3)
    }

    pub fn forward(&self, u: Complex) -> Complex {
        u + u * u * (self.c2 + u * self.c3)
    }

    pub fn derivative(&self, u: Complex) -> Complex {
        Complex::new(1.0, 0.0) + u * (2.0 * self.c2 + u * 3.0 * self.c3)
    }

    /// `phi^{-1}(z)` by Newton iteration seeded at `u = z`, falling back to
    /// 32 radial continuation steps from the fixed point `phi(0) = 0`.
    pub fn inverse(&self, z: Complex) -> Result<Complex> {
        if self.is_identity() {
            return Ok(z);
        }
        if let Some(u) = self.newton(z, z) {
            return Ok(u);
        }
        let mut u = Complex::default();
        let mut ok = true;
        for j in 1..=32 {
            let target = z * (j as f64 / 32.0);
            match self.newton(u, target) {
                Some(next) => u = next,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            Ok(u)
        } else {
            Err(Error::InverseDiverged { re: z.re, im: z.im })
        }
    }

    fn newton(&self, seed: Complex, z: Complex) -> Option<Complex> {
        let tol = 1e-14 * (1.0 + z.norm());
        let mut u = seed;
        for _ in 0..50 {
            let res = self.forward(u) - z;
            if res.norm() <= tol {
                return Some(u);
            }
            let d = self.derivative(u);
            if d.norm() < 1e-14 || !u.re.is_finite() || !u.im.is_finite() {
                return None;
            }
            u -= res / d;
        }
        if (self.forward(u) - z).norm() <= 100.0 * tol {
            Some(u)
        } else {
            None
        }
    }
}

impl std::fmt::Display for ConformalMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_identity() {
            f.write_str("disk")
        } else if self.c3 == 0.0 {
            write!(f, "poly:c2={}", self.c2)
        } else {
            write!(f, "poly:c2={},c3={}", self.c2, self.c3)
        }
    }
}

/// Parse a `--domain` string: `disk`, or `poly:c2=<v>[,c3=<v>]`.
pub fn parse_domain(src: &str) -> Result<ConformalMap> {
    if src == "disk" {
        return Ok(ConformalMap::identity());
    }
    let Some(body) = src.strip_prefix("poly:") else {
        return Err(Error::InvalidParameter(format!(
            "domain must be `disk` or `poly:c2=..[,c3=..]`, got `{src}`"
        )));
    };
    let (mut c2, mut c3) = (None, None);
    for seg in body.split(',') {
        let Some((key, value)) = seg.split_once('=') else {
            return Err(Error::InvalidParameter(format!("expected key=value in domain, got `{seg}`")));
        };
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad number `{}` in domain", value.trim())))?;
        match key.trim() {
            "c2" => c2 = Some(value),
            "c3" => c3 = Some(value),
            other => {
                return Err(Error::InvalidParameter(format!("unknown domain parameter `{other}`")));
            }
        }
    }
    ConformalMap::new(c2.unwrap_or(0.0), c3.unwrap_or(0.0))
}

/// Norm of a function given in parameter form `g(u) = (value at phi(u))`:
/// `(int_D |g|^p (w o phi) |phi'|^2 dA)^{1/p}`.
fn pullback_integral<G: Fn(Complex) -> Complex + Sync>(
    g_param: G,
    w: &WeightSpec,
    p: f64,
    map: &ConformalMap,
    rule: &QuadratureRule,
) -> Result<NormResult> {
    check_p(p)?;
    let rule = adapted(rule, w)?;
    let integral = rule.integrate(|pt| {
        let u = pt.to_complex();
        let z = map.forward(u);
        let jac = map.derivative(u).norm_sqr();
        let wv = w.eval(PolarPoint::from_complex(z));
        g_param(u).norm().powf(p) * wv * jac
    })?;
    if integral < 0.0 {
        for (node, _) in rule.nodes() {
            let z = map.forward(node.to_complex());
            let zp = PolarPoint::from_complex(z);
            let wv = w.eval(zp);
            if wv < 0.0 {
                return Err(Error::NegativeWeight { r: zp.r, theta: zp.theta, value: wv });
            }
        }
    }
    let metric_only = p < 1.0;
    Ok(NormResult {
        value: if metric_only { integral } else { integral.powf(1.0 / p) },
        value_p: integral,
        p,
        space: NormSpace::Bergman,
        n_radial: rule.n_radial(),
        n_angular: rule.n_angular(),
        radius: rule.radius(),
        metric_only,
        warning: None,
    })
}

/// `||f||_{A^p(G, w dA)}` computed on the unit disk through `z = phi(u)`,
/// `dA(z) = |phi'(u)|^2 dA(u)` — an exact change of variables, no remapping
/// error beyond quadrature itself.
pub fn pullback_norm(
    f: &FunctionModel,
    w: &WeightSpec,
    p: f64,
    map: &ConformalMap,
    rule: &QuadratureRule,
) -> Result<NormResult> {
    pullback_integral(|u| f.eval(map.forward(u)), w, p, map, rule)
}

/// `F_rho = (f o psi_rho) (psi_rho')^{2/p}` with
/// `psi_rho = phi o (rho .) o phi^{-1}`, analytic on a neighbourhood of
/// the closed domain.
#[derive(Clone)]
pub struct FarrellApproximant {
    f: FunctionModel,
    map: ConformalMap,
    rho: f64,
    p: f64,
}

/// Build the approximant, certifying on a 64 x 64 parameter grid of the
/// closed disk that the derivative factor
/// `psi_rho'(phi(u)) = rho phi'(rho u)/phi'(u)` stays off the branch cut
/// `(-inf, 0]` of the principal power.
pub fn farrell_dilate(
    f: &FunctionModel,
    map: &ConformalMap,
    rho: f64,
    p: f64,
) -> Result<FarrellApproximant> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter(format!("rho must lie in (0, 1), got {rho}")));
    }
    check_p(p)?;
    for i in 0..64 {
        let r = (i as f64 + 1.0) / 64.0;
        for j in 0..64 {
            let u = Complex::from_polar(r, 2.0 * PI * j as f64 / 64.0);
            let val = map.derivative(u * rho) * rho / map.derivative(u);
            if !val.re.is_finite() || !val.im.is_finite() || (val.re <= 0.0 && val.im == 0.0) {
                return Err(Error::BranchCut { re: u.re, im: u.im });
            }
        }
    }
    Ok(FarrellApproximant { f: f.clone(), map: map.clone(), rho, p })
}

impl FarrellApproximant {
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `F(phi(u))` — the form every quadrature and collocation consumer
    /// uses, requiring no Newton inversion.
    pub fn eval_at_param(&self, u: Complex) -> Complex {
        let psi_prime = self.map.derivative(u * self.rho) * self.rho / self.map.derivative(u);
        let factor = if self.p == 2.0 {
            psi_prime
        } else {
            psi_prime.powf(2.0 / self.p)
        };
        self.f.eval(self.map.forward(u * self.rho)) * factor
    }

    /// `F(z)` for `z` in the closed domain, via Newton inversion.
    pub fn eval(&self, z: Complex) -> Result<Complex> {
        Ok(self.eval_at_param(self.map.inverse(z)?))
    }
}

/// Least-squares polynomial fit of `F` on `M` boundary collocation points
/// `z_j = phi(e^{2 pi i j / M})`, the maximum-principle proxy for uniform
/// approximation on the closed domain.  Returns the polynomial and the sup
/// residual over an independent `4M`-point verification set.
///
/// The basis is scaled, `(z/s)^k` with `s = max |z_j|`, to keep the
/// Vandermonde columns comparable in size.
pub fn boundary_ls_polyfit(
    f_at_param: &(dyn Fn(Complex) -> Complex + Sync),
    map: &ConformalMap,
    d: usize,
    m: usize,
) -> Result<(Polynomial, f64)> {
    if m < 4 * (d + 1) {
        return Err(Error::InvalidParameter(format!(
            "need at least {} collocation points for degree {d}, got {m}",
            4 * (d + 1)
        )));
    }
    let us: Vec<Complex> = (0..m)
        .map(|j| Complex::from_polar(1.0, 2.0 * PI * j as f64 / m as f64))
        .collect();
    let zs: Vec<Complex> = us.iter().map(|&u| map.forward(u)).collect();
    let scale = zs.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);

    let mut a = DMatrix::<Complex>::zeros(m, d + 1);
    let mut b = DVector::<Complex>::zeros(m);
    for j in 0..m {
        let zc = zs[j] / scale;
        let mut pw = Complex::new(1.0, 0.0);
        for k in 0..=d {
            a[(j, k)] = pw;
            pw *= zc;
        }
        b[j] = f_at_param(us[j]);
    }
    // Truncated-SVD solve: monomials on a non-circular curve lose rank at
    // high degree, but the minimum-norm solution in the resolvable subspace
    // is exactly the stable least-squares answer; the verification set
    // below certifies the outcome either way.
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    let c = svd
        .solve(&b, 1e-13 * smax)
        .map_err(|_| Error::RankDeficient { ratio: svd.singular_values.min() / smax })?;
    let fit_sup = (&a * &c - &b).iter().map(|r| r.norm()).fold(0.0, f64::max);
    let coeffs: Vec<Complex> = c
        .iter()
        .enumerate()
        .map(|(k, &ck)| ck / scale.powi(k as i32))
        .collect();
    let q = Polynomial::new(coeffs);

    let verification = exec::map_indexed(4 * m, |j| {
        let u = Complex::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / (4 * m) as f64);
        (f_at_param(u) - q.eval(map.forward(u))).norm()
    });
    let sup = verification.into_iter().fold(0.0, f64::max);
    let f_scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if sup > 100.0 * fit_sup + 1e-9 * (1.0 + f_scale) && sup > 1e-6 * (1.0 + f_scale) {
        return Err(Error::IllConditioned { fit: fit_sup, verify: sup });
    }
    Ok((q, sup))
}

/// Two-stage polynomial approximation on `G`: raise `rho` until the
/// pullback error `||f - F_rho||` drops below `eps/2`, then escalate the
/// boundary-fit degree until the measured total error is below `eps`.
pub fn jordan_approximate(
    f: &FunctionModel,
    w: &WeightSpec,
    p: f64,
    map: &ConformalMap,
    eps: f64,
    rule: &QuadratureRule,
) -> Result<(Polynomial, f64)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let mut stage1 = None;
    let mut best = f64::INFINITY;
    for k in 1..=20u32 {
        let rho = 1.0 - 0.5f64.powi(k as i32);
        let approx = farrell_dilate(f, map, rho, p)?;
        let err = pullback_integral(
            |u| f.eval(map.forward(u)) - approx.eval_at_param(u),
            w,
            p,
            map,
            rule,
        )?
        .value;
        best = best.min(err);
        if err <= eps / 2.0 {
            stage1 = Some(approx);
            break;
        }
    }
    let Some(approx) = stage1 else {
        let coarse = pullback_norm(f, w, p, map, rule)?.value_p;
        let fine = pullback_norm(f, w, p, map, &rule.refined(2)?)?.value_p;
        if !coarse.is_finite() || !fine.is_finite() || (fine - coarse).abs() > 0.01 * fine.abs() {
            return Err(Error::NonMember { coarse, fine });
        }
        return Err(Error::DilationStall { best, target: eps / 2.0 });
    };

    let mut best = f64::INFINITY;
    for d in [5usize, 10, 20, 40, 80, 160, 320] {
        let (q, _sup) = boundary_ls_polyfit(&|u| approx.eval_at_param(u), map, d, 4 * (d + 1))?;
        let measured = pullback_integral(
            |u| f.eval(map.forward(u)) - q.eval(map.forward(u)),
            w,
            p,
            map,
            rule,
        )?
        .value;
        if measured <= eps {
            return Ok((q, measured));
        }
        best = best.min(measured);
    }
    Err(Error::TargetUnreachable { best, eps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcmodel::make_test_function;
    use crate::spaces::bergman_norm;
    use crate::weights::parse_weight;

    fn w(s: &str) -> WeightSpec {
        parse_weight(s).unwrap()
    }

    /// `1/(a - z)`, analytic on `|z| < |a|`.
    fn pole_reciprocal(a: Complex) -> FunctionModel {
        FunctionModel::new(
            format!("1/({a} - z)"),
            a.norm(),
            move |z| (a - z).inv(),
            move |z| {
                let d = a - z;
                (d * d).inv()
            },
        )
    }

    #[test]
    fn identity_and_univalence_region() {
        let id = ConformalMap::new(0.0, 0.0).unwrap();
        assert!(id.is_identity());
        let z = Complex::new(0.3, -0.4);
        assert_eq!(id.forward(z), z);

        assert!(ConformalMap::new(0.3, 0.0).is_ok());
        match ConformalMap::new(0.6, 0.0) {
            Err(Error::NotUnivalent(msg)) => assert!(msg.contains("region")),
            other => panic!("expected NotUnivalent, got {other:?}"),
        }
        assert!(ConformalMap::new(0.2, 0.25).is_err()); // 0.4 + 0.75 > 1
    }

    #[test]
    fn area_matches_closed_form() {
        // area(G) = int_D |phi'|^2 dA = pi (1 + 2 c2^2 + 3 c3^2)
        let rule = QuadratureRule::new(32, 32, 1.0).unwrap();
        let one = make_test_function("monomial", &[0.0]).unwrap();
        for (c2, c3) in [(0.3, 0.0), (0.2, 0.1), (0.0, 0.2)] {
            let map = ConformalMap::new(c2, c3).unwrap();
            let area = pullback_norm(&one, &w("expr:1"), 2.0, &map, &rule)
                .unwrap()
                .value_p;
            let want = PI * (1.0 + 2.0 * c2 * c2 + 3.0 * c3 * c3);
            assert!((area - want).abs() < 1e-8, "c2={c2}, c3={c3}: {area} vs {want}");
        }
    }

    #[test]
    fn newton_inverse_round_trips() {
        let map = ConformalMap::new(0.3, -0.05).unwrap();
        for i in 0..40 {
            let u = Complex::from_polar(0.025 * i as f64, 0.37 * i as f64);
            let z = map.forward(u);
            let back = map.inverse(z).unwrap();
            assert!((back - u).norm() < 1e-12, "u={u}");
        }
        // and outside the seed's basin, via continuation
        let edge = map.forward(Complex::from_polar(0.999, 2.5));
        let back = map.inverse(edge).unwrap();
        assert!((map.forward(back) - edge).norm() < 1e-12);
    }

    #[test]
    fn pullback_reduces_to_bergman_on_identity() {
        let id = ConformalMap::identity();
        let rule = QuadratureRule::new(48, 48, 1.0).unwrap();
        let f = make_test_function("geometric", &[0.5, 1.0]).unwrap();
        for spec in ["catalog:linang", "catalog:standard,alpha=1"] {
            let spec = w(spec);
            let direct = bergman_norm(&f, &spec, 2.0, &rule).unwrap().value_p;
            let pulled = pullback_norm(&f, &spec, 2.0, &id, &rule).unwrap().value_p;
            assert!((direct - pulled).abs() <= 1e-12 * direct, "{direct} vs {pulled}");
        }
    }

    #[test]
    fn pullback_matches_independent_coefficient_oracle() {
        // For f = z, w = 1: the integrand is |(phi^2/2)'|^2, and with
        // phi = u + c u^2 the power-series coefficients of (phi^2/2)' are
        // (1, 3c, 2c^2), giving pi (1/2 + 3 c^2 + c^4) by term integration
        // -- derived independently of the quadrature code.  Cross-checked
        // with a 1000^2 cartesian midpoint lattice (different discretization
        // entirely) at its own accuracy level.
        let c = 0.3;
        let map = ConformalMap::new(c, 0.0).unwrap();
        let rule = QuadratureRule::new(48, 48, 1.0).unwrap();
        let f = make_test_function("monomial", &[1.0]).unwrap();
        let got = pullback_norm(&f, &w("expr:1"), 2.0, &map, &rule).unwrap().value_p;
        let want = PI * (0.5 + 3.0 * c * c + c.powi(4));
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");

        let n = 1000;
        let h = 2.0 / n as f64;
        let mut lattice = 0.0;
        for i in 0..n {
            for j in 0..n {
                let u = Complex::new(-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h);
                if u.norm_sqr() < 1.0 {
                    lattice += (map.forward(u).norm_sqr() * map.derivative(u).norm_sqr()) * h * h;
                }
            }
        }
        assert!((lattice - want).abs() < 2e-2, "lattice {lattice} vs {want}");
    }

    #[test]
    fn farrell_identity_is_weighted_dilation() {
        // psi_rho(z) = rho z and F_rho(z) = rho f(rho z) for p = 2.
        let id = ConformalMap::identity();
        let f = make_test_function("exp", &[]).unwrap();
        let approx = farrell_dilate(&f, &id, 0.7, 2.0).unwrap();
        for i in 0..16 {
            let z = Complex::from_polar(0.06 * i as f64, 0.9 * i as f64);
            let want = f.eval(z * 0.7) * 0.7;
            assert!((approx.eval(z).unwrap() - want).norm() < 1e-14);
        }
    }

    #[test]
    fn farrell_image_area_oracle() {
        // f = 1, p = 2: int_G |F_rho|^2 dA = area(psi_rho(G)) = area(phi(rho D))
        //            = pi (rho^2 + 2 c2^2 rho^4 + 3 c3^2 rho^6).
        let one = make_test_function("monomial", &[0.0]).unwrap();
        let rule = QuadratureRule::new(48, 48, 1.0).unwrap();
        let flat = w("expr:1");
        for (c2, c3) in [(0.3, 0.0), (0.15, 0.1)] {
            let map = ConformalMap::new(c2, c3).unwrap();
            for rho in [0.5, 0.9] {
                let approx = farrell_dilate(&one, &map, rho, 2.0).unwrap();
                let got = pullback_integral(|u| approx.eval_at_param(u), &flat, 2.0, &map, &rule)
                    .unwrap()
                    .value_p;
                let want = PI
                    * (rho.powi(2)
                        + 2.0 * c2 * c2 * rho.powi(4)
                        + 3.0 * c3 * c3 * rho.powi(6));
                assert!((got - want).abs() < 1e-8, "c2={c2} rho={rho}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn farrell_converges_uniformly_as_rho_rises() {
        let map = ConformalMap::new(0.3, 0.0).unwrap();
        let f = make_test_function("monomial", &[1.0]).unwrap();
        let mut sups = Vec::new();
        for rho in [0.9, 0.99, 0.999] {
            let approx = farrell_dilate(&f, &map, rho, 2.0).unwrap();
            let mut sup = 0.0f64;
            for i in 0..24 {
                let r = i as f64 / 23.0;
                for j in 0..24 {
                    let u = Complex::from_polar(r, 2.0 * PI * j as f64 / 24.0);
                    let z = map.forward(u);
                    sup = sup.max((approx.eval_at_param(u) - f.eval(z)).norm());
                }
            }
            sups.push(sup);
        }
        assert!(sups[0] > sups[1] && sups[1] > sups[2], "{sups:?}");
        assert!(sups[2] < 1e-2);
    }

    #[test]
    fn boundary_fit_recovers_polynomials() {
        let map = ConformalMap::new(0.25, 0.05).unwrap();
        let p = Polynomial::from_real(&[0.5, -1.0, 0.0, 2.0]);
        let pf = p.clone();
        let mf = map.clone();
        let (q, sup) =
            boundary_ls_polyfit(&move |u| pf.eval(mf.forward(u)), &map, 3, 16).unwrap();
        assert!(sup < 1e-10, "sup = {sup}");
        for n in 0..=3 {
            assert!((q.coeff(n) - p.coeff(n)).norm() < 1e-10, "coeff {n}");
        }
    }

    #[test]
    fn boundary_fit_identity_geometric_rate() {
        // On the disk the fit is trigonometric least squares; for
        // 1/(1 - 0.5 z) the degree-10 error is of order 2^{-10}/(1 - 1/2).
        let id = ConformalMap::identity();
        let f = make_test_function("geometric", &[0.5, 1.0]).unwrap();
        let (_, sup) = boundary_ls_polyfit(&move |u| f.eval(u), &id, 10, 44).unwrap();
        assert!(sup <= 2.0 * 0.5f64.powi(10) / 0.5, "sup = {sup}");
    }

    #[test]
    fn boundary_fit_residual_decreases_with_degree() {
        let map = ConformalMap::new(0.3, 0.0).unwrap();
        let f = pole_reciprocal(map.forward(Complex::new(1.2, 0.0)));
        let approx = farrell_dilate(&f, &map, 0.9, 2.0).unwrap();
        let mut sups = Vec::new();
        for d in [5usize, 10, 20, 30] {
            let (_, sup) =
                boundary_ls_polyfit(&|u| approx.eval_at_param(u), &map, d, 4 * (d + 1)).unwrap();
            sups.push(sup);
        }
        for pair in sups.windows(2) {
            assert!(pair[1] < pair[0], "{sups:?}");
        }
    }

    #[test]
    fn jordan_approximate_polynomial_input() {
        // The rho ladder stops at 1 - 2^{-20} and the stage error is
        // first-order in 1 - rho, so eps can't go below ~1e-5 here.
        let map = ConformalMap::new(0.3, 0.0).unwrap();
        let p = Polynomial::from_real(&[1.0, 0.5, -0.25]);
        let f = FunctionModel::from_polynomial(&p);
        let rule = QuadratureRule::new(48, 48, 1.0).unwrap();
        let (q, err) = jordan_approximate(&f, &w("expr:1"), 2.0, &map, 1e-4, &rule).unwrap();
        assert!(err <= 1e-4, "err = {err}");
        assert!(q.degree().unwrap() <= 10);
    }

    #[test]
    fn jordan_identity_agrees_with_disk_pipeline() {
        let id = ConformalMap::identity();
        let f = make_test_function("geometric", &[0.5, 1.0]).unwrap();
        let spec = w("catalog:linang");
        let rule = QuadratureRule::new(48, 48, 1.0).unwrap();
        let (_, err_jordan) = jordan_approximate(&f, &spec, 2.0, &id, 1e-3, &rule).unwrap();
        let (_, err_disk) = crate::approx::approximate(&f, &spec, 2.0, 1e-3, &rule).unwrap();
        assert!(err_jordan <= 1e-3 && err_disk <= 1e-3);
        let ratio = err_jordan / err_disk;
        assert!((0.5..=2.0).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn jordan_approximate_pole_near_boundary_needs_high_degree() {
        // Pole at phi(1.05): its preimage sits at radius 1.05, so the
        // uniform geometric rate is 1.05^{-d} and 1e-3 needs degree well
        // past 40; the escalation ladder reaches it at 160.
        let map = ConformalMap::new(0.3, 0.0).unwrap();
        let a = map.forward(Complex::new(1.05, 0.0));
        let f = pole_reciprocal(a);
        let rule = QuadratureRule::new(48, 48, 1.0).unwrap();
        let (q, err) = jordan_approximate(&f, &w("expr:1"), 2.0, &map, 1e-3, &rule).unwrap();
        assert!(err <= 1e-3, "err = {err}");
        let d = q.degree().unwrap();
        assert!(d > 40, "degree {d} unexpectedly small");
        assert!(d <= 320);
    }

    #[test]
    fn jordan_approximate_easy_pole_is_cheap() {
        let map = ConformalMap::new(0.3, 0.0).unwrap();
        let a = map.forward(Complex::new(1.3, 0.0));
        let f = pole_reciprocal(a);
        let rule = QuadratureRule::new(48, 48, 1.0).unwrap();
        let (q, err) = jordan_approximate(&f, &w("expr:1"), 2.0, &map, 1e-3, &rule).unwrap();
        assert!(err <= 1e-3, "err = {err}");
        assert!(q.degree().unwrap() <= 40, "degree {:?}", q.degree());
    }

    #[test]
    fn rho_stage_errors_decrease() {
        let map = ConformalMap::new(0.3, 0.0).unwrap();
        let f = pole_reciprocal(map.forward(Complex::new(1.3, 0.0)));
        let rule = QuadratureRule::new(48, 48, 1.0).unwrap();
        let flat = w("expr:1");
        let mut errs = Vec::new();
        for rho in [0.9, 0.99, 0.999] {
            let approx = farrell_dilate(&f, &map, rho, 2.0).unwrap();
            let err = pullback_integral(
                |u| f.eval(map.forward(u)) - approx.eval_at_param(u),
                &flat,
                2.0,
                &map,
                &rule,
            )
            .unwrap()
            .value;
            errs.push(err);
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn domain_strings_parse() {
        assert!(parse_domain("disk").unwrap().is_identity());
        let m = parse_domain("poly:c2=0.3").unwrap();
        assert_eq!(m.coeffs(), (0.3, 0.0));
        let m = parse_domain("poly:c2=0.2,c3=0.05").unwrap();
        assert_eq!(m.coeffs(), (0.2, 0.05));
        assert!(parse_domain("poly:c2=0.6").is_err());
        assert!(parse_domain("square").is_err());
        assert!(parse_domain("poly:k=1").is_err());
    }
}
