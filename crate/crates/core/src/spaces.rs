//! Norms and seminorms of the three weighted spaces on the disk, plus the
//! Parseval-type closed forms available under angular and product weights.

use crate::error::{Error, Result};
use crate::funcmodel::{Complex, FunctionModel};
use crate::quadrature::{AngularScheme, QuadratureRule};
use crate::weights::{AngularProfile, RadialProfile, WeightSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormSpace {
    Bergman,
    Dirichlet,
    Besov,
}

impl std::fmt::Display for NormSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NormSpace::Bergman => "bergman",
            NormSpace::Dirichlet => "dirichlet",
            NormSpace::Besov => "besov",
        })
    }
}

/// A computed norm with its `p`-th power and the rule it was computed on.
///
/// For `p < 1` the spaces are complete metric spaces rather than normed
/// ones; `value` then holds the metric integral itself (no `1/p` root) and
/// `metric_only` is set.
#[derive(Clone, Debug)]
pub struct NormResult {
    pub value: f64,
    pub value_p: f64,
    pub p: f64,
    pub space: NormSpace,
    pub n_radial: usize,
    pub n_angular: usize,
    pub radius: f64,
    pub metric_only: bool,
    pub warning: Option<String>,
}

/// Upgrade a uniform-angle rule to panels when the weight's structure wants
/// it; a caller-chosen panel rule is always respected.
pub(crate) fn adapted(rule: &QuadratureRule, w: &WeightSpec) -> Result<QuadratureRule> {
    if w.preferred_scheme() == AngularScheme::Panels {
        rule.with_angular(AngularScheme::Panels)
    } else {
        Ok(rule.clone())
    }
}

fn finish(
    integral: f64,
    p: f64,
    space: NormSpace,
    rule: &QuadratureRule,
    w: &WeightSpec,
    warning: Option<String>,
) -> Result<NormResult> {
    if integral < 0.0 {
        // |f|^p >= 0, so a negative integral pins a negative weight node
        for (node, _) in rule.nodes() {
            let wv = w.eval(node);
            if wv < 0.0 {
                return Err(Error::NegativeWeight { r: node.r, theta: node.theta, value: wv });
            }
        }
        return Err(Error::NegativeWeight { r: f64::NAN, theta: f64::NAN, value: integral });
    }
    let metric_only = p < 1.0;
    let value = if metric_only { integral } else { integral.powf(1.0 / p) };
    Ok(NormResult {
        value,
        value_p: integral,
        p,
        space,
        n_radial: rule.n_radial(),
        n_angular: rule.n_angular(),
        radius: rule.radius(),
        metric_only,
        warning,
    })
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!("p must be positive, got {p}")));
    }
    Ok(())
}

fn abs_pow(z: Complex, p: f64) -> f64 {
    let s = z.norm_sqr();
    if p == 2.0 {
        s
    } else {
        s.powf(p / 2.0)
    }
}

/// `(integral |f|^p w dA)^(1/p)` over the rule's disk.
pub fn bergman_norm(
    f: &FunctionModel,
    w: &WeightSpec,
    p: f64,
    rule: &QuadratureRule,
) -> Result<NormResult> {
    check_p(p)?;
    let rule = adapted(rule, w)?;
    let integral = rule.integrate(|pt| abs_pow(f.eval(pt.to_complex()), p) * w.eval(pt))?;
    finish(integral, p, NormSpace::Bergman, &rule, w, None)
}

/// `(integral |f'|^p w dA)^(1/p)`.
pub fn dirichlet_seminorm(
    f: &FunctionModel,
    w: &WeightSpec,
    p: f64,
    rule: &QuadratureRule,
) -> Result<NormResult> {
    check_p(p)?;
    let rule = adapted(rule, w)?;
    let integral = rule.integrate(|pt| abs_pow(f.deriv(pt.to_complex()), p) * w.eval(pt))?;
    finish(integral, p, NormSpace::Dirichlet, &rule, w, None)
}

/// `(integral (1-|z|^2)^(p-2) |f'|^p w dA)^(1/p)`.
///
/// The underlying monotonicity argument needs `p >= 2`; smaller exponents
/// are computed anyway and flagged with a warning, since which boundary the
/// theory intends is genuinely open. At `p = 2` this is exactly the
/// Dirichlet seminorm.
pub fn besov_seminorm(
    f: &FunctionModel,
    w: &WeightSpec,
    p: f64,
    rule: &QuadratureRule,
) -> Result<NormResult> {
    check_p(p)?;
    let warning = (p < 2.0).then(|| {
        format!("besov seminorm is only backed by theory for p >= 2 (got p = {p}); value computed anyway")
    });
    let rule = adapted(rule, w)?;
    let integral = rule.integrate(|pt| {
        let fac = (1.0 - pt.r * pt.r).powf(p - 2.0);
        fac * abs_pow(f.deriv(pt.to_complex()), p) * w.eval(pt)
    })?;
    finish(integral, p, NormSpace::Besov, &rule, w, warning)
}

/// Dispatch over the three spaces (Bergman norm or derivative seminorms).
pub fn space_norm(
    space: NormSpace,
    f: &FunctionModel,
    w: &WeightSpec,
    p: f64,
    rule: &QuadratureRule,
) -> Result<NormResult> {
    match space {
        NormSpace::Bergman => bergman_norm(f, w, p, rule),
        NormSpace::Dirichlet => dirichlet_seminorm(f, w, p, rule),
        NormSpace::Besov => besov_seminorm(f, w, p, rule),
    }
}

/// A truncated series value together with its certified remainder bound.
#[derive(Clone, Copy, Debug)]
pub struct SeriesNorm {
    /// the squared A^2 norm
    pub value_sq: f64,
    /// bound on the dropped tail of the series
    pub tail_bound: f64,
    /// truncation index actually used
    pub terms: usize,
}

/// Geometric decay estimate for `|a_n|` near the truncation index: largest
/// ratio `|a_(n+1)| / |a_n|` over the last window, used to certify the tail.
fn coeff_decay(f: &FunctionModel, n_max: usize) -> Result<(f64, f64)> {
    let a = |n: usize| f.taylor_coeff(n).map(|c| c.norm()).ok_or_else(|| {
        Error::NoTaylor(format!("`{}` has no Taylor coefficient generator", f.name()))
    });
    let first_dropped = a(n_max + 1)?;
    let window_all_zero = (0..8).try_fold(true, |acc, j| -> Result<bool> {
        Ok(acc && a(n_max + 1 + j)? == 0.0)
    })?;
    if window_all_zero {
        return Ok((0.0, 0.0)); // polynomial truncated past its degree
    }
    let mut ratio = 0.0f64;
    for j in 0..8 {
        let (lo, hi) = (a(n_max + 1 + j)?, a(n_max + 2 + j)?);
        if lo > 0.0 {
            ratio = ratio.max(hi / lo);
        }
    }
    if ratio >= 1.0 {
        return Err(Error::TailNotConvergent { ratio });
    }
    Ok((first_dropped, ratio))
}

/// Parseval closed form under a purely angular weight:
/// `|f|^2 = (integral v) * sum |a_n|^2 / (2 (n+1))`.
///
/// The formula drops the cross terms `2 rho_(n+m) Re(a_n conj(a_m) V_(n-m))`,
/// which is correct exactly when those products vanish — for real
/// coefficients this needs `Re integral v e^(i k theta) = 0` for all k >= 1
/// (true for linang, false for polyang). [`closed_form_norm_full`] keeps
/// the cross terms and is valid unconditionally.
pub fn closed_form_norm_angular(
    f: &FunctionModel,
    v: &AngularProfile,
    n_max: usize,
) -> Result<SeriesNorm> {
    closed_form_norm_product(f, &RadialProfile::Constant(1.0), v, n_max)
}

/// Parseval closed form under a product weight `omega(r) v(theta)`:
/// `|f|^2 = (integral v) * sum |a_n|^2 omega_n` (same cross-term caveat as
/// [`closed_form_norm_angular`]).
pub fn closed_form_norm_product(
    f: &FunctionModel,
    omega: &RadialProfile,
    v: &AngularProfile,
    n_max: usize,
) -> Result<SeriesNorm> {
    let v0 = v.mass()?;
    let mut terms = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let an = f
            .taylor_coeff(n)
            .ok_or_else(|| Error::NoTaylor(format!("`{}` has no Taylor generator", f.name())))?;
        terms.push(an.norm_sqr() * omega.moment(n as u32)?);
    }
    let value_sq = v0 * crate::exec::compensated_sum(&terms);
    let (first_dropped, ratio) = coeff_decay(f, n_max)?;
    let tail_bound = if first_dropped == 0.0 {
        0.0
    } else {
        v0 * omega.moment(n_max as u32 + 1)? * first_dropped * first_dropped
            / (1.0 - ratio * ratio)
    };
    Ok(SeriesNorm { value_sq, tail_bound, terms: n_max + 1 })
}

/// Full bilinear Parseval series under a product weight, including the
/// cross terms the diagonal propositions drop:
///
/// `|f|^2 = sum_(n,m) a_n conj(a_m) rho_(n+m) V_(n-m)`,
/// `rho_s = integral_0^1 r^(s+1) omega(r) dr`,
/// `V_k = integral_0^(2 pi) v(theta) e^(i k theta) d theta`.
///
/// Valid for every product weight; reduces to the diagonal form when the
/// off-diagonal contributions vanish.
pub fn closed_form_norm_full(
    f: &FunctionModel,
    omega: &RadialProfile,
    v: &AngularProfile,
    n_max: usize,
) -> Result<SeriesNorm> {
    let coeffs: Vec<Complex> = (0..=n_max)
        .map(|n| {
            f.taylor_coeff(n).ok_or_else(|| {
                Error::NoTaylor(format!("`{}` has no Taylor generator", f.name()))
            })
        })
        .collect::<Result<_>>()?;
    let mut rho = Vec::with_capacity(2 * n_max + 1);
    for s in 0..=2 * n_max {
        rho.push(omega.power_moment(s as u32 + 1)?);
    }
    // V_k = conj(c_k) for the profile's c_k = integral v e^(-i k theta)
    let big_v: Vec<Complex> = (0..=n_max as i32).map(|k| v.fourier(k).conj()).collect();

    let mut terms = Vec::with_capacity((n_max + 1) * (n_max + 2) / 2);
    for n in 0..=n_max {
        terms.push(coeffs[n].norm_sqr() * rho[2 * n] * big_v[0].re);
        for m in 0..n {
            let cross = coeffs[n] * coeffs[m].conj() * big_v[n - m];
            terms.push(2.0 * cross.re * rho[n + m]);
        }
    }
    let value_sq = crate::exec::compensated_sum(&terms);

    let (first_dropped, ratio) = coeff_decay(f, n_max)?;
    let tail_bound = if first_dropped == 0.0 {
        0.0
    } else {
        // coarse but safe: |V_k| <= V_0 and rho decreasing, so the dropped
        // rows/columns are bounded by a geometric double sum
        let v0 = big_v[0].re;
        let col = coeffs.iter().map(|c| c.norm()).sum::<f64>() + first_dropped / (1.0 - ratio);
        v0 * rho[2 * n_max].min(rho[n_max]) * first_dropped * 2.0 * col / (1.0 - ratio)
    };
    Ok(SeriesNorm { value_sq, tail_bound, terms: n_max + 1 })
}
