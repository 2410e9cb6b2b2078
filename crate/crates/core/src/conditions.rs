//! Checkable sufficient conditions for polynomial density.
//!
//! Each checker sweeps a finite grid and returns a [`ConditionReport`] rather
//! than a bare boolean, so a failure always comes with the witness point that
//! broke the bound and the constant actually observed.  A report is evidence,
//! not a proof: the grid is finite and the constants are floating point.

use crate::error::{Error, Result};
use crate::exec;
use crate::funcmodel::{Complex, FunctionModel, PolarPoint};
use crate::quadrature::QuadratureRule;
use crate::spaces::bergman_norm;
use crate::weights::{self, WeightSpec};

use std::f64::consts::PI;

/// Points below this weight value are treated as "weight vanishes here" and
/// excluded from ratio sweeps (the ratio is unstable or undefined there).
pub const VANISHING_CUTOFF: f64 = 1e-14;

/// Sampling resolution for the condition checkers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Radial samples for the spatial variable `z`.
    pub n_radii: usize,
    /// Angular samples for `z`.
    pub n_angles: usize,
    /// Samples for the dilation parameter `r`.
    pub n_dilations: usize,
    /// Safety margin keeping grids away from the boundary circle.
    pub delta: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { n_radii: 96, n_angles: 64, n_dilations: 32, delta: 1e-3 }
    }
}

impl GridSpec {
    /// Same grid with every resolution doubled (used for stability checks).
    pub fn doubled(&self) -> Self {
        GridSpec {
            n_radii: self.n_radii * 2,
            n_angles: self.n_angles * 2,
            n_dilations: self.n_dilations * 2,
            delta: self.delta,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_radii < 2 || self.n_angles < 1 || self.n_dilations < 2 {
            return Err(Error::InvalidParameter(
                "grid needs at least 2 radii, 1 angle and 2 dilation samples".into(),
            ));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "grid delta must lie in (0, 0.5), got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// Radii `(i + 1/2)/n * scale`, strictly inside `(0, scale)`.
    fn radii(&self, scale: f64) -> Vec<f64> {
        (0..self.n_radii)
            .map(|i| (i as f64 + 0.5) / self.n_radii as f64 * scale)
            .collect()
    }

    /// Midpoint angles, avoiding the axes where catalog weights have kinks
    /// or zeros.
    fn angles(&self) -> Vec<f64> {
        (0..self.n_angles)
            .map(|j| 2.0 * PI * (j as f64 + 0.5) / self.n_angles as f64)
            .collect()
    }

    /// `n_dilations` points spanning `[lo, hi]` inclusive.
    fn span(&self, lo: f64, hi: f64) -> Vec<f64> {
        let n = self.n_dilations;
        (0..n)
            .map(|m| lo + (hi - lo) * m as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Outcome of one condition check on one weight.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    /// Which condition was checked, e.g. `dilation_bound(k=2)`.
    pub condition_id: String,
    pub passed: bool,
    /// The extremal statistic the pass/fail verdict was computed from:
    /// the largest ratio for bound checks, the smallest slope for the
    /// monotonicity check, the last circle average for boundary vanishing,
    /// the smallest bilaplacian value for the superbiharmonic check.
    pub estimated_c: f64,
    /// Spatial point realising `estimated_c`.
    pub worst_z: Complex,
    /// Dilation parameter (or radius) realising `estimated_c`.
    pub worst_r: f64,
    /// Value of the checked quantity at the witness; equals `estimated_c`.
    pub worst_ratio: f64,
    /// `(z samples, dilation samples, r0)` actually used.
    pub grid: (usize, usize, f64),
    /// Grid points excluded because the weight vanished there.
    pub skipped: usize,
}

impl ConditionReport {
    /// Flat `key=value` lines, one per field, for log-friendly output.
    pub fn to_kv(&self) -> String {
        format!(
            "condition={}\npassed={}\nestimated_C={:.16e}\nworst_z_re={:.16e}\nworst_z_im={:.16e}\nworst_r={:.16e}\nworst_ratio={:.16e}\ngrid_nz={}\ngrid_nr={}\ngrid_r0={:.16e}\nskipped={}\n",
            self.condition_id,
            self.passed,
            self.estimated_c,
            self.worst_z.re,
            self.worst_z.im,
            self.worst_r,
            self.worst_ratio,
            self.grid.0,
            self.grid.1,
            self.grid.2,
            self.skipped,
        )
    }
}

fn validate_r0(r0: f64, delta: f64) -> Result<()> {
    if !(r0 > 0.0 && r0 < 1.0 - delta) {
        return Err(Error::InvalidParameter(format!(
            "r0 must lie in (0, 1 - delta), got {r0}"
        )));
    }
    Ok(())
}

/// Per-point result of a ratio sweep: the local extremum with its location,
/// plus how many samples were skipped.
struct Local {
    best: Option<(f64, Complex, f64)>,
    skipped: usize,
}

/// Fold locals in index order, keeping the extremum selected by `better`.
fn fold_locals(locals: Vec<Local>, better: impl Fn(f64, f64) -> bool) -> (Option<(f64, Complex, f64)>, usize) {
    let mut best: Option<(f64, Complex, f64)> = None;
    let mut skipped = 0usize;
    for loc in locals {
        skipped += loc.skipped;
        if let Some((v, z, r)) = loc.best {
            match best {
                Some((bv, _, _)) if !better(v, bv) => {}
                _ => best = Some((v, z, r)),
            }
        }
    }
    (best, skipped)
}

/// Check the dilation bound `r^k w(z/r) <= C w(z)` for `|z| < r`, `r in [r0, 1)`.
///
/// The grid pairs each dilation `r` with spatial points `z = r u` where `u`
/// runs over a fixed polar grid in the unit disk, so every `r` is probed at
/// the same relative positions.  Points where `w(z)` vanishes are skipped
/// and counted; if nothing remains the check is meaningless and errors out.
pub fn check_dilation_bound(
    w: &WeightSpec,
    k: u32,
    r0: f64,
    cmax: f64,
    grid: &GridSpec,
) -> Result<ConditionReport> {
    grid.validate()?;
    validate_r0(r0, grid.delta)?;
    if !(cmax > 0.0) {
        return Err(Error::InvalidParameter(format!("Cmax must be positive, got {cmax}")));
    }

    let radii = grid.radii(1.0);
    let angles = grid.angles();
    let rs = grid.span(r0, 1.0 - grid.delta);
    let n_z = radii.len() * angles.len();

    let locals = exec::map_indexed(n_z, |zi| {
        let s = radii[zi / angles.len()];
        let theta = angles[zi % angles.len()];
        let wu = w.eval(PolarPoint::new(s, theta));
        let mut loc = Local { best: None, skipped: 0 };
        for &r in &rs {
            let z = PolarPoint::new(r * s, theta);
            let wz = w.eval(z);
            if !(wz >= VANISHING_CUTOFF) || !wu.is_finite() {
                loc.skipped += 1;
                continue;
            }
            let ratio = r.powi(k as i32) * wu / wz;
            if !ratio.is_finite() {
                loc.skipped += 1;
                continue;
            }
            if loc.best.map_or(true, |(b, _, _)| ratio > b) {
                loc.best = Some((ratio, z.to_complex(), r));
            }
        }
        loc
    });

    let (best, skipped) = fold_locals(locals, |a, b| a > b);
    let (c, z, r) = best.ok_or(Error::AllGridPointsSkipped)?;
    Ok(ConditionReport {
        condition_id: format!("dilation_bound(k={k})"),
        passed: c <= cmax,
        estimated_c: c,
        worst_z: z,
        worst_r: r,
        worst_ratio: c,
        grid: (n_z, rs.len(), r0),
        skipped,
    })
}

/// Check that `r -> r^k w(z/r)` is nondecreasing on `[max(|z| + delta, r0), 1)`.
///
/// Slopes come from forward differences of consecutive grid samples; the
/// check passes when the smallest observed slope is above `-1e-10`.
pub fn check_monotone_rk(
    w: &WeightSpec,
    k: u32,
    r0: f64,
    grid: &GridSpec,
) -> Result<ConditionReport> {
    grid.validate()?;
    validate_r0(r0, grid.delta)?;

    let radii = grid.radii(1.0 - grid.delta);
    let angles = grid.angles();
    let n_z = radii.len() * angles.len();

    let locals = exec::map_indexed(n_z, |zi| {
        let s = radii[zi / angles.len()];
        let theta = angles[zi % angles.len()];
        let lo = (s + grid.delta).max(r0);
        let hi = 1.0 - grid.delta;
        let mut loc = Local { best: None, skipped: 0 };
        if lo >= hi {
            loc.skipped = 1;
            return loc;
        }
        let rs = grid.span(lo, hi);
        let g: Vec<f64> = rs
            .iter()
            .map(|&r| r.powi(k as i32) * w.eval(PolarPoint::new(s / r, theta)))
            .collect();
        for m in 0..rs.len() - 1 {
            let slope = (g[m + 1] - g[m]) / (rs[m + 1] - rs[m]);
            if !slope.is_finite() {
                loc.skipped += 1;
                continue;
            }
            if loc.best.map_or(true, |(b, _, _)| slope < b) {
                loc.best = Some((slope, Complex::from_polar(s, theta), rs[m]));
            }
        }
        loc
    });

    let (best, skipped) = fold_locals(locals, |a, b| a < b);
    let (min_slope, z, r) = best.ok_or(Error::AllGridPointsSkipped)?;
    Ok(ConditionReport {
        condition_id: format!("monotone_rk(k={k})"),
        passed: min_slope >= -1e-10,
        estimated_c: min_slope,
        worst_z: z,
        worst_r: r,
        worst_ratio: min_slope,
        grid: (n_z, grid.n_dilations, r0),
        skipped,
    })
}

/// Default radii for [`check_boundary_vanishing`].
pub const BOUNDARY_RADII: [f64; 4] = [0.9, 0.99, 0.999, 0.9999];

/// Tolerance on the last circle average in [`check_boundary_vanishing`].
pub const BOUNDARY_TOL: f64 = 1e-2;

/// Check that the circle averages `m(r) = (2 pi)^{-1} \int w(r e^{i t}) dt`
/// decrease along `r_list` and that the last one is below [`BOUNDARY_TOL`].
pub fn check_boundary_vanishing(w: &WeightSpec, r_list: &[f64]) -> Result<ConditionReport> {
    if r_list.len() < 2 {
        return Err(Error::InvalidParameter(
            "boundary check needs at least two radii".into(),
        ));
    }
    for &r in r_list {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "boundary radii must lie in (0, 1), got {r}"
            )));
        }
    }
    let means: Vec<f64> = r_list
        .iter()
        .map(|&r| weights::angular_panel_quad(|t| w.eval(PolarPoint::new(r, t)), 64) / (2.0 * PI))
        .collect();
    for (i, &m) in means.iter().enumerate() {
        if !m.is_finite() {
            return Err(Error::NonFiniteSample {
                index: i,
                r: r_list[i],
                theta: 0.0,
                value: m,
            });
        }
    }
    let decreasing = means.windows(2).all(|p| p[1] < p[0] + 1e-14);
    let last = *means.last().unwrap();
    // Witness: the first radius breaking monotonicity, else the last radius.
    let (wi, wv) = means
        .windows(2)
        .position(|p| !(p[1] < p[0] + 1e-14))
        .map(|i| (i + 1, means[i + 1]))
        .unwrap_or((means.len() - 1, last));
    let passed = decreasing && last < BOUNDARY_TOL;
    Ok(ConditionReport {
        condition_id: "boundary_vanishing".into(),
        passed,
        estimated_c: last,
        worst_z: Complex::new(r_list[wi], 0.0),
        worst_r: r_list[wi],
        worst_ratio: wv,
        grid: (r_list.len(), 0, r_list[0]),
        skipped: 0,
    })
}

/// Check domination `r^k w(z/r) <= (1 + 1e-10) g(z)` on the dilation grid,
/// together with finiteness of `\int |f|^p g dA` (the dominating integral),
/// established by agreement under quadrature refinement.
pub fn check_dominated_bound(
    w: &WeightSpec,
    g: &WeightSpec,
    f: &FunctionModel,
    p: f64,
    k: u32,
    r0: f64,
    grid: &GridSpec,
    rule: &QuadratureRule,
) -> Result<ConditionReport> {
    grid.validate()?;
    validate_r0(r0, grid.delta)?;

    let radii = grid.radii(1.0);
    let angles = grid.angles();
    let rs = grid.span(r0, 1.0 - grid.delta);
    let n_z = radii.len() * angles.len();

    let locals = exec::map_indexed(n_z, |zi| {
        let s = radii[zi / angles.len()];
        let theta = angles[zi % angles.len()];
        let wu = w.eval(PolarPoint::new(s, theta));
        let mut loc = Local { best: None, skipped: 0 };
        for &r in &rs {
            let z = PolarPoint::new(r * s, theta);
            let gz = g.eval(z);
            if !(gz >= VANISHING_CUTOFF) || !wu.is_finite() {
                loc.skipped += 1;
                continue;
            }
            let ratio = r.powi(k as i32) * wu / gz;
            if !ratio.is_finite() {
                loc.skipped += 1;
                continue;
            }
            if loc.best.map_or(true, |(b, _, _)| ratio > b) {
                loc.best = Some((ratio, z.to_complex(), r));
            }
        }
        loc
    });
    let (best, skipped) = fold_locals(locals, |a, b| a > b);
    let (c, z, r) = best.ok_or(Error::AllGridPointsSkipped)?;

    // Finiteness of the dominating integral, by refinement agreement.
    let coarse = bergman_norm(f, g, p, rule)?.value_p;
    let fine = bergman_norm(f, g, p, &rule.refined(2)?)?.value_p;
    if !coarse.is_finite() || !fine.is_finite() || (fine - coarse).abs() > 0.01 * fine.abs().max(1e-300) {
        return Err(Error::NonIntegrable { coarse, fine });
    }

    Ok(ConditionReport {
        condition_id: format!("dominated_bound(k={k})"),
        passed: c <= 1.0 + 1e-10,
        estimated_c: c,
        worst_z: z,
        worst_r: r,
        worst_ratio: c,
        grid: (n_z, rs.len(), r0),
        skipped,
    })
}

/// Step size for the bilaplacian stencil.
pub const BIHARMONIC_H: f64 = 1e-3;

/// Check `Delta^2 w >= 0` (with `Delta = (1/4) *` the Euclidean Laplacian)
/// using the 13-point bilaplacian stencil at step `h` on an interior grid
/// `|z| <= 1 - 4h`.
///
/// Fourth differences divide by `h^4`, so plain rounding in the weight
/// evaluations shows up as noise of size about `eps * max w / h^4`.  The
/// verdict therefore compares the smallest observed value against
/// `-max(1e-4 * scale, noise_floor)` where `scale` is the largest observed
/// magnitude; genuinely negative bilaplacians sit orders of magnitude below
/// that floor while exact-zero cases (harmonic or biharmonic weights) stay
/// inside it.
pub fn check_superbiharmonic(w: &WeightSpec, h: f64, grid: &GridSpec) -> Result<ConditionReport> {
    grid.validate()?;
    if !(h > 0.0 && h < 0.25) {
        return Err(Error::InvalidParameter(format!("stencil step must lie in (0, 0.25), got {h}")));
    }

    let radii = grid.radii(1.0 - 4.0 * h);
    let angles = grid.angles();
    let n_z = radii.len() * angles.len();
    let inv = 1.0 / (16.0 * h.powi(4));

    let ev = |x: f64, y: f64| w.eval(PolarPoint::from_complex(Complex::new(x, y)));

    // (value, |value|, max |w| seen, witness z) per grid point.
    let locals = exec::map_indexed(n_z, |zi| {
        let s = radii[zi / angles.len()];
        let theta = angles[zi % angles.len()];
        let (x, y) = (s * theta.cos(), s * theta.sin());
        let axis = ev(x + h, y) + ev(x - h, y) + ev(x, y + h) + ev(x, y - h);
        let diag = ev(x + h, y + h) + ev(x + h, y - h) + ev(x - h, y + h) + ev(x - h, y - h);
        let far = ev(x + 2.0 * h, y) + ev(x - 2.0 * h, y) + ev(x, y + 2.0 * h) + ev(x, y - 2.0 * h);
        let w0 = ev(x, y);
        let value = (20.0 * w0 - 8.0 * axis + 2.0 * diag + far) * inv;
        let wmax = w0.abs().max(axis.abs()).max(diag.abs()).max(far.abs());
        (value, wmax, Complex::new(x, y))
    });

    let mut min_val = f64::INFINITY;
    let mut scale = 0.0f64;
    let mut wmax = 0.0f64;
    let mut witness = Complex::new(0.0, 0.0);
    for (v, wm, z) in locals {
        if !v.is_finite() {
            let p = PolarPoint::from_complex(z);
            return Err(Error::NonFiniteSample { index: 0, r: p.r, theta: p.theta, value: v });
        }
        scale = scale.max(v.abs());
        wmax = wmax.max(wm);
        if v < min_val {
            min_val = v;
            witness = z;
        }
    }

    let noise_floor = 32.0 * f64::EPSILON * wmax / h.powi(4);
    let threshold = -(1e-4 * scale).max(noise_floor);
    let wr = PolarPoint::from_complex(witness).r;
    Ok(ConditionReport {
        condition_id: "superbiharmonic".into(),
        passed: min_val >= threshold,
        estimated_c: min_val,
        worst_z: witness,
        worst_r: wr,
        worst_ratio: min_val,
        grid: (n_z, 0, h),
        skipped: 0,
    })
}

/// Smallest `k <= kmax` for which [`check_dilation_bound`] passes, or `None`.
pub fn suggest_k(
    w: &WeightSpec,
    kmax: u32,
    r0: f64,
    cmax: f64,
    grid: &GridSpec,
) -> Result<Option<u32>> {
    if kmax > 64 {
        return Err(Error::InvalidParameter(format!("kmax must be at most 64, got {kmax}")));
    }
    for k in 0..=kmax {
        if check_dilation_bound(w, k, r0, cmax, grid)?.passed {
            return Ok(Some(k));
        }
    }
    Ok(None)
}
