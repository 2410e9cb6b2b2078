use thiserror::Error;

/// Unified error type for the crate.
///
/// Numerical routines in this crate refuse to return garbage: a NaN at a
/// quadrature node, a divergent moment integral, or an uncertifiable tail
/// bound is reported with enough context to locate the offending input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("weight syntax error at byte {pos} in {src:?}: {msg}")]
    WeightParse { src: String, pos: usize, msg: String },

    #[error("weight is negative at (r={r}, theta={theta}): {value}")]
    NegativeWeight { r: f64, theta: f64, value: f64 },

    #[error("non-finite integrand at node {index} (r={r}, theta={theta}): {value}")]
    NonFiniteSample { index: usize, r: f64, theta: f64, value: f64 },

    #[error("integral did not stabilise under refinement ({coarse} vs {fine}); weight looks non-integrable")]
    NonIntegrable { coarse: f64, fine: f64 },

    #[error("divergent integral: {0}")]
    DivergentIntegral(String),

    #[error("function {0:?} carries no taylor coefficient generator")]
    NoTaylor(String),

    #[error("coefficient tail is not summably decaying (observed ratio {ratio})")]
    TailNotConvergent { ratio: f64 },

    #[error("certified tail {needed:.3e} still exceeds {target:.3e} at the degree cap {cap}")]
    DegreeCapExceeded { needed: f64, target: f64, cap: usize },

    #[error("coefficient estimates unreliable: doubling the circle sample moved them by {delta:.3e}")]
    AliasingDetected { delta: f64 },

    #[error("every grid point was skipped (weight vanishes on the grid)")]
    AllGridPointsSkipped,

    #[error("least-squares system is rank deficient (diagonal ratio {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("fit is ill-conditioned: collocation residual {fit:.3e} but verification residual {verify:.3e}")]
    IllConditioned { fit: f64, verify: f64 },

    #[error("map is not certified univalent: {0}")]
    NotUnivalent(String),

    #[error("derivative factor crosses the branch cut at u=({re}, {im})")]
    BranchCut { re: f64, im: f64 },

    #[error("newton inversion diverged for z=({re}, {im})")]
    InverseDiverged { re: f64, im: f64 },

    #[error("dilation stage stalled: best error {best:.6e} > {target:.6e} with r -> 1")]
    DilationStall { best: f64, target: f64 },

    #[error("could not reach target {eps:.3e}; best achieved {best:.3e}")]
    TargetUnreachable { best: f64, eps: f64 },

    #[error("norm of the input diverges under refinement ({coarse} vs {fine}); not a member of the space")]
    NonMember { coarse: f64, fine: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
