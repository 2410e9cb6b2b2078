//! Numerical core for polynomial approximation in weighted spaces of
//! analytic functions on the unit disk: a weight catalog and expression
//! language, polar quadrature, Bergman/Dirichlet/Besov norms, hypothesis
//! checkers for density conditions, dilation-based approximants, and the
//! Farrell-style construction on Jordan domains.

pub mod approx;
pub mod conditions;
pub mod error;
pub mod exec;
pub mod funcmodel;
pub mod jordan;
pub mod quadrature;
pub mod spaces;
pub mod weights;

pub use approx::{
    approximate, best_l2_projection, degree_study, dilate, dilation_study, mergelyan_polynomial,
    rule_id, taylor_partial_sum, ConvergenceTable, Method, StudyRow,
};
pub use conditions::{
    check_boundary_vanishing, check_dilation_bound, check_dominated_bound, check_monotone_rk,
    check_superbiharmonic, suggest_k, ConditionReport, GridSpec,
};
pub use error::{Error, Result};
pub use funcmodel::{make_test_function, Complex, FunctionModel, PolarPoint, Polynomial};
pub use jordan::{
    boundary_ls_polyfit, farrell_dilate, jordan_approximate, parse_domain, pullback_norm,
    ConformalMap, FarrellApproximant,
};
pub use quadrature::{AngularScheme, QuadratureRule};
pub use spaces::{bergman_norm, besov_seminorm, dirichlet_seminorm, space_norm, NormResult, NormSpace};
pub use weights::{parse_weight, AngularProfile, RadialProfile, WeightExpr, WeightSpec};
