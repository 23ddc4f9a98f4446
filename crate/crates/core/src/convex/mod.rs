//! Representations of univariate convex functions and their one-sided
//! derivatives.

pub mod lipschitz;
pub mod oracle;
pub mod pwl;
pub mod spec;
pub mod step;

pub use lipschitz::{lipschitz_bound, spot_check, LipschitzBound, LipschitzPoints, SpotCheck};
pub use oracle::{
    check_convexity, d_minus_bracket, d_minus_bracket_two_sided, d_plus_bracket,
    d_plus_bracket_two_sided, ConvexOracle, ConvexityReport, DerivativeBracket, OracleOptions,
    Quotient, Side, StepSchedule,
};
pub use pwl::PwlConvex;
pub use spec::{FunctionSpec, SpecFunction};
pub use step::{Continuity, StepFunction};
