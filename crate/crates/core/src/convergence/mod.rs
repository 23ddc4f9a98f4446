//! Deterministic checks of the semicontinuity statements for sequences and
//! finite stages of nets of convex functions.
//!
//! A liminf or limsup over an infinite index set is replaced by the tail
//! infimum or supremum over the stages `[n, N]`.

mod net;
mod semicontinuity;
mod sequence;
mod uniform;

pub use net::{net_semicontinuity, net_stage_grid, NetChainRecord, NetGrid, NetReport};
pub(crate) use semicontinuity::shrinking;
pub use semicontinuity::{
    check_semicontinuity, ClauseVerdict, SemicontinuityOptions, SemicontinuityReport, StageRecord,
    TOL_EXACT, TOL_ORACLE,
};
pub use sequence::{
    counterexample_family, dyadic_grid, rational_grid, sup_norm_gap, FunctionSequence, StageArgmin,
    StageFn,
};
pub use uniform::{check_uniform_from_pointwise, UniformOptions, UniformReport, UniformStage};
