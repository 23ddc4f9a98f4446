//! Seeded Monte Carlo experiments for the argmin limit theorems of convex
//! stochastic processes.
//!
//! Every trajectory is an exact PWL function (or the smooth Uniform LAD
//! risk in the limit), so `sigma`, `tau` and a selection `xi` are exact per
//! path. Paths are seeded from the master seed, a stream label and the path
//! index, and all experiments are bit-identical across execution modes.

mod almost_sure;
mod ensemble;
mod fidi;
mod in_probability;
mod model;
mod order;
pub mod seed;
mod uniqueness;

pub use almost_sure::{
    as_argmin_experiment, tail_stages, AlmostSureOptions, AlmostSureReport, CoupledPath,
    PathwiseClause,
};
pub use ensemble::{
    default_tol_stat, simulate, PathEnsemble, PathRecord, RayProbabilityTable, SimulationOptions,
};
pub use fidi::{fidi_convergence_probe, FidiOptions, FidiReport, MarginalRow, PairRow};
pub use in_probability::{
    in_probability_experiment, DeviationRow, DeviationVerdict, InProbabilityOptions,
    InProbabilityReport, MIN_TREND_STAGES,
};
pub use model::{DataLaw, ProcessModel, Stage, Trajectory, WidthLaw};
pub use order::{
    order_convergence_test, selection_sandwich_test, OrderOptions, OrderRow, OrderVerdict,
    SandwichVerdict,
};
pub use uniqueness::{uniqueness_diagnostics, UniquenessOptions, UniquenessReport};

/// Default stage schedule `n` of the sample-size sequences.
pub const DEFAULT_STAGES: [usize; 7] = [25, 50, 100, 250, 500, 1000, 2000];
