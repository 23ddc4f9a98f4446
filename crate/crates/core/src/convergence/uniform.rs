use serde::Serialize;

use crate::convergence::semicontinuity::{grid_gap, shrinking};
use crate::convergence::sequence::{sup_norm_gap, FunctionSequence, StageFn};
use crate::convex::{spot_check, LipschitzPoints};
use crate::exec::{self, Execution};
use crate::rational;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct UniformOptions {
    /// Random pairs per function for the Lipschitz spot check.
    pub spot_pairs: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for UniformOptions {
    fn default() -> Self {
        Self {
            spot_pairs: 1000,
            seed: 0,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformStage {
    pub stage: usize,
    /// `max |f_k - f|` on `K`.
    pub sup_gap: f64,
    /// `max |f_k(d) - f(d)|` over grid points `d` in `[a, b]`.
    pub grid_gap: f64,
    pub lipschitz_stage: f64,
    pub bound: f64,
    pub within_bound: bool,
    pub spot_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformReport {
    pub name: String,
    pub k: (f64, f64),
    pub points: LipschitzPoints,
    pub lipschitz_limit: f64,
    /// Largest distance from a point of `K` to the grid inside `[a, b]`.
    pub delta: f64,
    pub stages: Vec<UniformStage>,
    pub limit_spot_violations: usize,
    /// The sup-norm gap shrinks along the stages.
    pub converging: bool,
    pub pass: bool,
}

// Largest distance from a point of [lo, hi] to the nearest grid point, for a
// sorted grid covering [lo, hi].
fn covering_radius(grid: &[f64], lo: f64, hi: f64) -> f64 {
    grid.windows(2)
        .filter(|w| w[1] >= lo && w[0] <= hi)
        .map(|w| {
            let (a, b) = (w[0].max(lo), w[1].min(hi));
            let mid = 0.5 * (w[0] + w[1]);
            // farthest point of [a, b] from {w[0], w[1]}
            let clamped = mid.clamp(a, b);
            (clamped - w[0]).min(w[1] - clamped)
        })
        .fold(0.0, f64::max)
}

/// Check that the sup-norm gap on `K` is controlled by the grid gap.
///
/// For `s` in `K` and its nearest grid point `d` in `[a, b]`,
/// `|f_k(s) - f(s)| <= |f_k(d) - f(d)| + (L_k + L_f) |s - d|`, with the
/// local Lipschitz bounds `L = c * sum |f(d_i)|` on `[a, b]`. The bound is
/// compared with the exact sup-norm gap (PWL) or a 4096-point probe.
pub fn check_uniform_from_pointwise(
    seq: &FunctionSequence,
    k: (f64, f64),
    n_stages: usize,
    opts: &UniformOptions,
) -> Result<UniformReport> {
    if n_stages == 0 {
        return Err(Error::StageFailure {
            stage: 0,
            reason: "need at least one stage".into(),
        });
    }
    let grid = seq.grid_f64();
    let points = LipschitzPoints::new(k, &grid)?;
    let inner: Vec<usize> = (0..grid.len())
        .filter(|&i| grid[i] >= points.a && grid[i] <= points.b)
        .collect();
    let inner_exact: Vec<rational::Rational> =
        inner.iter().map(|&i| seq.dense_grid[i].clone()).collect();
    let inner_f64: Vec<f64> = inner.iter().map(|&i| grid[i]).collect();
    let delta = covering_radius(&inner_f64, k.0, k.1);
    let limit = &seq.limit;
    let limit_view = limit.float_view();
    let l_f = points.bound(|t| limit_view.value(t));
    let limit_spot = spot_check(|t| limit_view.value(t), k, l_f, opts.spot_pairs, opts.seed);

    let stages = exec::try_map_indexed(opts.exec, n_stages, |i| {
        let stage = i + 1;
        let f: StageFn = seq.stage(stage)?;
        let view = f.float_view();
        let l_k = points.bound(|t| view.value(t));
        let gap_d = grid_gap(&f, limit, &inner_exact, &inner_f64);
        let sup_gap = sup_norm_gap(&f, limit, k);
        let bound = gap_d + (l_k + l_f) * delta;
        let slack = 1e-12 * (1.0 + bound);
        let spot = spot_check(
            |t| view.value(t),
            k,
            l_k,
            opts.spot_pairs,
            opts.seed ^ stage as u64,
        );
        Ok::<_, Error>(UniformStage {
            stage,
            sup_gap,
            grid_gap: gap_d,
            lipschitz_stage: l_k,
            bound,
            within_bound: sup_gap <= bound + slack,
            spot_violations: spot.violations,
        })
    })?;
    let ids: Vec<usize> = stages.iter().map(|s| s.stage).collect();
    let gaps: Vec<f64> = stages.iter().map(|s| s.sup_gap).collect();
    let converging = shrinking(&ids, &gaps);
    let pass = limit_spot.violations == 0
        && stages
            .iter()
            .all(|s| s.within_bound && s.spot_violations == 0);
    Ok(UniformReport {
        name: seq.name.clone(),
        k,
        points,
        lipschitz_limit: l_f,
        delta,
        stages,
        limit_spot_violations: limit_spot.violations,
        converging,
        pass,
    })
}
