use serde::Serialize;

use crate::convergence::shrinking;
use crate::exec::Execution;
use crate::rational;
use crate::stats;
use crate::stochastic::ensemble::{check_grid, trajectories};
use crate::stochastic::model::{ProcessModel, Stage, Trajectory};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct FidiOptions {
    /// Bins per axis of the bivariate comparison.
    pub bins: usize,
    pub exec: Execution,
}

impl Default for FidiOptions {
    fn default() -> Self {
        Self {
            bins: 10,
            exec: Execution::default(),
        }
    }
}

/// Distance between the laws of `Z_n(t)` and `Z(t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalRow {
    pub stage: usize,
    pub t: f64,
    /// Two-sample Kolmogorov-Smirnov statistic.
    pub ks: f64,
    pub ks_critical: f64,
    /// Wasserstein-1 distance; unlike KS it shrinks when the limit is a
    /// point mass.
    pub w1: f64,
}

/// Distance between the laws of `(Z_n(s), Z_n(t))` and `(Z(s), Z(t))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairRow {
    pub stage: usize,
    pub s: f64,
    pub t: f64,
    pub ks_binned: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidiReport {
    pub t_grid: Vec<f64>,
    pub stages: Vec<usize>,
    pub m: usize,
    pub marginals: Vec<MarginalRow>,
    pub pairs: Vec<PairRow>,
    /// Per `t`: the W1 distance shrinks along the stages.
    pub w1_shrinking: Vec<bool>,
}

fn values(paths: &[Trajectory], t_grid: &[rational::Rational]) -> Vec<Vec<f64>> {
    t_grid
        .iter()
        .map(|t| paths.iter().map(|z| rational::to_f64(&z.eval(t))).collect())
        .collect()
}

/// Compare finite-dimensional laws of the stages with those of the limit,
/// one coordinate and one pair of coordinates at a time. The fidis on a
/// dense set are the only hypothesis behind the distributional argmin
/// limits, so this probe checks the input of those experiments.
pub fn fidi_convergence_probe(
    model: &ProcessModel,
    t_grid: &[f64],
    stages: &[usize],
    m: usize,
    seed: u64,
    opts: &FidiOptions,
) -> Result<FidiReport> {
    check_grid(t_grid)?;
    if stages.is_empty() || stages.contains(&0) {
        return Err(Error::GridMismatch("stages must be positive".into()));
    }
    let t_exact: Vec<rational::Rational> = t_grid
        .iter()
        .map(|&t| rational::from_f64(t))
        .collect::<Result<_>>()?;
    let limit = values(
        &trajectories(model, m, Stage::Limit, seed, opts.exec)?,
        &t_exact,
    );
    let mut marginals = Vec::new();
    let mut pairs = Vec::new();
    for &n in stages {
        let cur = values(
            &trajectories(model, m, Stage::N(n), seed, opts.exec)?,
            &t_exact,
        );
        for (j, &t) in t_grid.iter().enumerate() {
            marginals.push(MarginalRow {
                stage: n,
                t,
                ks: stats::ks_two_sample(&cur[j], &limit[j]),
                ks_critical: stats::ks_critical_5pct(m, m),
                w1: stats::wasserstein1(&cur[j], &limit[j]),
            });
        }
        for a in 0..t_grid.len() {
            for b in a + 1..t_grid.len() {
                let zip = |v: &[Vec<f64>]| {
                    v[a].iter()
                        .copied()
                        .zip(v[b].iter().copied())
                        .collect::<Vec<_>>()
                };
                pairs.push(PairRow {
                    stage: n,
                    s: t_grid[a],
                    t: t_grid[b],
                    ks_binned: stats::ks_2d_binned(&zip(&cur), &zip(&limit), opts.bins),
                });
            }
        }
    }
    let w1_shrinking = t_grid
        .iter()
        .map(|&t| {
            let w: Vec<f64> = marginals
                .iter()
                .filter(|r| r.t == t)
                .map(|r| r.w1)
                .collect();
            stages.len() < 2 || shrinking(stages, &w)
        })
        .collect();
    Ok(FidiReport {
        t_grid: t_grid.to_vec(),
        stages: stages.to_vec(),
        m,
        marginals,
        pairs,
        w1_shrinking,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::model::DataLaw;

    #[test]
    fn uniform_lad_marginals_concentrate() {
        let model = ProcessModel::EmpiricalLad {
            data: DataLaw::Uniform,
        };
        let r = fidi_convergence_probe(
            &model,
            &[0.3, 0.7],
            &[25, 100, 400],
            300,
            1,
            &Default::default(),
        )
        .unwrap();
        assert!(r.w1_shrinking.iter().all(|&b| b));
        let w: Vec<f64> = r
            .marginals
            .iter()
            .filter(|m| m.t == 0.3)
            .map(|m| m.w1)
            .collect();
        assert!(w[2] < w[0]);
        assert_eq!(r.pairs.len(), 3);
    }

    #[test]
    fn deterministic_stage_equals_limit() {
        let model = ProcessModel::EmpiricalLad {
            data: DataLaw::Sample {
                values: vec![rational::ratio(1, 5), rational::ratio(4, 5)],
            },
        };
        let r = fidi_convergence_probe(&model, &[0.0, 0.5], &[1, 2], 20, 1, &Default::default())
            .unwrap();
        assert!(r.marginals.iter().all(|m| m.ks == 0.0 && m.w1 == 0.0));
        assert!(r.pairs.iter().all(|p| p.ks_binned == 0.0));
    }
}
