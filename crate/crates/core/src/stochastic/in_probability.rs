use num_traits::Zero;
use serde::Serialize;

use crate::argmin::SelectionPolicy;
use crate::convergence::shrinking;
use crate::exec::{self, Execution};
use crate::rational;
use crate::stats;
use crate::stochastic::ensemble::{default_tol_stat, simulate, PathRecord, SimulationOptions};
use crate::stochastic::model::{ProcessModel, Stage};
use crate::stochastic::seed;
use crate::{Error, Result};

/// Fewest stages over which a trend is assessed.
pub const MIN_TREND_STAGES: usize = 5;

#[derive(Clone, Debug, Default)]
pub struct InProbabilityOptions {
    /// Largest allowed deviation probability at the last stage; defaults
    /// to three binomial standard errors at `p = 1/2`.
    pub tol_stat: Option<f64>,
    pub policy: Option<SelectionPolicy>,
    pub exec: Execution,
}

/// Deviation probabilities at one stage and one `eps`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationRow {
    pub stage: usize,
    pub eps: f64,
    /// `P(|sigma(Z_n) - sigma(Z)| > eps)`.
    pub p_sigma: f64,
    pub p_tau: f64,
    pub p_xi: f64,
    /// Three binomial standard errors of each estimate.
    pub hw_sigma: f64,
    pub hw_tau: f64,
    pub hw_xi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationVerdict {
    pub eps: f64,
    pub statistic: String,
    pub last: f64,
    pub shrinking: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InProbabilityReport {
    pub stages: Vec<usize>,
    pub eps_grid: Vec<f64>,
    pub m: usize,
    pub tol_stat: f64,
    pub rows: Vec<DeviationRow>,
    pub verdicts: Vec<DeviationVerdict>,
    pub pass: bool,
}

/// Deviation probabilities of `sigma`, `tau` and `xi` from the unique
/// minimizer of the limit, estimated with fresh paths at every stage.
///
/// Each path draws `Z_n` and `Z` from one generator, so the deviation is
/// defined on a common probability space; paths of different stages are
/// independent. Fails with `NonUniqueLimit` unless `E[tau(Z) - sigma(Z)]`
/// vanishes on the limit ensemble.
pub fn in_probability_experiment(
    model: &ProcessModel,
    stages: &[usize],
    eps_grid: &[f64],
    m: usize,
    seed: u64,
    opts: &InProbabilityOptions,
) -> Result<InProbabilityReport> {
    model.validate()?;
    let policy = opts
        .policy
        .unwrap_or(SelectionPolicy::Midpoint)
        .validate()?;
    if stages.len() < MIN_TREND_STAGES {
        return Err(Error::GridMismatch(format!(
            "a trend needs at least {MIN_TREND_STAGES} stages, got {}",
            stages.len()
        )));
    }
    if stages[0] == 0 || stages.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::GridMismatch(
            "stages must be positive and strictly increasing".into(),
        ));
    }
    if eps_grid.is_empty() || eps_grid.iter().any(|e| e.is_nan() || *e <= 0.0) {
        return Err(Error::GridMismatch("eps values must be positive".into()));
    }
    let sim = SimulationOptions {
        policy,
        exec: opts.exec,
    };
    let limit = simulate(model, m, Stage::Limit, seed, &sim)?;
    let gap = limit.mean_gap();
    if !gap.is_zero() {
        return Err(Error::NonUniqueLimit {
            gap: rational::to_f64(&gap),
        });
    }
    let tol = opts.tol_stat.unwrap_or_else(|| default_tol_stat(m));
    // per stage and path: deviations of sigma, tau, xi from the limit point
    let deviations = stages
        .iter()
        .map(|&n| {
            exec::try_map_indexed(opts.exec, m, |i| {
                let mut rng = seed::path_rng(seed, seed::stage_stream(n), i);
                let draw = model.draw(&mut rng, n);
                let lim = PathRecord::of(&model.trajectory(&draw, Stage::Limit)?, policy)?;
                let cur = PathRecord::of(&model.trajectory(&draw, Stage::N(n))?, policy)?;
                let d = |v: &rational::Rational| rational::to_f64(&(v - &lim.sigma)).abs();
                Ok::<_, Error>([d(&cur.sigma), d(&cur.tau), d(&cur.xi)])
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (&n, devs) in stages.iter().zip(&deviations) {
        for &eps in eps_grid {
            let p = |k: usize| devs.iter().filter(|d| d[k] > eps).count() as f64 / m as f64;
            let (ps, pt, px) = (p(0), p(1), p(2));
            rows.push(DeviationRow {
                stage: n,
                eps,
                p_sigma: ps,
                p_tau: pt,
                p_xi: px,
                hw_sigma: 3.0 * stats::binomial_se(ps, m),
                hw_tau: 3.0 * stats::binomial_se(pt, m),
                hw_xi: 3.0 * stats::binomial_se(px, m),
            });
        }
    }
    let mut verdicts = Vec::new();
    for &eps in eps_grid {
        let series: Vec<&DeviationRow> = rows.iter().filter(|r| r.eps == eps).collect();
        for (name, get) in [
            (
                "sigma",
                (|r: &DeviationRow| r.p_sigma) as fn(&DeviationRow) -> f64,
            ),
            ("tau", |r| r.p_tau),
            ("xi", |r| r.p_xi),
        ] {
            let values: Vec<f64> = series.iter().map(|r| get(r)).collect();
            let last = *values.last().expect("non-empty stages");
            let shrinking = shrinking(stages, &values);
            verdicts.push(DeviationVerdict {
                eps,
                statistic: name.to_string(),
                last,
                shrinking,
                pass: last <= tol && shrinking,
            });
        }
    }
    let pass = verdicts.iter().all(|v| v.pass);
    Ok(InProbabilityReport {
        stages: stages.to_vec(),
        eps_grid: eps_grid.to_vec(),
        m,
        tol_stat: tol,
        rows,
        verdicts,
        pass,
    })
}
