use serde::Serialize;

use crate::argmin::SelectionPolicy;
use crate::exec::{self, Execution};
use crate::rational::{self, Rational};
use crate::stats;
use crate::stochastic::model::{ProcessModel, Stage, Trajectory};
use crate::stochastic::seed;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct SimulationOptions {
    pub policy: SelectionPolicy,
    pub exec: Execution,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            policy: SelectionPolicy::Midpoint,
            exec: Execution::default(),
        }
    }
}

/// Exact `sigma`, `tau` and the selection `xi` of one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathRecord {
    #[serde(with = "rational::serde_one")]
    pub sigma: Rational,
    #[serde(with = "rational::serde_one")]
    pub tau: Rational,
    #[serde(with = "rational::serde_one")]
    pub xi: Rational,
}

impl PathRecord {
    pub(crate) fn of(z: &Trajectory, policy: SelectionPolicy) -> Result<Self> {
        let (sigma, tau) = z.min_set()?;
        let xi = policy.select_between(&sigma, &tau)?;
        Ok(Self { sigma, tau, xi })
    }

    pub fn sandwiched(&self) -> bool {
        self.sigma <= self.xi && self.xi <= self.tau
    }
}

/// `M` seeded trajectories of one stage (or the limit) of a process.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathEnsemble {
    pub model: ProcessModel,
    pub stage: Stage,
    pub master_seed: u64,
    pub policy: SelectionPolicy,
    pub paths: Vec<PathRecord>,
}

impl PathEnsemble {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.paths
            .iter()
            .map(|p| rational::to_f64(&p.sigma))
            .collect()
    }

    pub fn taus(&self) -> Vec<f64> {
        self.paths
            .iter()
            .map(|p| rational::to_f64(&p.tau))
            .collect()
    }

    pub fn xis(&self) -> Vec<f64> {
        self.paths.iter().map(|p| rational::to_f64(&p.xi)).collect()
    }

    /// `sigma <= xi <= tau` on every path, in exact arithmetic.
    pub fn sandwich_holds(&self) -> bool {
        self.paths.iter().all(PathRecord::sandwiched)
    }

    /// Exact mean of `tau - sigma`.
    pub fn mean_gap(&self) -> Rational {
        let total: Rational = self.paths.iter().map(|p| &p.tau - &p.sigma).sum();
        total / rational::int(self.paths.len().max(1) as i64)
    }
}

fn stream(stage: Stage) -> u64 {
    match stage {
        Stage::N(n) => seed::stage_stream(n),
        Stage::Limit => seed::LIMIT_STREAM,
    }
}

/// Trajectories of `m` independent paths at `stage`. Path `i` is drawn
/// from a generator seeded by `(seed, stage, i)`.
pub(crate) fn trajectories(
    model: &ProcessModel,
    m: usize,
    stage: Stage,
    seed: u64,
    exec: Execution,
) -> Result<Vec<Trajectory>> {
    model.validate()?;
    if m == 0 {
        return Err(Error::ModelInvalid("need at least one path".into()));
    }
    let stream = stream(stage);
    exec::try_map_indexed(exec, m, |i| {
        let mut rng = seed::path_rng(seed, stream, i);
        model.sample_path(stage, &mut rng)
    })
}

/// Simulate `m` paths at `stage` and record `sigma`, `tau` and `xi` of each
/// (exact for PWL trajectories).
pub fn simulate(
    model: &ProcessModel,
    m: usize,
    stage: Stage,
    seed: u64,
    opts: &SimulationOptions,
) -> Result<PathEnsemble> {
    model.validate()?;
    let policy = opts.policy.validate()?;
    if m == 0 {
        return Err(Error::ModelInvalid("need at least one path".into()));
    }
    let stream = stream(stage);
    let paths = exec::try_map_indexed(opts.exec, m, |i| {
        let mut rng = seed::path_rng(seed, stream, i);
        let z = model.sample_path(stage, &mut rng)?;
        PathRecord::of(&z, policy)
    })?;
    Ok(PathEnsemble {
        model: model.clone(),
        stage,
        master_seed: seed,
        policy,
        paths,
    })
}

/// Empirical ray probabilities `P(V > x)` and `P(V < x)` of a sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayProbabilityTable {
    pub x_grid: Vec<f64>,
    pub p_gt: Vec<f64>,
    pub p_lt: Vec<f64>,
    pub m: usize,
    /// Three binomial standard errors of `p_gt` and `p_lt`.
    pub halfwidth_gt: Vec<f64>,
    pub halfwidth_lt: Vec<f64>,
}

impl RayProbabilityTable {
    pub fn new(sample: &[f64], x_grid: &[f64]) -> Result<Self> {
        check_grid(x_grid)?;
        if sample.is_empty() {
            return Err(Error::GridMismatch("empty sample".into()));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len();
        let p_lt: Vec<f64> = x_grid
            .iter()
            .map(|&x| sorted.partition_point(|&v| v < x) as f64 / m as f64)
            .collect();
        let p_gt: Vec<f64> = x_grid
            .iter()
            .map(|&x| (m - sorted.partition_point(|&v| v <= x)) as f64 / m as f64)
            .collect();
        let hw = |p: &Vec<f64>| p.iter().map(|&q| 3.0 * stats::binomial_se(q, m)).collect();
        Ok(Self {
            x_grid: x_grid.to_vec(),
            halfwidth_gt: hw(&p_gt),
            halfwidth_lt: hw(&p_lt),
            p_gt,
            p_lt,
            m,
        })
    }
}

pub(crate) fn check_grid(x_grid: &[f64]) -> Result<()> {
    if x_grid.is_empty() {
        return Err(Error::GridMismatch("empty grid".into()));
    }
    if x_grid.iter().any(|x| !x.is_finite()) || x_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::GridMismatch(
            "grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Three binomial standard errors at the worst case `p = 1/2`.
pub fn default_tol_stat(m: usize) -> f64 {
    3.0 * stats::binomial_se(0.5, m)
}
