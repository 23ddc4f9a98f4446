use serde::Serialize;

use crate::argmin::SelectionPolicy;
use crate::exec::{self, Execution};
use crate::rational;
use crate::stochastic::ensemble::PathRecord;
use crate::stochastic::model::{ProcessModel, Stage};
use crate::stochastic::seed;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct AlmostSureOptions {
    /// Number of stages sampled from the tail `[N/2, N]`, ends included.
    pub tail_points: usize,
    /// Slack of the one-sided inequalities.
    pub tol: f64,
    /// Allowed distance of `sigma(Z_N)`, `tau(Z_N)`, `xi(Z_N)` from the
    /// unique limit minimizer.
    pub tol_conv: f64,
    pub policy: SelectionPolicy,
    pub exec: Execution,
}

impl Default for AlmostSureOptions {
    fn default() -> Self {
        Self {
            tail_points: 26,
            tol: 1e-9,
            tol_conv: 0.05,
            policy: SelectionPolicy::Midpoint,
            exec: Execution::default(),
        }
    }
}

/// Tail extremes of one coupled path.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoupledPath {
    pub limit_sigma: f64,
    pub limit_tau: f64,
    pub tail_inf_sigma: f64,
    pub tail_sup_tau: f64,
    pub tail_inf_xi: f64,
    pub tail_sup_xi: f64,
    pub final_sigma: f64,
    pub final_tau: f64,
    pub final_xi: f64,
    /// `sigma <= xi <= tau` exactly at every sampled stage.
    pub sandwich: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathwiseClause {
    pub claimed: bool,
    pub passing_paths: usize,
    pub fraction: f64,
    pub pass: bool,
}

impl PathwiseClause {
    /// The passing fraction is reported either way; only a claimed clause
    /// can fail.
    fn count(claimed: bool, paths: &[CoupledPath], ok: impl Fn(&CoupledPath) -> bool) -> Self {
        let passing_paths = paths.iter().filter(|p| ok(p)).count();
        Self {
            claimed,
            passing_paths,
            fraction: passing_paths as f64 / paths.len() as f64,
            pass: !claimed || passing_paths == paths.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlmostSureReport {
    pub n_max: usize,
    pub tail: Vec<usize>,
    pub m: usize,
    pub tol: f64,
    pub tol_conv: f64,
    /// Every limit path has a unique minimizer.
    pub unique_limit: bool,
    pub paths: Vec<CoupledPath>,
    /// `liminf sigma(Z_n) >= sigma(Z)`.
    pub lower_sigma: PathwiseClause,
    /// `limsup tau(Z_n) <= tau(Z)`.
    pub upper_tau: PathwiseClause,
    /// `sigma(Z_n)` and `tau(Z_n)` converge to the unique minimizer.
    pub convergence: PathwiseClause,
    /// `sigma(Z) <= liminf xi(Z_n) <= limsup xi(Z_n) <= tau(Z)`.
    pub selection_bounds: PathwiseClause,
    /// `xi(Z_n)` converges to the unique minimizer.
    pub selection_convergence: PathwiseClause,
    pub sandwich: PathwiseClause,
    pub pass: bool,
}

/// `count` stages spread evenly over `[ceil(n/2), n]`.
pub fn tail_stages(n: usize, count: usize) -> Vec<usize> {
    let lo = n.div_ceil(2).max(1);
    let count = count.max(2);
    let mut v: Vec<usize> = (0..count)
        .map(|j| lo + (n - lo) * j / (count - 1))
        .collect();
    v.dedup();
    v
}

/// Coupled-path check of the almost-sure argmin limits: every stage of a
/// path uses a prefix of one data stream, so `Z_n(t) -> Z(t)` pathwise.
pub fn as_argmin_experiment(
    model: &ProcessModel,
    n_max: usize,
    m: usize,
    seed: u64,
    opts: &AlmostSureOptions,
) -> Result<AlmostSureReport> {
    model.validate()?;
    let policy = opts.policy.validate()?;
    if n_max < 2 || m == 0 {
        return Err(Error::ModelInvalid(
            "need N >= 2 and at least one path".into(),
        ));
    }
    let tail = tail_stages(n_max, opts.tail_points);
    let paths = exec::try_map_indexed(opts.exec, m, |i| {
        let mut rng = seed::path_rng(seed, seed::COUPLED_STREAM, i);
        let draw = model.draw(&mut rng, n_max);
        let limit = PathRecord::of(&model.trajectory(&draw, Stage::Limit)?, policy)?;
        let records = tail
            .iter()
            .map(|&n| PathRecord::of(&model.trajectory(&draw, Stage::N(n))?, policy))
            .collect::<Result<Vec<_>>>()?;
        let min_of = |f: fn(&PathRecord) -> &rational::Rational| {
            records.iter().map(f).min().expect("non-empty tail")
        };
        let max_of = |f: fn(&PathRecord) -> &rational::Rational| {
            records.iter().map(f).max().expect("non-empty tail")
        };
        let last = records.last().expect("non-empty tail");
        Ok::<_, Error>(CoupledPath {
            limit_sigma: rational::to_f64(&limit.sigma),
            limit_tau: rational::to_f64(&limit.tau),
            tail_inf_sigma: rational::to_f64(min_of(|r| &r.sigma)),
            tail_sup_tau: rational::to_f64(max_of(|r| &r.tau)),
            tail_inf_xi: rational::to_f64(min_of(|r| &r.xi)),
            tail_sup_xi: rational::to_f64(max_of(|r| &r.xi)),
            final_sigma: rational::to_f64(&last.sigma),
            final_tau: rational::to_f64(&last.tau),
            final_xi: rational::to_f64(&last.xi),
            sandwich: records.iter().all(PathRecord::sandwiched),
        })
    })?;
    let unique_limit = paths.iter().all(|p| p.limit_sigma == p.limit_tau);
    let (tol, tc) = (opts.tol, opts.tol_conv);
    // With a unique limit the one-sided clauses follow from `convergence`;
    // on their own they fail at finite N, where a path dips below the limit
    // by O(n^-1/2).
    let one_sided = !unique_limit;
    let lower_sigma = PathwiseClause::count(one_sided, &paths, |p| {
        p.tail_inf_sigma >= p.limit_sigma - tol
    });
    let upper_tau =
        PathwiseClause::count(one_sided, &paths, |p| p.tail_sup_tau <= p.limit_tau + tol);
    let convergence = PathwiseClause::count(unique_limit, &paths, |p| {
        (p.final_sigma - p.limit_sigma).abs() <= tc && (p.final_tau - p.limit_tau).abs() <= tc
    });
    let selection_bounds = PathwiseClause::count(one_sided, &paths, |p| {
        p.tail_inf_xi >= p.limit_sigma - tol && p.tail_sup_xi <= p.limit_tau + tol
    });
    let selection_convergence = PathwiseClause::count(unique_limit, &paths, |p| {
        (p.final_xi - p.limit_sigma).abs() <= tc
    });
    let sandwich = PathwiseClause::count(true, &paths, |p| p.sandwich);
    let pass = [
        &lower_sigma,
        &upper_tau,
        &convergence,
        &selection_bounds,
        &selection_convergence,
        &sandwich,
    ]
    .iter()
    .all(|c| c.pass);
    Ok(AlmostSureReport {
        n_max,
        tail,
        m,
        tol,
        tol_conv: tc,
        unique_limit,
        paths,
        lower_sigma,
        upper_tau,
        convergence,
        selection_bounds,
        selection_convergence,
        sandwich,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::model::DataLaw;

    #[test]
    fn tail_grid() {
        assert_eq!(tail_stages(10, 6), vec![5, 6, 7, 8, 9, 10]);
        assert_eq!(tail_stages(10, 100), vec![5, 6, 7, 8, 9, 10]);
        assert_eq!(tail_stages(2000, 3), vec![1000, 1500, 2000]);
    }

    #[test]
    fn uniform_lad_converges_pathwise() {
        let model = ProcessModel::EmpiricalLad {
            data: DataLaw::Uniform,
        };
        let r = as_argmin_experiment(&model, 400, 40, 11, &Default::default()).unwrap();
        assert!(r.unique_limit);
        assert!(r.convergence.claimed);
        assert!(r.sandwich.pass);
        assert!(r.convergence.fraction > 0.9);
    }

    #[test]
    fn bernoulli_lad_one_sided() {
        let model = ProcessModel::BernoulliLad {
            p: rational::ratio(1, 2),
        };
        let r = as_argmin_experiment(&model, 400, 40, 11, &Default::default()).unwrap();
        assert!(!r.unique_limit);
        assert!(!r.convergence.claimed);
        assert!(r.lower_sigma.pass && r.upper_tau.pass && r.selection_bounds.pass);
        assert!(r.pass);
    }

    #[test]
    fn deterministic_model() {
        let model = ProcessModel::EmpiricalLad {
            data: DataLaw::Point {
                at: rational::ratio(1, 3),
            },
        };
        let r = as_argmin_experiment(&model, 10, 3, 0, &Default::default()).unwrap();
        assert!(r.pass);
        assert!(r.paths.iter().all(|p| p.final_sigma == 1.0 / 3.0));
    }

    #[test]
    fn execution_modes_agree() {
        let model = ProcessModel::EmpiricalLad {
            data: DataLaw::Uniform,
        };
        let par = as_argmin_experiment(&model, 60, 20, 2, &Default::default()).unwrap();
        let seq = AlmostSureOptions {
            exec: Execution::Sequential,
            ..Default::default()
        };
        assert_eq!(par, as_argmin_experiment(&model, 60, 20, 2, &seq).unwrap());
    }
}
