use serde::Serialize;

use crate::convergence::sequence::{FunctionSequence, StageArgmin, StageFn};
use crate::convex::{check_convexity, OracleOptions};
use crate::exec::{self, Execution};
use crate::rational;
use crate::stats::ls_slope;
use crate::{Error, Result};

/// Tolerance for finite-stage inequalities on exact PWL sequences.
pub const TOL_EXACT: f64 = 1e-9;
/// Tolerance for finite-stage inequalities when any function is an oracle.
pub const TOL_ORACLE: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct SemicontinuityOptions {
    /// Defaults to [`TOL_EXACT`] or [`TOL_ORACLE`].
    pub tol_report: Option<f64>,
    /// First stage of the tail used for the liminf/limsup surrogates;
    /// defaults to `ceil(N / 2)`.
    pub tail_start: Option<usize>,
    pub bisect_tol: f64,
    pub convexity_tol: f64,
    pub oracle: OracleOptions,
    pub exec: Execution,
}

impl Default for SemicontinuityOptions {
    fn default() -> Self {
        Self {
            tol_report: None,
            tail_start: None,
            bisect_tol: 1e-10,
            convexity_tol: 1e-9,
            oracle: OracleOptions::default(),
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageRecord {
    pub stage: usize,
    pub sigma: f64,
    pub tau: f64,
    /// `min sigma(f_k)` over `k` in `[stage, N]`.
    pub tail_inf_sigma: f64,
    /// `max tau(f_k)` over `k` in `[stage, N]`.
    pub tail_sup_tau: f64,
    /// `max |f_k(d) - f(d)|` over the dense grid.
    pub grid_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClauseVerdict {
    pub claimed: bool,
    pub pass: bool,
    /// `exact`: the inequality holds on the whole tail within tolerance.
    /// `trend`: the shortfall is positive but shrinking and within the
    /// family tolerance at the last stage.
    pub mode: String,
    pub value: f64,
    pub bound: f64,
}

impl ClauseVerdict {
    fn not_claimed() -> Self {
        Self {
            claimed: false,
            pass: true,
            mode: "not_claimed".into(),
            value: f64::NAN,
            bound: f64::NAN,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SemicontinuityReport {
    pub name: String,
    pub stages: Vec<StageRecord>,
    pub tail_start: usize,
    pub tol_report: f64,
    pub limit_sigma: f64,
    pub limit_tau: f64,
    /// `liminf sigma(f_k) >= sigma(f)`.
    pub lower_sigma: ClauseVerdict,
    /// `limsup tau(f_k) <= tau(f)`.
    pub upper_tau: ClauseVerdict,
    /// `sigma(f_k), tau(f_k) -> sigma(f) = tau(f)`; claimed only for
    /// limits with a unique minimizer.
    pub continuity: ClauseVerdict,
    pub final_sigma_gap: f64,
    pub final_tau_gap: f64,
    pub pass: bool,
}

fn stage_failure(stage: usize, e: Error) -> Error {
    match e {
        Error::StageFailure { .. } => e,
        other => Error::StageFailure {
            stage,
            reason: other.to_string(),
        },
    }
}

/// Convexity check of an oracle stage on the part of the grid inside its
/// bracket (or the whole grid without bracket).
pub(crate) fn validate_stage(f: &StageFn, grid: &[f64], tol: f64) -> Result<()> {
    let StageFn::Oracle(o) = f else {
        return Ok(());
    };
    let points: Vec<f64> = match o.bracket() {
        Some((lo, hi)) => grid
            .iter()
            .copied()
            .filter(|t| (lo..=hi).contains(t))
            .collect(),
        None => grid.to_vec(),
    };
    if points.len() < 3 {
        return Ok(());
    }
    let report = check_convexity(o, &points, tol)?;
    if !report.passed {
        return Err(Error::ConvexityViolation {
            at: report.worst_triple.map_or(f64::NAN, |t| t.1),
            detail: format!("chord exceeded by {}", report.worst_violation),
        });
    }
    Ok(())
}

pub(crate) fn grid_gap(
    f: &StageFn,
    g: &StageFn,
    grid: &[rational::Rational],
    grid_f64: &[f64],
) -> f64 {
    match (f, g) {
        (StageFn::Pwl(a), StageFn::Pwl(b)) => grid
            .iter()
            .map(|d| rational::to_f64(&(a.eval(d) - b.eval(d))).abs())
            .fold(0.0, f64::max),
        _ => grid_f64
            .iter()
            .map(|&d| (f.eval_f64(d) - g.eval_f64(d)).abs())
            .fold(0.0, f64::max),
    }
}

/// `(slope of ln(err) against ln(stage) < 0) or every error is zero`.
pub(crate) fn shrinking(stages: &[usize], errors: &[f64]) -> bool {
    let (xs, ys): (Vec<f64>, Vec<f64>) = stages
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > 0.0)
        .map(|(k, e)| ((*k as f64).ln(), e.ln()))
        .unzip();
    if xs.is_empty() {
        return true;
    }
    // Errors that vanish on part of the tail count as decreasing when the
    // zeros come last.
    if xs.len() < stages.len() {
        let last_positive = stages.iter().zip(errors).rposition(|(_, e)| *e > 0.0);
        let first_zero = errors.iter().position(|e| *e <= 0.0);
        return matches!((last_positive, first_zero), (Some(p), Some(z)) if z > p);
    }
    ls_slope(&xs, &ys).is_some_and(|s| s < 0.0)
}

fn one_sided(
    shortfall: impl Fn(&StageRecord) -> f64,
    last: impl Fn(&StageRecord) -> f64,
    tail: &[StageRecord],
    value: f64,
    bound: f64,
    family_tol: f64,
) -> ClauseVerdict {
    let deficits: Vec<f64> = tail.iter().map(&shortfall).collect();
    let stages: Vec<usize> = tail.iter().map(|r| r.stage).collect();
    let (pass, mode) = if deficits[0] <= 0.0 {
        (true, "exact")
    } else {
        let final_deficit = last(tail.last().expect("non-empty tail"));
        let ok = shrinking(&stages, &deficits) && final_deficit <= family_tol;
        (ok, "trend")
    };
    ClauseVerdict {
        claimed: true,
        pass,
        mode: mode.into(),
        value,
        bound,
    }
}

/// Finite-stage check of `liminf sigma(f_k) >= sigma(f)`,
/// `limsup tau(f_k) <= tau(f)`, and, for limits with a unique minimizer,
/// `sigma(f_k), tau(f_k) -> sigma(f)`, over stages `1..=n_stages`.
pub fn check_semicontinuity(
    seq: &FunctionSequence,
    n_stages: usize,
    opts: &SemicontinuityOptions,
) -> Result<SemicontinuityReport> {
    if n_stages == 0 {
        return Err(Error::StageFailure {
            stage: 0,
            reason: "need at least one stage".into(),
        });
    }
    let grid_f64 = seq.grid_f64();
    validate_stage(&seq.limit, &grid_f64, opts.convexity_tol).map_err(|e| stage_failure(0, e))?;
    let limit: StageArgmin = seq
        .limit
        .argmin(opts.bisect_tol, &opts.oracle)
        .map_err(|e| stage_failure(0, e))?;
    let computed = exec::try_map_indexed(opts.exec, n_stages, |i| {
        let k = i + 1;
        let f = seq.stage(k)?;
        validate_stage(&f, &grid_f64, opts.convexity_tol).map_err(|e| stage_failure(k, e))?;
        let a = f
            .argmin(opts.bisect_tol, &opts.oracle)
            .map_err(|e| stage_failure(k, e))?;
        let gap = grid_gap(&f, &seq.limit, &seq.dense_grid, &grid_f64);
        Ok::<_, Error>((f.is_exact(), a, gap))
    })?;
    let all_exact = seq.limit.is_exact() && computed.iter().all(|c| c.0);
    let tol = opts
        .tol_report
        .unwrap_or(if all_exact { TOL_EXACT } else { TOL_ORACLE });

    let mut stages: Vec<StageRecord> = computed
        .iter()
        .enumerate()
        .map(|(i, (_, a, gap))| StageRecord {
            stage: i + 1,
            sigma: a.sigma,
            tau: a.tau,
            tail_inf_sigma: f64::NAN,
            tail_sup_tau: f64::NAN,
            grid_gap: *gap,
        })
        .collect();
    let (mut inf_s, mut sup_t) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in stages.iter_mut().rev() {
        inf_s = inf_s.min(r.sigma);
        sup_t = sup_t.max(r.tau);
        r.tail_inf_sigma = inf_s;
        r.tail_sup_tau = sup_t;
    }

    let tail_start = opts
        .tail_start
        .unwrap_or(n_stages.div_ceil(2))
        .clamp(1, n_stages);
    let tail = &stages[tail_start - 1..];
    let head = &tail[0];
    let lower_sigma = one_sided(
        |r| limit.sigma - tol - r.tail_inf_sigma,
        |r| limit.sigma - r.sigma,
        tail,
        head.tail_inf_sigma,
        limit.sigma - tol,
        seq.stage_tol,
    );
    let upper_tau = one_sided(
        |r| r.tail_sup_tau - limit.tau - tol,
        |r| r.tau - limit.tau,
        tail,
        head.tail_sup_tau,
        limit.tau + tol,
        seq.stage_tol,
    );

    let last = stages.last().expect("n_stages >= 1");
    let final_sigma_gap = (last.sigma - limit.sigma).abs();
    let final_tau_gap = (last.tau - limit.tau).abs();
    let continuity = if seq.unique_limit {
        let errors: Vec<f64> = tail
            .iter()
            .map(|r| {
                let e = (r.sigma - limit.sigma).abs().max((r.tau - limit.tau).abs());
                if e <= tol {
                    0.0
                } else {
                    e
                }
            })
            .collect();
        let stage_ids: Vec<usize> = tail.iter().map(|r| r.stage).collect();
        let final_err = final_sigma_gap.max(final_tau_gap);
        ClauseVerdict {
            claimed: true,
            pass: final_err <= seq.stage_tol.max(tol) && shrinking(&stage_ids, &errors),
            mode: "limit".into(),
            value: final_err,
            bound: seq.stage_tol.max(tol),
        }
    } else {
        ClauseVerdict::not_claimed()
    };
    let pass = lower_sigma.pass && upper_tau.pass && continuity.pass;
    Ok(SemicontinuityReport {
        name: seq.name.clone(),
        stages,
        tail_start,
        tol_report: tol,
        limit_sigma: limit.sigma,
        limit_tau: limit.tau,
        lower_sigma,
        upper_tau,
        continuity,
        final_sigma_gap,
        final_tau_gap,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convergence::sequence::dyadic_grid;
    use crate::convex::ConvexOracle;

    #[test]
    fn counterexample_passes_without_continuity_claim() {
        let r = check_semicontinuity(
            &FunctionSequence::counterexample(),
            100,
            &Default::default(),
        )
        .unwrap();
        assert!(r.pass);
        assert!(!r.continuity.claimed);
        assert_eq!(r.limit_sigma, -1.0);
        assert_eq!(r.limit_tau, 1.0);
        assert!(r.stages.iter().all(|s| s.tau == 0.0 && s.sigma == -1.0));
        assert_eq!(r.final_tau_gap, 1.0);
        assert_eq!(r.upper_tau.mode, "exact");
        assert_eq!(r.tol_report, TOL_EXACT);
    }

    #[test]
    fn shifted_parabola_converges() {
        let r = check_semicontinuity(
            &FunctionSequence::shifted_parabola(),
            100,
            &Default::default(),
        )
        .unwrap();
        assert!(
            r.pass,
            "{:?}",
            (&r.lower_sigma, &r.upper_tau, &r.continuity)
        );
        assert!(r.continuity.claimed);
        assert_eq!(r.lower_sigma.mode, "exact");
        assert_eq!(r.upper_tau.mode, "trend");
        assert!(
            (r.stages[9].sigma - 0.1).abs() < TOL_ORACLE,
            "{:?}",
            r.stages[9]
        );
    }

    #[test]
    fn tilted_flat_bottom() {
        let r = check_semicontinuity(
            &FunctionSequence::tilted_flat_bottom(),
            100,
            &Default::default(),
        )
        .unwrap();
        assert!(r.pass);
        assert!(r.stages.iter().all(|s| s.sigma == -1.0 && s.tau == -1.0));
        assert_eq!(r.stages[0].tail_inf_sigma, -1.0);
    }

    #[test]
    fn verdicts_do_not_depend_on_the_grid() {
        let seq = FunctionSequence::counterexample();
        let coarse = seq.clone().with_grid(dyadic_grid(-4, 4, 0));
        let a = check_semicontinuity(&seq, 40, &Default::default()).unwrap();
        let b = check_semicontinuity(&coarse, 40, &Default::default()).unwrap();
        assert_eq!(a.pass, b.pass);
        assert_eq!(a.lower_sigma, b.lower_sigma);
        assert_eq!(a.upper_tau, b.upper_tau);
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let seq = FunctionSequence::shifted_parabola();
        let par = check_semicontinuity(&seq, 30, &Default::default()).unwrap();
        let opts = SemicontinuityOptions {
            exec: Execution::Sequential,
            ..Default::default()
        };
        assert_eq!(par, check_semicontinuity(&seq, 30, &opts).unwrap());
    }

    #[test]
    fn nonconvex_stage_is_reported() {
        let seq = FunctionSequence::new(
            "bad",
            |k| {
                Ok(if k == 3 {
                    StageFn::Oracle(ConvexOracle::new(|t| -t * t).with_bracket(-1.0, 1.0)?)
                } else {
                    StageFn::Oracle(ConvexOracle::new(|t| t * t).with_bracket(-1.0, 1.0)?)
                })
            },
            StageFn::Oracle(
                ConvexOracle::new(|t| t * t)
                    .with_bracket(-1.0, 1.0)
                    .unwrap(),
            ),
            dyadic_grid(-2, 2, 2),
        );
        assert!(matches!(
            check_semicontinuity(&seq, 5, &Default::default()),
            Err(Error::StageFailure { stage: 3, .. })
        ));
    }

    #[test]
    fn shrinking_rule() {
        assert!(shrinking(&[1, 2, 3], &[1.0, 0.5, 0.3]));
        assert!(!shrinking(&[1, 2, 3], &[0.3, 0.5, 1.0]));
        assert!(shrinking(&[1, 2, 3], &[0.0, 0.0, 0.0]));
        assert!(shrinking(&[1, 2, 3], &[1.0, 0.0, 0.0]));
        assert!(!shrinking(&[1, 2, 3], &[0.0, 1.0, 0.0]));
    }
}
