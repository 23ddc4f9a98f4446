use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::exec::{self, Execution};
use crate::rational::{self, Rational};
use crate::stats;
use crate::stochastic::ensemble::{check_grid, default_tol_stat, trajectories};
use crate::stochastic::model::{ProcessModel, Stage, Trajectory};
use crate::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct UniquenessOptions {
    /// Largest membership probability allowed at the grid edges; defaults
    /// to three binomial standard errors at `p = 1/2`.
    pub tol_stat: Option<f64>,
    pub exec: Execution,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub stage: Stage,
    pub m: usize,
    /// Path average of `tau - sigma`.
    pub lhs: f64,
    pub lhs_se: f64,
    /// Trapezoid integral of the membership probability over the grid.
    pub rhs: f64,
    pub difference: f64,
    /// Largest grid spacing; the trapezoid rule is off by at most this much
    /// on every path.
    pub grid_step: f64,
    /// `3 * (lhs_se + grid_step)`.
    pub fubini_tol: f64,
    pub fubini_pass: bool,
    pub x_grid: Vec<f64>,
    /// Fraction of paths with `sigma <= x <= tau`.
    pub membership: Vec<f64>,
    /// Grid points where `sigma <= x <= tau` and `D-Z(x) <= 0 <= D+Z(x)`
    /// disagree, summed over paths.
    pub derivative_mismatches: usize,
    /// `sigma = tau` on every path.
    pub clause_unique: bool,
    /// The union of the minimum sets is Lebesgue-null, so
    /// `P(x in A(Z)) = 0` for almost every `x`.
    pub clause_membership: bool,
    /// Every path has no segment of slope zero, so
    /// `P(D-Z(x) <= 0 <= D+Z(x)) = 0` for almost every `x`.
    pub clause_derivative: bool,
    pub clauses_agree: bool,
}

struct PathSummary {
    sigma: Rational,
    tau: Rational,
    flat: Rational,
    // grid indices lo..hi lie in [sigma, tau]
    lo: usize,
    hi: usize,
    mismatches: usize,
}

// Derivative membership along the sorted grid, walking the breakpoints once.
fn derivative_membership(z: &Trajectory, grid: &[Rational]) -> Vec<bool> {
    match z {
        Trajectory::Pwl(f) => {
            let (b, s) = (f.breakpoints(), f.slopes());
            let (mut below, mut upto) = (0, 0);
            grid.iter()
                .map(|x| {
                    while below < b.len() && b[below] < *x {
                        below += 1;
                    }
                    upto = upto.max(below);
                    while upto < b.len() && b[upto] <= *x {
                        upto += 1;
                    }
                    !s[below].is_positive() && !s[upto].is_negative()
                })
                .collect()
        }
        Trajectory::UniformLadRisk => grid.iter().map(|x| z.derivative_membership(x)).collect(),
    }
}

fn summarize(z: &Trajectory, grid: &[Rational]) -> Result<PathSummary> {
    let (sigma, tau) = z.min_set()?;
    let lo = grid.partition_point(|x| *x < sigma);
    let hi = grid.partition_point(|x| *x <= tau);
    let mismatches = derivative_membership(z, grid)
        .into_iter()
        .enumerate()
        .filter(|&(i, d)| d != (lo..hi).contains(&i))
        .count();
    Ok(PathSummary {
        flat: z.flat_length(),
        sigma,
        tau,
        lo,
        hi,
        mismatches,
    })
}

// Lebesgue measure of a union of closed intervals.
fn union_length(mut intervals: Vec<(Rational, Rational)>) -> Rational {
    intervals.sort();
    let mut total = Rational::zero();
    let mut current: Option<(Rational, Rational)> = None;
    for (a, b) in intervals {
        current = match current {
            Some((ca, cb)) if a <= cb => Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total += cb - ca;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((a, b)) = current {
        total += b - a;
    }
    total
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (ys[0] + ys[1]) * (xs[1] - xs[0]))
        .sum()
}

/// Estimate both sides of `E[tau - sigma] = integral P(x in A(Z)) dx` and
/// decide the three equivalent forms of almost-sure uniqueness.
pub fn uniqueness_diagnostics(
    model: &ProcessModel,
    m: usize,
    stage: Stage,
    x_grid: &[f64],
    seed: u64,
    opts: &UniquenessOptions,
) -> Result<UniquenessReport> {
    check_grid(x_grid)?;
    if x_grid.len() < 2 {
        return Err(Error::GridMismatch("need at least two grid points".into()));
    }
    let grid: Vec<Rational> = x_grid
        .iter()
        .map(|&x| rational::from_f64(x))
        .collect::<Result<_>>()?;
    let paths = trajectories(model, m, stage, seed, opts.exec)?;
    let summaries = exec::try_map_indexed(opts.exec, paths.len(), |i| summarize(&paths[i], &grid))?;

    // membership counts through a difference array
    let mut diff = vec![0i64; grid.len() + 1];
    for s in &summaries {
        if s.lo < s.hi {
            diff[s.lo] += 1;
            diff[s.hi] -= 1;
        }
    }
    let mut running = 0i64;
    let membership: Vec<f64> = diff[..grid.len()]
        .iter()
        .map(|d| {
            running += d;
            running as f64 / m as f64
        })
        .collect();
    let tol = opts.tol_stat.unwrap_or_else(|| default_tol_stat(m));
    for &edge in &[0, grid.len() - 1] {
        if membership[edge] > tol {
            return Err(Error::GridTooNarrow {
                at: x_grid[edge],
                probability: membership[edge],
            });
        }
    }

    let gaps: Vec<f64> = summaries
        .iter()
        .map(|s| rational::to_f64(&(&s.tau - &s.sigma)))
        .collect();
    let gap_total: Rational = summaries.iter().map(|s| &s.tau - &s.sigma).sum();
    let lhs = rational::to_f64(&(gap_total / rational::int(m as i64)));
    let lhs_se = stats::std_err(&gaps);
    let rhs = trapezoid(x_grid, &membership);
    let grid_step = x_grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let fubini_tol = 3.0 * (lhs_se + grid_step);
    let difference = (lhs - rhs).abs();

    let clause_unique = summaries.iter().all(|s| s.sigma == s.tau);
    let clause_membership = union_length(
        summaries
            .iter()
            .map(|s| (s.sigma.clone(), s.tau.clone()))
            .collect(),
    )
    .is_zero();
    let clause_derivative = summaries.iter().all(|s| s.flat.is_zero());
    Ok(UniquenessReport {
        stage,
        m,
        lhs,
        lhs_se,
        rhs,
        difference,
        grid_step,
        fubini_tol,
        fubini_pass: difference <= fubini_tol,
        x_grid: x_grid.to_vec(),
        membership,
        derivative_mismatches: summaries.iter().map(|s| s.mismatches).sum(),
        clause_unique,
        clause_membership,
        clause_derivative,
        clauses_agree: clause_unique == clause_membership && clause_membership == clause_derivative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::model::{DataLaw, WidthLaw};

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .collect()
    }

    fn flat(width: WidthLaw) -> ProcessModel {
        ProcessModel::TiltedFlat {
            width,
            tilt: Rational::zero(),
        }
    }

    #[test]
    fn uniform_width_gives_one_half() {
        let model = flat(WidthLaw::Uniform {
            lo: Rational::zero(),
            hi: rational::int(1),
        });
        let r = uniqueness_diagnostics(
            &model,
            4000,
            Stage::Limit,
            &grid(-1.0, 1.0, 400),
            3,
            &Default::default(),
        )
        .unwrap();
        assert!((r.lhs - 0.5).abs() < 0.03, "{}", r.lhs);
        assert!(r.fubini_pass);
        assert!(r.difference <= r.grid_step);
        assert_eq!(r.derivative_mismatches, 0);
        assert!(!r.clause_unique && !r.clause_membership && !r.clause_derivative);
        assert!(r.clauses_agree);
    }

    #[test]
    fn zero_width_is_unique() {
        let model = flat(WidthLaw::Fixed {
            value: Rational::zero(),
        });
        let r = uniqueness_diagnostics(
            &model,
            100,
            Stage::Limit,
            &grid(-1.0, 1.0, 8),
            3,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.clause_unique && r.clause_membership && r.clause_derivative);
        // the single point 0 is a grid point
        assert_eq!(r.membership[4], 1.0);
        assert!(r.fubini_pass);
    }

    #[test]
    fn odd_sample_median() {
        let model = ProcessModel::EmpiricalLad {
            data: DataLaw::Uniform,
        };
        let r = uniqueness_diagnostics(
            &model,
            500,
            Stage::N(25),
            &grid(-0.5, 1.5, 200),
            1,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.rhs < 0.01);
        assert!(r.clause_unique && r.clauses_agree);
        assert_eq!(r.derivative_mismatches, 0);
    }

    #[test]
    fn even_sample_median_is_not_unique() {
        let model = ProcessModel::EmpiricalLad {
            data: DataLaw::Uniform,
        };
        let r = uniqueness_diagnostics(
            &model,
            200,
            Stage::N(24),
            &grid(-0.5, 1.5, 200),
            1,
            &Default::default(),
        )
        .unwrap();
        assert!(r.lhs > 0.0);
        assert!(!r.clause_unique && !r.clause_membership && !r.clause_derivative);
    }

    #[test]
    fn narrow_grid_is_reported() {
        let model = flat(WidthLaw::Fixed {
            value: rational::int(2),
        });
        let r = uniqueness_diagnostics(
            &model,
            10,
            Stage::Limit,
            &grid(-0.5, 0.5, 10),
            0,
            &Default::default(),
        );
        assert!(matches!(r, Err(Error::GridTooNarrow { .. })));
    }

    #[test]
    fn union_of_intervals() {
        let iv = |a: i64, b: i64| (rational::int(a), rational::int(b));
        assert_eq!(
            union_length(vec![iv(0, 2), iv(1, 3), iv(5, 6), iv(5, 5)]),
            rational::int(4)
        );
        assert!(union_length(vec![iv(1, 1), iv(2, 2)]).is_zero());
    }
}
