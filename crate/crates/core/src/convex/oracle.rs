use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::{Error, Result};

type EvalFn = dyn Fn(f64) -> f64 + Send + Sync;

type BoundExpr = Box<dyn Fn(f64) -> f64>;

// Bound expressions are not thread-safe, so each thread binds its own copy
// on first use.
thread_local! {
    static BOUND_EXPRS: RefCell<HashMap<u64, BoundExpr>> = RefCell::new(HashMap::new());
}
static NEXT_EXPR_ID: AtomicU64 = AtomicU64::new(0);

/// Black-box access to a convex function `R -> R`.
///
/// Convexity is assumed by the caller but every operation that samples the
/// function checks the quotient monotonicity it relies on and reports a
/// [`Error::ConvexityViolation`] when the samples contradict it.
#[derive(Clone)]
pub struct ConvexOracle {
    f: Arc<EvalFn>,
    bracket: Option<(f64, f64)>,
    eval_budget: Option<usize>,
}

impl fmt::Debug for ConvexOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvexOracle")
            .field("bracket", &self.bracket)
            .field("eval_budget", &self.eval_budget)
            .finish_non_exhaustive()
    }
}

impl ConvexOracle {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            f: Arc::new(f),
            bracket: None,
            eval_budget: None,
        }
    }

    /// Arithmetic expression in the variable `t`, e.g. `"abs(t-1) + abs(t+1)"`.
    pub fn from_expr(expr: &str) -> Result<Self> {
        let parsed: meval::Expr = expr
            .parse()
            .map_err(|e| Error::Parse(format!("expression {expr:?}: {e}")))?;
        let _validated = parsed
            .clone()
            .bind("t")
            .map_err(|e| Error::Parse(format!("expression {expr:?}: {e}")))?;
        let id = NEXT_EXPR_ID.fetch_add(1, Ordering::Relaxed);
        let parsed = Arc::new(parsed);
        Ok(Self::new(move |t| {
            BOUND_EXPRS.with(|cache| {
                let mut cache = cache.borrow_mut();
                let f = cache.entry(id).or_insert_with(|| {
                    Box::new(
                        parsed
                            .as_ref()
                            .clone()
                            .bind("t")
                            .expect("bound once already"),
                    )
                });
                f(t)
            })
        }))
    }

    /// Promise that `sigma(f)` and `tau(f)` lie in `[lo, hi]`.
    pub fn with_bracket(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Parse(format!("invalid bracket [{lo}, {hi}]")));
        }
        self.bracket = Some((lo, hi));
        Ok(self)
    }

    /// Cap on the evaluations a single operation may spend.
    pub fn with_budget(mut self, evals: usize) -> Self {
        self.eval_budget = Some(evals);
        self
    }

    pub fn bracket(&self) -> Option<(f64, f64)> {
        self.bracket
    }

    pub fn eval_budget(&self) -> Option<usize> {
        self.eval_budget
    }

    /// Unmetered evaluation.
    pub fn value(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    /// `t -> f(-t)`, with the bracket mirrored.
    pub fn reflect(&self) -> Self {
        let f = Arc::clone(&self.f);
        Self {
            f: Arc::new(move |t: f64| f(-t)),
            bracket: self.bracket.map(|(lo, hi)| (-hi, -lo)),
            eval_budget: self.eval_budget,
        }
    }

    pub(crate) fn meter(&self) -> Meter<'_> {
        Meter {
            oracle: self,
            used: 0,
        }
    }
}

/// Counts evaluations against the oracle's budget for one operation.
pub(crate) struct Meter<'a> {
    oracle: &'a ConvexOracle,
    used: usize,
}

impl Meter<'_> {
    pub fn eval(&mut self, t: f64) -> Result<f64> {
        if let Some(budget) = self.oracle.eval_budget {
            if self.used >= budget {
                return Err(Error::BudgetExceeded { budget });
            }
        }
        self.used += 1;
        let v = (self.oracle.f)(t);
        if !v.is_finite() {
            return Err(Error::ConvexityViolation {
                at: t,
                detail: format!("non-finite value {v}"),
            });
        }
        Ok(v)
    }

    pub fn used(&self) -> usize {
        self.used
    }
}

/// Strictly decreasing positive step sizes for difference quotients.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSchedule(Vec<f64>);

impl StepSchedule {
    pub fn new(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidSchedule("no steps".into()));
        }
        if steps.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::InvalidSchedule(
                "steps must be finite and positive".into(),
            ));
        }
        if steps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidSchedule(
                "steps must be strictly decreasing".into(),
            ));
        }
        Ok(Self(steps))
    }

    pub fn geometric(start: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidSchedule(format!(
                "ratio {ratio} not in (0, 1)"
            )));
        }
        Self::new((0..count).map(|i| start * ratio.powi(i as i32)).collect())
    }

    pub fn steps(&self) -> &[f64] {
        &self.0
    }

    pub fn smallest(&self) -> f64 {
        *self.0.last().expect("schedule is non-empty")
    }
}

impl Default for StepSchedule {
    /// 1, 1/8, ..., 1/8^11.
    fn default() -> Self {
        Self::geometric(1.0, 0.125, 12).expect("valid default schedule")
    }
}

/// Tolerances for quotient-based decisions on oracles.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleOptions {
    pub schedule: StepSchedule,
    /// Relative slack when checking that quotients are monotone in the step.
    pub tol_quotient: f64,
    /// Margin a quotient must clear to count as negative or positive.
    pub tol_sign: f64,
    /// Rounding-error model: an evaluation `f(t)` is trusted to within
    /// `noise_rel * (|f(t)| + 1)`.
    pub noise_rel: f64,
    /// Steps below `h_min_rel * max(1, |x|)` are skipped.
    pub h_min_rel: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            schedule: StepSchedule::default(),
            tol_quotient: 1e-9,
            tol_sign: 1e-10,
            noise_rel: 16.0 * f64::EPSILON,
            h_min_rel: 1e-12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// One difference quotient `(f(t) - f(x)) / (t - x)` with its rounding bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quotient {
    /// Effective step `|t - x|` after rounding `t`.
    pub h: f64,
    pub q: f64,
    pub noise: f64,
}

pub(crate) fn quotient(
    meter: &mut Meter<'_>,
    x: f64,
    fx: f64,
    h: f64,
    side: Side,
    opts: &OracleOptions,
) -> Result<Option<Quotient>> {
    let t = match side {
        Side::Right => x + h,
        Side::Left => x - h,
    };
    let h_eff = (t - x).abs();
    if h_eff < opts.h_min_rel * x.abs().max(1.0) || h_eff == 0.0 {
        return Ok(None);
    }
    let ft = meter.eval(t)?;
    let q = (ft - fx) / (t - x);
    let noise = opts.noise_rel * (fx.abs() + ft.abs() + 1.0) / h_eff;
    Ok(Some(Quotient { h: h_eff, q, noise }))
}

/// Right quotients must not increase as the step shrinks; left quotients
/// must not decrease.
pub(crate) fn check_monotone(
    prev: &Quotient,
    cur: &Quotient,
    side: Side,
    x: f64,
    opts: &OracleOptions,
) -> Result<()> {
    let slack = opts.tol_quotient * prev.q.abs().max(1.0) + prev.noise + cur.noise;
    let ok = match side {
        Side::Right => cur.q <= prev.q + slack,
        Side::Left => cur.q >= prev.q - slack,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::ConvexityViolation {
            at: x,
            detail: format!(
                "{side:?} quotient moved from {} (h = {}) to {} (h = {})",
                prev.q, prev.h, cur.q, cur.h
            ),
        })
    }
}

fn quotients(
    meter: &mut Meter<'_>,
    x: f64,
    fx: f64,
    side: Side,
    opts: &OracleOptions,
) -> Result<Vec<Quotient>> {
    let mut out: Vec<Quotient> = Vec::with_capacity(opts.schedule.steps().len());
    for &h in opts.schedule.steps() {
        if let Some(cur) = quotient(meter, x, fx, h, side, opts)? {
            if let Some(prev) = out.last() {
                check_monotone(prev, &cur, side, x, opts)?;
            }
            out.push(cur);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidSchedule(format!(
            "every step is below the resolution at x = {x}"
        )));
    }
    Ok(out)
}

/// Certified bounds on a one-sided derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeBracket {
    pub side: Side,
    pub at: f64,
    pub lower: f64,
    pub upper: f64,
    /// Quotients in schedule order (largest step first).
    pub quotients: Vec<Quotient>,
    /// Change between the last two quotients; a rough size of the
    /// remaining distance to the limit.
    pub gap: f64,
}

impl DerivativeBracket {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

fn tail_gap(qs: &[Quotient]) -> f64 {
    match qs {
        [.., a, b] => (a.q - b.q).abs(),
        _ => 0.0,
    }
}

// Every right quotient bounds D+f(x) from above, every left quotient bounds
// D-f(x) <= D+f(x) from below; each is widened by its rounding bound.
fn upper_from_right(qs: &[Quotient]) -> f64 {
    qs.iter()
        .map(|q| q.q + q.noise)
        .fold(f64::INFINITY, f64::min)
}

fn lower_from_left(qs: &[Quotient]) -> f64 {
    qs.iter()
        .map(|q| q.q - q.noise)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Upper bound on `D+f(x)` from right quotients; the lower bound is `-inf`.
pub fn d_plus_bracket(f: &ConvexOracle, x: f64, opts: &OracleOptions) -> Result<DerivativeBracket> {
    let mut meter = f.meter();
    let fx = meter.eval(x)?;
    let right = quotients(&mut meter, x, fx, Side::Right, opts)?;
    Ok(DerivativeBracket {
        side: Side::Right,
        at: x,
        lower: f64::NEG_INFINITY,
        upper: upper_from_right(&right),
        gap: tail_gap(&right),
        quotients: right,
    })
}

/// Like [`d_plus_bracket`], with a finite lower bound from left quotients
/// (`D+f(x) >= D-f(x) >=` any left quotient).
pub fn d_plus_bracket_two_sided(
    f: &ConvexOracle,
    x: f64,
    opts: &OracleOptions,
) -> Result<DerivativeBracket> {
    let mut meter = f.meter();
    let fx = meter.eval(x)?;
    let right = quotients(&mut meter, x, fx, Side::Right, opts)?;
    let left = quotients(&mut meter, x, fx, Side::Left, opts)?;
    Ok(DerivativeBracket {
        side: Side::Right,
        at: x,
        lower: lower_from_left(&left),
        upper: upper_from_right(&right),
        gap: tail_gap(&right),
        quotients: right,
    })
}

/// Lower bound on `D-f(x)` from left quotients; the upper bound is `+inf`.
pub fn d_minus_bracket(
    f: &ConvexOracle,
    x: f64,
    opts: &OracleOptions,
) -> Result<DerivativeBracket> {
    let mut meter = f.meter();
    let fx = meter.eval(x)?;
    let left = quotients(&mut meter, x, fx, Side::Left, opts)?;
    Ok(DerivativeBracket {
        side: Side::Left,
        at: x,
        lower: lower_from_left(&left),
        upper: f64::INFINITY,
        gap: tail_gap(&left),
        quotients: left,
    })
}

/// Like [`d_minus_bracket`], with a finite upper bound from right quotients.
pub fn d_minus_bracket_two_sided(
    f: &ConvexOracle,
    x: f64,
    opts: &OracleOptions,
) -> Result<DerivativeBracket> {
    let mut meter = f.meter();
    let fx = meter.eval(x)?;
    let left = quotients(&mut meter, x, fx, Side::Left, opts)?;
    let right = quotients(&mut meter, x, fx, Side::Right, opts)?;
    Ok(DerivativeBracket {
        side: Side::Left,
        at: x,
        lower: lower_from_left(&left),
        upper: upper_from_right(&right),
        gap: tail_gap(&left),
        quotients: left,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexityReport {
    pub passed: bool,
    /// Largest excess of `f(b)` over the chord through `(a, f(a))`,
    /// `(c, f(c))`; zero when no triple is violated.
    pub worst_violation: f64,
    pub worst_triple: Option<(f64, f64, f64)>,
    pub triples_checked: usize,
}

/// Chord test on every consecutive triple of a sorted grid.
pub fn check_convexity(f: &ConvexOracle, grid: &[f64], tol: f64) -> Result<ConvexityReport> {
    if grid.len() < 3 {
        return Err(Error::GridTooSparse(
            "convexity check needs at least 3 points".into(),
        ));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::GridTooSparse(
            "convexity grid must be strictly increasing".into(),
        ));
    }
    let mut meter = f.meter();
    let values = grid
        .iter()
        .map(|&t| meter.eval(t))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0;
    let mut worst_triple = None;
    for i in 1..grid.len() - 1 {
        let (a, b, c) = (grid[i - 1], grid[i], grid[i + 1]);
        let chord = ((c - b) * values[i - 1] + (b - a) * values[i + 1]) / (c - a);
        let excess = values[i] - chord;
        if excess > worst {
            worst = excess;
            worst_triple = Some((a, b, c));
        }
    }
    Ok(ConvexityReport {
        passed: worst <= tol,
        worst_violation: worst,
        worst_triple,
        triples_checked: grid.len() - 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts_with(steps: Vec<f64>) -> OracleOptions {
        OracleOptions {
            schedule: StepSchedule::new(steps).unwrap(),
            ..OracleOptions::default()
        }
    }

    #[test]
    fn default_schedule() {
        let s = StepSchedule::default();
        assert_eq!(s.steps().len(), 12);
        assert_eq!(s.steps()[0], 1.0);
        assert_eq!(s.smallest(), 0.125f64.powi(11));
        assert!(StepSchedule::new(vec![1.0, 1.0]).is_err());
        assert!(StepSchedule::new(vec![]).is_err());
        assert!(StepSchedule::new(vec![1.0, -0.5]).is_err());
    }

    #[test]
    fn quadratic_quotients() {
        let f = ConvexOracle::new(|t| t * t);
        let b = d_plus_bracket(&f, 1.0, &opts_with(vec![1.0, 0.1, 0.01])).unwrap();
        let qs: Vec<f64> = b.quotients.iter().map(|q| q.q).collect();
        assert!((qs[0] - 3.0).abs() < 1e-12);
        assert!((qs[1] - 2.1).abs() < 1e-12);
        assert!((qs[2] - 2.01).abs() < 1e-12);
        assert!((b.upper - 2.01).abs() < 1e-9);
        assert!(b.contains(2.0));
        assert_eq!(b.lower, f64::NEG_INFINITY);
    }

    #[test]
    fn kink_quotients() {
        let f = ConvexOracle::new(f64::abs);
        let b = d_plus_bracket(&f, 0.0, &OracleOptions::default()).unwrap();
        assert!(b.quotients.iter().all(|q| q.q == 1.0));
        assert!((b.upper - 1.0).abs() < 1e-9);
        let m = d_minus_bracket(&f, 0.0, &OracleOptions::default()).unwrap();
        assert!((m.lower + 1.0).abs() < 1e-9);
        assert_eq!(m.upper, f64::INFINITY);
    }

    #[test]
    fn hinge_quotients() {
        let f = ConvexOracle::new(|t: f64| (-t).max(0.0));
        let b = d_plus_bracket(&f, 0.0, &opts_with(vec![1.0, 0.5])).unwrap();
        assert_eq!(
            b.quotients.iter().map(|q| q.q).collect::<Vec<_>>(),
            vec![0.0, 0.0]
        );
        assert!(b.upper.abs() < 1e-12);
    }

    #[test]
    fn two_sided_bracket_is_finite() {
        let f = ConvexOracle::new(|t| (t - 0.3) * (t - 0.3));
        let b = d_plus_bracket_two_sided(&f, 1.0, &OracleOptions::default()).unwrap();
        assert!(b.lower.is_finite());
        assert!(b.contains(1.4));
        assert!(b.upper - b.lower < 1e-6);
        let m = d_minus_bracket_two_sided(&f, 1.0, &OracleOptions::default()).unwrap();
        assert!(m.contains(1.4));
    }

    #[test]
    fn concave_input_is_flagged() {
        let f = ConvexOracle::new(|t| -t * t);
        assert!(matches!(
            d_plus_bracket(&f, 0.0, &OracleOptions::default()),
            Err(Error::ConvexityViolation { .. })
        ));
    }

    #[test]
    fn budget_is_enforced() {
        let f = ConvexOracle::new(|t| t * t).with_budget(5);
        assert_eq!(
            d_plus_bracket(&f, 0.0, &OracleOptions::default()),
            Err(Error::BudgetExceeded { budget: 5 })
        );
    }

    #[test]
    fn convexity_report_examples() {
        let sq = ConvexOracle::new(|t| t * t);
        assert!(
            check_convexity(&sq, &[-1.0, 0.0, 1.0], 1e-12)
                .unwrap()
                .passed
        );
        let neg = ConvexOracle::new(|t| -t * t);
        let r = check_convexity(&neg, &[-1.0, 0.0, 1.0], 1e-12).unwrap();
        assert!(!r.passed);
        assert_eq!(r.worst_violation, 1.0);
        assert_eq!(r.worst_triple, Some((-1.0, 0.0, 1.0)));
        let abs = ConvexOracle::new(f64::abs);
        let grid: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.37).collect();
        assert!(check_convexity(&abs, &grid, 1e-12).unwrap().passed);
        assert!(check_convexity(&abs, &[0.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn expression_oracle() {
        let f = ConvexOracle::from_expr("abs(t - 1) + abs(t + 1)").unwrap();
        assert_eq!(f.value(0.0), 2.0);
        assert_eq!(f.value(3.0), 6.0);
        assert!(ConvexOracle::from_expr("t +").is_err());
        assert!(ConvexOracle::from_expr("x + 1").is_err());
    }

    #[test]
    fn reflection_mirrors_bracket() {
        let f = ConvexOracle::new(|t| (t - 2.0).powi(2))
            .with_bracket(0.0, 10.0)
            .unwrap();
        let g = f.reflect();
        assert_eq!(g.bracket(), Some((-10.0, 0.0)));
        assert_eq!(g.value(-2.0), 0.0);
    }
}
