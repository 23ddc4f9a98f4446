use serde::Serialize;

use crate::convex::oracle::{check_monotone, quotient, Meter};
use crate::convex::{ConvexOracle, OracleOptions, Quotient, Side};
use crate::{Error, Result};

/// Hard cap on bisection steps; hitting it sets [`Enclosure::capped`].
pub const MAX_ITERATIONS: usize = 200;

/// An interval `[lo, hi]` containing `sigma(f)` or `tau(f)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Enclosure {
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
    /// Stopped at [`MAX_ITERATIONS`] before reaching the width target.
    pub capped: bool,
    /// Stopped because the step schedule can no longer shrink the interval.
    pub resolution_limited: bool,
    /// Predicate evaluations where no quotient cleared the sign margin; the
    /// predicate was then taken to hold up to the smallest step.
    pub undecided: usize,
    pub evaluations: usize,
}

impl Enclosure {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Every predicate decision was backed by a quotient that cleared its
    /// rounding bound and the width target was met.
    pub fn certified(&self) -> bool {
        !self.capped && !self.resolution_limited && self.undecided == 0
    }

    fn negate(self) -> Self {
        Self {
            lo: -self.hi,
            hi: -self.lo,
            ..self
        }
    }
}

enum Decision {
    /// Right side: `sigma > x`. Left side: `tau < x`.
    Flip,
    /// Right side: `sigma <= x + reach`. Left side: `tau >= x - reach`.
    /// `certified` is the smallest step whose quotient cleared its rounding
    /// bound; `smallest` is the last step of the schedule.
    Hold {
        certified: Option<f64>,
        smallest: f64,
    },
}

// Right quotients over-estimate D+f(x), so one that is negative beyond its
// rounding bound certifies D+f(x) < 0. A non-negative quotient over
// [x, x + h] gives D+f(x + h) >= 0, i.e. sigma <= x + h. The left side is the
// mirror image with signs flipped.
fn decide(meter: &mut Meter<'_>, x: f64, side: Side, opts: &OracleOptions) -> Result<Decision> {
    let sign = match side {
        Side::Right => 1.0,
        Side::Left => -1.0,
    };
    let fx = meter.eval(x)?;
    let mut prev: Option<Quotient> = None;
    let mut certified = None;
    for &h in opts.schedule.steps() {
        let Some(q) = quotient(meter, x, fx, h, side, opts)? else {
            continue;
        };
        if let Some(p) = &prev {
            check_monotone(p, &q, side, x, opts)?;
        }
        let r = sign * q.q;
        if r + q.noise < -opts.tol_sign {
            return Ok(Decision::Flip);
        }
        if r - q.noise >= 0.0 {
            certified = Some(q.h);
        }
        prev = Some(q);
    }
    match prev {
        Some(q) => Ok(Decision::Hold {
            certified,
            smallest: q.h,
        }),
        None => Err(Error::InvalidSchedule(format!(
            "every step is below the resolution at x = {x}"
        ))),
    }
}

fn bisect(f: &ConvexOracle, tol: f64, side: Side, opts: &OracleOptions) -> Result<Enclosure> {
    let (mut lo, mut hi) = f.bracket().ok_or(Error::NoBracket)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidSchedule(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let (lo0, hi0) = (lo, hi);
    let mut meter = f.meter();
    // The far end of the bracket must already satisfy the predicate, and
    // the near end must not lie beyond the whole minimum set.
    let (far, near, other) = match side {
        Side::Right => (hi, lo, Side::Left),
        Side::Left => (lo, hi, Side::Right),
    };
    if let Decision::Flip = decide(&mut meter, far, side, opts)? {
        return Err(Error::BracketViolated { lo: lo0, hi: hi0 });
    }
    if let Decision::Flip = decide(&mut meter, near, other, opts)? {
        return Err(Error::BracketViolated { lo: lo0, hi: hi0 });
    }
    let mut out = Enclosure {
        lo,
        hi,
        iterations: 0,
        capped: false,
        resolution_limited: false,
        undecided: 0,
        evaluations: 0,
    };
    while hi - lo > tol {
        if out.iterations == MAX_ITERATIONS {
            out.capped = true;
            break;
        }
        out.iterations += 1;
        let x = 0.5 * (lo + hi);
        if x <= lo || x >= hi {
            out.resolution_limited = true;
            break;
        }
        match (decide(&mut meter, x, side, opts)?, side) {
            (Decision::Flip, Side::Right) => lo = x,
            (Decision::Flip, Side::Left) => hi = x,
            (
                Decision::Hold {
                    certified,
                    smallest,
                },
                _,
            ) => {
                let inside = |reach: f64| match side {
                    Side::Right => x + reach < hi,
                    Side::Left => x - reach > lo,
                };
                let reach = match certified {
                    Some(r) if inside(r) => r,
                    _ if inside(smallest) => {
                        out.undecided += 1;
                        smallest
                    }
                    _ => {
                        out.resolution_limited = true;
                        break;
                    }
                };
                match side {
                    Side::Right => hi = x + reach,
                    Side::Left => lo = x - reach,
                }
            }
        }
    }
    out.lo = lo;
    out.hi = hi;
    out.evaluations = meter.used();
    Ok(out)
}

/// Enclosure of `sigma(f)` by bisection on `D+f(x) >= 0` within the
/// oracle's bracket.
pub fn sigma_bisect(f: &ConvexOracle, tol: f64, opts: &OracleOptions) -> Result<Enclosure> {
    bisect(f, tol, Side::Right, opts)
}

/// Enclosure of `tau(f)` by bisection on `D-f(x) <= 0` directly.
pub fn tau_bisect_direct(f: &ConvexOracle, tol: f64, opts: &OracleOptions) -> Result<Enclosure> {
    bisect(f, tol, Side::Left, opts)
}

/// Enclosure of `tau(f) = -sigma(f(-.))`, cross-checked against
/// [`tau_bisect_direct`]. The two enclosures must overlap; their
/// intersection is returned, flagged as uncertified if either run was.
pub fn tau_bisect(f: &ConvexOracle, tol: f64, opts: &OracleOptions) -> Result<Enclosure> {
    let reflected = sigma_bisect(&f.reflect(), tol, opts)?.negate();
    let direct = tau_bisect_direct(f, tol, opts)?;
    let lo = reflected.lo.max(direct.lo);
    let hi = reflected.hi.min(direct.hi);
    if lo > hi {
        return Err(Error::CrossCheckFailed {
            reflected_lo: reflected.lo,
            reflected_hi: reflected.hi,
            direct_lo: direct.lo,
            direct_hi: direct.hi,
        });
    }
    Ok(Enclosure {
        lo,
        hi,
        iterations: reflected.iterations + direct.iterations,
        capped: reflected.capped || direct.capped,
        resolution_limited: reflected.resolution_limited || direct.resolution_limited,
        undecided: reflected.undecided + direct.undecided,
        evaluations: reflected.evaluations + direct.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::PwlConvex;
    use crate::rational::int;

    fn opts() -> OracleOptions {
        OracleOptions::default()
    }

    #[test]
    fn quadratic() {
        let f = ConvexOracle::new(|t| (t - 2.0) * (t - 2.0))
            .with_bracket(0.0, 10.0)
            .unwrap();
        let s = sigma_bisect(&f, 1e-6, &opts()).unwrap();
        assert!(s.contains(2.0), "{s:?}");
        assert!(s.width() <= 1e-6);
        let t = tau_bisect(&f, 1e-6, &opts()).unwrap();
        assert!(t.contains(2.0), "{t:?}");
    }

    #[test]
    fn flat_bottom_expression() {
        let f = ConvexOracle::from_expr("abs(t-1)+abs(t+1)")
            .unwrap()
            .with_bracket(-5.0, 5.0)
            .unwrap();
        let s = sigma_bisect(&f, 1e-7, &opts()).unwrap();
        assert!(s.contains(-1.0), "{s:?}");
        let t = tau_bisect(&f, 1e-7, &opts()).unwrap();
        assert!(t.contains(1.0), "{t:?}");
    }

    #[test]
    fn counterexample_limit() {
        let f = PwlConvex::new(
            int(0),
            int(0),
            vec![int(-1), int(1)],
            vec![int(-1), int(0), int(1)],
        )
        .unwrap()
        .to_oracle()
        .with_bracket(-5.0, 5.0)
        .unwrap();
        assert!(sigma_bisect(&f, 1e-7, &opts()).unwrap().contains(-1.0));
        assert!(tau_bisect(&f, 1e-7, &opts()).unwrap().contains(1.0));
    }

    #[test]
    fn missing_or_wrong_bracket() {
        let f = ConvexOracle::new(|t| t * t);
        assert_eq!(sigma_bisect(&f, 1e-6, &opts()), Err(Error::NoBracket));
        let g = ConvexOracle::new(|t| t * t).with_bracket(1.0, 2.0).unwrap();
        assert!(matches!(
            sigma_bisect(&g, 1e-6, &opts()),
            Err(Error::BracketViolated { .. })
        ));
        assert!(matches!(
            tau_bisect(&g, 1e-6, &opts()),
            Err(Error::BracketViolated { .. })
        ));
        let h = ConvexOracle::new(|t| t * t)
            .with_bracket(-3.0, -1.0)
            .unwrap();
        assert!(matches!(
            sigma_bisect(&h, 1e-6, &opts()),
            Err(Error::BracketViolated { .. })
        ));
    }

    #[test]
    fn tolerance_below_resolution_is_flagged() {
        let f = ConvexOracle::new(|t| (t - 0.3).abs())
            .with_bracket(-1.0, 1.0)
            .unwrap();
        let s = sigma_bisect(&f, 1e-14, &opts()).unwrap();
        assert!(s.contains(0.3));
        assert!(!s.certified());
    }

    #[test]
    fn budget_applies_to_the_whole_bisection() {
        let f = ConvexOracle::new(|t| t * t)
            .with_bracket(-1.0, 1.0)
            .unwrap()
            .with_budget(50);
        assert_eq!(
            sigma_bisect(&f, 1e-9, &opts()),
            Err(Error::BudgetExceeded { budget: 50 })
        );
    }
}
