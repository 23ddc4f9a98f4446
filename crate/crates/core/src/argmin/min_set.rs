use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::convex::PwlConvex;
use crate::rational::{self, Extended, Rational};
use crate::{Error, Result};

/// Side towards which a function without minimizers keeps decreasing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Escape {
    Left,
    Right,
}

/// The minimum set `A(f)` of a convex function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MinSet {
    Empty(Escape),
    Compact { lo: Rational, hi: Rational },
    LeftRay { hi: Rational },
    RightRay { lo: Rational },
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinSetKind {
    Empty,
    Compact,
    LeftRay,
    RightRay,
    All,
}

impl fmt::Display for MinSetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MinSetKind::Empty => "empty",
            MinSetKind::Compact => "compact",
            MinSetKind::LeftRay => "left_ray",
            MinSetKind::RightRay => "right_ray",
            MinSetKind::All => "all",
        })
    }
}

impl MinSet {
    pub fn kind(&self) -> MinSetKind {
        match self {
            MinSet::Empty(_) => MinSetKind::Empty,
            MinSet::Compact { .. } => MinSetKind::Compact,
            MinSet::LeftRay { .. } => MinSetKind::LeftRay,
            MinSet::RightRay { .. } => MinSetKind::RightRay,
            MinSet::All => MinSetKind::All,
        }
    }

    /// `inf A(f)`, or `None` when `A(f)` is empty.
    pub fn sigma(&self) -> Option<Extended> {
        match self {
            MinSet::Empty(_) => None,
            MinSet::Compact { lo, .. } | MinSet::RightRay { lo } => {
                Some(Extended::Finite(lo.clone()))
            }
            MinSet::LeftRay { .. } | MinSet::All => Some(Extended::NegInf),
        }
    }

    /// `sup A(f)`, or `None` when `A(f)` is empty.
    pub fn tau(&self) -> Option<Extended> {
        match self {
            MinSet::Empty(_) => None,
            MinSet::Compact { hi, .. } | MinSet::LeftRay { hi } => {
                Some(Extended::Finite(hi.clone()))
            }
            MinSet::RightRay { .. } | MinSet::All => Some(Extended::PosInf),
        }
    }

    /// Both endpoints, when `A(f)` is a compact interval.
    pub fn compact(&self) -> Option<(&Rational, &Rational)> {
        match self {
            MinSet::Compact { lo, hi } => Some((lo, hi)),
            _ => None,
        }
    }

    pub fn contains(&self, x: &Rational) -> bool {
        match self {
            MinSet::Empty(_) => false,
            MinSet::Compact { lo, hi } => lo <= x && x <= hi,
            MinSet::LeftRay { hi } => x <= hi,
            MinSet::RightRay { lo } => lo <= x,
            MinSet::All => true,
        }
    }
}

/// Exact minimum set from the sign change of the slope sequence.
///
/// `sigma` is the left end of the first segment with slope `>= 0`, `tau`
/// the right end of the last segment with slope `<= 0`.
pub fn min_set_pwl(f: &PwlConvex) -> MinSet {
    let s = f.slopes();
    let b = f.breakpoints();
    let m = b.len();
    if s[m].is_negative() {
        return MinSet::Empty(Escape::Right);
    }
    if s[0].is_positive() {
        return MinSet::Empty(Escape::Left);
    }
    if s[0].is_zero() && s[m].is_zero() {
        return MinSet::All;
    }
    let j_sigma = s.partition_point(|v| v.is_negative());
    let j_tau = s.partition_point(|v| !v.is_positive()) - 1;
    match (j_sigma, j_tau == m) {
        (0, _) => MinSet::LeftRay {
            hi: b[j_tau].clone(),
        },
        (_, true) => MinSet::RightRay {
            lo: b[j_sigma - 1].clone(),
        },
        _ => MinSet::Compact {
            lo: b[j_sigma - 1].clone(),
            hi: b[j_tau].clone(),
        },
    }
}

/// `(sigma(f) <= x, tau(f) >= x)`, computed once from the minimum set and
/// once from the signs of `D+f(x)` and `D-f(x)`; the two must agree.
pub fn location_predicates(f: &PwlConvex, x: &Rational) -> Result<(bool, bool)> {
    let set = min_set_pwl(f);
    let (Some(sigma), Some(tau)) = (set.sigma(), set.tau()) else {
        return Err(Error::NoCompactMinSet(set.kind().to_string()));
    };
    let at = Extended::Finite(x.clone());
    let from_set = (sigma <= at, tau >= at);
    let from_slopes = (!f.d_plus(x).is_negative(), !f.d_minus(x).is_positive());
    if from_set != from_slopes {
        return Err(Error::EquivalenceViolation(format!(
            "{}: min set gives {from_set:?}, slopes give {from_slopes:?}",
            rational::format(x)
        )));
    }
    Ok(from_set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn pwl(b: &[i64], s: &[i64]) -> PwlConvex {
        PwlConvex::new(
            int(0),
            int(0),
            b.iter().map(|&v| int(v)).collect(),
            s.iter().map(|&v| int(v)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn flat_bottom() {
        let f = pwl(&[-1, 1], &[-2, 0, 2]);
        assert_eq!(
            min_set_pwl(&f),
            MinSet::Compact {
                lo: int(-1),
                hi: int(1)
            }
        );
    }

    #[test]
    fn kink() {
        let f = PwlConvex::abs(int(0));
        assert_eq!(
            min_set_pwl(&f),
            MinSet::Compact {
                lo: int(0),
                hi: int(0)
            }
        );
    }

    #[test]
    fn monotone_functions_have_no_minimizer() {
        assert_eq!(min_set_pwl(&pwl(&[], &[1])), MinSet::Empty(Escape::Left));
        assert_eq!(
            min_set_pwl(&pwl(&[0], &[-2, -1])),
            MinSet::Empty(Escape::Right)
        );
        assert_eq!(min_set_pwl(&pwl(&[], &[0])), MinSet::All);
    }

    #[test]
    fn rays() {
        assert_eq!(
            min_set_pwl(&pwl(&[2], &[0, 1])),
            MinSet::LeftRay { hi: int(2) }
        );
        assert_eq!(
            min_set_pwl(&pwl(&[2], &[-1, 0])),
            MinSet::RightRay { lo: int(2) }
        );
        assert_eq!(
            min_set_pwl(&pwl(&[2], &[-1, 0])).sigma(),
            Some(Extended::Finite(int(2)))
        );
        assert_eq!(
            min_set_pwl(&pwl(&[2], &[-1, 0])).tau(),
            Some(Extended::PosInf)
        );
    }

    #[test]
    fn redundant_breakpoints() {
        let f = pwl(&[0, 1, 2, 3], &[-1, -1, 0, 0, 1]);
        assert_eq!(
            min_set_pwl(&f),
            MinSet::Compact {
                lo: int(1),
                hi: int(3)
            }
        );
    }

    #[test]
    fn predicates() {
        let abs = PwlConvex::abs(int(0));
        assert_eq!(location_predicates(&abs, &int(0)).unwrap(), (true, true));
        assert_eq!(location_predicates(&abs, &int(-1)).unwrap(), (false, true));
        let flat = pwl(&[-1, 1], &[-2, 0, 2]);
        assert_eq!(location_predicates(&flat, &int(0)).unwrap(), (true, true));
        assert_eq!(location_predicates(&flat, &int(2)).unwrap(), (true, false));
        assert!(location_predicates(&pwl(&[], &[1]), &int(0)).is_err());
    }
}
