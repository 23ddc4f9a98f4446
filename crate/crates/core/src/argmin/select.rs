use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::argmin::MinSet;
use crate::rational::{self, Rational};
use crate::{Error, Result};

/// A rule picking one point `xi(f)` of a compact minimum set, with
/// `sigma(f) <= xi(f) <= tau(f)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "lambda")]
pub enum SelectionPolicy {
    Smallest,
    Largest,
    Midpoint,
    /// `sigma + lambda * (tau - sigma)` with `lambda` in `[0, 1]`.
    FixedFraction(f64),
}

impl SelectionPolicy {
    pub fn validate(self) -> Result<Self> {
        match self {
            SelectionPolicy::FixedFraction(l) if !(0.0..=1.0).contains(&l) => {
                Err(Error::Parse(format!("fraction {l} not in [0, 1]")))
            }
            p => Ok(p),
        }
    }

    fn lambda(self) -> Result<Rational> {
        match self.validate()? {
            SelectionPolicy::Smallest => Ok(rational::int(0)),
            SelectionPolicy::Largest => Ok(rational::int(1)),
            SelectionPolicy::Midpoint => Ok(rational::ratio(1, 2)),
            SelectionPolicy::FixedFraction(l) => rational::from_f64(l),
        }
    }

    /// Exact selection from a compact minimum set.
    pub fn select(self, set: &MinSet) -> Result<Rational> {
        let (lo, hi) = set
            .compact()
            .ok_or_else(|| Error::NoCompactMinSet(set.kind().to_string()))?;
        self.select_between(lo, hi)
    }

    pub fn select_between(self, lo: &Rational, hi: &Rational) -> Result<Rational> {
        let lambda = self.lambda()?;
        Ok(lo + (hi - lo) * lambda)
    }

    /// Selection from floating-point endpoints, clamped into `[lo, hi]`.
    pub fn select_f64(self, lo: f64, hi: f64) -> Result<f64> {
        let lambda = rational::to_f64(&self.lambda()?);
        Ok((lo + lambda * (hi - lo)).clamp(lo, hi))
    }
}

impl FromStr for SelectionPolicy {
    type Err = Error;

    /// `smallest`, `largest`, `midpoint`, or `fraction:<lambda>`.
    fn from_str(s: &str) -> Result<Self> {
        let p = match s {
            "smallest" => SelectionPolicy::Smallest,
            "largest" => SelectionPolicy::Largest,
            "midpoint" => SelectionPolicy::Midpoint,
            _ => {
                let l = s
                    .strip_prefix("fraction:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::Parse(format!(
                            "unknown policy {s:?} (expected smallest, largest, midpoint or fraction:<lambda>)"
                        ))
                    })?;
                SelectionPolicy::FixedFraction(l)
            }
        };
        p.validate()
    }
}

impl fmt::Display for SelectionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionPolicy::Smallest => f.write_str("smallest"),
            SelectionPolicy::Largest => f.write_str("largest"),
            SelectionPolicy::Midpoint => f.write_str("midpoint"),
            SelectionPolicy::FixedFraction(l) => write!(f, "fraction:{l}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::argmin::Escape;
    use crate::rational::int;

    fn flat() -> MinSet {
        MinSet::Compact {
            lo: int(-1),
            hi: int(1),
        }
    }

    #[test]
    fn policies_on_flat_bottom() {
        assert_eq!(SelectionPolicy::Midpoint.select(&flat()).unwrap(), int(0));
        assert_eq!(
            SelectionPolicy::FixedFraction(0.0).select(&flat()).unwrap(),
            int(-1)
        );
        assert_eq!(
            SelectionPolicy::FixedFraction(1.0).select(&flat()).unwrap(),
            int(1)
        );
        assert_eq!(SelectionPolicy::Smallest.select(&flat()).unwrap(), int(-1));
        assert_eq!(SelectionPolicy::Largest.select(&flat()).unwrap(), int(1));
        assert_eq!(
            SelectionPolicy::FixedFraction(0.25)
                .select(&flat())
                .unwrap(),
            rational::ratio(-1, 2)
        );
    }

    #[test]
    fn needs_compact_set() {
        assert!(matches!(
            SelectionPolicy::Midpoint.select(&MinSet::Empty(Escape::Left)),
            Err(Error::NoCompactMinSet(_))
        ));
        assert!(SelectionPolicy::Midpoint.select(&MinSet::All).is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!(
            "midpoint".parse::<SelectionPolicy>().unwrap(),
            SelectionPolicy::Midpoint
        );
        assert_eq!(
            "fraction:0.3".parse::<SelectionPolicy>().unwrap(),
            SelectionPolicy::FixedFraction(0.3)
        );
        assert!("fraction:1.5".parse::<SelectionPolicy>().is_err());
        assert!("median".parse::<SelectionPolicy>().is_err());
        for p in ["smallest", "largest", "midpoint", "fraction:0.5"] {
            assert_eq!(p.parse::<SelectionPolicy>().unwrap().to_string(), p);
        }
    }

    #[test]
    fn float_selection_stays_inside() {
        let x = SelectionPolicy::FixedFraction(0.7)
            .select_f64(0.1, 0.3)
            .unwrap();
        assert!((0.1..=0.3).contains(&x));
    }
}
