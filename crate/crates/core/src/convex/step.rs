use crate::rational::Rational;
use crate::{Error, Result};

/// Which side of each jump the step function takes its value from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Continuity {
    /// `F(x_j)` equals the value on the segment right of `x_j` (like `D+f`).
    Right,
    /// `F(x_j)` equals the value on the segment left of `x_j` (like `D-f`).
    Left,
}

/// A non-decreasing step function with finitely many jumps, exact.
///
/// `values[i]` holds on the open interval between `jumps[i-1]` and
/// `jumps[i]`; the value at a jump follows [`Continuity`].
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    jumps: Vec<Rational>,
    values: Vec<Rational>,
    continuity: Continuity,
}

impl StepFunction {
    pub fn new(
        jumps: Vec<Rational>,
        values: Vec<Rational>,
        continuity: Continuity,
    ) -> Result<Self> {
        if values.len() != jumps.len() + 1 {
            return Err(Error::InvalidPwl(
                "step function needs one more value than jumps".into(),
            ));
        }
        if jumps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPwl("jumps not strictly increasing".into()));
        }
        if let Some(i) = (1..values.len()).find(|&i| values[i] < values[i - 1]) {
            return Err(Error::NotMonotone {
                at: crate::rational::to_f64(&jumps[i - 1]),
            });
        }
        Ok(Self::new_unchecked(jumps, values, continuity))
    }

    pub(crate) fn new_unchecked(
        jumps: Vec<Rational>,
        values: Vec<Rational>,
        continuity: Continuity,
    ) -> Self {
        Self {
            jumps,
            values,
            continuity,
        }
    }

    pub fn jumps(&self) -> &[Rational] {
        &self.jumps
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn continuity(&self) -> Continuity {
        self.continuity
    }

    pub fn eval(&self, x: &Rational) -> &Rational {
        let i = match self.continuity {
            Continuity::Right => self.jumps.partition_point(|b| b <= x),
            Continuity::Left => self.jumps.partition_point(|b| b < x),
        };
        &self.values[i]
    }
}
