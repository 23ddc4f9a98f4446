use std::sync::{Arc, OnceLock};

use num_traits::{Signed, Zero};

use crate::convex::oracle::ConvexOracle;
use crate::convex::step::{Continuity, StepFunction};
use crate::rational::{self, Rational};
use crate::{Error, Result};

/// An exact piecewise-linear convex function.
///
/// `slopes[i]` is the slope on the open interval between `breakpoints[i-1]`
/// and `breakpoints[i]` (with `-inf`/`+inf` at the ends), so there is always
/// one more slope than breakpoints. The function is pinned by its value
/// `anchor_y` at `anchor_x`.
#[derive(Clone, Debug)]
pub struct PwlConvex {
    anchor_x: Rational,
    anchor_y: Rational,
    breakpoints: Vec<Rational>,
    slopes: Vec<Rational>,
    // values at the breakpoints, filled on first evaluation
    knots: OnceLock<Vec<Rational>>,
}

impl PwlConvex {
    pub fn new(
        anchor_x: Rational,
        anchor_y: Rational,
        breakpoints: Vec<Rational>,
        slopes: Vec<Rational>,
    ) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidPwl(format!(
                "{} breakpoints need {} slopes, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                slopes.len()
            )));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPwl(format!(
                "breakpoints not strictly increasing at {}",
                rational::format(&w[1])
            )));
        }
        if let Some(i) = (1..slopes.len()).find(|&i| slopes[i] < slopes[i - 1]) {
            return Err(Error::ConvexityViolation {
                at: rational::to_f64(&breakpoints[i - 1]),
                detail: format!(
                    "slope decreases from {} to {}",
                    rational::format(&slopes[i - 1]),
                    rational::format(&slopes[i])
                ),
            });
        }
        Ok(Self::new_unchecked(anchor_x, anchor_y, breakpoints, slopes))
    }

    pub(crate) fn new_unchecked(
        anchor_x: Rational,
        anchor_y: Rational,
        breakpoints: Vec<Rational>,
        slopes: Vec<Rational>,
    ) -> Self {
        debug_assert_eq!(slopes.len(), breakpoints.len() + 1);
        Self {
            anchor_x,
            anchor_y,
            breakpoints,
            slopes,
            knots: OnceLock::new(),
        }
    }

    /// `t -> slope * t + intercept`.
    pub fn affine(slope: Rational, intercept: Rational) -> Self {
        Self::new_unchecked(Rational::zero(), intercept, Vec::new(), vec![slope])
    }

    /// `t -> |t - center|`.
    pub fn abs(center: Rational) -> Self {
        Self::new_unchecked(
            center.clone(),
            Rational::zero(),
            vec![center],
            vec![rational::int(-1), rational::int(1)],
        )
    }

    /// The empirical least-absolute-deviation criterion
    /// `t -> (1/n) * sum |x_i - t|`; breakpoints sit at the distinct data
    /// values.
    pub fn empirical_lad(data: &[Rational]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidPwl("empty sample".into()));
        }
        let mut sorted = data.to_vec();
        sorted.sort();
        let mut values: Vec<Rational> = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for x in sorted {
            match values.last() {
                Some(last) if *last == x => *counts.last_mut().unwrap() += 1,
                _ => {
                    values.push(x);
                    counts.push(1);
                }
            }
        }
        let first = values[0].clone();
        let excess: Rational = values
            .iter()
            .zip(&counts)
            .map(|(v, &c)| (v - &first) * rational::int(c as i64))
            .sum();
        Ok(Self::lad_from_sorted(values, &counts, excess))
    }

    /// LAD criterion from distinct sorted values, their multiplicities, and
    /// `sum_i (x_i - x_min)`.
    pub(crate) fn lad_from_sorted(values: Vec<Rational>, counts: &[u64], excess: Rational) -> Self {
        let n: u64 = counts.iter().sum();
        let n = n as i64;
        let mut slopes = Vec::with_capacity(values.len() + 1);
        slopes.push(rational::int(-1));
        let mut below = 0i64;
        for &c in counts {
            below += c as i64;
            slopes.push(rational::ratio(2 * below - n, n));
        }
        let anchor_x = values[0].clone();
        let anchor_y = excess / rational::int(n);
        Self::new_unchecked(anchor_x, anchor_y, values, slopes)
    }

    pub fn anchor(&self) -> (&Rational, &Rational) {
        (&self.anchor_x, &self.anchor_y)
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[Rational] {
        &self.slopes
    }

    fn knots(&self) -> &[Rational] {
        self.knots.get_or_init(|| {
            // knot values up to an additive constant, then shift to the anchor
            let mut z = Vec::with_capacity(self.breakpoints.len());
            if !self.breakpoints.is_empty() {
                z.push(Rational::zero());
                for i in 1..self.breakpoints.len() {
                    let step = &self.slopes[i] * (&self.breakpoints[i] - &self.breakpoints[i - 1]);
                    let next = &z[i - 1] + step;
                    z.push(next);
                }
                let offset = &self.anchor_y
                    - Self::eval_with(&self.breakpoints, &self.slopes, &z, &self.anchor_x);
                for v in &mut z {
                    *v += &offset;
                }
            }
            z
        })
    }

    fn eval_with(
        breakpoints: &[Rational],
        slopes: &[Rational],
        knots: &[Rational],
        t: &Rational,
    ) -> Rational {
        let i = breakpoints.partition_point(|b| b <= t);
        if i == 0 {
            &knots[0] + &slopes[0] * (t - &breakpoints[0])
        } else {
            &knots[i - 1] + &slopes[i] * (t - &breakpoints[i - 1])
        }
    }

    /// Exact value at `t`.
    pub fn eval(&self, t: &Rational) -> Rational {
        if self.breakpoints.is_empty() {
            return &self.anchor_y + &self.slopes[0] * (t - &self.anchor_x);
        }
        Self::eval_with(&self.breakpoints, &self.slopes, self.knots(), t)
    }

    /// Value at a double, evaluated exactly and rounded once.
    pub fn eval_f64(&self, t: f64) -> f64 {
        match rational::from_f64(t) {
            Ok(t) => rational::to_f64(&self.eval(&t)),
            Err(_) => f64::NAN,
        }
    }

    /// Right derivative: slope of the segment just right of `x`.
    pub fn d_plus(&self, x: &Rational) -> &Rational {
        &self.slopes[self.breakpoints.partition_point(|b| b <= x)]
    }

    /// Left derivative: slope of the segment just left of `x`.
    pub fn d_minus(&self, x: &Rational) -> &Rational {
        &self.slopes[self.breakpoints.partition_point(|b| b < x)]
    }

    /// `D+f` as a right-continuous step function.
    pub fn right_derivative(&self) -> StepFunction {
        StepFunction::new_unchecked(
            self.breakpoints.clone(),
            self.slopes.clone(),
            Continuity::Right,
        )
    }

    /// `D-f` as a left-continuous step function.
    pub fn left_derivative(&self) -> StepFunction {
        StepFunction::new_unchecked(
            self.breakpoints.clone(),
            self.slopes.clone(),
            Continuity::Left,
        )
    }

    /// `t -> f(-t)`.
    pub fn reflect(&self) -> Self {
        let breakpoints = self.breakpoints.iter().rev().map(|b| -b).collect();
        let slopes = self.slopes.iter().rev().map(|s| -s).collect();
        Self::new_unchecked(-&self.anchor_x, self.anchor_y.clone(), breakpoints, slopes)
    }

    /// Pointwise sum of two convex PWL functions.
    pub fn plus(&self, other: &PwlConvex) -> Self {
        let mut merged: Vec<Rational> = self
            .breakpoints
            .iter()
            .chain(&other.breakpoints)
            .cloned()
            .collect();
        merged.sort();
        merged.dedup();
        let mut slopes = Vec::with_capacity(merged.len() + 1);
        slopes.push(&self.slopes[0] + &other.slopes[0]);
        for b in &merged {
            slopes.push(self.d_plus(b) + other.d_plus(b));
        }
        let anchor_y = &self.anchor_y + other.eval(&self.anchor_x);
        Self::new_unchecked(self.anchor_x.clone(), anchor_y, merged, slopes)
    }

    /// `t -> c * f(t)` for `c >= 0`.
    pub fn scaled(&self, c: &Rational) -> Result<Self> {
        if c.is_negative() {
            return Err(Error::InvalidPwl("negative scale breaks convexity".into()));
        }
        if c.is_zero() {
            return Ok(Self::affine(Rational::zero(), Rational::zero()));
        }
        Ok(Self::new_unchecked(
            self.anchor_x.clone(),
            &self.anchor_y * c,
            self.breakpoints.clone(),
            self.slopes.iter().map(|s| s * c).collect(),
        ))
    }

    /// `t -> f(t) + slope * t`.
    pub fn tilted(&self, slope: &Rational) -> Self {
        Self::new_unchecked(
            self.anchor_x.clone(),
            &self.anchor_y + slope * &self.anchor_x,
            self.breakpoints.clone(),
            self.slopes.iter().map(|s| s + slope).collect(),
        )
    }

    /// Double-precision oracle view. The value is computed from the nearest
    /// knot, which keeps the rounding error relative to the local scale.
    pub fn to_oracle(&self) -> ConvexOracle {
        let b: Vec<f64> = self.breakpoints.iter().map(rational::to_f64).collect();
        let s: Vec<f64> = self.slopes.iter().map(rational::to_f64).collect();
        let (ax, ay) = (
            rational::to_f64(&self.anchor_x),
            rational::to_f64(&self.anchor_y),
        );
        let y: Vec<f64> = if b.is_empty() {
            Vec::new()
        } else {
            self.knots().iter().map(rational::to_f64).collect()
        };
        let data = Arc::new((b, s, y));
        ConvexOracle::new(move |t: f64| {
            let (b, s, y) = &*data;
            if b.is_empty() {
                return ay + s[0] * (t - ax);
            }
            let i = b.partition_point(|&x| x <= t);
            if i == 0 {
                y[0] + s[0] * (t - b[0])
            } else if i < b.len() && (b[i] - t) < (t - b[i - 1]) {
                y[i] - s[i] * (b[i] - t)
            } else {
                y[i - 1] + s[i] * (t - b[i - 1])
            }
        })
    }
}

impl PartialEq for PwlConvex {
    fn eq(&self, other: &Self) -> bool {
        self.anchor_x == other.anchor_x
            && self.anchor_y == other.anchor_y
            && self.breakpoints == other.breakpoints
            && self.slopes == other.slopes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn abs() -> PwlConvex {
        PwlConvex::abs(int(0))
    }

    fn ramp() -> PwlConvex {
        // breakpoints [1, 2], slopes [-1, 0, 1], f(1) = 0
        PwlConvex::new(
            int(1),
            int(0),
            vec![int(1), int(2)],
            vec![int(-1), int(0), int(1)],
        )
        .unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(abs().eval(&int(3)), int(3));
        assert_eq!(abs().eval(&int(-2)), int(2));
        assert_eq!(ramp().eval(&int(3)), int(1));
        assert_eq!(ramp().eval(&ratio(3, 2)), int(0));
        assert_eq!(ramp().eval(&int(0)), int(1));
    }

    #[test]
    fn eval_from_anchor_between_breakpoints() {
        let f = PwlConvex::new(
            ratio(1, 2),
            int(7),
            vec![int(0), int(1)],
            vec![int(-2), int(1), int(3)],
        )
        .unwrap();
        assert_eq!(f.eval(&ratio(1, 2)), int(7));
        assert_eq!(f.eval(&int(0)), ratio(13, 2));
        assert_eq!(f.eval(&int(-1)), ratio(17, 2));
        assert_eq!(f.eval(&int(2)), ratio(21, 2));
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(abs().d_plus(&int(0)), &int(1));
        assert_eq!(abs().d_minus(&int(0)), &int(-1));
        assert_eq!(abs().d_plus(&int(-1)), &int(-1));
        assert_eq!(ramp().d_plus(&int(1)), &int(0));
        assert_eq!(ramp().d_minus(&int(1)), &int(-1));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            PwlConvex::new(int(0), int(0), vec![int(0)], vec![int(1), int(-1)]),
            Err(Error::ConvexityViolation { .. })
        ));
        assert!(matches!(
            PwlConvex::new(
                int(0),
                int(0),
                vec![int(1), int(1)],
                vec![int(0), int(1), int(2)]
            ),
            Err(Error::InvalidPwl(_))
        ));
        assert!(PwlConvex::new(int(0), int(0), vec![], vec![int(0), int(1)]).is_err());
    }

    #[test]
    fn reflect_mirrors() {
        // max(t - 1, 0) reflects to max(-t - 1, 0)
        let f = PwlConvex::new(int(1), int(0), vec![int(1)], vec![int(0), int(1)]).unwrap();
        let g = f.reflect();
        assert_eq!(g.breakpoints(), &[int(-1)]);
        assert_eq!(g.slopes(), &[int(-1), int(0)]);
        for k in -12..=12 {
            let t = ratio(k, 4);
            assert_eq!(g.eval(&t), f.eval(&-&t));
            assert_eq!(g.reflect().eval(&t), f.eval(&t));
        }
    }

    #[test]
    fn lad_of_two_points() {
        let z = PwlConvex::empirical_lad(&[ratio(1, 5), ratio(4, 5)]).unwrap();
        assert_eq!(z.slopes(), &[int(-1), int(0), int(1)]);
        assert_eq!(z.eval(&ratio(1, 2)), ratio(3, 10));
        assert_eq!(z.eval(&int(0)), ratio(1, 2));
    }

    #[test]
    fn lad_merges_ties() {
        let z = PwlConvex::empirical_lad(&[int(1), int(1), int(3)]).unwrap();
        assert_eq!(z.breakpoints(), &[int(1), int(3)]);
        assert_eq!(z.slopes(), &[int(-1), ratio(1, 3), int(1)]);
        assert_eq!(z.eval(&int(2)), int(1));
    }

    #[test]
    fn plus_and_tilt() {
        let f = abs().plus(&PwlConvex::abs(int(2)));
        assert_eq!(f.slopes(), &[int(-2), int(0), int(2)]);
        assert_eq!(f.eval(&int(1)), int(2));
        let g = abs().tilted(&ratio(1, 2));
        assert_eq!(g.eval(&int(-2)), int(1));
        assert_eq!(g.eval(&int(2)), int(3));
        let h = abs().scaled(&int(3)).unwrap();
        assert_eq!(h.eval(&int(-2)), int(6));
        assert!(abs().scaled(&int(-1)).is_err());
    }

    #[test]
    fn oracle_view_matches_exact_values() {
        let f = PwlConvex::new(
            ratio(1, 3),
            ratio(2, 7),
            vec![ratio(-1, 3), ratio(1, 3), int(2)],
            vec![int(-3), ratio(-1, 2), int(0), int(5)],
        )
        .unwrap();
        let o = f.to_oracle();
        for k in -40..=40 {
            let t = k as f64 / 10.0;
            let exact = f.eval_f64(t);
            assert!(
                (o.value(t) - exact).abs() <= 1e-12 * (1.0 + exact.abs()),
                "t = {t}"
            );
        }
    }
}
