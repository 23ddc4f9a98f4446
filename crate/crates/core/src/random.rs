//! Random rational piecewise-linear convex functions for tests and
//! experiments.

use rand::Rng;

use crate::convex::PwlConvex;
use crate::rational::{self, Rational};

const DENOMINATORS: [i64; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 16];

fn small_rational(rng: &mut impl Rng, max_num: i64) -> Rational {
    let q = DENOMINATORS[rng.gen_range(0..DENOMINATORS.len())];
    rational::ratio(rng.gen_range(-max_num..=max_num), q)
}

/// Between 1 and `max_breaks` distinct breakpoints in `[-8, 8]`.
fn breakpoints(rng: &mut impl Rng, max_breaks: usize) -> Vec<Rational> {
    let m = rng.gen_range(1..=max_breaks.max(1));
    let mut b: Vec<Rational> = (0..m)
        .map(|_| small_rational(rng, 64).clamp(rational::int(-8), rational::int(8)))
        .collect();
    b.sort();
    b.dedup();
    b
}

/// A random convex PWL function with a compact minimum set: the first
/// slope is negative and the last positive. About a third of the instances
/// have a flat bottom.
pub fn random_compact_pwl(rng: &mut impl Rng, max_breaks: usize) -> PwlConvex {
    let b = breakpoints(rng, max_breaks);
    let m = b.len();
    let mut s: Vec<Rational> = (0..=m).map(|_| small_rational(rng, 12)).collect();
    if m >= 2 && rng.gen_bool(1.0 / 3.0) {
        let j = rng.gen_range(1..m);
        s[j] = rational::int(0);
    }
    s.sort();
    let zero = rational::int(0);
    if s[0] >= zero {
        s[0] = rational::int(-1) - &s[0];
        s.sort();
    }
    if s[m] <= zero {
        s[m] = rational::int(1) - &s[m];
        s.sort();
    }
    let anchor_x = small_rational(rng, 32);
    let anchor_y = small_rational(rng, 32);
    PwlConvex::new(anchor_x, anchor_y, b, s).expect("sorted slopes and breakpoints")
}

/// A random convex PWL function with no constraint on the minimum set.
pub fn random_pwl(rng: &mut impl Rng, max_breaks: usize) -> PwlConvex {
    let b = breakpoints(rng, max_breaks);
    let mut s: Vec<Rational> = (0..=b.len()).map(|_| small_rational(rng, 12)).collect();
    s.sort();
    PwlConvex::new(small_rational(rng, 32), small_rational(rng, 32), b, s)
        .expect("sorted slopes and breakpoints")
}
