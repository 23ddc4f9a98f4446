use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{Error, Result};

/// Grid points and constant for the local Lipschitz bound on `K`.
///
/// `a <= k_lo` and `b >= k_hi` are grid points, flanked by the nearest grid
/// points `x > a`, `y < a`, `u < b`, `v > b`. For any convex `f`,
/// `|f(s) - f(t)| <= c * sum_i |f(d_i)| * |s - t|` on `K`, where
/// `d = [x, a, y, a, u, b, v, b]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzPoints {
    pub a: f64,
    pub b: f64,
    pub d: [f64; 8],
    pub c: f64,
}

impl LipschitzPoints {
    /// Choose the points from a sorted grid.
    pub fn new(k: (f64, f64), grid: &[f64]) -> Result<Self> {
        let (k_lo, k_hi) = k;
        if !(k_lo.is_finite() && k_hi.is_finite() && k_lo <= k_hi) {
            return Err(Error::GridTooSparse(format!(
                "invalid compact [{k_lo}, {k_hi}]"
            )));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::GridTooSparse(
                "grid must be strictly increasing".into(),
            ));
        }
        let ia = grid.partition_point(|&g| g <= k_lo);
        if ia == 0 {
            return Err(Error::GridTooSparse(format!(
                "no grid point at or below {k_lo}"
            )));
        }
        let ia = ia - 1;
        let ib = grid.partition_point(|&g| g < k_hi);
        if ib == grid.len() {
            return Err(Error::GridTooSparse(format!(
                "no grid point at or above {k_hi}"
            )));
        }
        if ia == 0 {
            return Err(Error::GridTooSparse(format!(
                "no grid point left of a = {}",
                grid[ia]
            )));
        }
        if ib + 1 == grid.len() {
            return Err(Error::GridTooSparse(format!(
                "no grid point right of b = {}",
                grid[ib]
            )));
        }
        let (a, b) = (grid[ia], grid[ib]);
        let (x, y) = (grid[ia + 1], grid[ia - 1]);
        let (u, v) = (grid[ib - 1], grid[ib + 1]);
        let c = [1.0 / (x - a), 1.0 / (a - y), 1.0 / (b - u), 1.0 / (v - b)]
            .into_iter()
            .fold(0.0, f64::max);
        Ok(Self {
            a,
            b,
            d: [x, a, y, a, u, b, v, b],
            c,
        })
    }

    /// `L = c * sum_i |f(d_i)|`.
    pub fn bound(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.c * self.d.iter().map(|&t| f(t).abs()).sum::<f64>()
    }
}

/// The constant, points, and bound `L` for one function.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzBound {
    pub points: LipschitzPoints,
    pub l: f64,
}

pub fn lipschitz_bound(
    f: impl Fn(f64) -> f64,
    k: (f64, f64),
    grid: &[f64],
) -> Result<LipschitzBound> {
    let points = LipschitzPoints::new(k, grid)?;
    let l = points.bound(f);
    Ok(LipschitzBound { points, l })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpotCheck {
    pub pairs: usize,
    pub violations: usize,
    /// Largest observed `|f(s) - f(t)| / |s - t|`.
    pub max_ratio: f64,
}

/// Test `|f(s) - f(t)| <= l * |s - t|` on random pairs drawn uniformly from
/// `K`. A pair only counts as a violation when it exceeds the bound by more
/// than the rounding error of the two evaluations.
pub fn spot_check(
    f: impl Fn(f64) -> f64,
    k: (f64, f64),
    l: f64,
    pairs: usize,
    seed: u64,
) -> SpotCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for _ in 0..pairs {
        let s = rng.gen_range(k.0..=k.1);
        let t = rng.gen_range(k.0..=k.1);
        let (fs, ft) = (f(s), f(t));
        let diff = (fs - ft).abs();
        let slack = 8.0 * f64::EPSILON * (fs.abs() + ft.abs() + l * (s.abs() + t.abs()));
        if diff > l * (s - t).abs() + slack {
            violations += 1;
        }
        if s != t {
            max_ratio = max_ratio.max(diff / (s - t).abs());
        }
    }
    SpotCheck {
        pairs,
        violations,
        max_ratio,
    }
}
