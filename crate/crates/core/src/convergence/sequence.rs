use std::fmt;
use std::sync::Arc;

use num_traits::Signed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::argmin::{min_set_pwl, sigma_bisect, tau_bisect};
use crate::convex::{ConvexOracle, OracleOptions, PwlConvex};
use crate::random::{random_compact_pwl, random_pwl};
use crate::rational::{self, Rational};
use crate::{Error, Result};

/// One member of a function sequence or net.
#[derive(Clone, Debug)]
pub enum StageFn {
    Pwl(PwlConvex),
    Oracle(ConvexOracle),
}

/// `sigma` and `tau` of a stage; `exact` is set for PWL stages.
#[derive(Clone, Debug, PartialEq)]
pub struct StageArgmin {
    pub sigma: f64,
    pub tau: f64,
    pub exact: Option<(Rational, Rational)>,
}

impl StageFn {
    pub fn is_exact(&self) -> bool {
        matches!(self, StageFn::Pwl(_))
    }

    pub fn eval_f64(&self, t: f64) -> f64 {
        match self {
            StageFn::Pwl(f) => f.eval_f64(t),
            StageFn::Oracle(o) => o.value(t),
        }
    }

    /// Exact minimum set for PWL stages, bisection midpoints (to within
    /// `tol`) for oracles. Fails unless the minimum set is compact.
    pub fn argmin(&self, tol: f64, opts: &OracleOptions) -> Result<StageArgmin> {
        match self {
            StageFn::Pwl(f) => {
                let set = min_set_pwl(f);
                let (lo, hi) = set
                    .compact()
                    .ok_or_else(|| Error::NoCompactMinSet(set.kind().to_string()))?;
                Ok(StageArgmin {
                    sigma: rational::to_f64(lo),
                    tau: rational::to_f64(hi),
                    exact: Some((lo.clone(), hi.clone())),
                })
            }
            StageFn::Oracle(o) => {
                let s = sigma_bisect(o, tol, opts)?;
                let t = tau_bisect(o, tol, opts)?;
                Ok(StageArgmin {
                    sigma: s.midpoint(),
                    tau: t.midpoint(),
                    exact: None,
                })
            }
        }
    }

    /// Double-precision evaluator; PWL stages use their oracle view, which
    /// avoids an exact rational evaluation per call.
    pub fn float_view(&self) -> ConvexOracle {
        match self {
            StageFn::Pwl(f) => f.to_oracle(),
            StageFn::Oracle(o) => o.clone(),
        }
    }

    pub fn breakpoints_f64(&self) -> Vec<f64> {
        match self {
            StageFn::Pwl(f) => f.breakpoints().iter().map(rational::to_f64).collect(),
            StageFn::Oracle(_) => Vec::new(),
        }
    }
}

type Generator = dyn Fn(usize) -> Result<StageFn> + Send + Sync;

/// A sequence `f_1, f_2, ...` with its declared pointwise limit and the
/// grid on which convergence is checked.
#[derive(Clone)]
pub struct FunctionSequence {
    pub name: String,
    generator: Arc<Generator>,
    pub limit: StageFn,
    pub dense_grid: Vec<Rational>,
    /// The limit has a unique minimizer, so `sigma` and `tau` of the stages
    /// are expected to converge to it.
    pub unique_limit: bool,
    /// Allowed `|sigma(f_N) - sigma(f)|` and `|tau(f_N) - tau(f)|` at the
    /// last stage for unique limits.
    pub stage_tol: f64,
}

impl fmt::Debug for FunctionSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionSequence")
            .field("name", &self.name)
            .field("limit", &self.limit)
            .field("dense_grid", &self.dense_grid.len())
            .field("unique_limit", &self.unique_limit)
            .field("stage_tol", &self.stage_tol)
            .finish_non_exhaustive()
    }
}

impl FunctionSequence {
    pub fn new<G>(
        name: impl Into<String>,
        generator: G,
        limit: StageFn,
        dense_grid: Vec<Rational>,
    ) -> Self
    where
        G: Fn(usize) -> Result<StageFn> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            generator: Arc::new(generator),
            limit,
            dense_grid,
            unique_limit: false,
            stage_tol: 0.0,
        }
    }

    pub fn with_unique_limit(mut self, stage_tol: f64) -> Self {
        self.unique_limit = true;
        self.stage_tol = stage_tol;
        self
    }

    pub fn with_grid(mut self, grid: Vec<Rational>) -> Self {
        self.dense_grid = grid;
        self
    }

    /// Stage `k >= 1`.
    pub fn stage(&self, k: usize) -> Result<StageFn> {
        if k == 0 {
            return Err(Error::StageFailure {
                stage: 0,
                reason: "stages start at 1".into(),
            });
        }
        (self.generator)(k).map_err(|e| Error::StageFailure {
            stage: k,
            reason: e.to_string(),
        })
    }

    pub fn grid_f64(&self) -> Vec<f64> {
        self.dense_grid.iter().map(rational::to_f64).collect()
    }

    /// The flat-bottom example and its tilted-kink approximations.
    pub fn counterexample() -> Self {
        let (_, limit) = counterexample_family(1).expect("n >= 1");
        Self::new(
            "counterexample",
            |n| counterexample_family(n).map(|(f_n, _)| StageFn::Pwl(f_n)),
            StageFn::Pwl(limit),
            dyadic_grid(-4, 4, 4),
        )
    }

    /// `f_k(t) = (t - 1/k)^2` as oracles, limit `t^2`.
    pub fn shifted_parabola() -> Self {
        let limit = ConvexOracle::new(|t| t * t)
            .with_bracket(-2.0, 3.0)
            .expect("valid bracket");
        Self::new(
            "shifted_parabola",
            |k| {
                let c = 1.0 / k as f64;
                Ok(StageFn::Oracle(
                    ConvexOracle::new(move |t| (t - c) * (t - c)).with_bracket(-2.0, 3.0)?,
                ))
            },
            StageFn::Oracle(limit),
            dyadic_grid(-4, 4, 4),
        )
        .with_unique_limit(0.02)
    }

    /// `f_k(t) = f(t) + t / (k + 1)` for the flat-bottom limit `f`: every stage
    /// has the unique minimizer `-1`.
    pub fn tilted_flat_bottom() -> Self {
        let (_, f) = counterexample_family(1).expect("n >= 1");
        let base = f.clone();
        Self::new(
            "tilted_flat_bottom",
            move |k| Ok(StageFn::Pwl(base.tilted(&rational::ratio(1, k as i64 + 1)))),
            StageFn::Pwl(f),
            dyadic_grid(-4, 4, 4),
        )
    }

    /// `f_k(t) = t^2 + 1/k` as PWL-free oracles, limit `t^2`.
    pub fn vertical_shift() -> Self {
        let limit = ConvexOracle::new(|t| t * t)
            .with_bracket(-2.0, 3.0)
            .expect("valid bracket");
        Self::new(
            "vertical_shift",
            |k| {
                let c = 1.0 / k as f64;
                Ok(StageFn::Oracle(
                    ConvexOracle::new(move |t| t * t + c).with_bracket(-2.0, 3.0)?,
                ))
            },
            StageFn::Oracle(limit),
            rational_grid(-3, 3, 16),
        )
        .with_unique_limit(1e-6)
    }

    /// `f_k = f + c h / k` with `f` a random compact PWL function and `h` a
    /// random convex PWL perturbation; converges everywhere, so in
    /// particular on the dyadic grid. `c <= 1` keeps the end slopes of `c h`
    /// below half those of `f`, so every `f_k` has a compact minimum set.
    pub fn random_perturbation(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_compact_pwl(&mut rng, 6);
        let h = random_pwl(&mut rng, 6);
        let (fs, hs) = (f.slopes(), h.slopes());
        let margin = (-fs[0].clone()).min(fs[fs.len() - 1].clone());
        let h_end = hs[0].abs().max(hs[hs.len() - 1].abs());
        let c = if h_end > margin.clone() / rational::int(2) {
            margin / (rational::int(2) * h_end)
        } else {
            rational::int(1)
        };
        let base = f.clone();
        Self::new(
            format!("random_perturbation_{seed}"),
            move |k| {
                let scaled = h.scaled(&(c.clone() / rational::int(k as i64)))?;
                Ok(StageFn::Pwl(base.plus(&scaled)))
            },
            StageFn::Pwl(f),
            dyadic_grid(-4, 4, 4),
        )
    }
}

/// The flat-bottom limit `f(t) = max(|t| - 1, 0)` and, for `n >= 1`, the
/// approximation `f_n` that agrees with `f` outside `[0, 1 + 1/n]` and is
/// `t / (n + 1)` on it. `tau(f_n) = 0` for every `n` while `tau(f) = 1`.
pub fn counterexample_family(n: usize) -> Result<(PwlConvex, PwlConvex)> {
    if n == 0 {
        return Err(Error::InvalidPwl("counterexample index starts at 1".into()));
    }
    let n = n as i64;
    let int = rational::int;
    let f = PwlConvex::new(
        int(0),
        int(0),
        vec![int(-1), int(1)],
        vec![int(-1), int(0), int(1)],
    )?;
    let f_n = PwlConvex::new(
        int(0),
        int(0),
        vec![int(-1), int(0), rational::ratio(n + 1, n)],
        vec![int(-1), int(0), rational::ratio(1, n + 1), int(1)],
    )?;
    Ok((f_n, f))
}

/// `k / 2^bits` for all `k` with `lo <= k / 2^bits <= hi`.
pub fn dyadic_grid(lo: i64, hi: i64, bits: u32) -> Vec<Rational> {
    let scale = 1i64 << bits;
    (lo * scale..=hi * scale)
        .map(|k| rational::dyadic(k, bits))
        .collect()
}

/// All rationals in `[lo, hi]` with denominator at most `max_den`, sorted.
pub fn rational_grid(lo: i64, hi: i64, max_den: i64) -> Vec<Rational> {
    let mut v: Vec<Rational> = (1..=max_den)
        .flat_map(|q| (lo * q..=hi * q).map(move |p| rational::ratio(p, q)))
        .collect();
    v.sort();
    v.dedup();
    v
}

/// `max |f(t) - g(t)|` over `t` in `[lo, hi]`. Exact for two PWL functions
/// (the maximum sits at a breakpoint or an end point); otherwise the
/// maximum over 4096 uniform probe points plus any PWL breakpoints.
pub fn sup_norm_gap(f: &StageFn, g: &StageFn, k: (f64, f64)) -> f64 {
    if let (StageFn::Pwl(a), StageFn::Pwl(b)) = (f, g) {
        if let (Ok(lo), Ok(hi)) = (rational::from_f64(k.0), rational::from_f64(k.1)) {
            let points = a
                .breakpoints()
                .iter()
                .chain(b.breakpoints())
                .filter(|x| **x > lo && **x < hi)
                .chain([&lo, &hi]);
            let best = points.map(|x| (a.eval(x) - b.eval(x)).abs()).max();
            return best.map(|v| rational::to_f64(&v)).unwrap_or(0.0);
        }
    }
    const PROBES: usize = 4096;
    let probes = (0..PROBES).map(|i| k.0 + (k.1 - k.0) * i as f64 / (PROBES - 1) as f64);
    let kinks = f
        .breakpoints_f64()
        .into_iter()
        .chain(g.breakpoints_f64())
        .filter(|x| *x >= k.0 && *x <= k.1);
    probes
        .chain(kinks)
        .map(|t| (f.eval_f64(t) - g.eval_f64(t)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn counterexample_minimizers() {
        for n in [1, 2, 5, 100] {
            let (f_n, f) = counterexample_family(n).unwrap();
            let s = StageFn::Pwl(f_n)
                .argmin(1e-9, &OracleOptions::default())
                .unwrap();
            assert_eq!(s.exact, Some((int(-1), int(0))));
            let l = StageFn::Pwl(f)
                .argmin(1e-9, &OracleOptions::default())
                .unwrap();
            assert_eq!(l.exact, Some((int(-1), int(1))));
        }
        assert!(counterexample_family(0).is_err());
    }

    #[test]
    fn counterexample_matches_piecewise_definition() {
        let n = 3i64;
        let (f_n, f) = counterexample_family(n as usize).unwrap();
        for k in -40..=40 {
            let t = rational::ratio(k, 8);
            let limit = (t.abs() - int(1)).max(int(0));
            assert_eq!(f.eval(&t), limit);
            let inside = t >= int(0) && t <= rational::ratio(n + 1, n);
            let expected = if inside { &t / int(n + 1) } else { limit };
            assert_eq!(f_n.eval(&t), expected, "t = {t}");
        }
    }

    #[test]
    fn sup_gap_of_counterexample() {
        let (f5, f) = counterexample_family(5).unwrap();
        let gap = sup_norm_gap(&StageFn::Pwl(f5), &StageFn::Pwl(f), (-3.0, 3.0));
        assert_eq!(gap, 1.0 / 6.0);
        assert!(gap <= 0.2);
    }

    #[test]
    fn probe_sup_for_oracles() {
        let a = StageFn::Oracle(ConvexOracle::new(|t| t * t + 0.25));
        let b = StageFn::Oracle(ConvexOracle::new(|t| t * t));
        assert!((sup_norm_gap(&a, &b, (-1.0, 1.0)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn grids() {
        let d = dyadic_grid(-1, 1, 2);
        assert_eq!(d.len(), 9);
        assert_eq!(d[1], rational::ratio(-3, 4));
        let r = rational_grid(0, 1, 3);
        assert_eq!(
            r,
            vec![
                int(0),
                rational::ratio(1, 3),
                rational::ratio(1, 2),
                rational::ratio(2, 3),
                int(1)
            ]
        );
    }

    #[test]
    fn families_generate_valid_stages() {
        for seq in [
            FunctionSequence::counterexample(),
            FunctionSequence::shifted_parabola(),
            FunctionSequence::tilted_flat_bottom(),
            FunctionSequence::vertical_shift(),
            FunctionSequence::random_perturbation(3),
        ] {
            for k in [1, 2, 10] {
                seq.stage(k).unwrap();
            }
            assert!(seq.stage(0).is_err());
        }
    }
}
