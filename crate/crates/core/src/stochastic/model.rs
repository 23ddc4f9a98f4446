use num_traits::{Signed, Zero};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::argmin::min_set_pwl;
use crate::convex::PwlConvex;
use crate::rational::{self, Rational};
use crate::{Error, Result};

/// Law of the i.i.d. data behind an empirical LAD process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataLaw {
    /// Uniform(0, 1), drawn on the dyadic grid `k / 2^32`.
    Uniform,
    /// Every observation equals `at`.
    Point {
        #[serde(with = "rational::serde_one")]
        at: Rational,
    },
    /// A fixed sample; the trajectory ignores the stage.
    Sample {
        #[serde(with = "rational::serde_vec")]
        values: Vec<Rational>,
    },
}

/// Law of the width of a flat bottom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum WidthLaw {
    /// Uniform on `[lo, hi]`, drawn on a grid of `2^32` cells.
    Uniform {
        #[serde(with = "rational::serde_one")]
        lo: Rational,
        #[serde(with = "rational::serde_one")]
        hi: Rational,
    },
    Fixed {
        #[serde(with = "rational::serde_one")]
        value: Rational,
    },
}

impl WidthLaw {
    fn validate(&self) -> Result<()> {
        match self {
            WidthLaw::Uniform { lo, hi } if lo.is_negative() || lo > hi => {
                Err(Error::ModelInvalid(format!(
                    "width law needs 0 <= lo <= hi, got [{}, {}]",
                    rational::format(lo),
                    rational::format(hi)
                )))
            }
            WidthLaw::Fixed { value } if value.is_negative() => Err(Error::ModelInvalid(format!(
                "negative width {}",
                rational::format(value)
            ))),
            _ => Ok(()),
        }
    }

    fn draw(&self, rng: &mut impl RngCore) -> Rational {
        match self {
            WidthLaw::Uniform { lo, hi } => lo + (hi - lo) * unit_dyadic(rng),
            WidthLaw::Fixed { value } => value.clone(),
        }
    }
}

/// A convex stochastic process with exact PWL trajectories.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessModel {
    /// `Z_n(t) = (1/n) sum |X_i - t|`; the limit is `t -> E|X - t|`.
    EmpiricalLad { data: DataLaw },
    /// Empirical LAD with Bernoulli(`p`) data. For `p = 1/2` the population
    /// minimum set is `[0, 1]`.
    BernoulliLad {
        #[serde(with = "rational::serde_one")]
        p: Rational,
    },
    /// A flat bottom `[a, a + W]` with `a` ~ Uniform(-1, 0), flanked by
    /// `outer_breaks` random kinks on each side. The law does not depend on
    /// the stage.
    RandomPwl {
        width: WidthLaw,
        outer_breaks: usize,
    },
    /// `|t| - W/2` clipped at zero, i.e. slopes `-1, 0, 1` around
    /// `[-W/2, W/2]`, plus the tilt `(tilt / n) t` at stage `n` and no tilt
    /// in the limit.
    TiltedFlat {
        width: WidthLaw,
        #[serde(with = "rational::serde_one")]
        tilt: Rational,
    },
}

/// A stage of a sequence of processes, or its limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    N(usize),
    Limit,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stage::N(n) => write!(f, "{n}"),
            Stage::Limit => f.write_str("limit"),
        }
    }
}

/// One realized trajectory.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Trajectory {
    Pwl(PwlConvex),
    /// `t -> E|U - t|` for `U` ~ Uniform(0, 1): `(t^2 + (1 - t)^2) / 2` on
    /// `[0, 1]` and `|t - 1/2|` outside. Strictly convex on `[0, 1]` with
    /// unique minimizer `1/2`.
    UniformLadRisk,
}

impl Trajectory {
    pub fn eval(&self, t: &Rational) -> Rational {
        match self {
            Trajectory::Pwl(f) => f.eval(t),
            Trajectory::UniformLadRisk => {
                let (zero, one) = (Rational::zero(), rational::int(1));
                if *t < zero || *t > one {
                    (t - rational::ratio(1, 2)).abs()
                } else {
                    (t * t + (&one - t) * (&one - t)) / rational::int(2)
                }
            }
        }
    }

    pub fn eval_f64(&self, t: f64) -> f64 {
        match rational::from_f64(t) {
            Ok(t) => rational::to_f64(&self.eval(&t)),
            Err(_) => f64::NAN,
        }
    }

    /// `(sigma, tau)`; an error unless the minimum set is compact.
    pub fn min_set(&self) -> Result<(Rational, Rational)> {
        match self {
            Trajectory::Pwl(f) => {
                let set = min_set_pwl(f);
                set.compact()
                    .map(|(lo, hi)| (lo.clone(), hi.clone()))
                    .ok_or_else(|| {
                        Error::ModelInvalid(format!("trajectory minimum set is {}", set.kind()))
                    })
            }
            Trajectory::UniformLadRisk => Ok((rational::ratio(1, 2), rational::ratio(1, 2))),
        }
    }

    /// `D-Z(x) <= 0 <= D+Z(x)`, from the one-sided derivatives alone.
    pub fn derivative_membership(&self, x: &Rational) -> bool {
        match self {
            Trajectory::Pwl(f) => !f.d_minus(x).is_positive() && !f.d_plus(x).is_negative(),
            // the derivative is 2x - 1 on [0, 1] and +-1 outside
            Trajectory::UniformLadRisk => *x == rational::ratio(1, 2),
        }
    }

    /// Lebesgue measure of `{x : D-Z(x) <= 0 <= D+Z(x)}`, the total length
    /// of the segments with slope zero.
    pub fn flat_length(&self) -> Rational {
        match self {
            Trajectory::Pwl(f) => {
                let (b, s) = (f.breakpoints(), f.slopes());
                (1..b.len())
                    .filter(|&i| s[i].is_zero())
                    .map(|i| &b[i] - &b[i - 1])
                    .sum()
            }
            Trajectory::UniformLadRisk => Rational::zero(),
        }
    }
}

/// The randomness behind one path, shared by all of its stages.
#[derive(Clone, Debug)]
pub(crate) enum Draw {
    Uniform(Vec<u32>),
    Bernoulli(Vec<bool>),
    Width(Rational),
    Pwl(PwlConvex),
    None,
}

// k / 2^32 for a uniform 32-bit k.
fn unit_dyadic(rng: &mut impl RngCore) -> Rational {
    rational::dyadic(rng.next_u32() as i64, 32)
}

fn lad_from_dyadic(draws: &[u32]) -> PwlConvex {
    let mut sorted = draws.to_vec();
    sorted.sort_unstable();
    let mut keys: Vec<u32> = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    for k in sorted {
        match keys.last() {
            Some(&last) if last == k => *counts.last_mut().expect("non-empty") += 1,
            _ => {
                keys.push(k);
                counts.push(1);
            }
        }
    }
    let excess: i64 = keys
        .iter()
        .zip(&counts)
        .map(|(&k, &c)| (k - keys[0]) as i64 * c as i64)
        .sum();
    let values = keys
        .iter()
        .map(|&k| rational::dyadic(k as i64, 32))
        .collect();
    PwlConvex::lad_from_sorted(values, &counts, rational::dyadic(excess, 32))
}

fn lad_from_bits(bits: &[bool]) -> PwlConvex {
    let ones = bits.iter().filter(|&&b| b).count() as u64;
    let zeros = bits.len() as u64 - ones;
    let (values, counts): (Vec<Rational>, Vec<u64>) =
        [(rational::int(0), zeros), (rational::int(1), ones)]
            .into_iter()
            .filter(|(_, c)| *c > 0)
            .unzip();
    let excess = if zeros > 0 {
        rational::int(ones as i64)
    } else {
        Rational::zero()
    };
    PwlConvex::lad_from_sorted(values, &counts, excess)
}

fn flat_bottom(width: &Rational, tilt: &Rational) -> PwlConvex {
    let half = width / rational::int(2);
    let (one, zero) = (rational::int(1), Rational::zero());
    let (breakpoints, slopes) = if width.is_zero() {
        (vec![zero.clone()], vec![-&one + tilt, &one + tilt])
    } else {
        (
            vec![-half.clone(), half.clone()],
            vec![-&one + tilt, tilt.clone(), &one + tilt],
        )
    };
    let anchor_y = tilt * &half;
    PwlConvex::new_unchecked(half, anchor_y, breakpoints, slopes)
}

fn random_flat_pwl(rng: &mut impl Rng, width: &WidthLaw, outer: usize) -> PwlConvex {
    let a = unit_dyadic(rng) - rational::int(1);
    let b = &a + width.draw(rng);
    // kinks at unit-spaced random gaps, slopes growing by 1..=3 per kink
    let mut left_b = vec![a.clone()];
    let mut left_s = vec![Rational::zero()];
    let mut right_b = vec![b.clone()];
    let mut right_s = vec![Rational::zero()];
    for _ in 0..=outer {
        let step = rational::int(rng.gen_range(1..=3));
        let s = left_s.last().expect("non-empty") - step;
        left_s.push(s);
        let step = rational::int(rng.gen_range(1..=3));
        let s = right_s.last().expect("non-empty") + step;
        right_s.push(s);
    }
    for _ in 0..outer {
        let gap = unit_dyadic(rng) + rational::ratio(1, 16);
        let x = left_b.last().expect("non-empty") - gap;
        left_b.push(x);
        let gap = unit_dyadic(rng) + rational::ratio(1, 16);
        let x = right_b.last().expect("non-empty") + gap;
        right_b.push(x);
    }
    // left pieces run outward; reverse them into increasing order
    left_b.reverse();
    let mut slopes: Vec<Rational> = left_s.into_iter().skip(1).rev().collect();
    let mut breakpoints = left_b;
    if a == b {
        slopes.extend(right_s.into_iter().skip(1));
    } else {
        slopes.push(Rational::zero());
        slopes.extend(right_s.into_iter().skip(1));
    }
    if a == b {
        breakpoints.extend(right_b.into_iter().skip(1));
    } else {
        breakpoints.extend(right_b);
    }
    PwlConvex::new_unchecked(a, Rational::zero(), breakpoints, slopes)
}

impl ProcessModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessModel::EmpiricalLad {
                data: DataLaw::Sample { values },
            } if values.is_empty() => Err(Error::ModelInvalid("empty sample".into())),
            ProcessModel::EmpiricalLad { .. } => Ok(()),
            ProcessModel::BernoulliLad { p } if p.is_negative() || *p > rational::int(1) => {
                Err(Error::ModelInvalid(format!(
                    "Bernoulli p = {} not in [0, 1]",
                    rational::format(p)
                )))
            }
            ProcessModel::BernoulliLad { .. } => Ok(()),
            ProcessModel::RandomPwl {
                width,
                outer_breaks,
            } => {
                if *outer_breaks > 64 {
                    return Err(Error::ModelInvalid(format!(
                        "outer_breaks = {outer_breaks} exceeds 64"
                    )));
                }
                width.validate()
            }
            ProcessModel::TiltedFlat { width, tilt } => {
                if tilt.abs() >= rational::int(1) {
                    return Err(Error::ModelInvalid(format!(
                        "tilt {} must lie in (-1, 1) for a compact minimum set",
                        rational::format(tilt)
                    )));
                }
                width.validate()
            }
        }
    }

    /// Stage-free models have the same law at every stage.
    pub fn stage_free(&self) -> bool {
        matches!(
            self,
            ProcessModel::RandomPwl { .. }
                | ProcessModel::EmpiricalLad {
                    data: DataLaw::Sample { .. }
                }
        )
    }

    /// Whether the limit process is the same deterministic function on
    /// every path.
    pub fn deterministic_limit(&self) -> bool {
        matches!(
            self,
            ProcessModel::EmpiricalLad { .. } | ProcessModel::BernoulliLad { .. }
        )
    }

    /// Draw the randomness for stages up to `n_max`.
    pub(crate) fn draw(&self, rng: &mut impl Rng, n_max: usize) -> Draw {
        match self {
            ProcessModel::EmpiricalLad {
                data: DataLaw::Uniform,
            } => Draw::Uniform((0..n_max).map(|_| rng.next_u32()).collect()),
            ProcessModel::EmpiricalLad { .. } => Draw::None,
            ProcessModel::BernoulliLad { p } => {
                let p = rational::to_f64(p);
                Draw::Bernoulli((0..n_max).map(|_| rng.gen_bool(p)).collect())
            }
            ProcessModel::RandomPwl {
                width,
                outer_breaks,
            } => Draw::Pwl(random_flat_pwl(rng, width, *outer_breaks)),
            ProcessModel::TiltedFlat { width, .. } => Draw::Width(width.draw(rng)),
        }
    }

    /// Trajectory of the path with randomness `draw` at `stage`. Stage
    /// `n` of a LAD model uses the first `n` observations.
    pub(crate) fn trajectory(&self, draw: &Draw, stage: Stage) -> Result<Trajectory> {
        if stage == Stage::N(0) {
            return Err(Error::ModelInvalid("stages start at 1".into()));
        }
        let f = match (self, draw, stage) {
            (
                ProcessModel::EmpiricalLad {
                    data: DataLaw::Uniform,
                },
                _,
                Stage::Limit,
            ) => return Ok(Trajectory::UniformLadRisk),
            (
                ProcessModel::EmpiricalLad {
                    data: DataLaw::Uniform,
                },
                Draw::Uniform(d),
                Stage::N(n),
            ) => lad_from_dyadic(&d[..n.min(d.len())]),
            (
                ProcessModel::EmpiricalLad {
                    data: DataLaw::Point { at },
                },
                _,
                _,
            ) => {
                let n = match stage {
                    Stage::N(n) => n as u64,
                    Stage::Limit => 1,
                };
                PwlConvex::lad_from_sorted(vec![at.clone()], &[n], Rational::zero())
            }
            (
                ProcessModel::EmpiricalLad {
                    data: DataLaw::Sample { values },
                },
                _,
                _,
            ) => PwlConvex::empirical_lad(values)?,
            (ProcessModel::BernoulliLad { p }, _, Stage::Limit) => {
                // p |1 - t| + (1 - p) |t|
                let one = rational::int(1);
                PwlConvex::new(
                    Rational::zero(),
                    p.clone(),
                    vec![Rational::zero(), one.clone()],
                    vec![-&one, &one - p * rational::int(2), one.clone()],
                )?
            }
            (ProcessModel::BernoulliLad { .. }, Draw::Bernoulli(d), Stage::N(n)) => {
                lad_from_bits(&d[..n.min(d.len())])
            }
            (ProcessModel::RandomPwl { .. }, Draw::Pwl(f), _) => f.clone(),
            (ProcessModel::TiltedFlat { tilt, .. }, Draw::Width(w), stage) => {
                let t = match stage {
                    Stage::N(n) => tilt / rational::int(n as i64),
                    Stage::Limit => Rational::zero(),
                };
                flat_bottom(w, &t)
            }
            _ => return Err(Error::ModelInvalid("draw does not match the model".into())),
        };
        Ok(Trajectory::Pwl(f))
    }

    /// Number of observations a path needs for `stage`.
    pub(crate) fn draw_size(stage: Stage) -> usize {
        match stage {
            Stage::N(n) => n,
            Stage::Limit => 0,
        }
    }

    /// One independent trajectory at `stage`.
    pub fn sample_path(&self, stage: Stage, rng: &mut impl Rng) -> Result<Trajectory> {
        self.validate()?;
        let draw = self.draw(rng, Self::draw_size(stage));
        self.trajectory(&draw, stage)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(5)
    }

    fn min_set_of(model: &ProcessModel, stage: Stage) -> (Rational, Rational) {
        model
            .sample_path(stage, &mut rng())
            .unwrap()
            .min_set()
            .unwrap()
    }

    #[test]
    fn two_point_sample() {
        let m = ProcessModel::EmpiricalLad {
            data: DataLaw::Sample {
                values: vec![rational::ratio(1, 5), rational::ratio(4, 5)],
            },
        };
        assert_eq!(
            min_set_of(&m, Stage::N(2)),
            (rational::ratio(1, 5), rational::ratio(4, 5))
        );
        let z = m.sample_path(Stage::N(2), &mut rng()).unwrap();
        // 1/2 (|0.2 - t| + |0.8 - t|) = 0.3 on the flat bottom
        assert_eq!(z.eval(&rational::ratio(1, 2)), rational::ratio(3, 10));
    }

    #[test]
    fn three_point_sample() {
        let m = ProcessModel::EmpiricalLad {
            data: DataLaw::Sample {
                values: vec![
                    rational::ratio(1, 10),
                    rational::ratio(1, 2),
                    rational::ratio(9, 10),
                ],
            },
        };
        assert_eq!(
            min_set_of(&m, Stage::N(3)),
            (rational::ratio(1, 2), rational::ratio(1, 2))
        );
    }

    #[test]
    fn untilted_flat_bottom() {
        let m = ProcessModel::TiltedFlat {
            width: WidthLaw::Fixed {
                value: rational::ratio(3, 4),
            },
            tilt: Rational::zero(),
        };
        assert_eq!(
            min_set_of(&m, Stage::N(7)),
            (rational::ratio(-3, 8), rational::ratio(3, 8))
        );
        let tilted = ProcessModel::TiltedFlat {
            width: WidthLaw::Fixed {
                value: rational::ratio(3, 4),
            },
            tilt: rational::ratio(1, 2),
        };
        assert_eq!(
            min_set_of(&tilted, Stage::N(7)),
            (rational::ratio(-3, 8), rational::ratio(-3, 8))
        );
        assert_eq!(
            min_set_of(&tilted, Stage::Limit),
            (rational::ratio(-3, 8), rational::ratio(3, 8))
        );
        let zero = ProcessModel::TiltedFlat {
            width: WidthLaw::Fixed {
                value: Rational::zero(),
            },
            tilt: Rational::zero(),
        };
        assert_eq!(
            min_set_of(&zero, Stage::N(1)),
            (Rational::zero(), Rational::zero())
        );
    }

    #[test]
    fn lad_matches_generic_constructor() {
        let mut r = rng();
        let draws: Vec<u32> = (0..41).map(|_| r.next_u32() >> 28).collect();
        let fast = lad_from_dyadic(&draws);
        let data: Vec<Rational> = draws
            .iter()
            .map(|&k| rational::dyadic(k as i64, 32))
            .collect();
        let slow = PwlConvex::empirical_lad(&data).unwrap();
        assert_eq!(fast.breakpoints(), slow.breakpoints());
        assert_eq!(fast.slopes(), slow.slopes());
        for t in [-1.0, 0.0, 1e-9, 3e-9, 1.0] {
            assert_eq!(fast.eval_f64(t), slow.eval_f64(t));
        }
    }

    #[test]
    fn bernoulli_paths_and_population() {
        let m = ProcessModel::BernoulliLad {
            p: rational::ratio(1, 2),
        };
        assert_eq!(
            min_set_of(&m, Stage::Limit),
            (rational::int(0), rational::int(1))
        );
        let bits = [true, false, true, true];
        let f = lad_from_bits(&bits);
        let data: Vec<Rational> = bits.iter().map(|&b| rational::int(b as i64)).collect();
        let g = PwlConvex::empirical_lad(&data).unwrap();
        assert_eq!(f.slopes(), g.slopes());
        assert_eq!(
            f.eval(&rational::ratio(1, 3)),
            g.eval(&rational::ratio(1, 3))
        );
        let all_ones = lad_from_bits(&[true, true]);
        assert_eq!(
            min_set_pwl(&all_ones).compact().unwrap().0,
            &rational::int(1)
        );
    }

    #[test]
    fn random_pwl_has_the_drawn_flat_bottom() {
        let model = ProcessModel::RandomPwl {
            width: WidthLaw::Uniform {
                lo: Rational::zero(),
                hi: rational::int(1),
            },
            outer_breaks: 3,
        };
        let mut r = rng();
        for _ in 0..200 {
            let z = model.sample_path(Stage::N(1), &mut r).unwrap();
            let (s, t) = z.min_set().unwrap();
            assert_eq!(z.flat_length(), &t - &s);
            let Trajectory::Pwl(f) = &z else { panic!() };
            assert!(f.slopes().windows(2).all(|w| w[0] <= w[1]));
            assert!(f.breakpoints().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn uniform_risk_values() {
        let z = Trajectory::UniformLadRisk;
        assert_eq!(z.eval(&rational::ratio(1, 2)), rational::ratio(1, 4));
        assert_eq!(z.eval(&rational::int(2)), rational::ratio(3, 2));
        assert_eq!(z.eval(&rational::ratio(3, 10)), rational::ratio(29, 100));
        assert!(z.derivative_membership(&rational::ratio(1, 2)));
        assert!(!z.derivative_membership(&rational::ratio(1, 4)));
    }

    #[test]
    fn invalid_models_are_rejected() {
        assert!(ProcessModel::BernoulliLad {
            p: rational::int(2)
        }
        .validate()
        .is_err());
        let bad_tilt = ProcessModel::TiltedFlat {
            width: WidthLaw::Fixed {
                value: rational::int(1),
            },
            tilt: rational::int(1),
        };
        assert!(matches!(bad_tilt.validate(), Err(Error::ModelInvalid(_))));
        let bad_width = WidthLaw::Uniform {
            lo: rational::int(2),
            hi: rational::int(1),
        };
        assert!(ProcessModel::TiltedFlat {
            width: bad_width,
            tilt: Rational::zero()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn config_form() {
        let m: ProcessModel =
            serde_json::from_str(r#"{"kind":"empirical_lad","data":{"law":"uniform"}}"#).unwrap();
        assert_eq!(
            m,
            ProcessModel::EmpiricalLad {
                data: DataLaw::Uniform
            }
        );
        let m: ProcessModel = serde_json::from_str(
            r#"{"kind":"tilted_flat","width":{"law":"uniform","lo":"0","hi":"1"},"tilt":0}"#,
        )
        .unwrap();
        assert!(matches!(m, ProcessModel::TiltedFlat { .. }));
        assert!(serde_json::from_str::<ProcessModel>(
            r#"{"kind":"bernoulli_lad","p":"1/2","q":1}"#
        )
        .is_err());
    }
}
