use crate::convex::StepFunction;
use crate::rational::{Extended, Rational};
use crate::{Error, Result};

/// Number of points used to check monotonicity of an oracle on its bracket.
const MONOTONE_SAMPLES: usize = 65;

/// `F^(y) = inf {x : F(x) >= y}`, exact. `-inf` when every value is `>= y`,
/// `+inf` when none is.
pub fn wedge(f: &StepFunction, y: &Rational) -> Extended {
    let values = f.values();
    match values.iter().position(|v| v >= y) {
        None => Extended::PosInf,
        Some(0) => Extended::NegInf,
        Some(j) => Extended::Finite(f.jumps()[j - 1].clone()),
    }
}

/// `F^v(y) = sup {x : F(x) <= y}`, exact. `+inf` when every value is `<= y`,
/// `-inf` when none is.
pub fn vee(f: &StepFunction, y: &Rational) -> Extended {
    let values = f.values();
    match values.iter().rposition(|v| v <= y) {
        None => Extended::NegInf,
        Some(j) if j + 1 == values.len() => Extended::PosInf,
        Some(j) => Extended::Finite(f.jumps()[j].clone()),
    }
}

fn check_monotone(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<()> {
    let mut prev = f(lo);
    for i in 1..MONOTONE_SAMPLES {
        let x = lo + (hi - lo) * i as f64 / (MONOTONE_SAMPLES - 1) as f64;
        let v = f(x);
        if v < prev {
            return Err(Error::NotMonotone { at: x });
        }
        prev = v;
    }
    Ok(())
}

fn check_bracket(lo: f64, hi: f64, tol: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi && tol > 0.0) {
        return Err(Error::Parse(format!(
            "invalid bracket [{lo}, {hi}] or tolerance {tol}"
        )));
    }
    Ok(())
}

/// `inf {x in [lo, hi] : F(x) >= y}` for a non-decreasing oracle, to within
/// `tol`; the midpoint of the final enclosure is returned.
pub fn gen_inverse_wedge(
    f: impl Fn(f64) -> f64,
    y: f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<f64> {
    let (lo, hi) = bracket;
    check_bracket(lo, hi, tol)?;
    check_monotone(&f, lo, hi)?;
    if f(hi) < y {
        return Err(Error::EmptyLevelSet);
    }
    if f(lo) >= y {
        return Ok(lo);
    }
    // f(a) < y <= f(b)
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m) >= y {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// `sup {x in [lo, hi] : F(x) <= y}` for a non-decreasing oracle, to within
/// `tol`; the midpoint of the final enclosure is returned.
pub fn gen_inverse_vee(
    f: impl Fn(f64) -> f64,
    y: f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<f64> {
    let (lo, hi) = bracket;
    check_bracket(lo, hi, tol)?;
    check_monotone(&f, lo, hi)?;
    if f(lo) > y {
        return Err(Error::EmptyLevelSet);
    }
    if f(hi) <= y {
        return Ok(hi);
    }
    // f(a) <= y < f(b)
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m) <= y {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{Continuity, PwlConvex};
    use crate::rational::{self, int};

    fn flat() -> PwlConvex {
        PwlConvex::new(
            int(0),
            int(2),
            vec![int(-1), int(1)],
            vec![int(-2), int(0), int(2)],
        )
        .unwrap()
    }

    #[test]
    fn derivative_inverses_give_min_set_endpoints() {
        let f = flat();
        assert_eq!(
            wedge(&f.right_derivative(), &int(0)),
            Extended::Finite(int(-1))
        );
        assert_eq!(vee(&f.left_derivative(), &int(0)), Extended::Finite(int(1)));
    }

    #[test]
    fn infinite_cases() {
        let f = StepFunction::new(vec![int(0)], vec![int(1), int(2)], Continuity::Right).unwrap();
        assert_eq!(wedge(&f, &int(0)), Extended::NegInf);
        assert_eq!(wedge(&f, &int(3)), Extended::PosInf);
        assert_eq!(vee(&f, &int(0)), Extended::NegInf);
        assert_eq!(vee(&f, &int(2)), Extended::PosInf);
        assert_eq!(wedge(&f, &int(2)), Extended::Finite(int(0)));
        assert_eq!(vee(&f, &int(1)), Extended::Finite(int(0)));
    }

    #[test]
    fn identity_oracle() {
        let w = gen_inverse_wedge(|x| x, 0.0, (-1.0, 3.0), 1e-10).unwrap();
        let v = gen_inverse_vee(|x| x, 0.0, (-1.0, 3.0), 1e-10).unwrap();
        assert!(w.abs() < 1e-10);
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn step_oracle() {
        let f = flat();
        let dp = |x: f64| rational::to_f64(f.d_plus(&rational::from_f64(x).unwrap()));
        let dm = |x: f64| rational::to_f64(f.d_minus(&rational::from_f64(x).unwrap()));
        assert!((gen_inverse_wedge(dp, 0.0, (-5.0, 5.0), 1e-9).unwrap() + 1.0).abs() < 1e-9);
        assert!((gen_inverse_vee(dm, 0.0, (-5.0, 5.0), 1e-9).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        assert_eq!(
            gen_inverse_wedge(|x| -x, 0.0, (-1.0, 1.0), 1e-6),
            Err(Error::NotMonotone {
                at: -1.0 + 2.0 / 64.0
            })
        );
        assert_eq!(
            gen_inverse_wedge(|x| x, 5.0, (-1.0, 1.0), 1e-6),
            Err(Error::EmptyLevelSet)
        );
        assert_eq!(
            gen_inverse_vee(|x| x, -5.0, (-1.0, 1.0), 1e-6),
            Err(Error::EmptyLevelSet)
        );
    }
}
