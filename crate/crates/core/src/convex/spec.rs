use serde::{Deserialize, Serialize};

use crate::convex::{ConvexOracle, PwlConvex};
use crate::rational::{self, Rational};
use crate::{Error, Result};

/// JSON description of a convex function.
///
/// ```json
/// {"kind": "pwl", "anchor": ["0/1", "0/1"], "breakpoints": ["0/1"], "slopes": ["-1/1", "1/1"]}
/// {"kind": "expr", "expr": "(t - 2)^2", "bracket": [0, 10]}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FunctionSpec {
    Pwl {
        #[serde(with = "rational::serde_vec")]
        anchor: Vec<Rational>,
        #[serde(with = "rational::serde_vec")]
        breakpoints: Vec<Rational>,
        #[serde(with = "rational::serde_vec")]
        slopes: Vec<Rational>,
    },
    Expr {
        expr: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bracket: Option<(f64, f64)>,
    },
}

/// A function built from a [`FunctionSpec`].
#[derive(Clone, Debug)]
pub enum SpecFunction {
    Pwl(PwlConvex),
    Oracle(ConvexOracle),
}

impl FunctionSpec {
    pub fn from_pwl(f: &PwlConvex) -> Self {
        let (x, y) = f.anchor();
        FunctionSpec::Pwl {
            anchor: vec![x.clone(), y.clone()],
            breakpoints: f.breakpoints().to_vec(),
            slopes: f.slopes().to_vec(),
        }
    }

    pub fn build(&self) -> Result<SpecFunction> {
        match self {
            FunctionSpec::Pwl {
                anchor,
                breakpoints,
                slopes,
            } => {
                let [x, y] = anchor.as_slice() else {
                    return Err(Error::InvalidPwl(format!(
                        "anchor needs 2 entries, got {}",
                        anchor.len()
                    )));
                };
                PwlConvex::new(x.clone(), y.clone(), breakpoints.clone(), slopes.clone())
                    .map(SpecFunction::Pwl)
            }
            FunctionSpec::Expr { expr, bracket } => {
                let oracle = ConvexOracle::from_expr(expr)?;
                let oracle = match bracket {
                    Some((lo, hi)) => oracle.with_bracket(*lo, *hi)?,
                    None => oracle,
                };
                Ok(SpecFunction::Oracle(oracle))
            }
        }
    }
}

impl SpecFunction {
    pub fn to_oracle(&self) -> ConvexOracle {
        match self {
            SpecFunction::Pwl(f) => f.to_oracle(),
            SpecFunction::Oracle(o) => o.clone(),
        }
    }
}
