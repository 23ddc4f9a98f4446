use std::path::Path;

use convexmin::argmin::SelectionPolicy;
use convexmin::convex::FunctionSpec;
use convexmin::stochastic::{ProcessModel, Stage};
use serde::de::IgnoredAny;
use serde::Deserialize;

use crate::CliError;

/// A config file. The `kind` field selects the command it drives.
#[derive(Clone, Debug)]
pub enum ExperimentConfig {
    Argmin(ArgminConfig),
    Geninv(GeninvConfig),
    Converge(ConvergeConfig),
    ArgminLimits(LimitsConfig),
    Uniqueness(UniquenessConfig),
}

impl ExperimentConfig {
    pub const KINDS: [&'static str; 5] = [
        "argmin",
        "geninv",
        "converge",
        "argmin-limits",
        "uniqueness",
    ];

    /// Read `kind` first, then parse the matching struct, so that errors
    /// carry the field path and position inside it.
    pub fn parse(path: &Path, text: &str) -> Result<Self, CliError> {
        #[derive(Deserialize)]
        struct Probe {
            kind: Option<String>,
        }
        let probe: Probe = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let kind = probe
            .kind
            .ok_or_else(|| CliError::Config(format!("{}: missing field `kind`", path.display())))?;
        Ok(match kind.as_str() {
            "argmin" => ExperimentConfig::Argmin(parse_json(path, text)?),
            "geninv" => ExperimentConfig::Geninv(parse_json(path, text)?),
            "converge" => ExperimentConfig::Converge(parse_json(path, text)?),
            "argmin-limits" => ExperimentConfig::ArgminLimits(parse_json(path, text)?),
            "uniqueness" => ExperimentConfig::Uniqueness(parse_json(path, text)?),
            other => {
                return Err(CliError::Config(format!(
                    "{}: unknown kind `{other}`, expected one of {}",
                    path.display(),
                    Self::KINDS.join(", ")
                )))
            }
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::Argmin(_) => "argmin",
            ExperimentConfig::Geninv(_) => "geninv",
            ExperimentConfig::Converge(_) => "converge",
            ExperimentConfig::ArgminLimits(_) => "argmin-limits",
            ExperimentConfig::Uniqueness(_) => "uniqueness",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArgminConfig {
    #[serde(rename = "kind", default)]
    _kind: IgnoredAny,
    pub spec: FunctionSpec,
    pub tol: Option<f64>,
    pub policy: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeninvConfig {
    #[serde(rename = "kind", default)]
    _kind: IgnoredAny,
    pub spec: FunctionSpec,
    #[serde(default)]
    pub y: f64,
    pub tol: Option<f64>,
}

/// Deterministic sequence families of the convergence harness.
#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Counterexample,
    ShiftedParabola,
    TiltedFlatBottom,
    VerticalShift,
    /// Needs a seed.
    RandomPerturbation,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformConfig {
    pub spot_pairs: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    #[serde(rename = "kind", default)]
    _kind: IgnoredAny,
    pub family: Family,
    pub stages: usize,
    /// Compact set for the sup-norm gap.
    #[serde(default = "default_compact")]
    pub k: (f64, f64),
    pub tol: Option<f64>,
    pub tail_start: Option<usize>,
    pub uniform: Option<UniformConfig>,
    pub seed: Option<u64>,
}

fn default_compact() -> (f64, f64) {
    (-2.0, 2.0)
}

/// Either explicit points or `points` equally spaced values from `lo` to
/// `hi`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Points(Vec<f64>),
    Range { lo: f64, hi: f64, points: usize },
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match self {
            GridSpec::Points(v) => Ok(v.clone()),
            GridSpec::Range { lo, hi, points } => {
                if *points < 2 || lo.is_nan() || hi.is_nan() || lo >= hi {
                    return Err(CliError::Config(format!(
                        "grid range needs lo < hi and at least 2 points, got [{lo}, {hi}] with {points}"
                    )));
                }
                let n = (*points - 1) as f64;
                Ok((0..*points)
                    .map(|i| lo + (hi - lo) * i as f64 / n)
                    .collect())
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlmostSureConfig {
    pub paths: usize,
    /// Largest stage; defaults to the last stage.
    pub n_max: Option<usize>,
    pub tol: Option<f64>,
    pub tol_conv: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InProbabilityConfig {
    pub eps: Vec<f64>,
    pub paths: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidiConfig {
    pub t_grid: Vec<f64>,
    pub paths: Option<usize>,
    pub bins: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    #[serde(rename = "kind", default)]
    _kind: IgnoredAny,
    pub model: ProcessModel,
    pub paths: usize,
    pub stages: Option<Vec<usize>>,
    pub x_grid: GridSpec,
    pub policy: Option<String>,
    pub tol_stat: Option<f64>,
    pub tail_from: Option<usize>,
    pub almost_sure: Option<AlmostSureConfig>,
    pub in_probability: Option<InProbabilityConfig>,
    pub fidi: Option<FidiConfig>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessConfig {
    #[serde(rename = "kind", default)]
    _kind: IgnoredAny,
    pub model: ProcessModel,
    pub paths: usize,
    #[serde(default = "limit_stage")]
    pub stage: Stage,
    pub x_grid: GridSpec,
    pub tol_stat: Option<f64>,
    pub seed: Option<u64>,
}

fn limit_stage() -> Stage {
    Stage::Limit
}

/// Parse JSON with the failing field path and line/column in the message.
pub fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        if field == "." {
            CliError::Config(format!("{}: {inner}", path.display()))
        } else {
            CliError::Config(format!("{}: field `{field}`: {inner}", path.display()))
        }
    })
}

pub fn read_file(path: &Path) -> Result<(String, Vec<u8>), CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Config(format!("{} is not valid UTF-8", path.display())))?;
    Ok((text, bytes))
}

pub fn positive(name: &str, v: Option<f64>) -> Result<(), CliError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::Config(format!(
            "{name} must be positive, got {x}"
        ))),
        _ => Ok(()),
    }
}

pub fn parse_policy(s: Option<&str>) -> Result<SelectionPolicy, CliError> {
    match s {
        None => Ok(SelectionPolicy::Midpoint),
        Some(s) => s
            .parse::<SelectionPolicy>()
            .and_then(SelectionPolicy::validate)
            .map_err(|e| CliError::Config(format!("invalid policy `{s}`: {e}"))),
    }
}

impl LimitsConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        positive("tol_stat", self.tol_stat)?;
        if self.paths == 0 {
            return Err(CliError::Config("paths must be at least 1".into()));
        }
        if let Some(a) = &self.almost_sure {
            positive("almost_sure.tol", a.tol)?;
            positive("almost_sure.tol_conv", a.tol_conv)?;
        }
        if let Some(p) = &self.in_probability {
            for &e in &p.eps {
                positive("in_probability.eps", Some(e))?;
            }
        }
        Ok(())
    }
}
