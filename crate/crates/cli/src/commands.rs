use std::path::Path;

use convexmin::argmin::{
    gen_inverse_vee, gen_inverse_wedge, min_set_pwl, sigma_bisect, tau_bisect, vee, wedge,
    Enclosure, SelectionPolicy,
};
use convexmin::convergence::{
    check_semicontinuity, check_uniform_from_pointwise, sup_norm_gap, FunctionSequence,
    SemicontinuityOptions, UniformOptions,
};
use convexmin::convex::{FunctionSpec, OracleOptions, SpecFunction};
use convexmin::exec::{self, Execution};
use convexmin::rational::{self, Extended};
use convexmin::stats;
use convexmin::stochastic::{
    as_argmin_experiment, fidi_convergence_probe, in_probability_experiment,
    order_convergence_test, selection_sandwich_test, simulate, uniqueness_diagnostics,
    AlmostSureOptions, FidiOptions, InProbabilityOptions, OrderOptions, OrderVerdict, PathEnsemble,
    RayProbabilityTable, SimulationOptions, Stage, UniquenessOptions, DEFAULT_STAGES,
};
use num_traits::Zero;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{self, ExperimentConfig, Family};
use crate::output::{self, num, Csv, Meta};
use crate::{CliError, ExperimentArgs, FunctionArgs, GeninvArgs, Outcome};

const DEFAULT_BISECT_TOL: f64 = 1e-8;
const DEFAULT_INVERSE_TOL: f64 = 1e-10;

fn wrong_kind(found: &ExperimentConfig, expected: &str) -> CliError {
    CliError::Config(format!(
        "config kind is `{}`, expected `{expected}`",
        found.kind()
    ))
}

fn finite(e: &Extended) -> Option<f64> {
    let v = e.to_f64();
    v.is_finite().then_some(v)
}

struct LoadedFunction {
    spec: FunctionSpec,
    bytes: Vec<u8>,
    tol: Option<f64>,
    policy: Option<String>,
    y: Option<f64>,
}

fn load_function(args: &FunctionArgs, expected: &str) -> Result<LoadedFunction, CliError> {
    if let Some(path) = &args.spec {
        let (text, bytes) = config::read_file(path)?;
        let spec = config::parse_json(path, &text)?;
        return Ok(LoadedFunction {
            spec,
            bytes,
            tol: args.tol,
            policy: args.policy.clone(),
            y: None,
        });
    }
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("one of --spec or --config is required".into()))?;
    let (text, bytes) = config::read_file(path)?;
    let loaded = match (ExperimentConfig::parse(path, &text)?, expected) {
        (ExperimentConfig::Argmin(c), "argmin") => LoadedFunction {
            spec: c.spec,
            bytes,
            tol: args.tol.or(c.tol),
            policy: args.policy.clone().or(c.policy),
            y: None,
        },
        (ExperimentConfig::Geninv(c), "geninv") => LoadedFunction {
            spec: c.spec,
            bytes,
            tol: args.tol.or(c.tol),
            policy: None,
            y: Some(c.y),
        },
        (other, _) => return Err(wrong_kind(&other, expected)),
    };
    Ok(loaded)
}

fn emit<T: Serialize>(
    name: &str,
    value: &T,
    out: Option<&Path>,
    meta: &Meta,
) -> Result<(), CliError> {
    let text = output::to_json(value);
    print!("{text}");
    if let Some(dir) = out {
        let path = dir.join(format!("{name}.json"));
        output::write_atomic(&path, text.as_bytes())?;
        output::write_json(&output::sidecar_path(&path), meta)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ArgminOutput {
    sigma: Option<f64>,
    tau: Option<f64>,
    /// Exact endpoints as `p/q`, `-inf` or `+inf` (PWL specs only).
    sigma_exact: Option<String>,
    tau_exact: Option<String>,
    kind: String,
    selection: Option<f64>,
    certified: bool,
    method: &'static str,
    sigma_enclosure: Option<Enclosure>,
    tau_enclosure: Option<Enclosure>,
}

pub fn argmin(args: &FunctionArgs) -> Result<Outcome, CliError> {
    let f = load_function(args, "argmin")?;
    config::positive("tol", f.tol)?;
    let policy = config::parse_policy(f.policy.as_deref())?;
    let result = match f.spec.build()? {
        SpecFunction::Pwl(pwl) => {
            let set = min_set_pwl(&pwl);
            let (s, t) = (set.sigma(), set.tau());
            ArgminOutput {
                sigma: s.as_ref().and_then(finite),
                tau: t.as_ref().and_then(finite),
                sigma_exact: s.map(|e| e.to_string()),
                tau_exact: t.map(|e| e.to_string()),
                kind: set.kind().to_string(),
                selection: policy.select(&set).ok().map(|r| rational::to_f64(&r)),
                certified: true,
                method: "exact",
                sigma_enclosure: None,
                tau_enclosure: None,
            }
        }
        SpecFunction::Oracle(o) => {
            let tol = f.tol.unwrap_or(DEFAULT_BISECT_TOL);
            let opts = OracleOptions::default();
            let s = sigma_bisect(&o, tol, &opts)?;
            let t = tau_bisect(&o, tol, &opts)?;
            ArgminOutput {
                sigma: Some(s.midpoint()),
                tau: Some(t.midpoint()),
                sigma_exact: None,
                tau_exact: None,
                kind: "compact".into(),
                selection: Some(policy.select_f64(s.midpoint(), t.midpoint())?),
                certified: s.certified() && t.certified(),
                method: "bisection",
                sigma_enclosure: Some(s),
                tau_enclosure: Some(t),
            }
        }
    };
    let meta = Meta::new("argmin", &f.bytes, None);
    emit("argmin", &result, args.out.as_deref(), &meta)?;
    Ok(Outcome::Pass)
}

#[derive(Debug, Serialize)]
struct GeninvOutput {
    y: f64,
    /// `one_sided_derivatives` for PWL specs: `wedge` inverts `D+f` and
    /// `vee` inverts `D-f`. `function` for expressions, which are read as a
    /// non-decreasing function on their bracket.
    inverted: &'static str,
    wedge: Option<f64>,
    vee: Option<f64>,
    wedge_exact: Option<String>,
    vee_exact: Option<String>,
}

pub fn geninv(args: &GeninvArgs) -> Result<Outcome, CliError> {
    let f = load_function(&args.function, "geninv")?;
    config::positive("tol", f.tol)?;
    let y = args.y.or(f.y).unwrap_or(0.0);
    let result = match f.spec.build()? {
        SpecFunction::Pwl(pwl) => {
            let level = rational::from_f64(y)?;
            let w = wedge(&pwl.right_derivative(), &level);
            let v = vee(&pwl.left_derivative(), &level);
            GeninvOutput {
                y,
                inverted: "one_sided_derivatives",
                wedge: finite(&w),
                vee: finite(&v),
                wedge_exact: Some(w.to_string()),
                vee_exact: Some(v.to_string()),
            }
        }
        SpecFunction::Oracle(o) => {
            let bracket = o.bracket().ok_or(convexmin::Error::NoBracket)?;
            let tol = f.tol.unwrap_or(DEFAULT_INVERSE_TOL);
            let w = gen_inverse_wedge(|t| o.value(t), y, bracket, tol)?;
            let v = gen_inverse_vee(|t| o.value(t), y, bracket, tol)?;
            GeninvOutput {
                y,
                inverted: "function",
                wedge: Some(w),
                vee: Some(v),
                wedge_exact: None,
                vee_exact: None,
            }
        }
    };
    let meta = Meta::new("geninv", &f.bytes, None);
    emit("geninv", &result, args.function.out.as_deref(), &meta)?;
    Ok(Outcome::Pass)
}

fn load_experiment(args: &ExperimentArgs) -> Result<(ExperimentConfig, Vec<u8>), CliError> {
    let (text, bytes) = config::read_file(&args.config)?;
    let cfg = ExperimentConfig::parse(&args.config, &text)?;
    config::positive("--tol", args.tol)?;
    Ok((cfg, bytes))
}

fn overrides(args: &ExperimentArgs) -> Vec<(String, String)> {
    let mut v = Vec::new();
    if let Some(s) = args.seed {
        v.push(("seed".into(), s.to_string()));
    }
    if let Some(t) = args.tol {
        v.push(("tol".into(), t.to_string()));
    }
    if let Some(p) = &args.policy {
        v.push(("policy".into(), p.clone()));
    }
    v
}

fn require_seed(
    args: &ExperimentArgs,
    config_seed: Option<u64>,
    kind: &str,
) -> Result<u64, CliError> {
    args.seed.or(config_seed).ok_or_else(|| {
        CliError::Config(format!(
            "{kind} needs a seed (config field `seed` or --seed)"
        ))
    })
}

fn finish(kind: &str, out: &Path, verdict: Value, pass: bool) -> Result<Outcome, CliError> {
    output::write_json(&out.join("verdict.json"), &verdict)?;
    println!(
        "{} {kind}: results in {}",
        if pass { "PASS" } else { "FAIL" },
        out.display()
    );
    Ok(if pass { Outcome::Pass } else { Outcome::Fail })
}

pub fn converge(args: &ExperimentArgs) -> Result<Outcome, CliError> {
    let (cfg, bytes) = load_experiment(args)?;
    let ExperimentConfig::Converge(cfg) = cfg else {
        return Err(wrong_kind(&cfg, "converge"));
    };
    config::positive("tol", cfg.tol)?;
    if cfg.stages == 0 {
        return Err(CliError::Config("stages must be at least 1".into()));
    }
    if !cfg.k.0.is_finite() || !cfg.k.1.is_finite() || cfg.k.0 >= cfg.k.1 {
        return Err(CliError::Config(format!(
            "compact set k = {:?} needs lo < hi",
            cfg.k
        )));
    }
    let seed = args.seed.or(cfg.seed);
    let seq = match cfg.family {
        Family::Counterexample => FunctionSequence::counterexample(),
        Family::ShiftedParabola => FunctionSequence::shifted_parabola(),
        Family::TiltedFlatBottom => FunctionSequence::tilted_flat_bottom(),
        Family::VerticalShift => FunctionSequence::vertical_shift(),
        Family::RandomPerturbation => FunctionSequence::random_perturbation(require_seed(
            args,
            cfg.seed,
            "random_perturbation",
        )?),
    };
    let opts = SemicontinuityOptions {
        tol_report: args.tol.or(cfg.tol),
        tail_start: cfg.tail_start,
        ..Default::default()
    };
    let report = check_semicontinuity(&seq, cfg.stages, &opts)?;
    let gaps = exec::try_map_indexed(Execution::default(), cfg.stages, |i| {
        seq.stage(i + 1)
            .map(|f| sup_norm_gap(&f, &seq.limit, cfg.k))
    })?;
    let uniform = cfg
        .uniform
        .as_ref()
        .map(|u| {
            let opts = UniformOptions {
                spot_pairs: u.spot_pairs.unwrap_or(1000),
                seed: seed.unwrap_or(0),
                exec: Execution::default(),
            };
            check_uniform_from_pointwise(&seq, cfg.k, cfg.stages, &opts)
        })
        .transpose()?;

    let mut meta = Meta::new("experiment converge", &bytes, seed);
    meta.overrides = overrides(args);
    let mut csv = Csv::new(&[
        "stage",
        "sigma",
        "tau",
        "tail_inf_sigma",
        "tail_sup_tau",
        "supnorm_gap",
    ]);
    for (r, gap) in report.stages.iter().zip(&gaps) {
        csv.row(&[
            r.stage.to_string(),
            num(r.sigma),
            num(r.tau),
            num(r.tail_inf_sigma),
            num(r.tail_sup_tau),
            num(*gap),
        ]);
    }
    csv.write(&args.out.join("converge.csv"), &meta)?;
    let pass = report.pass && uniform.as_ref().is_none_or(|u| u.pass);
    let verdict = json!({
        "kind": "converge",
        "meta": meta,
        "pass": pass,
        "family": report.name,
        "k": cfg.k,
        "tail_start": report.tail_start,
        "tol_report": report.tol_report,
        "limit_sigma": report.limit_sigma,
        "limit_tau": report.limit_tau,
        "lower_sigma": report.lower_sigma,
        "upper_tau": report.upper_tau,
        "continuity": report.continuity,
        "final_sigma_gap": report.final_sigma_gap,
        "final_tau_gap": report.final_tau_gap,
        "uniform": uniform,
    });
    finish("converge", &args.out, verdict, pass)
}

// Order-test verdict without the per-stage probability tables, which go to
// the CSV.
fn order_summary(v: &OrderVerdict) -> Value {
    json!({
        "tail": v.tail,
        "tol_stat": v.tol_stat,
        "right_pass": v.right_pass,
        "left_pass": v.left_pass,
        "combined_pass": v.combined_pass,
        "worst_right_deficit": v.worst_right_deficit,
        "worst_left_deficit": v.worst_left_deficit,
        "rows": v.rows,
    })
}

fn check_stages(stages: &[usize]) -> Result<(), CliError> {
    if stages.is_empty() || stages[0] == 0 || stages.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config(
            "stages must be non-empty, positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

fn ensemble_rows(
    csv: &mut Csv,
    label: &str,
    e: &PathEnsemble,
    x_grid: &[f64],
) -> Result<(), CliError> {
    for (name, values) in [("sigma", e.sigmas()), ("tau", e.taus()), ("xi", e.xis())] {
        csv.row(&[
            label.into(),
            format!("mean_{name}"),
            num(stats::mean(&values)),
            num(3.0 * stats::std_err(&values)),
        ]);
        let table = RayProbabilityTable::new(&values, x_grid)?;
        for (j, &x) in x_grid.iter().enumerate() {
            csv.row(&[
                label.into(),
                format!("p_gt_{name}[x={}]", num(x)),
                num(table.p_gt[j]),
                num(table.halfwidth_gt[j]),
            ]);
            csv.row(&[
                label.into(),
                format!("p_lt_{name}[x={}]", num(x)),
                num(table.p_lt[j]),
                num(table.halfwidth_lt[j]),
            ]);
        }
    }
    let gap = rational::to_f64(&e.mean_gap());
    let gaps: Vec<f64> = e
        .sigmas()
        .iter()
        .zip(e.taus())
        .map(|(s, t)| t - s)
        .collect();
    csv.row(&[
        label.into(),
        "mean_gap".into(),
        num(gap),
        num(3.0 * stats::std_err(&gaps)),
    ]);
    Ok(())
}

pub fn argmin_limits(args: &ExperimentArgs) -> Result<Outcome, CliError> {
    let (cfg, bytes) = load_experiment(args)?;
    let ExperimentConfig::ArgminLimits(cfg) = cfg else {
        return Err(wrong_kind(&cfg, "argmin-limits"));
    };
    cfg.validate()?;
    let seed = require_seed(args, cfg.seed, "argmin-limits")?;
    let tol_stat = args.tol.or(cfg.tol_stat);
    let policy: SelectionPolicy =
        config::parse_policy(args.policy.as_deref().or(cfg.policy.as_deref()))?;
    let stages = cfg
        .stages
        .clone()
        .unwrap_or_else(|| DEFAULT_STAGES.to_vec());
    check_stages(&stages)?;
    let x_grid = cfg.x_grid.values()?;
    let model = &cfg.model;
    model.validate()?;

    let sim = SimulationOptions {
        policy,
        exec: Execution::default(),
    };
    let ensembles = stages
        .iter()
        .map(|&n| simulate(model, cfg.paths, Stage::N(n), seed, &sim))
        .collect::<convexmin::Result<Vec<_>>>()?;
    let limit = simulate(model, cfg.paths, Stage::Limit, seed, &sim)?;
    let unique_limit = limit.mean_gap().is_zero();
    let order_opts = OrderOptions {
        tol_stat,
        tail_from: cfg.tail_from,
    };
    let series = |f: fn(&PathEnsemble) -> Vec<f64>| -> Vec<(usize, Vec<f64>)> {
        stages
            .iter()
            .copied()
            .zip(ensembles.iter().map(f))
            .collect()
    };
    let sigma_test = order_convergence_test(
        &series(PathEnsemble::sigmas),
        &limit.sigmas(),
        &x_grid,
        &order_opts,
    )?;
    let tau_test = order_convergence_test(
        &series(PathEnsemble::taus),
        &limit.taus(),
        &x_grid,
        &order_opts,
    )?;
    let sandwich = selection_sandwich_test(&ensembles, &limit, &x_grid, &order_opts)?;
    // natural-topology convergence of sigma and tau is claimed only for an
    // a.s. unique limit minimizer
    let distributional_pass = sigma_test.right_pass
        && tau_test.left_pass
        && sandwich.pass
        && (!unique_limit || (sigma_test.combined_pass && tau_test.combined_pass));

    let almost_sure = cfg
        .almost_sure
        .as_ref()
        .map(|a| {
            let defaults = AlmostSureOptions::default();
            let opts = AlmostSureOptions {
                tol: a.tol.unwrap_or(defaults.tol),
                tol_conv: a.tol_conv.unwrap_or(defaults.tol_conv),
                policy,
                ..defaults
            };
            let n_max = a
                .n_max
                .unwrap_or(*stages.last().expect("checked non-empty"));
            as_argmin_experiment(model, n_max, a.paths, seed, &opts)
        })
        .transpose()?;

    let in_probability = match &cfg.in_probability {
        None => None,
        Some(p) => {
            let opts = InProbabilityOptions {
                tol_stat,
                policy: Some(policy),
                exec: Execution::default(),
            };
            match in_probability_experiment(
                model,
                &stages,
                &p.eps,
                p.paths.unwrap_or(cfg.paths),
                seed,
                &opts,
            ) {
                Ok(r) => Some(Ok(r)),
                Err(convexmin::Error::NonUniqueLimit { gap }) => Some(Err(gap)),
                Err(e) => return Err(e.into()),
            }
        }
    };

    let fidi = cfg
        .fidi
        .as_ref()
        .map(|f| {
            let opts = FidiOptions {
                bins: f.bins.unwrap_or(FidiOptions::default().bins),
                exec: Execution::default(),
            };
            fidi_convergence_probe(
                model,
                &f.t_grid,
                &stages,
                f.paths.unwrap_or(cfg.paths),
                seed,
                &opts,
            )
        })
        .transpose()?;

    let mut meta = Meta::new("experiment argmin-limits", &bytes, Some(seed));
    meta.overrides = overrides(args);
    let mut csv = Csv::new(&["stage", "statistic", "value", "ci_halfwidth"]);
    for (n, e) in stages.iter().zip(&ensembles) {
        ensemble_rows(&mut csv, &n.to_string(), e, &x_grid)?;
    }
    ensemble_rows(&mut csv, "limit", &limit, &x_grid)?;
    if let Some(Ok(r)) = &in_probability {
        for row in &r.rows {
            for (name, p, hw) in [
                ("sigma", row.p_sigma, row.hw_sigma),
                ("tau", row.p_tau, row.hw_tau),
                ("xi", row.p_xi, row.hw_xi),
            ] {
                csv.row(&[
                    row.stage.to_string(),
                    format!("p_dev_{name}[eps={}]", num(row.eps)),
                    num(p),
                    num(hw),
                ]);
            }
        }
    }
    if let Some(r) = &fidi {
        for row in &r.marginals {
            let t = num(row.t);
            csv.row(&[
                row.stage.to_string(),
                format!("ks[t={t}]"),
                num(row.ks),
                num(row.ks_critical),
            ]);
            csv.row(&[
                row.stage.to_string(),
                format!("w1[t={t}]"),
                num(row.w1),
                num(f64::NAN),
            ]);
        }
    }
    csv.write(&args.out.join("argmin_limits.csv"), &meta)?;

    let as_pass = almost_sure.as_ref().is_none_or(|r| r.pass);
    let ip_pass = match &in_probability {
        Some(Ok(r)) => r.pass,
        _ => true,
    };
    let pass = distributional_pass && as_pass && ip_pass;
    let in_probability_json = in_probability.as_ref().map(|r| match r {
        Ok(r) => json!({
            "claimed": true,
            "pass": r.pass,
            "tol_stat": r.tol_stat,
            "verdicts": r.verdicts,
        }),
        Err(gap) => json!({
            "claimed": false,
            "pass": true,
            "rejected": "limit minimizer is not a.s. unique",
            "limit_mean_gap": gap,
        }),
    });
    let almost_sure_json = almost_sure.as_ref().map(|r| {
        json!({
            "pass": r.pass,
            "n_max": r.n_max,
            "tail": r.tail,
            "m": r.m,
            "tol": r.tol,
            "tol_conv": r.tol_conv,
            "unique_limit": r.unique_limit,
            "lower_sigma": r.lower_sigma,
            "upper_tau": r.upper_tau,
            "convergence": r.convergence,
            "selection_bounds": r.selection_bounds,
            "selection_convergence": r.selection_convergence,
            "sandwich": r.sandwich,
        })
    });
    let fidi_json = fidi.as_ref().map(|r| {
        json!({
            "informational": true,
            "t_grid": r.t_grid,
            "w1_shrinking": r.w1_shrinking,
            "pairs": r.pairs,
        })
    });
    let verdict = json!({
        "kind": "argmin-limits",
        "meta": meta,
        "pass": pass,
        "model": cfg.model,
        "paths": cfg.paths,
        "stages": stages,
        "policy": policy,
        "unique_limit": unique_limit,
        "limit_mean_gap": rational::to_f64(&limit.mean_gap()),
        "distributional": {
            "pass": distributional_pass,
            "sigma": order_summary(&sigma_test),
            "tau": order_summary(&tau_test),
            "selection": {
                "pass": sandwich.pass,
                "sandwich": sandwich.sandwich,
                "limit_ks": sandwich.limit_ks,
                "equal_in_law": sandwich.equal_in_law,
                "right": order_summary(&sandwich.right),
                "left": order_summary(&sandwich.left),
            },
        },
        "almost_sure": almost_sure_json,
        "in_probability": in_probability_json,
        "fidi": fidi_json,
    });
    finish("argmin-limits", &args.out, verdict, pass)
}

pub fn uniqueness(args: &ExperimentArgs) -> Result<Outcome, CliError> {
    let (cfg, bytes) = load_experiment(args)?;
    let ExperimentConfig::Uniqueness(cfg) = cfg else {
        return Err(wrong_kind(&cfg, "uniqueness"));
    };
    config::positive("tol_stat", cfg.tol_stat)?;
    if cfg.paths == 0 {
        return Err(CliError::Config("paths must be at least 1".into()));
    }
    let seed = require_seed(args, cfg.seed, "uniqueness")?;
    let x_grid = cfg.x_grid.values()?;
    let opts = UniquenessOptions {
        tol_stat: args.tol.or(cfg.tol_stat),
        exec: Execution::default(),
    };
    let r = uniqueness_diagnostics(&cfg.model, cfg.paths, cfg.stage, &x_grid, seed, &opts)?;

    let mut meta = Meta::new("experiment uniqueness", &bytes, Some(seed));
    meta.overrides = overrides(args);
    let mut csv = Csv::new(&["x", "membership", "ci_halfwidth"]);
    for (&x, &p) in r.x_grid.iter().zip(&r.membership) {
        csv.row(&[num(x), num(p), num(3.0 * stats::binomial_se(p, r.m))]);
    }
    csv.write(&args.out.join("uniqueness.csv"), &meta)?;
    let pass = r.fubini_pass && r.clauses_agree && r.derivative_mismatches == 0;
    let verdict = json!({
        "kind": "uniqueness",
        "meta": meta,
        "pass": pass,
        "model": cfg.model,
        "stage": r.stage,
        "m": r.m,
        "lhs": r.lhs,
        "lhs_se": r.lhs_se,
        "rhs": r.rhs,
        "difference": r.difference,
        "grid_step": r.grid_step,
        "fubini_tol": r.fubini_tol,
        "fubini_pass": r.fubini_pass,
        "derivative_mismatches": r.derivative_mismatches,
        "clause_unique": r.clause_unique,
        "clause_membership": r.clause_membership,
        "clause_derivative": r.clause_derivative,
        "clauses_agree": r.clauses_agree,
    });
    finish("uniqueness", &args.out, verdict, pass)
}
