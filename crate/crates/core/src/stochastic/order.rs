use serde::Serialize;

use crate::stats;
use crate::stochastic::ensemble::{
    check_grid, default_tol_stat, PathEnsemble, RayProbabilityTable,
};
use crate::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct OrderOptions {
    /// Allowed shortfall of a probability; defaults to three binomial
    /// standard errors at `p = 1/2`.
    pub tol_stat: Option<f64>,
    /// First stage of the tail; defaults to the later half of the stages.
    pub tail_from: Option<usize>,
}

/// One abscissa of an order-topology test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderRow {
    pub x: f64,
    pub limit_gt: f64,
    /// `min P(V_n > x)` over the tail stages.
    pub tail_inf_gt: f64,
    pub limit_lt: f64,
    /// `min P(V_n < x)` over the tail stages.
    pub tail_inf_lt: f64,
    pub right_pass: bool,
    pub left_pass: bool,
    /// The limit sample has no atom at `x`.
    pub continuity_point: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderVerdict {
    pub stages: Vec<usize>,
    pub tail: Vec<usize>,
    pub m: usize,
    pub tol_stat: f64,
    pub tables: Vec<RayProbabilityTable>,
    pub limit_table: RayProbabilityTable,
    pub rows: Vec<OrderRow>,
    /// `liminf P(V_n > x) >= P(V > x)` at every grid point: convergence in
    /// the right-order topology.
    pub right_pass: bool,
    /// `liminf P(V_n < x) >= P(V < x)` at every grid point: convergence in
    /// the left-order topology.
    pub left_pass: bool,
    /// Both one-sided tests pass at the continuity points of the limit law,
    /// which gives convergence in the natural topology there.
    pub combined_pass: bool,
    /// Largest shortfall `P(V > x) - tail_inf P(V_n > x)`, at least 0.
    pub worst_right_deficit: f64,
    pub worst_left_deficit: f64,
}

/// Compare late-stage ray probabilities of a statistic with those of its
/// limit. `stages` pairs each stage index with the per-path values.
pub fn order_convergence_test(
    stages: &[(usize, Vec<f64>)],
    limit: &[f64],
    x_grid: &[f64],
    opts: &OrderOptions,
) -> Result<OrderVerdict> {
    check_grid(x_grid)?;
    if stages.is_empty() {
        return Err(Error::GridMismatch("no stages".into()));
    }
    let m = limit.len();
    if let Some((n, v)) = stages.iter().find(|(_, v)| v.len() != m) {
        return Err(Error::GridMismatch(format!(
            "stage {n} has {} paths, the limit has {m}",
            v.len()
        )));
    }
    if stages.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::GridMismatch(
            "stages must be strictly increasing".into(),
        ));
    }
    let tol = opts.tol_stat.unwrap_or_else(|| default_tol_stat(m));
    let ids: Vec<usize> = stages.iter().map(|s| s.0).collect();
    let tail_from = opts.tail_from.unwrap_or(ids[ids.len() / 2]);
    let tail_idx: Vec<usize> = (0..stages.len()).filter(|&i| ids[i] >= tail_from).collect();
    if tail_idx.is_empty() {
        return Err(Error::GridMismatch(format!(
            "no stage at or after {tail_from}"
        )));
    }
    let tables = stages
        .iter()
        .map(|(_, v)| RayProbabilityTable::new(v, x_grid))
        .collect::<Result<Vec<_>>>()?;
    let limit_table = RayProbabilityTable::new(limit, x_grid)?;
    let rows: Vec<OrderRow> = x_grid
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let tail_inf_gt = tail_idx
                .iter()
                .map(|&i| tables[i].p_gt[j])
                .fold(f64::INFINITY, f64::min);
            let tail_inf_lt = tail_idx
                .iter()
                .map(|&i| tables[i].p_lt[j])
                .fold(f64::INFINITY, f64::min);
            let (limit_gt, limit_lt) = (limit_table.p_gt[j], limit_table.p_lt[j]);
            OrderRow {
                x,
                limit_gt,
                tail_inf_gt,
                limit_lt,
                tail_inf_lt,
                right_pass: tail_inf_gt >= limit_gt - tol,
                left_pass: tail_inf_lt >= limit_lt - tol,
                continuity_point: !limit.contains(&x),
            }
        })
        .collect();
    let right_pass = rows.iter().all(|r| r.right_pass);
    let left_pass = rows.iter().all(|r| r.left_pass);
    let combined_pass = rows
        .iter()
        .filter(|r| r.continuity_point)
        .all(|r| r.right_pass && r.left_pass);
    let worst_right_deficit = rows
        .iter()
        .map(|r| r.limit_gt - r.tail_inf_gt)
        .fold(0.0, f64::max);
    let worst_left_deficit = rows
        .iter()
        .map(|r| r.limit_lt - r.tail_inf_lt)
        .fold(0.0, f64::max);
    Ok(OrderVerdict {
        stages: ids,
        tail: tail_idx.iter().map(|&i| stages[i].0).collect(),
        m,
        tol_stat: tol,
        tables,
        limit_table,
        rows,
        right_pass,
        left_pass,
        combined_pass,
        worst_right_deficit,
        worst_left_deficit,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichVerdict {
    /// `sigma <= xi <= tau` exactly on every path of every stage.
    pub sandwich: bool,
    /// `xi(Z_n)` against `sigma(Z)` in the right-order topology.
    pub right: OrderVerdict,
    /// `xi(Z_n)` against `tau(Z)` in the left-order topology.
    pub left: OrderVerdict,
    /// KS distance between the limit laws of `sigma(Z)` and `tau(Z)`.
    pub limit_ks: f64,
    /// `sigma(Z)` and `tau(Z)` have the same law up to `tol_stat`.
    pub equal_in_law: bool,
    /// Natural-topology test of `xi(Z_n)` against `sigma(Z)`, run only when
    /// the limit laws agree.
    pub natural: Option<OrderVerdict>,
    pub pass: bool,
}

/// One-sided distributional limits of a selection `xi(Z_n)`: towards
/// `sigma(Z)` from the right-order side and towards `tau(Z)` from the
/// left-order side; towards both in the natural topology when `sigma(Z)`
/// and `tau(Z)` agree in law.
pub fn selection_sandwich_test(
    stages: &[PathEnsemble],
    limit: &PathEnsemble,
    x_grid: &[f64],
    opts: &OrderOptions,
) -> Result<SandwichVerdict> {
    let sandwich = stages.iter().all(PathEnsemble::sandwich_holds);
    let stage_ids = stages
        .iter()
        .map(|e| match e.stage {
            crate::stochastic::Stage::N(n) => Ok(n),
            crate::stochastic::Stage::Limit => {
                Err(Error::GridMismatch("a stage ensemble is the limit".into()))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let xi: Vec<(usize, Vec<f64>)> = stage_ids
        .iter()
        .copied()
        .zip(stages.iter().map(PathEnsemble::xis))
        .collect();
    let (lim_sigma, lim_tau) = (limit.sigmas(), limit.taus());
    let right = order_convergence_test(&xi, &lim_sigma, x_grid, opts)?;
    let left = order_convergence_test(&xi, &lim_tau, x_grid, opts)?;
    let limit_ks = stats::ks_two_sample(&lim_sigma, &lim_tau);
    let equal_in_law = limit_ks <= right.tol_stat;
    // both one-sided tests of xi against sigma(Z), at its continuity points
    let natural = equal_in_law.then(|| right.clone());
    let pass = sandwich
        && right.right_pass
        && left.left_pass
        && natural.as_ref().is_none_or(|v| v.combined_pass);
    Ok(SandwichVerdict {
        sandwich,
        right,
        left,
        limit_ks,
        equal_in_law,
        natural,
        pass,
    })
}
