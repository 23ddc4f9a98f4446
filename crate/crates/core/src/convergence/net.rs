use serde::Serialize;

use crate::convergence::sequence::StageFn;
use crate::convex::OracleOptions;
use crate::exec::{self, Execution};
use crate::{Error, Result};

/// A finite product-ordered index set `{1..s_1} x ... x {1..s_d}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NetGrid {
    pub shape: Vec<usize>,
    /// All indices, lexicographic, 1-based.
    pub indices: Vec<Vec<usize>>,
    /// `(min(t, s_1), ..., min(t, s_d))` for `t = 1, 2, ...`, without
    /// repeats; it ends at the top element, so it is cofinal.
    pub chain: Vec<Vec<usize>>,
}

impl NetGrid {
    pub fn leq(a: &[usize], b: &[usize]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x <= y)
    }

    /// Componentwise maximum, an upper bound of both indices.
    pub fn upper_bound(a: &[usize], b: &[usize]) -> Vec<usize> {
        a.iter().zip(b).map(|(x, y)| *x.max(y)).collect()
    }

    /// Indices `beta >= alpha`.
    pub fn tail<'a>(&'a self, alpha: &'a [usize]) -> impl Iterator<Item = &'a Vec<usize>> + 'a {
        self.indices.iter().filter(move |b| Self::leq(alpha, b))
    }
}

/// Enumerate the product grid of the given shape.
pub fn net_stage_grid(shape: &[usize]) -> Result<NetGrid> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::GridMismatch(format!("invalid net shape {shape:?}")));
    }
    let mut indices = vec![Vec::new()];
    for &s in shape {
        indices = indices
            .into_iter()
            .flat_map(|prefix| {
                (1..=s).map(move |i| {
                    let mut v = prefix.clone();
                    v.push(i);
                    v
                })
            })
            .collect();
    }
    let top = *shape.iter().max().expect("non-empty shape");
    let mut chain: Vec<Vec<usize>> = Vec::new();
    for t in 1..=top {
        let alpha: Vec<usize> = shape.iter().map(|&s| t.min(s)).collect();
        if chain.last() != Some(&alpha) {
            chain.push(alpha);
        }
    }
    Ok(NetGrid {
        shape: shape.to_vec(),
        indices,
        chain,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetChainRecord {
    pub alpha: Vec<usize>,
    /// `min sigma(f_beta)` over `beta >= alpha`.
    pub tail_inf_sigma: f64,
    /// `max tau(f_beta)` over `beta >= alpha`.
    pub tail_sup_tau: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetReport {
    pub grid: NetGrid,
    pub chain: Vec<NetChainRecord>,
    pub limit_sigma: f64,
    pub limit_tau: f64,
    pub tol: f64,
    /// Tail infima of `sigma` are `>= sigma(f) - tol` at the top of the chain.
    pub lower_sigma: bool,
    /// Tail suprema of `tau` are `<= tau(f) + tol` at the top of the chain.
    pub upper_tau: bool,
}

/// Tail infima of `sigma` and suprema of `tau` along the cofinal chain of a
/// finite net stage grid.
pub fn net_semicontinuity<G>(
    shape: &[usize],
    generator: G,
    limit: &StageFn,
    tol: f64,
    exec: Execution,
) -> Result<NetReport>
where
    G: Fn(&[usize]) -> Result<StageFn> + Sync + Send,
{
    let grid = net_stage_grid(shape)?;
    let opts = OracleOptions::default();
    let bisect_tol = 1e-10;
    let lim = limit.argmin(bisect_tol, &opts)?;
    let values = exec::try_map_indexed(exec, grid.indices.len(), |i| {
        let f = generator(&grid.indices[i])?;
        let a = f.argmin(bisect_tol, &opts)?;
        Ok::<_, Error>((a.sigma, a.tau))
    })?;
    let chain: Vec<NetChainRecord> = grid
        .chain
        .iter()
        .map(|alpha| {
            let (mut s, mut t) = (f64::INFINITY, f64::NEG_INFINITY);
            for (idx, v) in grid.indices.iter().zip(&values) {
                if NetGrid::leq(alpha, idx) {
                    s = s.min(v.0);
                    t = t.max(v.1);
                }
            }
            NetChainRecord {
                alpha: alpha.clone(),
                tail_inf_sigma: s,
                tail_sup_tau: t,
            }
        })
        .collect();
    let top = chain.last().expect("non-empty chain");
    let lower_sigma = top.tail_inf_sigma >= lim.sigma - tol;
    let upper_tau = top.tail_sup_tau <= lim.tau + tol;
    Ok(NetReport {
        grid,
        chain,
        limit_sigma: lim.sigma,
        limit_tau: lim.tau,
        tol,
        lower_sigma,
        upper_tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::ConvexOracle;

    #[test]
    fn sequence_case() {
        let g = net_stage_grid(&[3]).unwrap();
        assert_eq!(g.chain, vec![vec![1], vec![2], vec![3]]);
        assert_eq!(g.indices.len(), 3);
    }

    #[test]
    fn product_order() {
        let g = net_stage_grid(&[2, 2]).unwrap();
        assert_eq!(
            g.indices,
            vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]
        );
        assert_eq!(g.chain, vec![vec![1, 1], vec![2, 2]]);
        assert!(NetGrid::leq(&[1, 1], &[1, 2]));
        assert!(NetGrid::leq(&[1, 2], &[2, 2]));
        assert!(!NetGrid::leq(&[1, 2], &[2, 1]));
        assert!(!NetGrid::leq(&[2, 1], &[1, 2]));
        assert_eq!(NetGrid::upper_bound(&[1, 2], &[2, 1]), vec![2, 2]);
        assert_eq!(g.tail(&[1, 2]).count(), 2);
        assert!(net_stage_grid(&[2, 0]).is_err());
    }

    #[test]
    fn uneven_shape_chain_is_cofinal() {
        let g = net_stage_grid(&[2, 4]).unwrap();
        assert_eq!(g.chain.last().unwrap(), &vec![2, 4]);
        assert!(g
            .indices
            .iter()
            .all(|i| NetGrid::leq(i, g.chain.last().unwrap())));
    }

    #[test]
    fn shifted_parabola_net() {
        let limit = StageFn::Oracle(
            ConvexOracle::new(|t| t * t)
                .with_bracket(-1.0, 3.0)
                .unwrap(),
        );
        let r = net_semicontinuity(
            &[8, 8],
            |ij| {
                let c = 1.0 / ij[0] as f64 + 1.0 / ij[1] as f64;
                Ok(StageFn::Oracle(
                    ConvexOracle::new(move |t| (t - c) * (t - c)).with_bracket(-1.0, 3.0)?,
                ))
            },
            &limit,
            1e-6,
            Execution::Sequential,
        )
        .unwrap();
        assert!(r.lower_sigma);
        let infs: Vec<f64> = r.chain.iter().map(|c| c.tail_inf_sigma).collect();
        assert!(infs.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        // difference quotients resolve a smooth minimizer to about sqrt(eps)
        assert!((infs[infs.len() - 1] - 0.25).abs() < 1e-6, "{infs:?}");
        let sups: Vec<f64> = r.chain.iter().map(|c| c.tail_sup_tau).collect();
        assert!(sups.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }
}
