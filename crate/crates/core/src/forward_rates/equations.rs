//! Rates that make the mixture curve solve the forward equations.
//!
//! At each node `T` the unknowns `m_lk` satisfy, for every `j != k`,
//! `d/dT P_jk = sum_{l != k} P_jl m_lk - P_jk sum_{l != k} m_kl`.
//! For decrement models the system is triangular after a topological
//! reordering of the states; otherwise it is solved in the least-squares
//! sense and the residual is reported.

use nalgebra::{DMatrix, DVector};

use super::{Definition, ForwardRateCurve};
use crate::error::{Error, Result};
use crate::kolmogorov::{MixtureCurve, OCCUPANCY_FLOOR};
use crate::model_graph::ModelGraph;

/// Dense solves with a residual norm above this are flagged.
pub const DENSE_RESIDUAL_FLAG: f64 = 1e-8;

/// Triangular back-substitution for decrement models, dense least squares
/// otherwise.
pub fn equations_rates(oracle: &MixtureCurve, graph: &ModelGraph) -> Result<ForwardRateCurve> {
    check_states(oracle, graph)?;
    match graph.check_decrement().ordering {
        Some(order) => equations_rates_triangular(oracle, &order),
        None => equations_rates_dense(oracle),
    }
}

fn check_states(oracle: &MixtureCurve, graph: &ModelGraph) -> Result<()> {
    if oracle.num_states() != graph.num_states() {
        return Err(Error::GridMismatch(format!(
            "curve has {} states, model has {}",
            oracle.num_states(),
            graph.num_states()
        )));
    }
    Ok(())
}

/// `sum_{j != k} (d/dT P_jk - sum_{l != k} P_jl m_lk + P_jk sum_{l != k} m_kl)^2`,
/// square-rooted, at one node; `m` is `n * n` row-major.
fn residual_norm(oracle: &MixtureCurve, node: usize, m: &[f64]) -> f64 {
    let n = oracle.num_states();
    let mut sq = 0.0;
    for j in 0..n {
        for k in (0..n).filter(|&k| k != j) {
            let mut rhs = 0.0;
            for l in (0..n).filter(|&l| l != k) {
                rhs += oracle.probability(node, j, l) * m[l * n + k]
                    - oracle.probability(node, j, k) * m[k * n + l];
            }
            let r = oracle.derivative(node, j, k) - rhs;
            sq += r * r;
        }
    }
    sq.sqrt()
}

/// Back-substitution in the state order `order` (every transition must go
/// forward in it). Rates backwards in the order are 0.
///
/// In reordered indices, for `a < b`:
/// `m_ab = (P'_ab - sum_{a<l<b} P_al m_lb + P_ab sum_{l>b} m_bl) / P_aa`,
/// evaluated for `a` descending.
pub fn equations_rates_triangular(oracle: &MixtureCurve, order: &[usize]) -> Result<ForwardRateCurve> {
    let n = oracle.num_states();
    if order.len() != n {
        return Err(Error::InvalidModel("ordering does not cover the states".into()));
    }
    let grid = *oracle.grid();
    let mut values = Vec::with_capacity(grid.len() * n * n);
    let mut residual = Vec::with_capacity(grid.len());
    let mut m = vec![0.0; n * n];
    for node in 0..grid.len() {
        m.fill(0.0);
        let p = |a: usize, b: usize| oracle.probability(node, order[a], order[b]);
        for a in (0..n).rev() {
            let paa = p(a, a);
            if a + 1 < n && paa < OCCUPANCY_FLOOR {
                return Err(Error::Singular {
                    state: order[a],
                    time: grid.node(node),
                    value: paa,
                });
            }
            for b in a + 1..n {
                let (sa, sb) = (order[a], order[b]);
                let mut num = oracle.derivative(node, sa, sb);
                for l in a + 1..b {
                    num -= p(a, l) * m[order[l] * n + sb];
                }
                let out_of_b: f64 = (b + 1..n).map(|l| m[sb * n + order[l]]).sum();
                num += p(a, b) * out_of_b;
                m[sa * n + sb] = num / paa;
            }
        }
        residual.push(residual_norm(oracle, node, &m));
        values.extend(m.iter().map(|v| Some(*v)));
    }
    ForwardRateCurve::new(Definition::Equations, grid, n, None, values, Some(residual))
}

/// Least-squares solution via SVD of the full `n(n-1)` by `n(n-1)` system.
pub fn equations_rates_dense(oracle: &MixtureCurve) -> Result<ForwardRateCurve> {
    let n = oracle.num_states();
    let grid = *oracle.grid();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| (0..n).filter(move |&k| k != j).map(move |k| (j, k)))
        .collect();
    let unknown = |a: usize, b: usize| pairs.iter().position(|&p| p == (a, b)).expect("off-diagonal");
    let dim = pairs.len();
    let mut values = Vec::with_capacity(grid.len() * n * n);
    let mut residual = Vec::with_capacity(grid.len());
    for node in 0..grid.len() {
        let mut a = DMatrix::<f64>::zeros(dim, dim);
        let mut rhs = DVector::<f64>::zeros(dim);
        for (row, &(j, k)) in pairs.iter().enumerate() {
            rhs[row] = oracle.derivative(node, j, k);
            let pjk = oracle.probability(node, j, k);
            for l in (0..n).filter(|&l| l != k) {
                a[(row, unknown(l, k))] += oracle.probability(node, j, l);
                a[(row, unknown(k, l))] -= pjk;
            }
        }
        let svd = a.clone().svd(true, true);
        let x = svd
            .solve(&rhs, 1e-13 * svd.singular_values.max())
            .map_err(|e| Error::Unsupported(format!("least-squares solve failed: {e}")))?;
        let mut m = vec![0.0; n * n];
        for (i, &(j, k)) in pairs.iter().enumerate() {
            m[j * n + k] = x[i];
        }
        residual.push((&a * &x - &rhs).norm());
        values.extend(m.iter().map(|v| Some(*v)));
    }
    ForwardRateCurve::new(Definition::Equations, grid, n, None, values, Some(residual))
}

/// Size and rank of the system obtained when only the equations for a single
/// starting state are imposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingleStateSystemRank {
    pub unknowns: usize,
    pub equations: usize,
    pub rank: usize,
}

impl SingleStateSystemRank {
    pub fn is_deficient(&self) -> bool {
        self.rank < self.unknowns
    }
}

/// Rank of the single-starting-state system at `node`: `n - 1` equations
/// in the `n(n - 1)` rates, so the rates are never pinned down for `n > 2`.
pub fn single_state_system_rank(oracle: &MixtureCurve, j: usize, node: usize) -> SingleStateSystemRank {
    let n = oracle.num_states();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();
    let rows: Vec<usize> = (0..n).filter(|&k| k != j).collect();
    let mut a = DMatrix::<f64>::zeros(rows.len(), pairs.len());
    for (row, &k) in rows.iter().enumerate() {
        for (col, &(x, y)) in pairs.iter().enumerate() {
            if y == k {
                a[(row, col)] += oracle.probability(node, j, x);
            }
            if x == k {
                a[(row, col)] -= oracle.probability(node, j, k);
            }
        }
    }
    let svd = a.svd(false, false);
    let tol = 1e-12 * svd.singular_values.max().max(1.0);
    SingleStateSystemRank {
        unknowns: pairs.len(),
        equations: rows.len(),
        rank: svd.rank(tol),
    }
}
