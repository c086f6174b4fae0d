//! Checks whether candidate forward rates can replace the stochastic
//! intensities in the forward equations.

use super::CandidateRates;
use crate::error::Result;
use crate::grid::TimeGrid;
use crate::kolmogorov::{restriction_indices, solve_forward, MixtureCurve, TransitionCurve};

/// Maximum absolute errors of the replacement identities for one starting
/// state, measured on the nodes of the re-solve grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplacementReport {
    pub conditioning: usize,
    /// `max |P^m_jk - P_jk|` over `k` and nodes, with `P^m` the forward
    /// solution under the candidate rates.
    pub occupancy_error: f64,
    /// `max |P^m_jk m_kl - D_jkl|` over `k != l` and nodes.
    pub density_error: f64,
    /// `max |sum_l (P^m_jl m_lk - P^m_jk m_kl) - d/dT P_jk|`: inflow minus
    /// outflow under the candidate rates against the exact net change.
    pub net_flux_error: f64,
}

impl ReplacementReport {
    pub fn occupancy_holds(&self, tol: f64) -> bool {
        self.occupancy_error <= tol
    }

    pub fn density_holds(&self, tol: f64) -> bool {
        self.density_error <= tol
    }
}

/// Re-solve the forward equations on `coarse` with `rates` (tabulated on the
/// oracle grid) and compare against the oracle for starting state `j`.
///
/// `coarse` must have twice the step of the oracle grid so that every RK4
/// stage evaluates the rates on a tabulated node.
pub fn verify_replacement(
    oracle: &MixtureCurve,
    rates: CandidateRates<'_>,
    coarse: &TimeGrid,
    j: usize,
) -> Result<ReplacementReport> {
    let resolved = solve_forward(&rates.to_rates()?, coarse)?;
    compare(oracle, rates, &resolved, j)
}

/// As [`verify_replacement`] with an already re-solved curve.
pub(crate) fn compare(
    oracle: &MixtureCurve,
    rates: CandidateRates<'_>,
    resolved: &TransitionCurve,
    j: usize,
) -> Result<ReplacementReport> {
    let n = oracle.num_states();
    let curve = rates.for_state(j);
    let idx = restriction_indices(oracle.grid(), resolved.grid())?;
    let (mut occ, mut dens, mut flux) = (0.0f64, 0.0f64, 0.0f64);
    for (ci, &fi) in idx.iter().enumerate() {
        for k in 0..n {
            let pm = resolved.get(ci, j, k);
            occ = occ.max((pm - oracle.probability(fi, j, k)).abs());
            let mut net = 0.0;
            for l in (0..n).filter(|&l| l != k) {
                let m_kl = curve.value_or_zero(fi, k, l);
                dens = dens.max((pm * m_kl - oracle.density(fi, j, k, l)).abs());
                net += resolved.get(ci, j, l) * curve.value_or_zero(fi, l, k) - pm * m_kl;
            }
            flux = flux.max((net - oracle.derivative(fi, j, k)).abs());
        }
    }
    Ok(ReplacementReport {
        conditioning: j,
        occupancy_error: occ,
        density_error: dens,
        net_flux_error: flux,
    })
}
