//! Forward transition rates: deterministic rates that stand in for stochastic
//! intensities when valuating with classic Markov machinery.
//!
//! Three definitions are provided:
//!
//! * marginal: `m_jk = -d/dT log E[exp(-\int mu_jk) | F_t]`, per transition,
//!   ignoring the rest of the model;
//! * equations: the rates that make the mixture curve solve the forward
//!   equations from every starting state;
//! * statewise: `E[1(X_T = k) mu_kl(T) | X_t = j, F_t] / E[1(X_T = k) | ...]`,
//!   which depends on the current state `j`.

mod equations;
mod repair;
pub(crate) mod verify;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use equations::{
    equations_rates, equations_rates_dense, equations_rates_triangular, single_state_system_rank,
    SingleStateSystemRank, DENSE_RESIDUAL_FLAG,
};
pub use repair::{repair_model, RepairedModel};
pub use verify::{verify_replacement, ReplacementReport};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::kolmogorov::{restriction_indices, MixtureCurve, SampledRates};
use crate::model_graph::ModelGraph;
use crate::rate_scenarios::IntensityLaw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Definition {
    Marginal,
    Equations,
    Statewise,
}

impl Definition {
    pub const ALL: [Definition; 3] = [Definition::Marginal, Definition::Equations, Definition::Statewise];

    pub fn name(self) -> &'static str {
        match self {
            Definition::Marginal => "marginal",
            Definition::Equations => "equations",
            Definition::Statewise => "statewise",
        }
    }
}

impl fmt::Display for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Definition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "marginal" => Ok(Definition::Marginal),
            "equations" => Ok(Definition::Equations),
            "statewise" => Ok(Definition::Statewise),
            other => Err(Error::Parse(format!(
                "unknown definition '{other}' (expected marginal, equations or statewise)"
            ))),
        }
    }
}

/// Forward rates `m_kl(t, T)` for every ordered pair `k != l` on a grid.
///
/// Nodes where a statewise rate is undefined (zero occupancy) are kept as
/// explicit gaps; [`ForwardRateCurve::value_or_zero`] reads them as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardRateCurve {
    pub definition: Definition,
    pub grid: TimeGrid,
    n: usize,
    /// Starting state for statewise rates.
    pub conditioning: Option<usize>,
    values: Vec<Option<f64>>,
    /// Linear-system residual norm per node (equations rates only).
    pub residual: Option<Vec<f64>>,
}

impl ForwardRateCurve {
    pub fn new(
        definition: Definition,
        grid: TimeGrid,
        n: usize,
        conditioning: Option<usize>,
        values: Vec<Option<f64>>,
        residual: Option<Vec<f64>>,
    ) -> Result<Self> {
        if values.len() != grid.len() * n * n {
            return Err(Error::GridMismatch(format!(
                "{} rate values for {} nodes of {n} states",
                values.len(),
                grid.len()
            )));
        }
        if let Some(r) = &residual {
            if r.len() != grid.len() {
                return Err(Error::GridMismatch("residual length differs from grid".into()));
            }
        }
        if (definition == Definition::Statewise) != conditioning.is_some() {
            return Err(Error::InvalidModel(
                "exactly the statewise definition carries a conditioning state".into(),
            ));
        }
        Ok(Self {
            definition,
            grid,
            n,
            conditioning,
            values,
            residual,
        })
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    /// `m_kl` at `node`, `None` where undefined. Diagonal entries are `Some(0)`.
    pub fn get(&self, node: usize, k: usize, l: usize) -> Option<f64> {
        self.values[(node * self.n + k) * self.n + l]
    }

    pub fn value_or_zero(&self, node: usize, k: usize, l: usize) -> f64 {
        self.get(node, k, l).unwrap_or(0.0)
    }

    /// Values of one pair over all nodes.
    pub fn series(&self, k: usize, l: usize) -> Vec<Option<f64>> {
        (0..self.grid.len()).map(|i| self.get(i, k, l)).collect()
    }

    pub fn undefined_nodes(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// Dense `n * n` per node table with gaps read as 0.
    pub fn table(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.unwrap_or(0.0)).collect()
    }

    /// These rates as an input to the forward solver.
    pub fn to_rates(&self) -> Result<SampledRates> {
        SampledRates::shared(self.grid, self.n, self.table())
    }

    /// Keep only the nodes of `coarse`.
    pub fn restrict(&self, coarse: &TimeGrid) -> Result<Self> {
        let idx = restriction_indices(&self.grid, coarse)?;
        let nn = self.n * self.n;
        let mut values = Vec::with_capacity(idx.len() * nn);
        for &i in &idx {
            values.extend_from_slice(&self.values[i * nn..(i + 1) * nn]);
        }
        let residual = self
            .residual
            .as_ref()
            .map(|r| idx.iter().map(|&i| r[i]).collect());
        Self::new(self.definition, *coarse, self.n, self.conditioning, values, residual)
    }

    /// Largest `|m_kl - other_kl|` over pairs and nodes where both are
    /// defined. Grids must be identical.
    pub fn max_abs_diff(&self, other: &ForwardRateCurve) -> Result<f64> {
        if self.grid != other.grid || self.n != other.n {
            return Err(Error::GridMismatch("rate curves on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .filter_map(|(a, b)| Some((a.as_ref()? - b.as_ref()?).abs()))
            .fold(0.0, f64::max))
    }

    /// Largest `|m_kl - value|` for one pair over the defined nodes.
    pub fn max_pair_diff(&self, k: usize, l: usize, other: &ForwardRateCurve, ok: usize, ol: usize) -> f64 {
        (0..self.grid.len())
            .filter_map(|i| Some((self.get(i, k, l)? - other.get(i, ok, ol)?).abs()))
            .fold(0.0, f64::max)
    }
}

/// Candidate rates handed to the forward solver: one curve for all starting
/// states, or one per starting state.
#[derive(Debug, Clone, Copy)]
pub enum CandidateRates<'a> {
    Shared(&'a ForwardRateCurve),
    PerState(&'a StatewiseFamily),
}

impl<'a> CandidateRates<'a> {
    pub fn for_state(&self, j: usize) -> &'a ForwardRateCurve {
        match *self {
            CandidateRates::Shared(c) => c,
            CandidateRates::PerState(f) => f.get(j),
        }
    }

    pub fn to_rates(&self) -> Result<SampledRates> {
        match self {
            CandidateRates::Shared(c) => c.to_rates(),
            CandidateRates::PerState(f) => f.to_rates(),
        }
    }

    pub fn definition(&self) -> Definition {
        self.for_state(0).definition
    }
}

/// Statewise rates for every starting state.
#[derive(Debug, Clone)]
pub struct StatewiseFamily {
    pub curves: Vec<ForwardRateCurve>,
}

impl StatewiseFamily {
    pub fn compute(oracle: &MixtureCurve) -> Result<Self> {
        let curves = (0..oracle.num_states())
            .map(|j| statewise_rates(oracle, j))
            .collect::<Result<_>>()?;
        Ok(Self { curves })
    }

    pub fn get(&self, j: usize) -> &ForwardRateCurve {
        &self.curves[j]
    }

    /// Per-starting-state rates as an input to the forward solver.
    pub fn to_rates(&self) -> Result<SampledRates> {
        let first = &self.curves[0];
        SampledRates::per_state(
            first.grid,
            first.num_states(),
            self.curves.iter().map(ForwardRateCurve::table).collect(),
        )
    }
}

/// Ratio of the weighted-terminal and survival transforms of each modelled
/// transition; pairs without an intensity get rate 0.
pub fn marginal_rates(law: &IntensityLaw, graph: &ModelGraph, grid: &TimeGrid) -> Result<ForwardRateCurve> {
    let n = graph.num_states();
    let mut values = vec![Some(0.0); grid.len() * n * n];
    for (j, k) in law.transitions() {
        if !graph.has_transition(j, k) {
            return Err(Error::InvalidModel(format!(
                "intensity {j}->{k} is not a transition of the model"
            )));
        }
        let surv = law.survival_curve(&[(j, k)], grid)?;
        let weighted = law.weighted_terminal_curve(&[(j, k)], (j, k), grid)?;
        for (node, (s, w)) in surv.iter().zip(&weighted).enumerate() {
            if !(*s > 0.0) {
                return Err(Error::Riccati(format!(
                    "survival transform of {j}->{k} vanished at T = {}",
                    grid.node(node)
                )));
            }
            values[(node * n + j) * n + k] = Some(w / s);
        }
    }
    ForwardRateCurve::new(Definition::Marginal, *grid, n, None, values, None)
}

/// `D_jkl / P_jk` for starting state `j`; undefined where
/// `P_jk <= OCCUPANCY_FLOOR`.
pub fn statewise_rates(oracle: &MixtureCurve, j: usize) -> Result<ForwardRateCurve> {
    let n = oracle.num_states();
    if j >= n {
        return Err(Error::InvalidModel(format!("conditioning state {j} out of range")));
    }
    let grid = *oracle.grid();
    let mut values = Vec::with_capacity(grid.len() * n * n);
    for node in 0..grid.len() {
        for k in 0..n {
            for l in 0..n {
                values.push(if k == l {
                    Some(0.0)
                } else {
                    oracle.statewise(node, j, k, l)
                });
            }
        }
    }
    ForwardRateCurve::new(Definition::Statewise, grid, n, Some(j), values, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate_scenarios::{PosteriorWeights, ScenarioSet};
    use crate::time_fn::TimeFunction;

    fn c(v: f64) -> TimeFunction {
        TimeFunction::constant(v)
    }

    fn survival() -> (ModelGraph, IntensityLaw, MixtureCurve, TimeGrid) {
        let graph = ModelGraph::new(vec!["alive", "dead"], vec![(0, 1)]).unwrap();
        let set = ScenarioSet::new(vec![(0, 1)], vec![vec![c(0.1)], vec![c(0.3)]], vec![0.5, 0.5]).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 0.01).unwrap();
        let w = PosteriorWeights::from_prior(&set, 0.0);
        let oracle = MixtureCurve::from_scenarios(2, &set, &w, &grid).unwrap();
        (graph, IntensityLaw::from_prior(set, 0.0), oracle, grid)
    }

    #[test]
    fn definition_round_trips_through_text() {
        for d in Definition::ALL {
            assert_eq!(d.name().parse::<Definition>().unwrap(), d);
        }
        assert!("other".parse::<Definition>().is_err());
    }

    #[test]
    fn marginal_survival_mixture() {
        let (graph, law, _, grid) = survival();
        let m = marginal_rates(&law, &graph, &grid).unwrap();
        let exact = 0.5 * (0.1 * (-0.1f64).exp() + 0.3 * (-0.3f64).exp())
            / (0.5 * ((-0.1f64).exp() + (-0.3f64).exp()));
        assert!((m.get(100, 0, 1).unwrap() - exact).abs() < 1e-14);
        assert!((exact - 0.1900333).abs() < 1e-6);
        assert!((m.get(0, 0, 1).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(m.get(50, 1, 0), Some(0.0));
    }

    #[test]
    fn statewise_survival_mixture_and_gaps() {
        let (_, _, oracle, _) = survival();
        let s0 = statewise_rates(&oracle, 0).unwrap();
        let exact = 0.5 * (0.1 * (-0.1f64).exp() + 0.3 * (-0.3f64).exp())
            / (0.5 * ((-0.1f64).exp() + (-0.3f64).exp()));
        assert!((s0.get(100, 0, 1).unwrap() - exact).abs() < 1e-9);
        // started dead: state 0 never occupied
        let s1 = statewise_rates(&oracle, 1).unwrap();
        assert_eq!(s1.get(10, 0, 1), None);
        assert_eq!(s1.value_or_zero(10, 0, 1), 0.0);
        assert_eq!(s1.get(10, 1, 0), Some(0.0));
    }

    #[test]
    fn deterministic_statewise_equals_intensity() {
        let set = ScenarioSet::deterministic(
            vec![(0, 1), (1, 0), (1, 2)],
            vec![c(0.2), TimeFunction::gompertz_makeham(0.0, 0.001, 0.05, 30.0), c(0.05)],
        )
        .unwrap();
        let grid = TimeGrid::new(0.0, 3.0, 0.01).unwrap();
        let oracle =
            MixtureCurve::from_scenarios(3, &set, &PosteriorWeights::from_prior(&set, 0.0), &grid).unwrap();
        for j in 0..2 {
            let s = statewise_rates(&oracle, j).unwrap();
            for node in 1..grid.len() {
                let tt = grid.node(node);
                assert!((s.get(node, 0, 1).unwrap() - 0.2).abs() < 1e-12);
                assert!((s.get(node, 1, 0).unwrap() - 0.001 * (0.05 * (30.0 + tt)).exp()).abs() < 1e-12);
                assert_eq!(s.get(node, 0, 2), Some(0.0));
            }
        }
    }

    #[test]
    fn curve_shape_is_checked() {
        let grid = TimeGrid::new(0.0, 1.0, 0.5).unwrap();
        assert!(ForwardRateCurve::new(Definition::Marginal, grid, 2, None, vec![Some(0.0); 11], None).is_err());
        assert!(ForwardRateCurve::new(Definition::Marginal, grid, 2, Some(0), vec![Some(0.0); 12], None).is_err());
    }
}
