//! Laws of the stochastic intensity process.
//!
//! Two representations are supported. A [`ScenarioSet`] is a finite mixture of
//! deterministic intensity paths; conditioning on the intensities observed up
//! to time `t` is exact Bayesian elimination of the scenarios that disagree
//! with the observed one. An [`AffineSpec`] drives the intensities by CIR
//! factors and evaluates transforms through Riccati equations.

pub mod affine;

use serde::{Deserialize, Serialize};

pub use affine::{AffineIntensity, AffineSpec, CirFactor, RiccatiSolution};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::model_graph::{ModelGraph, Transition};
use crate::time_fn::TimeFunction;

/// Sup-norm distance over grid nodes below which two paths count as equal.
pub const PATH_AGREEMENT_TOL: f64 = 1e-9;

/// Finite set of intensity path bundles with prior probabilities.
///
/// Every scenario carries one path per entry of `transitions`; transitions not
/// listed have zero intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    transitions: Vec<Transition>,
    scenarios: Vec<Vec<TimeFunction>>,
    prior: Vec<f64>,
}

impl ScenarioSet {
    pub fn new(
        transitions: Vec<Transition>,
        scenarios: Vec<Vec<TimeFunction>>,
        prior: Vec<f64>,
    ) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(Error::InvalidScenarios("no scenarios".into()));
        }
        if prior.len() != scenarios.len() {
            return Err(Error::InvalidScenarios(format!(
                "{} weights for {} scenarios",
                prior.len(),
                scenarios.len()
            )));
        }
        if prior.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidScenarios("weights must be nonnegative".into()));
        }
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidScenarios(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        for (i, s) in scenarios.iter().enumerate() {
            if s.len() != transitions.len() {
                return Err(Error::InvalidScenarios(format!(
                    "scenario {i} has {} paths for {} transitions",
                    s.len(),
                    transitions.len()
                )));
            }
            for f in s {
                f.validate()?;
            }
        }
        let mut sorted = transitions.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != transitions.len() {
            return Err(Error::InvalidScenarios("duplicate transition".into()));
        }
        Ok(Self {
            transitions,
            scenarios,
            prior,
        })
    }

    /// Single deterministic scenario.
    pub fn deterministic(transitions: Vec<Transition>, paths: Vec<TimeFunction>) -> Result<Self> {
        Self::new(transitions, vec![paths], vec![1.0])
    }

    /// All combinations of independent per-transition marginal mixtures.
    ///
    /// `marginals[i]` lists `(path, probability)` for `transitions[i]`; the
    /// resulting scenarios make the transitions mutually independent.
    pub fn product(
        transitions: Vec<Transition>,
        marginals: Vec<Vec<(TimeFunction, f64)>>,
    ) -> Result<Self> {
        if marginals.len() != transitions.len() {
            return Err(Error::InvalidScenarios(
                "one marginal mixture per transition required".into(),
            ));
        }
        let mut scenarios: Vec<(Vec<TimeFunction>, f64)> = vec![(Vec::new(), 1.0)];
        for m in &marginals {
            let mut next = Vec::with_capacity(scenarios.len() * m.len());
            for (paths, w) in &scenarios {
                for (f, p) in m {
                    let mut paths = paths.clone();
                    paths.push(f.clone());
                    next.push((paths, w * p));
                }
            }
            scenarios = next;
        }
        let (paths, weights): (Vec<_>, Vec<_>) = scenarios.into_iter().unzip();
        Self::new(transitions, paths, weights)
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn paths(&self, scenario: usize) -> &[TimeFunction] {
        &self.scenarios[scenario]
    }

    pub fn intensity(&self, scenario: usize, from: usize, to: usize) -> Option<&TimeFunction> {
        self.transitions
            .iter()
            .position(|&p| p == (from, to))
            .map(|i| &self.scenarios[scenario][i])
    }

    pub fn rate(&self, scenario: usize, from: usize, to: usize, s: f64) -> f64 {
        self.intensity(scenario, from, to).map_or(0.0, |f| f.value(s))
    }

    /// `\int_t^T sum_{pairs} mu^{(i)}` in closed form.
    pub fn cumulative(&self, scenario: usize, pairs: &[Transition], t: f64, maturity: f64) -> f64 {
        pairs
            .iter()
            .filter_map(|&(j, k)| self.intensity(scenario, j, k))
            .map(|f| f.integral(t, maturity))
            .sum()
    }

    /// Transitions must be edges of `graph`; paths nonnegative on the grid span.
    pub fn validate_on(&self, graph: &ModelGraph, grid: &TimeGrid) -> Result<()> {
        for &(j, k) in &self.transitions {
            if !graph.has_transition(j, k) {
                return Err(Error::InvalidScenarios(format!(
                    "intensity given for {j}->{k}, which is not a transition of the model"
                )));
            }
        }
        for (i, s) in self.scenarios.iter().enumerate() {
            for (f, &(j, k)) in s.iter().zip(&self.transitions) {
                let lo = f.inf_on(grid.t0(), grid.last());
                if lo < 0.0 {
                    return Err(Error::InvalidScenarios(format!(
                        "scenario {i}: intensity {j}->{k} reaches {lo} < 0"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Keep only `pairs`, optionally relabelled through `relabel`.
    pub fn project(&self, pairs: &[(Transition, Transition)]) -> Result<Self> {
        let transitions = pairs.iter().map(|p| p.1).collect();
        let scenarios = (0..self.len())
            .map(|i| {
                pairs
                    .iter()
                    .map(|(src, _)| {
                        self.intensity(i, src.0, src.1)
                            .cloned()
                            .unwrap_or_else(TimeFunction::zero)
                    })
                    .collect()
            })
            .collect();
        Self::new(transitions, scenarios, self.prior.clone())
    }
}

/// Scenario weights conditional on the intensities observed up to `time`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorWeights {
    pub time: f64,
    pub weights: Vec<f64>,
}

impl PosteriorWeights {
    /// Treat the prior itself as the conditional law at `time`.
    pub fn from_prior(set: &ScenarioSet, time: f64) -> Self {
        Self {
            time,
            weights: set.prior.clone(),
        }
    }
}

/// Eliminate every scenario whose paths differ from those of `observed` on
/// `[0, t]` (sup-norm over nodes spaced `step` apart, tolerance
/// [`PATH_AGREEMENT_TOL`]) and renormalize the surviving priors.
pub fn posterior(set: &ScenarioSet, observed: usize, t: f64, step: f64) -> Result<PosteriorWeights> {
    if observed >= set.len() {
        return Err(Error::ObservedOutOfRange {
            index: observed,
            len: set.len(),
        });
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidGrid(format!("conditioning time {t} must be >= 0")));
    }
    let nodes: Vec<f64> = if t == 0.0 {
        vec![0.0]
    } else {
        TimeGrid::new(0.0, t, step)?.nodes().collect()
    };
    let agrees = |i: usize| {
        set.scenarios[i]
            .iter()
            .zip(&set.scenarios[observed])
            .all(|(a, b)| {
                nodes
                    .iter()
                    .all(|&s| (a.value(s) - b.value(s)).abs() <= PATH_AGREEMENT_TOL)
            })
    };
    let mut weights: Vec<f64> = (0..set.len())
        .map(|i| if agrees(i) { set.prior[i] } else { 0.0 })
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidScenarios(format!(
            "observed scenario {observed} has zero prior weight"
        )));
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(PosteriorWeights { time: t, weights })
}

/// A conditional law of the intensities at the valuation time.
#[derive(Debug, Clone)]
pub enum IntensityLaw {
    Mixture {
        set: ScenarioSet,
        weights: PosteriorWeights,
    },
    Affine(AffineSpec),
}

impl IntensityLaw {
    pub fn mixture(set: ScenarioSet, weights: PosteriorWeights) -> Result<Self> {
        if weights.weights.len() != set.len() {
            return Err(Error::InvalidScenarios(format!(
                "{} posterior weights for {} scenarios",
                weights.weights.len(),
                set.len()
            )));
        }
        Ok(IntensityLaw::Mixture { set, weights })
    }

    /// Mixture conditioned on nothing beyond the prior.
    pub fn from_prior(set: ScenarioSet, t: f64) -> Self {
        let weights = PosteriorWeights::from_prior(&set, t);
        IntensityLaw::Mixture { set, weights }
    }

    pub fn transitions(&self) -> Vec<Transition> {
        match self {
            IntensityLaw::Mixture { set, .. } => set.transitions().to_vec(),
            IntensityLaw::Affine(spec) => spec.transitions(),
        }
    }

    pub fn validate_on(&self, graph: &ModelGraph, grid: &TimeGrid) -> Result<()> {
        match self {
            IntensityLaw::Mixture { set, .. } => set.validate_on(graph, grid),
            IntensityLaw::Affine(spec) => {
                spec.validate()?;
                for i in &spec.intensities {
                    if !graph.has_transition(i.from, i.to) {
                        return Err(Error::InvalidAffine(format!(
                            "intensity given for {}->{}, which is not a transition of the model",
                            i.from, i.to
                        )));
                    }
                    if i.shift.inf_on(grid.t0(), grid.last()) < 0.0 {
                        return Err(Error::InvalidAffine(format!(
                            "deterministic part of {}->{} is negative",
                            i.from, i.to
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// `E[exp(-\int_(t,T] sum_{pairs} mu(s) ds) | F_t]`.
    ///
    /// `step` is the Riccati step for affine laws; mixtures are closed form.
    pub fn survival_transform(&self, pairs: &[Transition], t: f64, maturity: f64, step: f64) -> Result<f64> {
        if maturity <= t {
            return Err(Error::EmptyHorizon { t, maturity });
        }
        match self {
            IntensityLaw::Mixture { set, weights } => Ok(weights
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w > 0.0)
                .map(|(i, w)| w * (-set.cumulative(i, pairs, t, maturity)).exp())
                .sum()),
            IntensityLaw::Affine(spec) => {
                let grid = transform_grid(t, maturity, step)?;
                Ok(*spec.survival_curve(pairs, &grid)?.last().expect("non-empty grid"))
            }
        }
    }

    /// `E[exp(-\int_(t,T] sum_{pairs} mu(s) ds) mu_terminal(T) | F_t]`.
    pub fn weighted_terminal_transform(
        &self,
        pairs: &[Transition],
        terminal: Transition,
        t: f64,
        maturity: f64,
        step: f64,
    ) -> Result<f64> {
        if maturity <= t {
            return Err(Error::EmptyHorizon { t, maturity });
        }
        match self {
            IntensityLaw::Mixture { set, weights } => Ok(weights
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w > 0.0)
                .map(|(i, w)| {
                    w * (-set.cumulative(i, pairs, t, maturity)).exp()
                        * set.rate(i, terminal.0, terminal.1, maturity)
                })
                .sum()),
            IntensityLaw::Affine(spec) => {
                let grid = transform_grid(t, maturity, step)?;
                Ok(*spec
                    .weighted_terminal_curve(pairs, terminal, &grid)?
                    .last()
                    .expect("non-empty grid"))
            }
        }
    }

    /// [`IntensityLaw::survival_transform`] at every node of `grid`
    /// (node 0, the empty integral, gives 1).
    pub fn survival_curve(&self, pairs: &[Transition], grid: &TimeGrid) -> Result<Vec<f64>> {
        match self {
            IntensityLaw::Mixture { set, weights } => {
                let t = grid.t0();
                Ok(grid
                    .nodes()
                    .map(|maturity| {
                        weights
                            .weights
                            .iter()
                            .enumerate()
                            .filter(|(_, w)| **w > 0.0)
                            .map(|(i, w)| w * (-set.cumulative(i, pairs, t, maturity)).exp())
                            .sum()
                    })
                    .collect())
            }
            IntensityLaw::Affine(spec) => spec.survival_curve(pairs, grid),
        }
    }

    /// [`IntensityLaw::weighted_terminal_transform`] at every node of `grid`.
    pub fn weighted_terminal_curve(
        &self,
        pairs: &[Transition],
        terminal: Transition,
        grid: &TimeGrid,
    ) -> Result<Vec<f64>> {
        match self {
            IntensityLaw::Mixture { set, weights } => {
                let t = grid.t0();
                Ok(grid
                    .nodes()
                    .map(|maturity| {
                        weights
                            .weights
                            .iter()
                            .enumerate()
                            .filter(|(_, w)| **w > 0.0)
                            .map(|(i, w)| {
                                w * (-set.cumulative(i, pairs, t, maturity)).exp()
                                    * set.rate(i, terminal.0, terminal.1, maturity)
                            })
                            .sum()
                    })
                    .collect())
            }
            IntensityLaw::Affine(spec) => spec.weighted_terminal_curve(pairs, terminal, grid),
        }
    }

    /// The law of the single intensity `source`, attached to `target`.
    pub fn isolate(&self, source: Transition, target: Transition) -> Result<Self> {
        match self {
            IntensityLaw::Mixture { set, weights } => Ok(IntensityLaw::Mixture {
                set: set.project(&[(source, target)])?,
                weights: weights.clone(),
            }),
            IntensityLaw::Affine(spec) => {
                let mut i = spec.intensity(source.0, source.1).cloned().unwrap_or(AffineIntensity {
                    from: source.0,
                    to: source.1,
                    shift: TimeFunction::zero(),
                    loadings: vec![0.0; spec.num_factors()],
                });
                i.from = target.0;
                i.to = target.1;
                Ok(IntensityLaw::Affine(AffineSpec::new(spec.factors.clone(), vec![i])?))
            }
        }
    }
}

/// Grid from `t` to exactly `maturity` with step at most `step`.
fn transform_grid(t: f64, maturity: f64, step: f64) -> Result<TimeGrid> {
    if !(step > 0.0) {
        return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
    }
    let n = ((maturity - t) / step).ceil().max(1.0) as usize;
    TimeGrid::with_intervals(t, (maturity - t) / n as f64, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> TimeFunction {
        TimeFunction::constant(v)
    }

    fn survival_mixture() -> IntensityLaw {
        let set = ScenarioSet::new(vec![(0, 1)], vec![vec![c(0.1)], vec![c(0.3)]], vec![0.5, 0.5])
            .unwrap();
        IntensityLaw::from_prior(set, 0.0)
    }

    #[test]
    fn posterior_keeps_indistinguishable_scenarios() {
        // identical on [0, 1], split afterwards
        let a = TimeFunction::piecewise_linear(&[(1.0, 0.1), (2.0, 0.1)]).unwrap();
        let b = TimeFunction::piecewise_linear(&[(1.0, 0.1), (2.0, 0.5)]).unwrap();
        let set = ScenarioSet::new(vec![(0, 1)], vec![vec![a], vec![b]], vec![0.5, 0.5]).unwrap();
        let p = posterior(&set, 0, 1.0, 0.01).unwrap();
        assert_eq!(p.weights, vec![0.5, 0.5]);
    }

    #[test]
    fn posterior_eliminates_disagreeing_scenario() {
        let set = ScenarioSet::new(vec![(0, 1)], vec![vec![c(0.1)], vec![c(0.3)]], vec![0.5, 0.5])
            .unwrap();
        let p = posterior(&set, 0, 1.0, 0.01).unwrap();
        assert_eq!(p.weights, vec![1.0, 0.0]);
    }

    #[test]
    fn posterior_renormalizes_survivors() {
        let set = ScenarioSet::new(
            vec![(0, 1)],
            vec![vec![c(0.1)], vec![c(0.1)], vec![c(0.2)]],
            vec![0.2, 0.3, 0.5],
        )
        .unwrap();
        let p = posterior(&set, 1, 2.0, 0.1).unwrap();
        assert!((p.weights[0] - 0.4).abs() < 1e-15);
        assert!((p.weights[1] - 0.6).abs() < 1e-15);
        assert_eq!(p.weights[2], 0.0);
    }

    #[test]
    fn posterior_at_zero_equals_prior_for_paths_distinct_only_later() {
        let a = TimeFunction::piecewise_linear(&[(0.0, 0.2), (1.0, 0.1)]).unwrap();
        let b = TimeFunction::piecewise_linear(&[(0.0, 0.2), (1.0, 0.4)]).unwrap();
        let set = ScenarioSet::new(vec![(0, 1)], vec![vec![a], vec![b]], vec![0.3, 0.7]).unwrap();
        assert_eq!(posterior(&set, 1, 0.0, 0.01).unwrap().weights, vec![0.3, 0.7]);
    }

    #[test]
    fn posterior_rejects_bad_index() {
        let set = ScenarioSet::deterministic(vec![(0, 1)], vec![c(0.1)]).unwrap();
        assert!(matches!(
            posterior(&set, 3, 1.0, 0.1),
            Err(Error::ObservedOutOfRange { index: 3, len: 1 })
        ));
    }

    #[test]
    fn scenario_weights_validated() {
        assert!(ScenarioSet::new(vec![(0, 1)], vec![vec![c(0.1)]], vec![0.9]).is_err());
        assert!(ScenarioSet::new(
            vec![(0, 1)],
            vec![vec![c(0.1)], vec![c(0.2)]],
            vec![1.2, -0.2]
        )
        .is_err());
    }

    #[test]
    fn deterministic_transform() {
        let set = ScenarioSet::deterministic(vec![(0, 1)], vec![c(0.1)]).unwrap();
        let law = IntensityLaw::from_prior(set, 0.0);
        let v = law.survival_transform(&[(0, 1)], 0.0, 1.0, 0.01).unwrap();
        assert!((v - (-0.1f64).exp()).abs() < 1e-15);
        assert!((v - 0.9048374).abs() < 1e-7);
        let w = law
            .weighted_terminal_transform(&[(0, 1)], (0, 1), 0.0, 1.0, 0.01)
            .unwrap();
        assert!((w - 0.1 * (-0.1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn mixture_transforms() {
        let law = survival_mixture();
        let v = law.survival_transform(&[(0, 1)], 0.0, 1.0, 0.01).unwrap();
        let oracle = 0.5 * ((-0.1f64).exp() + (-0.3f64).exp());
        assert!((v - oracle).abs() < 1e-15);
        assert!((v - 0.8228275).abs() < 1e-6);
        let w = law
            .weighted_terminal_transform(&[(0, 1)], (0, 1), 0.0, 1.0, 0.01)
            .unwrap();
        let oracle = 0.5 * (0.1 * (-0.1f64).exp() + 0.3 * (-0.3f64).exp());
        assert!((w - oracle).abs() < 1e-15);
        assert!((w - 0.1563646).abs() < 1e-6);
    }

    #[test]
    fn transforms_need_positive_horizon() {
        let law = survival_mixture();
        assert!(matches!(
            law.survival_transform(&[(0, 1)], 1.0, 1.0, 0.01),
            Err(Error::EmptyHorizon { .. })
        ));
    }

    fn affine_law(sigma: f64) -> IntensityLaw {
        IntensityLaw::Affine(
            AffineSpec::new(
                vec![CirFactor::new(0.8, 0.05, sigma, 0.03)],
                vec![AffineIntensity {
                    from: 0,
                    to: 1,
                    shift: TimeFunction::constant(0.002),
                    loadings: vec![1.0],
                }],
            )
            .unwrap(),
        )
    }

    #[test]
    fn affine_transform_tends_to_one_at_maturity() {
        let law = affine_law(0.1);
        let grid = TimeGrid::new(0.0, 1.0, 0.01).unwrap();
        assert_eq!(law.survival_curve(&[(0, 1)], &grid).unwrap()[0], 1.0);
        let v = law.survival_transform(&[(0, 1)], 0.0, 1e-8, 0.01).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn affine_vanishing_volatility_matches_deterministic_path() {
        let grid = TimeGrid::new(0.0, 5.0, 0.01).unwrap();
        let IntensityLaw::Affine(spec) = affine_law(0.0) else {
            unreachable!()
        };
        let path = spec.mean_path_intensity(0, 1, 0.0).unwrap();
        for sigma in [0.0, 1e-4] {
            let law = affine_law(sigma);
            let surv = law.survival_curve(&[(0, 1)], &grid).unwrap();
            let wt = law.weighted_terminal_curve(&[(0, 1)], (0, 1), &grid).unwrap();
            for i in (0..grid.len()).step_by(50) {
                let tt = grid.node(i);
                let exact = (-path.integral(0.0, tt)).exp();
                assert!(((surv[i] - exact) / exact).abs() < 1e-3);
                let exact_w = exact * path.value(tt);
                assert!(((wt[i] - exact_w) / exact_w).abs() < 1e-3);
                if sigma == 0.0 {
                    assert!(((surv[i] - exact) / exact).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn affine_with_zero_loading_terminal_reduces_to_scaled_survival() {
        let spec = AffineSpec::new(
            vec![CirFactor::new(0.8, 0.05, 0.1, 0.03)],
            vec![
                AffineIntensity {
                    from: 0,
                    to: 1,
                    shift: TimeFunction::zero(),
                    loadings: vec![1.0],
                },
                AffineIntensity {
                    from: 0,
                    to: 2,
                    shift: TimeFunction::constant(0.07),
                    loadings: vec![0.0],
                },
            ],
        )
        .unwrap();
        let law = IntensityLaw::Affine(spec);
        let grid = TimeGrid::new(0.0, 3.0, 0.01).unwrap();
        let s = law.survival_curve(&[(0, 1)], &grid).unwrap();
        let w = law.weighted_terminal_curve(&[(0, 1)], (0, 2), &grid).unwrap();
        for i in 0..grid.len() {
            assert!((w[i] - 0.07 * s[i]).abs() < 1e-15);
        }
    }

    fn assert_weighted_is_negative_derivative(law: &IntensityLaw, maturities: &[f64]) {
        let h = 1e-4;
        for &tt in maturities {
            let up = law.survival_transform(&[(0, 1)], 0.0, tt + h, 1e-3).unwrap();
            let dn = law.survival_transform(&[(0, 1)], 0.0, tt - h, 1e-3).unwrap();
            let fd = -(up - dn) / (2.0 * h);
            let w = law
                .weighted_terminal_transform(&[(0, 1)], (0, 1), 0.0, tt, 1e-3)
                .unwrap();
            assert!(((w - fd) / w).abs() < 1e-5, "T={tt}: {w} vs {fd}");
        }
    }

    #[test]
    fn weighted_transform_is_negative_derivative_mixture() {
        let a = TimeFunction::gompertz_makeham(0.001, 0.0002, 0.08, 50.0);
        let b = TimeFunction::piecewise_linear(&[(0.0, 0.05), (10.0, 0.2)]).unwrap();
        let set = ScenarioSet::new(vec![(0, 1)], vec![vec![a], vec![b]], vec![0.4, 0.6]).unwrap();
        assert_weighted_is_negative_derivative(&IntensityLaw::from_prior(set, 0.0), &[0.5, 3.0, 7.5]);
    }

    #[test]
    fn weighted_transform_is_negative_derivative_affine() {
        assert_weighted_is_negative_derivative(&affine_law(0.15), &[0.5, 3.0, 7.5]);
    }

    #[test]
    fn product_sets_multiply_weights() {
        let set = ScenarioSet::product(
            vec![(0, 1), (0, 2)],
            vec![vec![(c(0.1), 0.3), (c(0.2), 0.7)], vec![(c(0.05), 0.5), (c(0.5), 0.5)]],
        )
        .unwrap();
        assert_eq!(set.len(), 4);
        assert!((set.prior()[3] - 0.35).abs() < 1e-15);
        assert_eq!(set.rate(2, 0, 1, 0.0), 0.2);
        assert_eq!(set.rate(2, 0, 2, 0.0), 0.05);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn survival_transform_in_unit_interval_and_nonincreasing(
                rates in proptest::collection::vec(0.0f64..2.0, 1..5),
                raw_w in proptest::collection::vec(0.01f64..1.0, 5),
            ) {
                let n = rates.len();
                let total: f64 = raw_w[..n].iter().sum();
                let w: Vec<f64> = raw_w[..n].iter().map(|x| x / total).collect();
                let w_sum: f64 = w.iter().sum();
                let mut w = w;
                w[0] += 1.0 - w_sum;
                let set = ScenarioSet::new(
                    vec![(0, 1)],
                    rates.iter().map(|r| vec![TimeFunction::constant(*r)]).collect(),
                    w,
                ).unwrap();
                let law = IntensityLaw::from_prior(set, 0.0);
                let grid = TimeGrid::new(0.0, 5.0, 0.1).unwrap();
                let s = law.survival_curve(&[(0, 1)], &grid).unwrap();
                prop_assert!((s[0] - 1.0).abs() < 1e-12);
                for win in s.windows(2) {
                    prop_assert!(win[1] <= win[0] + 1e-15);
                    prop_assert!(win[1] > 0.0 && win[1] <= 1.0 + 1e-12);
                }
            }

            #[test]
            fn degenerate_mixture_matches_closed_form(r in 0.0f64..1.0, tt in 0.1f64..20.0) {
                let set = ScenarioSet::deterministic(vec![(0, 1)], vec![TimeFunction::constant(r)]).unwrap();
                let law = IntensityLaw::from_prior(set, 0.0);
                let s = law.survival_transform(&[(0, 1)], 0.0, tt, 0.01).unwrap();
                let w = law.weighted_terminal_transform(&[(0, 1)], (0, 1), 0.0, tt, 0.01).unwrap();
                prop_assert!((s - (-r * tt).exp()).abs() < 1e-10);
                prop_assert!((w - r * (-r * tt).exp()).abs() < 1e-10);
            }
        }
    }
}
