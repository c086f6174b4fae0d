//! Monte Carlo estimates of the conditional expectations used elsewhere,
//! from simulated (intensity, chain) path pairs.
//!
//! Mixture laws draw a scenario from the conditional weights; affine laws
//! draw every CIR factor exactly on a factor grid and interpolate linearly
//! between its nodes. Given the intensities, the chain is simulated exactly
//! by thinning against the supremum of the current state's exit rate over
//! the remaining horizon.
//!
//! Path `p` draws its intensities from stream `2p` and its jumps from stream
//! `2p + 1` of a ChaCha generator keyed by the seed, and paths are reduced in
//! fixed-size chunks combined in index order, so results do not depend on
//! the number of threads.

use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::model_graph::{ModelGraph, PaymentSpec, Transition};
use crate::rate_scenarios::IntensityLaw;

const CHUNK: usize = 8192;

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub paths: usize,
    pub seed: u64,
    /// Valuation time to horizon; for affine laws its step is the factor
    /// sampling step.
    pub grid: TimeGrid,
    /// Distribution of the state at the valuation time.
    pub start: Vec<f64>,
}

/// A conditional expectation to estimate. Times must lie in the simulated
/// horizon.
#[derive(Debug, Clone)]
pub enum Target {
    /// `E[1(X_T = state)]`.
    Occupancy { state: usize, time: f64 },
    /// `E[1(X_T = from) mu_{from,to}(T)]`.
    TransitionDensity { from: usize, to: usize, time: f64 },
    /// `E[exp(-\int_t^T sum_{pairs} mu)]`.
    SurvivalTransform { pairs: Vec<Transition>, time: f64 },
    /// `E[exp(-\int_t^T sum_{pairs} mu) mu_terminal(T)]`.
    WeightedTransform {
        pairs: Vec<Transition>,
        terminal: Transition,
        time: f64,
    },
    /// `E[B(T) - B(t)]`: sojourn payments plus transition payments on jumps.
    AccumulatedPayments { payments: PaymentSpec, time: f64 },
    /// Frequency with which `scenario` is drawn (mixture laws).
    ScenarioFrequency { scenario: usize },
}

impl Target {
    fn time(&self) -> Option<f64> {
        match self {
            Target::Occupancy { time, .. }
            | Target::TransitionDensity { time, .. }
            | Target::SurvivalTransform { time, .. }
            | Target::WeightedTransform { time, .. }
            | Target::AccumulatedPayments { time, .. } => Some(*time),
            Target::ScenarioFrequency { .. } => None,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs = |p: &[Transition]| {
            p.iter()
                .map(|(a, b)| format!("{a}>{b}"))
                .collect::<Vec<_>>()
                .join("+")
        };
        match self {
            Target::Occupancy { state, time } => write!(f, "occupancy[{state}]@{time}"),
            Target::TransitionDensity { from, to, time } => write!(f, "density[{from}>{to}]@{time}"),
            Target::SurvivalTransform { pairs: p, time } => write!(f, "survival[{}]@{time}", pairs(p)),
            Target::WeightedTransform { pairs: p, terminal, time } => write!(
                f,
                "weighted[{}|{}>{}]@{time}",
                pairs(p),
                terminal.0,
                terminal.1
            ),
            Target::AccumulatedPayments { time, .. } => write!(f, "payments@{time}"),
            Target::ScenarioFrequency { scenario } => write!(f, "scenario[{scenario}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub target: String,
    pub estimate: f64,
    /// Sample standard deviation over `sqrt(n)`.
    pub standard_error: f64,
    pub n: usize,
}

impl Estimate {
    /// `|estimate - value|` in units of the standard error (0 when both
    /// coincide exactly).
    pub fn z_score(&self, value: f64) -> f64 {
        let d = (self.estimate - value).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.standard_error
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateTable {
    pub rows: Vec<Estimate>,
}

/// One simulated path: the intensity draw and the chain's jumps.
#[derive(Debug, Clone)]
pub struct SimPath {
    pub start: usize,
    /// Scenario index for mixture laws.
    pub scenario: Option<usize>,
    /// Factor values on the factor grid for affine laws.
    pub factors: Vec<Vec<f64>>,
    /// `(time, from, to)` in increasing time.
    pub jumps: Vec<(f64, usize, usize)>,
}

impl SimPath {
    /// State occupied at `time` (right-continuous).
    pub fn state_at(&self, time: f64) -> usize {
        self.jumps
            .iter()
            .take_while(|(s, _, _)| *s <= time)
            .last()
            .map_or(self.start, |j| j.2)
    }
}

struct Simulator<'a> {
    graph: &'a ModelGraph,
    law: &'a IntensityLaw,
    config: &'a SimulationConfig,
    scenario_dist: Option<WeightedIndex<f64>>,
    start_dist: WeightedIndex<f64>,
    /// Exit transitions per state.
    exits: Vec<Vec<usize>>,
}

impl<'a> Simulator<'a> {
    fn new(graph: &'a ModelGraph, law: &'a IntensityLaw, config: &'a SimulationConfig) -> Result<Self> {
        let n = graph.num_states();
        if config.paths == 0 {
            return Err(Error::Simulation("path count must be at least 1".into()));
        }
        if config.start.len() != n {
            return Err(Error::Simulation(format!(
                "start distribution has {} entries for {n} states",
                config.start.len()
            )));
        }
        law.validate_on(graph, &config.grid)?;
        let start_dist = WeightedIndex::new(&config.start)
            .map_err(|e| Error::Simulation(format!("start distribution: {e}")))?;
        let scenario_dist = match law {
            IntensityLaw::Mixture { weights, .. } => Some(
                WeightedIndex::new(&weights.weights)
                    .map_err(|e| Error::Simulation(format!("scenario weights: {e}")))?,
            ),
            IntensityLaw::Affine(_) => None,
        };
        let transitions = law.transitions();
        let exits = (0..n)
            .map(|k| {
                (0..transitions.len())
                    .filter(|&i| transitions[i].0 == k)
                    .collect()
            })
            .collect();
        Ok(Self {
            graph,
            law,
            config,
            scenario_dist,
            start_dist,
            exits,
        })
    }

    fn rng(&self, path: usize, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(2 * path as u64 + stream);
        rng
    }

    fn simulate(&self, path: usize) -> Result<SimPath> {
        let mut law_rng = self.rng(path, 0);
        let mut jump_rng = self.rng(path, 1);
        let start = self.start_dist.sample(&mut jump_rng);
        let (scenario, factors) = match self.law {
            IntensityLaw::Mixture { .. } => (
                Some(
                    self.scenario_dist
                        .as_ref()
                        .expect("mixture has scenario weights")
                        .sample(&mut law_rng),
                ),
                Vec::new(),
            ),
            IntensityLaw::Affine(spec) => (
                None,
                spec.factors
                    .iter()
                    .map(|f| f.sample_path(&mut law_rng, &self.config.grid))
                    .collect(),
            ),
        };
        let mut p = SimPath {
            start,
            scenario,
            factors,
            jumps: Vec::new(),
        };
        self.simulate_jumps(&mut p, &mut jump_rng)?;
        Ok(p)
    }

    fn simulate_jumps(&self, p: &mut SimPath, rng: &mut ChaCha8Rng) -> Result<()> {
        let horizon = self.config.grid.last();
        let transitions = self.law.transitions();
        let mut state = p.start;
        let mut s = self.config.grid.t0();
        let suffix_max: Vec<Vec<f64>> = p.factors.iter().map(|z| suffix_max(z)).collect();
        let mut rates = Vec::new();
        loop {
            let exits = &self.exits[state];
            if exits.is_empty() {
                return Ok(());
            }
            let bound: f64 = exits
                .iter()
                .map(|&i| self.sup_rate(p, &suffix_max, i, s, horizon))
                .sum();
            if !bound.is_finite() {
                return Err(Error::Simulation(format!(
                    "dominating rate {bound} in state {state} at time {s}"
                )));
            }
            if bound <= 0.0 {
                return Ok(());
            }
            let e: f64 = Exp1.sample(rng);
            s += e / bound;
            if s > horizon {
                return Ok(());
            }
            rates.clear();
            rates.extend(exits.iter().map(|&i| self.rate(p, i, s).max(0.0)));
            let total: f64 = rates.iter().sum();
            let u: f64 = rng.random::<f64>() * bound;
            if u < total {
                let mut acc = 0.0;
                let mut chosen = exits[exits.len() - 1];
                for (r, &i) in rates.iter().zip(exits) {
                    acc += r;
                    if u < acc {
                        chosen = i;
                        break;
                    }
                }
                let (from, to) = transitions[chosen];
                debug_assert!(self.graph.has_transition(from, to));
                p.jumps.push((s, from, to));
                state = to;
            }
        }
    }

    /// Intensity of law transition `i` on path `p` at time `s`.
    fn rate(&self, p: &SimPath, i: usize, s: f64) -> f64 {
        match self.law {
            IntensityLaw::Mixture { set, .. } => set.paths(p.scenario.expect("scenario drawn"))[i].value(s),
            IntensityLaw::Affine(spec) => {
                let a = &spec.intensities[i];
                a.shift.value(s)
                    + a.loadings
                        .iter()
                        .zip(&p.factors)
                        .map(|(l, z)| l * interpolate(&self.config.grid, z, s))
                        .sum::<f64>()
            }
        }
    }

    fn sup_rate(&self, p: &SimPath, suffix_max: &[Vec<f64>], i: usize, s: f64, horizon: f64) -> f64 {
        match self.law {
            IntensityLaw::Mixture { set, .. } => {
                set.paths(p.scenario.expect("scenario drawn"))[i].sup_on(s, horizon)
            }
            IntensityLaw::Affine(spec) => {
                let a = &spec.intensities[i];
                let grid = &self.config.grid;
                let idx = (((s - grid.t0()) / grid.step()).floor().max(0.0) as usize).min(grid.intervals());
                a.shift.sup_on(s, horizon)
                    + a.loadings
                        .iter()
                        .zip(suffix_max)
                        .map(|(l, m)| l * m[idx])
                        .sum::<f64>()
            }
        }
    }

    /// `\int_t^T sum_{pairs} mu` along the path.
    fn cumulative(&self, p: &SimPath, pairs: &[Transition], time: f64) -> f64 {
        let t0 = self.config.grid.t0();
        match self.law {
            IntensityLaw::Mixture { set, .. } => {
                set.cumulative(p.scenario.expect("scenario drawn"), pairs, t0, time)
            }
            IntensityLaw::Affine(spec) => pairs
                .iter()
                .filter_map(|&(j, k)| spec.intensity(j, k))
                .map(|a| {
                    a.shift.integral(t0, time)
                        + a.loadings
                            .iter()
                            .zip(&p.factors)
                            .filter(|(l, _)| **l != 0.0)
                            .map(|(l, z)| l * integrate_linear(&self.config.grid, z, time))
                            .sum::<f64>()
                })
                .sum(),
        }
    }

    fn rate_of(&self, p: &SimPath, (j, k): Transition, s: f64) -> f64 {
        self.law
            .transitions()
            .iter()
            .position(|&e| e == (j, k))
            .map_or(0.0, |i| self.rate(p, i, s))
    }

    fn evaluate(&self, p: &SimPath, target: &Target) -> f64 {
        match target {
            Target::Occupancy { state, time } => f64::from(u8::from(p.state_at(*time) == *state)),
            Target::TransitionDensity { from, to, time } => {
                if p.state_at(*time) == *from {
                    self.rate_of(p, (*from, *to), *time)
                } else {
                    0.0
                }
            }
            Target::SurvivalTransform { pairs, time } => (-self.cumulative(p, pairs, *time)).exp(),
            Target::WeightedTransform {
                pairs,
                terminal,
                time,
            } => (-self.cumulative(p, pairs, *time)).exp() * self.rate_of(p, *terminal, *time),
            Target::AccumulatedPayments { payments, time } => {
                let mut total = 0.0;
                let mut state = p.start;
                let mut s = self.config.grid.t0();
                for &(u, from, to) in p.jumps.iter().take_while(|j| j.0 <= *time) {
                    total += payments.sojourn(state).integral(s, u);
                    if let Some(b) = payments.transition(from, to) {
                        total += b.value(u);
                    }
                    state = to;
                    s = u;
                }
                total + payments.sojourn(state).integral(s, *time)
            }
            Target::ScenarioFrequency { scenario } => f64::from(u8::from(p.scenario == Some(*scenario))),
        }
    }
}

fn suffix_max(z: &[f64]) -> Vec<f64> {
    let mut out = z.to_vec();
    for i in (0..out.len().saturating_sub(1)).rev() {
        out[i] = out[i].max(out[i + 1]);
    }
    out
}

/// Linear interpolation of node values `z` on `grid`.
fn interpolate(grid: &TimeGrid, z: &[f64], s: f64) -> f64 {
    let x = ((s - grid.t0()) / grid.step()).clamp(0.0, grid.intervals() as f64);
    let i = (x.floor() as usize).min(grid.intervals().saturating_sub(1));
    if grid.intervals() == 0 {
        return z[0];
    }
    let frac = x - i as f64;
    z[i] + frac * (z[i + 1] - z[i])
}

/// `\int_{t0}^{time}` of the linear interpolant of `z`.
fn integrate_linear(grid: &TimeGrid, z: &[f64], time: f64) -> f64 {
    let h = grid.step();
    let x = ((time - grid.t0()) / h).clamp(0.0, grid.intervals() as f64);
    let full = x.floor() as usize;
    let mut acc = 0.0;
    for i in 0..full.min(grid.intervals()) {
        acc += 0.5 * h * (z[i] + z[i + 1]);
    }
    let frac = x - full as f64;
    if frac > 0.0 && full < grid.intervals() {
        let end = z[full] + frac * (z[full + 1] - z[full]);
        acc += 0.5 * frac * h * (z[full] + end);
    }
    acc
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64,
        }
    }

    fn standard_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64).sqrt() / (self.n as f64).sqrt()
    }
}

fn check_targets(graph: &ModelGraph, law: &IntensityLaw, config: &SimulationConfig, targets: &[Target]) -> Result<()> {
    let n = graph.num_states();
    let (lo, hi) = (config.grid.t0(), config.grid.last());
    for t in targets {
        if let Some(time) = t.time() {
            if !(time >= lo && time <= hi + 1e-12) {
                return Err(Error::Simulation(format!(
                    "target {t} outside simulated horizon [{lo}, {hi}]"
                )));
            }
        }
        let bad_state = match t {
            Target::Occupancy { state, .. } => *state >= n,
            Target::TransitionDensity { from, to, .. } => *from >= n || *to >= n,
            Target::SurvivalTransform { pairs, .. } => pairs.iter().any(|p| p.0 >= n || p.1 >= n),
            Target::WeightedTransform { pairs, terminal, .. } => {
                pairs.iter().chain(std::iter::once(terminal)).any(|p| p.0 >= n || p.1 >= n)
            }
            Target::AccumulatedPayments { payments, .. } => payments.num_states() != n,
            Target::ScenarioFrequency { scenario } => match law {
                IntensityLaw::Mixture { set, .. } => *scenario >= set.len(),
                IntensityLaw::Affine(_) => true,
            },
        };
        if bad_state {
            return Err(Error::Simulation(format!("target {t} does not fit the model and law")));
        }
    }
    Ok(())
}

/// Simulate and keep every path.
pub fn simulate_paths(graph: &ModelGraph, law: &IntensityLaw, config: &SimulationConfig) -> Result<Vec<SimPath>> {
    let sim = Simulator::new(graph, law, config)?;
    (0..config.paths).into_par_iter().map(|p| sim.simulate(p)).collect()
}

/// Estimate `targets` from stored paths (generated with the same inputs).
pub fn estimate_targets(
    graph: &ModelGraph,
    law: &IntensityLaw,
    config: &SimulationConfig,
    sample: &[SimPath],
    targets: &[Target],
) -> Result<EstimateTable> {
    let sim = Simulator::new(graph, law, config)?;
    check_targets(graph, law, config, targets)?;
    let chunks: Vec<Vec<Moments>> = sample
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut m = vec![Moments::default(); targets.len()];
            for p in chunk {
                for (acc, t) in m.iter_mut().zip(targets) {
                    acc.push(sim.evaluate(p, t));
                }
            }
            m
        })
        .collect();
    Ok(table(targets, chunks))
}

/// Simulate and estimate without storing the paths; identical to
/// [`simulate_paths`] followed by [`estimate_targets`].
pub fn simulate(
    graph: &ModelGraph,
    law: &IntensityLaw,
    config: &SimulationConfig,
    targets: &[Target],
) -> Result<EstimateTable> {
    let sim = Simulator::new(graph, law, config)?;
    check_targets(graph, law, config, targets)?;
    let n_chunks = config.paths.div_ceil(CHUNK);
    let chunks: Vec<Vec<Moments>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = vec![Moments::default(); targets.len()];
            for p in c * CHUNK..((c + 1) * CHUNK).min(config.paths) {
                let path = sim.simulate(p)?;
                for (acc, t) in m.iter_mut().zip(targets) {
                    acc.push(sim.evaluate(&path, t));
                }
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    Ok(table(targets, chunks))
}

fn table(targets: &[Target], chunks: Vec<Vec<Moments>>) -> EstimateTable {
    let mut total = vec![Moments::default(); targets.len()];
    for chunk in chunks {
        for (t, c) in total.iter_mut().zip(chunk) {
            *t = t.merge(c);
        }
    }
    EstimateTable {
        rows: targets
            .iter()
            .zip(total)
            .map(|(t, m)| Estimate {
                target: t.to_string(),
                estimate: m.mean,
                standard_error: m.standard_error(),
                n: m.n,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kolmogorov::point_mass;
    use crate::rate_scenarios::{AffineIntensity, AffineSpec, CirFactor, PosteriorWeights, ScenarioSet};
    use crate::time_fn::TimeFunction;

    fn survival(rates: &[f64]) -> (ModelGraph, IntensityLaw) {
        let graph = ModelGraph::new(vec!["alive", "dead"], vec![(0, 1)]).unwrap();
        let w = 1.0 / rates.len() as f64;
        let set = ScenarioSet::new(
            vec![(0, 1)],
            rates.iter().map(|r| vec![TimeFunction::constant(*r)]).collect(),
            vec![w; rates.len()],
        )
        .unwrap();
        (graph, IntensityLaw::from_prior(set, 0.0))
    }

    fn config(paths: usize, horizon: f64, n: usize) -> SimulationConfig {
        SimulationConfig {
            paths,
            seed: 7,
            grid: TimeGrid::new(0.0, horizon, 0.05).unwrap(),
            start: point_mass(n, 0),
        }
    }

    #[test]
    fn zero_intensity_never_jumps() {
        let (graph, law) = survival(&[0.0]);
        let paths = simulate_paths(&graph, &law, &config(1000, 5.0, 2)).unwrap();
        assert!(paths.iter().all(|p| p.jumps.is_empty()));
    }

    #[test]
    fn unreachable_state_has_zero_estimate_and_error() {
        let graph = ModelGraph::new(vec!["a", "b", "c"], vec![(0, 1)]).unwrap();
        let set = ScenarioSet::deterministic(vec![(0, 1)], vec![TimeFunction::constant(0.5)]).unwrap();
        let law = IntensityLaw::from_prior(set, 0.0);
        let t = simulate(&graph, &law, &config(5000, 1.0, 3), &[Target::Occupancy { state: 2, time: 1.0 }]).unwrap();
        assert_eq!((t.rows[0].estimate, t.rows[0].standard_error), (0.0, 0.0));
    }

    #[test]
    fn survival_occupancy_within_four_standard_errors() {
        let (graph, law) = survival(&[0.1]);
        let targets = [
            Target::Occupancy { state: 0, time: 1.0 },
            Target::AccumulatedPayments {
                payments: PaymentSpec::zero(2).with_transition(0, 1, TimeFunction::constant(1.0)).unwrap(),
                time: 1.0,
            },
        ];
        let t = simulate(&graph, &law, &config(200_000, 1.0, 2), &targets).unwrap();
        assert!(t.rows[0].z_score((-0.1f64).exp()) < 4.0, "{:?}", t.rows[0]);
        assert!(t.rows[1].z_score(1.0 - (-0.1f64).exp()) < 4.0, "{:?}", t.rows[1]);
        let expected_se = ((-0.1f64).exp() * (1.0 - (-0.1f64).exp()) / 200_000.0).sqrt();
        assert!((t.rows[0].standard_error / expected_se - 1.0).abs() < 0.05);
    }

    #[test]
    fn scenario_frequencies_match_weights() {
        let (graph, law) = survival(&[0.1, 0.3]);
        let targets = [Target::ScenarioFrequency { scenario: 0 }, Target::ScenarioFrequency { scenario: 1 }];
        let t = simulate(&graph, &law, &config(100_000, 1.0, 2), &targets).unwrap();
        for r in &t.rows {
            assert!(r.z_score(0.5) < 4.0);
        }
    }

    #[test]
    fn fused_and_stored_runs_agree_bitwise() {
        let (graph, law) = survival(&[0.1, 0.3]);
        let cfg = config(20_000, 2.0, 2);
        let targets = [
            Target::Occupancy { state: 0, time: 1.5 },
            Target::TransitionDensity { from: 0, to: 1, time: 2.0 },
        ];
        let a = simulate(&graph, &law, &cfg, &targets).unwrap();
        let sample = simulate_paths(&graph, &law, &cfg).unwrap();
        let b = estimate_targets(&graph, &law, &cfg, &sample, &targets).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, simulate(&graph, &law, &cfg, &targets).unwrap());
    }

    #[test]
    fn posterior_weights_drive_scenario_draws() {
        let graph = ModelGraph::new(vec!["alive", "dead"], vec![(0, 1)]).unwrap();
        let set = ScenarioSet::new(
            vec![(0, 1)],
            vec![vec![TimeFunction::constant(0.1)], vec![TimeFunction::constant(0.3)]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let law = IntensityLaw::mixture(set, PosteriorWeights { time: 0.0, weights: vec![0.0, 1.0] }).unwrap();
        let t = simulate(&graph, &law, &config(1000, 1.0, 2), &[Target::ScenarioFrequency { scenario: 1 }]).unwrap();
        assert_eq!(t.rows[0].estimate, 1.0);
    }

    #[test]
    fn affine_survival_transform_matches_riccati() {
        let graph = ModelGraph::new(vec!["alive", "dead"], vec![(0, 1)]).unwrap();
        let spec = AffineSpec::new(
            vec![CirFactor::new(0.5, 0.05, 0.15, 0.03)],
            vec![AffineIntensity {
                from: 0,
                to: 1,
                shift: TimeFunction::constant(0.01),
                loadings: vec![1.0],
            }],
        )
        .unwrap();
        let law = IntensityLaw::Affine(spec);
        let exact = law.survival_transform(&[(0, 1)], 0.0, 3.0, 0.001).unwrap();
        let exact_w = law.weighted_terminal_transform(&[(0, 1)], (0, 1), 0.0, 3.0, 0.001).unwrap();
        let targets = [
            Target::SurvivalTransform { pairs: vec![(0, 1)], time: 3.0 },
            Target::Occupancy { state: 0, time: 3.0 },
            Target::WeightedTransform { pairs: vec![(0, 1)], terminal: (0, 1), time: 3.0 },
            Target::TransitionDensity { from: 0, to: 1, time: 3.0 },
        ];
        let t = simulate(&graph, &law, &config(100_000, 3.0, 2), &targets).unwrap();
        assert!(t.rows[0].z_score(exact) < 4.0, "{:?} vs {exact}", t.rows[0]);
        assert!(t.rows[1].z_score(exact) < 4.0, "{:?} vs {exact}", t.rows[1]);
        assert!(t.rows[2].z_score(exact_w) < 4.0, "{:?} vs {exact_w}", t.rows[2]);
        assert!(t.rows[3].z_score(exact_w) < 4.0, "{:?} vs {exact_w}", t.rows[3]);
    }

    #[test]
    fn linear_interpolant_integral() {
        let grid = TimeGrid::new(0.0, 1.0, 0.25).unwrap();
        let z = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert!((integrate_linear(&grid, &z, 1.0) - 2.0).abs() < 1e-15);
        assert!((integrate_linear(&grid, &z, 0.375) - 0.28125).abs() < 1e-15);
        assert!((interpolate(&grid, &z, 0.375) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_targets_beyond_horizon() {
        let (graph, law) = survival(&[0.1]);
        assert!(simulate(&graph, &law, &config(10, 1.0, 2), &[Target::Occupancy { state: 0, time: 2.0 }]).is_err());
    }
}
