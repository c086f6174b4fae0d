//! TOML run configuration and its resolution into library objects.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fwdrates_core::forward_rates::Definition;
use fwdrates_core::model_graph::TransitionPayment;
use fwdrates_core::presets::preset;
use fwdrates_core::rate_scenarios::{posterior, AffineIntensity, AffineSpec, CirFactor};
use fwdrates_core::{IntensityLaw, ModelGraph, PaymentSpec, ScenarioSet, TimeFunction, TimeGrid};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    pub scenarios: Option<ScenarioSection>,
    pub affine: Option<AffineSection>,
    pub payments: Option<PaymentSection>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub simulation: SimulationSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Built-in model name.
    pub preset: Option<String>,
    /// Built-in law of the preset.
    pub law: Option<String>,
    pub states: Option<Vec<String>>,
    pub transitions: Option<Vec<(usize, usize)>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub transitions: Vec<(usize, usize)>,
    pub weights: Vec<f64>,
    /// One list of intensity paths per scenario, ordered as `transitions`.
    pub paths: Vec<Vec<TimeFunction>>,
    /// Scenario whose intensities were observed up to the valuation time.
    pub observed: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineSection {
    pub factors: Vec<CirFactor>,
    pub intensities: Vec<AffineIntensity>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaymentSection {
    #[serde(default)]
    pub sojourn: Vec<SojournEntry>,
    #[serde(default)]
    pub transition: Vec<TransitionPayment>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SojournEntry {
    pub state: usize,
    pub rate: TimeFunction,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub t: Option<f64>,
    pub horizon: Option<f64>,
    pub step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub definitions: Option<Vec<Definition>>,
    pub state: Option<usize>,
    pub short_rate: Option<TimeFunction>,
    /// Absorbing states to split for `repair`.
    pub split: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    /// Sampling step of affine factors.
    pub factor_step: Option<f64>,
}

pub const DEFAULT_HORIZON: f64 = 10.0;
pub const DEFAULT_STEP: f64 = 0.01;
pub const DEFAULT_PATHS: usize = 100_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_FACTOR_STEP: f64 = 0.1;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Everything a command needs, with flags applied over the config.
#[derive(Debug)]
pub struct Resolved {
    pub name: String,
    pub graph: ModelGraph,
    pub law: IntensityLaw,
    pub payments: PaymentSpec,
    pub grid: TimeGrid,
    pub definitions: Vec<Definition>,
    pub state: usize,
    pub short_rate: TimeFunction,
    pub split: Option<Vec<usize>>,
    pub paths: usize,
    pub seed: u64,
    pub factor_step: f64,
    pub out: PathBuf,
}

/// Command-line values that override the config.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub definition: Option<Definition>,
    pub state: Option<usize>,
    pub t: Option<f64>,
    pub horizon: Option<f64>,
    pub step: Option<f64>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub short_rate: Option<f64>,
    pub out: Option<PathBuf>,
}

pub fn resolve(cfg: RunConfig, flags: &Overrides) -> Result<Resolved> {
    let t = flags.t.or(cfg.grid.t).unwrap_or(0.0);
    let horizon = flags.horizon.or(cfg.grid.horizon).unwrap_or(DEFAULT_HORIZON);
    let step = flags.step.or(cfg.grid.step).unwrap_or(DEFAULT_STEP);
    if !(horizon > 0.0) {
        bail!("horizon must be positive, got {horizon}");
    }
    let grid = TimeGrid::new(t, t + horizon, step)?;

    let (name, graph, law, default_payments) = model_and_law(&cfg, t, step)?;
    let payments = match &cfg.payments {
        Some(p) => payment_spec(p, graph.num_states())?,
        None => default_payments.ok_or_else(|| anyhow::anyhow!("custom model needs a [payments] section"))?,
    };
    payments
        .validate_against(graph.num_states(), graph.transitions())
        .context("payments")?;
    law.validate_on(&graph, &grid).context("intensity law")?;

    let state = flags.state.or(cfg.run.state).unwrap_or(0);
    if state >= graph.num_states() {
        bail!(
            "state {state} out of range (model '{name}' has {} states)",
            graph.num_states()
        );
    }
    let definitions = match flags.definition {
        Some(d) => vec![d],
        None => cfg.run.definitions.clone().unwrap_or_else(|| Definition::ALL.to_vec()),
    };
    if definitions.is_empty() {
        bail!("no definitions requested");
    }
    let short_rate = match flags.short_rate {
        Some(r) => TimeFunction::constant(r),
        None => cfg.run.short_rate.clone().unwrap_or_else(TimeFunction::zero),
    };
    short_rate.validate().context("short rate")?;
    let paths = flags.paths.or(cfg.simulation.paths).unwrap_or(DEFAULT_PATHS);
    if paths < 2 {
        bail!("need at least 2 simulation paths, got {paths}");
    }
    let factor_step = cfg.simulation.factor_step.unwrap_or(DEFAULT_FACTOR_STEP);
    if !(factor_step > 0.0) {
        bail!("factor_step must be positive, got {factor_step}");
    }
    Ok(Resolved {
        name,
        graph,
        law,
        payments,
        grid,
        definitions,
        state,
        short_rate,
        split: cfg.run.split.clone(),
        paths,
        seed: flags.seed.or(cfg.simulation.seed).unwrap_or(DEFAULT_SEED),
        factor_step,
        out: flags
            .out
            .clone()
            .or(cfg.run.out.clone())
            .unwrap_or_else(|| PathBuf::from("out")),
    })
}

type ModelParts = (String, ModelGraph, IntensityLaw, Option<PaymentSpec>);

fn model_and_law(cfg: &RunConfig, t: f64, step: f64) -> Result<ModelParts> {
    let m = &cfg.model;
    let custom_law = custom_law(cfg, t, step)?;
    if let Some(name) = &m.preset {
        if m.states.is_some() || m.transitions.is_some() {
            bail!("[model] takes either a preset or states/transitions, not both");
        }
        let p = preset(name)?;
        let law = match (custom_law, &m.law) {
            (Some(_), Some(_)) => bail!("[model].law conflicts with a custom [scenarios] or [affine] section"),
            (Some(law), None) => law,
            (None, law_name) => p.law(law_name.as_deref().unwrap_or(p.default_law()), t)?,
        };
        return Ok((name.clone(), p.graph, law, Some(p.payments)));
    }
    if m.law.is_some() {
        bail!("[model].law needs a preset");
    }
    let (Some(states), Some(transitions)) = (&m.states, &m.transitions) else {
        bail!("[model] needs a preset or both states and transitions");
    };
    let graph = ModelGraph::new(states.clone(), transitions.clone())?;
    let law = custom_law.ok_or_else(|| anyhow::anyhow!("custom model needs a [scenarios] or [affine] section"))?;
    Ok(("custom".into(), graph, law, None))
}

fn custom_law(cfg: &RunConfig, t: f64, step: f64) -> Result<Option<IntensityLaw>> {
    match (&cfg.scenarios, &cfg.affine) {
        (Some(_), Some(_)) => bail!("give exactly one of [scenarios] and [affine]"),
        (Some(s), None) => {
            let set = ScenarioSet::new(s.transitions.clone(), s.paths.clone(), s.weights.clone())?;
            let law = match s.observed {
                Some(i) => {
                    let w = posterior(&set, i, t, step)?;
                    IntensityLaw::mixture(set, w)?
                }
                None => IntensityLaw::from_prior(set, t),
            };
            Ok(Some(law))
        }
        (None, Some(a)) => Ok(Some(IntensityLaw::Affine(AffineSpec::new(
            a.factors.clone(),
            a.intensities.clone(),
        )?))),
        (None, None) => Ok(None),
    }
}

fn payment_spec(p: &PaymentSection, n: usize) -> Result<PaymentSpec> {
    let mut spec = PaymentSpec::zero(n);
    for s in &p.sojourn {
        spec = spec.with_sojourn(s.state, s.rate.clone())?;
    }
    for tp in &p.transition {
        spec = spec.with_transition(tp.from, tp.to, tp.amount.clone())?;
    }
    Ok(spec)
}
