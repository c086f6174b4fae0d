//! Built-in models with their intensity laws and default contracts.
//!
//! | model                 | states                                                        |
//! |-----------------------|---------------------------------------------------------------|
//! | `survival`            | alive, dead                                                   |
//! | `active-surrender-dead` | active, surrender, dead                                     |
//! | `disability`          | active, disabled, dead                                        |
//! | `disability-repaired` | active, disabled, dead, dead from active                      |
//! | `free-policy`         | active, free policy, dead, surrender, dead free policy        |

use crate::error::{Error, Result};
use crate::forward_rates::repair_model;
use crate::model_graph::{ModelGraph, PaymentSpec};
use crate::rate_scenarios::{AffineIntensity, AffineSpec, CirFactor, IntensityLaw, ScenarioSet};
use crate::time_fn::TimeFunction;

pub const MODELS: [&str; 5] = [
    "survival",
    "active-surrender-dead",
    "disability",
    "disability-repaired",
    "free-policy",
];

/// Deterministic intensity of moving from active to free policy.
pub const FREE_POLICY_CONVERSION: f64 = 0.02;
/// Extra surrender intensity of free policies.
pub const FREE_POLICY_EXTRA_SURRENDER: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub graph: ModelGraph,
    pub payments: PaymentSpec,
    /// Law names; the first is the default.
    pub laws: &'static [&'static str],
    /// Laws that make every intensity deterministic.
    pub deterministic_laws: &'static [&'static str],
}

impl Preset {
    pub fn default_law(&self) -> &'static str {
        self.laws[0]
    }

    /// The named law, conditional on information at time `t`.
    pub fn law(&self, name: &str, t: f64) -> Result<IntensityLaw> {
        if !self.laws.contains(&name) {
            return Err(Error::Parse(format!(
                "model '{}' has no law '{name}' (available: {})",
                self.name,
                self.laws.join(", ")
            )));
        }
        build_law(self.name, name, t)
    }
}

fn c(v: f64) -> TimeFunction {
    TimeFunction::constant(v)
}

fn gm_mortality() -> TimeFunction {
    TimeFunction::gompertz_makeham(0.0005, 0.00007, 0.09, 40.0)
}

pub fn preset(name: &str) -> Result<Preset> {
    let p = match name {
        "survival" => Preset {
            name: "survival",
            graph: ModelGraph::new(vec!["alive", "dead"], vec![(0, 1)])?,
            payments: PaymentSpec::zero(2)
                .with_sojourn(0, c(-0.05))?
                .with_transition(0, 1, c(1.0))?,
            laws: &["mixture", "deterministic"],
            deterministic_laws: &["deterministic"],
        },
        "active-surrender-dead" => Preset {
            name: "active-surrender-dead",
            graph: ModelGraph::new(vec!["active", "surrender", "dead"], vec![(0, 1), (0, 2)])?,
            payments: PaymentSpec::zero(3)
                .with_sojourn(0, c(-0.1))?
                .with_transition(0, 1, c(0.5))?
                .with_transition(0, 2, c(1.0))?,
            laws: &["independent", "comonotone", "deterministic"],
            deterministic_laws: &["deterministic"],
        },
        "disability" => Preset {
            name: "disability",
            graph: disability_graph()?,
            payments: disability_payments()?,
            laws: &["dependent", "no-active-mortality", "deterministic"],
            deterministic_laws: &["deterministic"],
        },
        "disability-repaired" => {
            let r = repair_model(&disability_graph()?, &disability_payments()?, &[2])?;
            Preset {
                name: "disability-repaired",
                graph: r.augmented,
                payments: r.payments,
                laws: &["dependent", "no-active-mortality", "deterministic"],
                deterministic_laws: &["deterministic"],
            }
        }
        "free-policy" => Preset {
            name: "free-policy",
            graph: ModelGraph::new(
                vec!["active", "free policy", "dead", "surrender", "dead free policy"],
                vec![(0, 1), (0, 2), (0, 3), (1, 3), (1, 4)],
            )?,
            payments: PaymentSpec::zero(5)
                .with_sojourn(0, c(-1.0))?
                .with_transition(0, 2, c(10.0))?
                .with_transition(0, 3, c(2.0))?
                .with_transition(1, 3, c(1.0))?
                .with_transition(1, 4, c(5.0))?,
            laws: &["cir", "deterministic"],
            deterministic_laws: &["deterministic"],
        },
        other => {
            return Err(Error::Parse(format!(
                "unknown model preset '{other}' (available: {})",
                MODELS.join(", ")
            )))
        }
    };
    Ok(p)
}

fn disability_graph() -> Result<ModelGraph> {
    ModelGraph::new(vec!["active", "disabled", "dead"], vec![(0, 1), (0, 2), (1, 2)])
}

fn disability_payments() -> Result<PaymentSpec> {
    PaymentSpec::zero(3)
        .with_sojourn(0, c(-0.2))?
        .with_sojourn(1, c(1.0))?
        .with_transition(0, 1, c(2.0))?
        .with_transition(0, 2, c(5.0))?
        .with_transition(1, 2, c(3.0))
}

/// Two equally likely regimes where high disablement goes with high
/// mortality of the disabled.
pub fn disability_dependent() -> Result<ScenarioSet> {
    ScenarioSet::new(
        vec![(0, 1), (0, 2), (1, 2)],
        vec![vec![c(0.03), c(0.01), c(0.05)], vec![c(0.15), c(0.02), c(0.3)]],
        vec![0.5, 0.5],
    )
}

fn build_law(model: &str, law: &str, t: f64) -> Result<IntensityLaw> {
    let mixture = |set: ScenarioSet| Ok(IntensityLaw::from_prior(set, t));
    match (model, law) {
        ("survival", "mixture") => mixture(ScenarioSet::new(
            vec![(0, 1)],
            vec![vec![c(0.1)], vec![c(0.3)]],
            vec![0.5, 0.5],
        )?),
        ("survival", "deterministic") => mixture(ScenarioSet::deterministic(vec![(0, 1)], vec![gm_mortality()])?),
        ("active-surrender-dead", "independent") => mixture(ScenarioSet::product(
            vec![(0, 1), (0, 2)],
            vec![
                vec![(c(0.02), 0.5), (c(0.1), 0.5)],
                vec![(c(0.005), 0.5), (c(0.03), 0.5)],
            ],
        )?),
        ("active-surrender-dead", "comonotone") => mixture(ScenarioSet::new(
            vec![(0, 1), (0, 2)],
            vec![vec![c(0.02), c(0.005)], vec![c(0.1), c(0.03)]],
            vec![0.5, 0.5],
        )?),
        ("active-surrender-dead", "deterministic") => mixture(ScenarioSet::deterministic(
            vec![(0, 1), (0, 2)],
            vec![c(0.05), gm_mortality()],
        )?),
        ("disability" | "disability-repaired", _) => {
            let set = match law {
                "dependent" => disability_dependent()?,
                "no-active-mortality" => ScenarioSet::new(
                    vec![(0, 1), (0, 2), (1, 2)],
                    vec![vec![c(0.03), c(0.0), c(0.05)], vec![c(0.15), c(0.0), c(0.3)]],
                    vec![0.5, 0.5],
                )?,
                "deterministic" => ScenarioSet::deterministic(
                    vec![(0, 1), (0, 2), (1, 2)],
                    vec![c(0.03), c(0.01), c(0.05)],
                )?,
                other => return Err(Error::Parse(format!("unknown law '{other}'"))),
            };
            if model == "disability" {
                mixture(set)
            } else {
                let r = repair_model(&disability_graph()?, &disability_payments()?, &[2])?;
                r.remap_law(&IntensityLaw::from_prior(set, t))
            }
        }
        ("free-policy", "cir") => Ok(IntensityLaw::Affine(free_policy_spec(1.0)?)),
        ("free-policy", "deterministic") => Ok(IntensityLaw::Affine(free_policy_spec(0.0)?)),
        _ => Err(Error::Parse(format!("model '{model}' has no law '{law}'"))),
    }
}

/// Two CIR factors drive mortality `eta = Z1` and surrender
/// `rho = Z2 + 0.5 Z1`; conversion to free policy is deterministic and free
/// policies surrender at `rho + sigma`. `vol_scale` multiplies both
/// volatilities (0 gives deterministic intensities).
pub fn free_policy_spec(vol_scale: f64) -> Result<AffineSpec> {
    let eta = vec![1.0, 0.0];
    let rho = vec![0.5, 1.0];
    AffineSpec::new(
        vec![
            CirFactor::new(0.5, 0.01, 0.05 * vol_scale, 0.01),
            CirFactor::new(1.0, 0.04, 0.1 * vol_scale, 0.03),
        ],
        vec![
            AffineIntensity {
                from: 0,
                to: 1,
                shift: c(FREE_POLICY_CONVERSION),
                loadings: vec![0.0, 0.0],
            },
            AffineIntensity {
                from: 0,
                to: 2,
                shift: TimeFunction::zero(),
                loadings: eta.clone(),
            },
            AffineIntensity {
                from: 0,
                to: 3,
                shift: TimeFunction::zero(),
                loadings: rho.clone(),
            },
            AffineIntensity {
                from: 1,
                to: 3,
                shift: c(FREE_POLICY_EXTRA_SURRENDER),
                loadings: rho,
            },
            AffineIntensity {
                from: 1,
                to: 4,
                shift: TimeFunction::zero(),
                loadings: eta,
            },
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;

    #[test]
    fn every_preset_law_validates() {
        let grid = TimeGrid::new(0.0, 10.0, 0.01).unwrap();
        for name in MODELS {
            let p = preset(name).unwrap();
            p.payments
                .validate_against(p.graph.num_states(), &p.graph.off_diagonal_pairs())
                .unwrap();
            for law in p.laws {
                p.law(law, 0.0).unwrap().validate_on(&p.graph, &grid).unwrap();
            }
        }
    }

    #[test]
    fn repaired_preset_has_split_dead_state() {
        let p = preset("disability-repaired").unwrap();
        assert_eq!(p.graph.transitions(), &[(0, 1), (0, 3), (1, 2)]);
        assert_eq!(p.graph.label(3), "dead from active");
    }

    #[test]
    fn unknown_names_rejected() {
        assert!(preset("nope").is_err());
        assert!(preset("survival").unwrap().law("cir", 0.0).is_err());
    }
}
