//! Forward transition rates for multi-state Markov models whose transition
//! intensities are themselves stochastic.
//!
//! Given a model graph and a law of the intensities ([`IntensityLaw`]), the
//! crate computes exact conditional transition curves, three kinds of
//! deterministic forward rates, checks which replacement identities each
//! kind satisfies, valuates cash flows in two steps (solve with forward
//! rates, then integrate) and cross-checks everything by Monte Carlo.

pub mod analysis;
pub mod csv_io;
pub mod error;
pub mod forward_rates;
pub mod grid;
pub mod kolmogorov;
pub mod mc_oracle;
pub mod model_graph;
pub mod presets;
pub mod rate_scenarios;
pub mod rk4;
pub mod time_fn;

pub use analysis::{Analysis, PropertyTable, RateSet};
pub use error::{Error, Result};
pub use forward_rates::{Definition, ForwardRateCurve};
pub use grid::TimeGrid;
pub use kolmogorov::{CashFlow, MixtureCurve, TransitionCurve};
pub use model_graph::{ModelGraph, PaymentSpec, Transition, TransitionPayment};
pub use rate_scenarios::{IntensityLaw, ScenarioSet};
pub use time_fn::TimeFunction;
