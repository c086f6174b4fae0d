//! End-to-end pipeline: exact conditional curves, forward rates, replacement
//! checks and two-step valuation for one model and law.
//!
//! Exact curves and forward rates live on a grid with half the reporting
//! step. Re-solving the forward equations with candidate rates uses RK4 on
//! the reporting grid, whose midpoint stages then land on tabulated nodes.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::forward_rates::{
    equations_rates, marginal_rates, statewise_rates, verify::compare, CandidateRates, Definition,
    ForwardRateCurve, ReplacementReport, StatewiseFamily,
};
use crate::grid::TimeGrid;
use crate::kolmogorov::{expected_cash_flow, solve_forward, CashFlow, MixtureCurve, TransitionCurve};
use crate::model_graph::{ModelGraph, PaymentSpec};
use crate::rate_scenarios::IntensityLaw;

/// Tolerance for the pass/fail columns of the property table.
pub const PROPERTY_TOL: f64 = 1e-6;

/// Rates of one definition, ready for the forward solver.
#[derive(Debug, Clone)]
pub enum RateSet {
    Shared(ForwardRateCurve),
    PerState(StatewiseFamily),
}

impl RateSet {
    pub fn candidate(&self) -> CandidateRates<'_> {
        match self {
            RateSet::Shared(c) => CandidateRates::Shared(c),
            RateSet::PerState(f) => CandidateRates::PerState(f),
        }
    }

    pub fn for_state(&self, j: usize) -> &ForwardRateCurve {
        self.candidate().for_state(j)
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    graph: ModelGraph,
    law: IntensityLaw,
    grid: TimeGrid,
    fine: TimeGrid,
    oracle: MixtureCurve,
}

impl Analysis {
    /// `grid` is the reporting grid starting at the valuation time.
    pub fn new(graph: ModelGraph, law: IntensityLaw, grid: TimeGrid) -> Result<Self> {
        law.validate_on(&graph, &grid)?;
        let fine = grid.refined();
        let oracle = match &law {
            IntensityLaw::Mixture { set, weights } => {
                MixtureCurve::from_scenarios(graph.num_states(), set, weights, &fine)?
            }
            IntensityLaw::Affine(spec) => MixtureCurve::from_affine(&graph, spec, &fine)?,
        };
        Ok(Self {
            graph,
            law,
            grid,
            fine,
            oracle,
        })
    }

    pub fn graph(&self) -> &ModelGraph {
        &self.graph
    }

    pub fn law(&self) -> &IntensityLaw {
        &self.law
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn fine_grid(&self) -> &TimeGrid {
        &self.fine
    }

    pub fn oracle(&self) -> &MixtureCurve {
        &self.oracle
    }

    fn check_state(&self, j: usize) -> Result<()> {
        if j >= self.graph.num_states() {
            return Err(Error::InvalidModel(format!(
                "state {j} out of range (model has {} states)",
                self.graph.num_states()
            )));
        }
        Ok(())
    }

    pub fn marginal(&self) -> Result<ForwardRateCurve> {
        marginal_rates(&self.law, &self.graph, &self.fine)
    }

    pub fn equations(&self) -> Result<ForwardRateCurve> {
        equations_rates(&self.oracle, &self.graph)
    }

    pub fn statewise(&self, j: usize) -> Result<ForwardRateCurve> {
        self.check_state(j)?;
        statewise_rates(&self.oracle, j)
    }

    pub fn statewise_family(&self) -> Result<StatewiseFamily> {
        StatewiseFamily::compute(&self.oracle)
    }

    pub fn rate_set(&self, definition: Definition) -> Result<RateSet> {
        Ok(match definition {
            Definition::Marginal => RateSet::Shared(self.marginal()?),
            Definition::Equations => RateSet::Shared(self.equations()?),
            Definition::Statewise => RateSet::PerState(self.statewise_family()?),
        })
    }

    /// Rates of `definition` on the fine grid; `conditioning` only matters
    /// for statewise rates.
    pub fn rates(&self, definition: Definition, conditioning: usize) -> Result<ForwardRateCurve> {
        match definition {
            Definition::Marginal => self.marginal(),
            Definition::Equations => self.equations(),
            Definition::Statewise => self.statewise(conditioning),
        }
    }

    /// Forward solution on the reporting grid under the candidate rates.
    pub fn resolve(&self, rates: &RateSet) -> Result<TransitionCurve> {
        solve_forward(&rates.candidate().to_rates()?, &self.grid)
    }

    /// Replacement checks from every non-absorbing starting state.
    pub fn verify(&self, rates: &RateSet) -> Result<Vec<ReplacementReport>> {
        let resolved = self.resolve(rates)?;
        self.transient_states()
            .map(|j| compare(&self.oracle, rates.candidate(), &resolved, j))
            .collect()
    }

    pub fn transient_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.graph.num_states()).filter(|&j| !self.graph.is_absorbing(j))
    }

    /// Two-step valuation: solve with the forward rates, then integrate the
    /// classic cash-flow formula on the reporting grid.
    pub fn cash_flow(&self, rates: &RateSet, payments: &PaymentSpec, start: &[f64]) -> Result<CashFlow> {
        let resolved = self.resolve(rates)?;
        expected_cash_flow(&resolved, &rates.candidate().to_rates()?, payments, start)
    }

    /// Exact expected cash flow from the conditional occupancies and
    /// densities, integrated on the reporting grid.
    pub fn oracle_cash_flow(&self, payments: &PaymentSpec, start: &[f64]) -> Result<CashFlow> {
        let rate = self.oracle.cash_flow_rate(payments, start)?;
        CashFlow::from_rate(self.fine, rate)?.restrict(&self.grid)
    }

    /// Largest difference between each rate of `definition` in this model
    /// and the same definition in a two-state model carrying only that
    /// transition's intensity.
    pub fn universality_gap(&self, definition: Definition, rates: &RateSet) -> Result<f64> {
        let two_state = ModelGraph::new(vec!["from", "to"], vec![(0, 1)])?;
        let mut gap = 0.0f64;
        for (k, l) in self.law.transitions() {
            let isolated = Analysis::new(two_state.clone(), self.law.isolate((k, l), (0, 1))?, self.grid)?;
            let reference = isolated.rates(definition, 0)?;
            match rates {
                RateSet::Shared(c) => gap = gap.max(c.max_pair_diff(k, l, &reference, 0, 1)),
                RateSet::PerState(f) => {
                    for j in self.transient_states() {
                        gap = gap.max(f.get(j).max_pair_diff(k, l, &reference, 0, 1));
                    }
                }
            }
        }
        Ok(gap)
    }

    /// Largest difference of the rates between two starting states; 0 for
    /// rates that do not depend on the starting state.
    pub fn measurability_gap(&self, rates: &RateSet) -> Result<f64> {
        let RateSet::PerState(f) = rates else {
            return Ok(0.0);
        };
        let states: Vec<usize> = self.transient_states().collect();
        let mut gap = 0.0f64;
        for (i, &a) in states.iter().enumerate() {
            for &b in &states[i + 1..] {
                gap = gap.max(f.get(a).max_abs_diff(f.get(b))?);
            }
        }
        Ok(gap)
    }

    pub fn property_row(&self, definition: Definition) -> Result<PropertyRow> {
        let rates = self.rate_set(definition)?;
        let reports = self.verify(&rates)?;
        Ok(PropertyRow {
            definition,
            universality: self.universality_gap(definition, &rates)?,
            measurability: self.measurability_gap(&rates)?,
            occupancy: reports.iter().map(|r| r.occupancy_error).fold(0.0, f64::max),
            density: reports.iter().map(|r| r.density_error).fold(0.0, f64::max),
            net_flux: reports.iter().map(|r| r.net_flux_error).fold(0.0, f64::max),
            reports,
        })
    }

    pub fn property_table(&self, definitions: &[Definition]) -> Result<PropertyTable> {
        Ok(PropertyTable {
            rows: definitions
                .iter()
                .map(|d| self.property_row(*d))
                .collect::<Result<_>>()?,
            tolerance: PROPERTY_TOL,
        })
    }
}

/// Deviations measured for one definition; each property holds when its
/// deviation is within the table tolerance.
#[derive(Debug, Clone)]
pub struct PropertyRow {
    pub definition: Definition,
    pub universality: f64,
    pub measurability: f64,
    pub occupancy: f64,
    pub density: f64,
    pub net_flux: f64,
    pub reports: Vec<ReplacementReport>,
}

#[derive(Debug, Clone)]
pub struct PropertyTable {
    pub rows: Vec<PropertyRow>,
    pub tolerance: f64,
}

impl PropertyTable {
    pub const COLUMNS: [&'static str; 4] = [
        "universality",
        "state-independence",
        "occupancy-replacement",
        "density-replacement",
    ];

    pub fn row(&self, definition: Definition) -> Option<&PropertyRow> {
        self.rows.iter().find(|r| r.definition == definition)
    }

    /// `[universality, state-independence, occupancy, density]` pass flags.
    pub fn flags(&self, row: &PropertyRow) -> [bool; 4] {
        [
            row.universality <= self.tolerance,
            row.measurability <= self.tolerance,
            row.occupancy <= self.tolerance,
            row.density <= self.tolerance,
        ]
    }

    /// Plain-text table with pass/fail marks and the measured deviations,
    /// followed by per-starting-state replacement errors.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tolerance {:.1e}", self.tolerance);
        let _ = write!(out, "{:<10}", "definition");
        for c in Self::COLUMNS {
            let _ = write!(out, " {c:>22}");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{:<10}", row.definition.name());
            let values = [row.universality, row.measurability, row.occupancy, row.density];
            for (ok, v) in self.flags(row).iter().zip(values) {
                let cell = format!("{} ({v:.2e})", if *ok { "pass" } else { "FAIL" });
                let _ = write!(out, " {cell:>22}");
            }
            out.push('\n');
        }
        out.push('\n');
        let _ = writeln!(
            out,
            "{:<10} {:>5} {:>12} {:>12} {:>12}",
            "definition", "from", "occupancy", "density", "net-flux"
        );
        for row in &self.rows {
            for r in &row.reports {
                let _ = writeln!(
                    out,
                    "{:<10} {:>5} {:>12.4e} {:>12.4e} {:>12.4e}",
                    row.definition.name(),
                    r.conditioning,
                    r.occupancy_error,
                    r.density_error,
                    r.net_flux_error
                );
            }
        }
        out
    }
}
