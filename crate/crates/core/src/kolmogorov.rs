//! Kolmogorov forward equations, mixture transition curves and cash-flow
//! valuation.
//!
//! Matrices are stored flattened: a transition curve keeps `n * n` values per
//! grid node, row-major, and transition densities keep `n * n * n` values per
//! node indexed `(j, k, l)` for "started in `j`, currently in `k`, jumping to
//! `l`".

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::model_graph::{ModelGraph, PaymentSpec};
use crate::rate_scenarios::{AffineSpec, PosteriorWeights, ScenarioSet};
use crate::rk4;
use crate::time_fn::TimeFunction;

/// Occupancy probabilities below this count as zero when forming ratios.
pub const OCCUPANCY_FLOOR: f64 = 1e-12;

/// Deterministic transition rates, possibly depending on the state the
/// process occupied at the valuation time.
pub trait TransitionRates: Sync {
    fn num_states(&self) -> usize;

    /// Write the rate `k -> l` at time `s` into `out[k * n + l]` for the chain
    /// started in `conditioning`. Diagonal entries are ignored.
    fn fill(&self, conditioning: usize, s: f64, out: &mut [f64]) -> Result<()>;
}

/// Rates given by deterministic functions of time.
#[derive(Debug, Clone)]
pub struct DeterministicRates {
    n: usize,
    entries: Vec<(usize, usize, TimeFunction)>,
}

impl DeterministicRates {
    pub fn new(n: usize, entries: Vec<(usize, usize, TimeFunction)>) -> Result<Self> {
        for (j, k, f) in &entries {
            if *j >= n || *k >= n || j == k {
                return Err(Error::InvalidModel(format!("rate on invalid pair {j}->{k}")));
            }
            f.validate()?;
        }
        Ok(Self { n, entries })
    }
}

impl TransitionRates for DeterministicRates {
    fn num_states(&self) -> usize {
        self.n
    }

    fn fill(&self, _conditioning: usize, s: f64, out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        for (j, k, f) in &self.entries {
            out[j * self.n + k] += f.value(s);
        }
        Ok(())
    }
}

/// The intensity paths of one scenario.
pub struct ScenarioRates<'a> {
    set: &'a ScenarioSet,
    scenario: usize,
    n: usize,
}

impl<'a> ScenarioRates<'a> {
    pub fn new(set: &'a ScenarioSet, scenario: usize, n: usize) -> Self {
        Self { set, scenario, n }
    }
}

impl TransitionRates for ScenarioRates<'_> {
    fn num_states(&self) -> usize {
        self.n
    }

    fn fill(&self, _conditioning: usize, s: f64, out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        for (f, &(j, k)) in self.set.paths(self.scenario).iter().zip(self.set.transitions()) {
            out[j * self.n + k] = f.value(s);
        }
        Ok(())
    }
}

/// Rates tabulated on a grid, either shared by all starting states or one
/// table per starting state. Off-node times are linearly interpolated.
#[derive(Debug, Clone)]
pub struct SampledRates {
    grid: TimeGrid,
    n: usize,
    /// `tables[c]` holds `n * n` values per node; one table means shared.
    tables: Vec<Vec<f64>>,
}

impl SampledRates {
    pub fn shared(grid: TimeGrid, n: usize, values: Vec<f64>) -> Result<Self> {
        Self::per_state(grid, n, vec![values])
    }

    pub fn per_state(grid: TimeGrid, n: usize, tables: Vec<Vec<f64>>) -> Result<Self> {
        if tables.is_empty() || (tables.len() != 1 && tables.len() != n) {
            return Err(Error::GridMismatch(format!(
                "{} rate tables for {n} states",
                tables.len()
            )));
        }
        for t in &tables {
            if t.len() != grid.len() * n * n {
                return Err(Error::GridMismatch(format!(
                    "rate table has {} values, grid needs {}",
                    t.len(),
                    grid.len() * n * n
                )));
            }
        }
        Ok(Self { grid, n, tables })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn table(&self, conditioning: usize) -> &[f64] {
        if self.tables.len() == 1 {
            &self.tables[0]
        } else {
            &self.tables[conditioning]
        }
    }
}

impl TransitionRates for SampledRates {
    fn num_states(&self) -> usize {
        self.n
    }

    fn fill(&self, conditioning: usize, s: f64, out: &mut [f64]) -> Result<()> {
        let table = self.table(conditioning);
        let nn = self.n * self.n;
        if let Some(i) = self.grid.index_of(s) {
            out.copy_from_slice(&table[i * nn..(i + 1) * nn]);
            return Ok(());
        }
        let x = ((s - self.grid.t0()) / self.grid.step()).clamp(0.0, self.grid.intervals() as f64);
        let i = (x.floor() as usize).min(self.grid.intervals() - 1);
        let frac = x - i as f64;
        let (lo, hi) = (&table[i * nn..(i + 1) * nn], &table[(i + 1) * nn..(i + 2) * nn]);
        for ((o, a), b) in out.iter_mut().zip(lo).zip(hi) {
            *o = a + frac * (b - a);
        }
        Ok(())
    }
}

/// Solution of the forward equations, one matrix per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionCurve {
    grid: TimeGrid,
    n: usize,
    values: Vec<f64>,
}

impl TransitionCurve {
    pub fn from_values(grid: TimeGrid, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() * n * n {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes of {n}x{n} matrices",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, n, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    pub fn get(&self, node: usize, j: usize, k: usize) -> f64 {
        self.values[(node * self.n + j) * self.n + k]
    }

    pub fn matrix(&self, node: usize) -> &[f64] {
        let nn = self.n * self.n;
        &self.values[node * nn..(node + 1) * nn]
    }

    pub fn row(&self, node: usize, j: usize) -> &[f64] {
        let start = (node * self.n + j) * self.n;
        &self.values[start..start + self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest `|sum_k P_jk - 1|` over nodes and rows.
    pub fn max_row_sum_error(&self) -> f64 {
        self.values
            .chunks_exact(self.n)
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Keep only the nodes of `coarse`, which must be contained in this grid.
    pub fn restrict(&self, coarse: &TimeGrid) -> Result<Self> {
        let idx = restriction_indices(&self.grid, coarse)?;
        let nn = self.n * self.n;
        let mut values = Vec::with_capacity(idx.len() * nn);
        for i in idx {
            values.extend_from_slice(self.matrix(i));
        }
        Self::from_values(*coarse, self.n, values)
    }

    /// Largest absolute difference of row `j` against the same row of
    /// `other`, over the nodes of the coarser of the two grids.
    pub fn max_row_diff(&self, other: &TransitionCurve, j: usize) -> Result<f64> {
        let (fine, coarse) = if self.grid.len() >= other.grid.len() {
            (self, other)
        } else {
            (other, self)
        };
        let idx = restriction_indices(&fine.grid, &coarse.grid)?;
        let mut m: f64 = 0.0;
        for (ci, fi) in idx.into_iter().enumerate() {
            for (a, b) in fine.row(fi, j).iter().zip(coarse.row(ci, j)) {
                m = m.max((a - b).abs());
            }
        }
        Ok(m)
    }
}

/// Node indices of `fine` that coincide with the nodes of `coarse`.
pub fn restriction_indices(fine: &TimeGrid, coarse: &TimeGrid) -> Result<Vec<usize>> {
    if !fine.contains_grid(coarse) {
        return Err(Error::GridMismatch(format!(
            "grid {coarse:?} is not a subgrid of {fine:?}"
        )));
    }
    let k = (coarse.step() / fine.step()).round() as usize;
    Ok((0..coarse.len()).map(|i| i * k).collect())
}

/// RK4 solution of `d/dT P(t, T) = P(t, T) Lambda(T)` with `P(t, t) = I`,
/// one step per grid interval. Each starting row uses the rates for that
/// starting state. Negative rates are accepted.
pub fn solve_forward(rates: &dyn TransitionRates, grid: &TimeGrid) -> Result<TransitionCurve> {
    let n = rates.num_states();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|j| solve_row(rates, j, grid))
        .collect::<Result<_>>()?;
    let nn = n * n;
    let mut values = vec![0.0; grid.len() * nn];
    for (j, row) in rows.iter().enumerate() {
        for node in 0..grid.len() {
            values[node * nn + j * n..node * nn + (j + 1) * n]
                .copy_from_slice(&row[node * n..(node + 1) * n]);
        }
    }
    TransitionCurve::from_values(*grid, n, values)
}

fn solve_row(rates: &dyn TransitionRates, j: usize, grid: &TimeGrid) -> Result<Vec<f64>> {
    let n = rates.num_states();
    let mut mu = vec![0.0; n * n];
    let mut y0 = vec![0.0; n];
    y0[j] = 1.0;
    rk4::integrate(
        |s, p, dp| {
            rates.fill(j, s, &mut mu)?;
            for k in 0..n {
                for l in 0..n {
                    let v = mu[k * n + l];
                    if k != l && !v.is_finite() {
                        return Err(Error::NonFiniteRate {
                            from: k,
                            to: l,
                            time: s,
                            value: v,
                        });
                    }
                }
            }
            apply_generator(&mu, p, dp, n);
            Ok(())
        },
        grid,
        &y0,
    )
}

/// `dp_k = sum_{l != k} p_l mu_lk - p_k sum_{l != k} mu_kl`.
fn apply_generator(mu: &[f64], p: &[f64], dp: &mut [f64], n: usize) {
    for k in 0..n {
        let mut inflow = 0.0;
        let mut exit = 0.0;
        for l in 0..n {
            if l != k {
                inflow += p[l] * mu[l * n + k];
                exit += mu[k * n + l];
            }
        }
        dp[k] = inflow - p[k] * exit;
    }
}

/// Conditional expectations of occupancy and transition densities under a
/// law of the intensities: `P_jk(t, T) = E[1(X_T = k) | X_t = j, F_t]` and
/// `D_jkl(t, T) = E[1(X_T = k) mu_kl(T) | X_t = j, F_t]`.
#[derive(Debug, Clone)]
pub struct MixtureCurve {
    probabilities: TransitionCurve,
    densities: Vec<f64>,
    /// For affine laws, the conditional intensity given occupancy of a
    /// transient state, `n * n` per node.
    kernel: Option<Vec<f64>>,
}

impl MixtureCurve {
    /// `sum_i w_i P^(i)` with densities `sum_i w_i P^(i)_jk mu^(i)_kl(T)`.
    ///
    /// Scenarios are solved in parallel and combined in index order.
    pub fn from_scenarios(
        n: usize,
        set: &ScenarioSet,
        weights: &PosteriorWeights,
        grid: &TimeGrid,
    ) -> Result<Self> {
        if weights.weights.len() != set.len() {
            return Err(Error::InvalidScenarios("weights do not match scenarios".into()));
        }
        if set.transitions().iter().any(|&(j, k)| j >= n || k >= n) {
            return Err(Error::InvalidScenarios("transition outside the state space".into()));
        }
        let active: Vec<usize> = (0..set.len()).filter(|&i| weights.weights[i] > 0.0).collect();
        let solved: Vec<(TransitionCurve, Vec<f64>)> = active
            .par_iter()
            .map(|&i| {
                let rates = ScenarioRates::new(set, i, n);
                let curve = solve_forward(&rates, grid)?;
                let mut mu_all = vec![0.0; grid.len() * n * n];
                for (node, s) in grid.nodes().enumerate() {
                    rates.fill(0, s, &mut mu_all[node * n * n..(node + 1) * n * n])?;
                }
                Ok((curve, mu_all))
            })
            .collect::<Result<_>>()?;
        let nn = n * n;
        let mut probs = vec![0.0; grid.len() * nn];
        let mut dens = vec![0.0; grid.len() * nn * n];
        for (&i, (curve, mu_all)) in active.iter().zip(&solved) {
            let w = weights.weights[i];
            for node in 0..grid.len() {
                let mu = &mu_all[node * nn..(node + 1) * nn];
                for j in 0..n {
                    for k in 0..n {
                        let p = curve.get(node, j, k);
                        probs[node * nn + j * n + k] += w * p;
                        for l in 0..n {
                            if l != k {
                                dens[(node * nn + j * n + k) * n + l] += w * p * mu[k * n + l];
                            }
                        }
                    }
                }
            }
        }
        Ok(Self {
            probabilities: TransitionCurve::from_values(*grid, n, probs)?,
            densities: dens,
            kernel: None,
        })
    }

    /// Exact conditional curves for affine intensities with a common
    /// stochastic exit: every transient state must carry the same total
    /// factor loading on its exits, and transitions between transient states
    /// must be deterministic.
    ///
    /// Then `P_jk = E[Phi] Q_jk` for transient `j, k`, with `Phi` the common
    /// stochastic survival factor and `Q` the solution of the forward
    /// equations for the deterministic parts. Densities are
    /// `P_jk * kernel_kl` with `kernel_kl = E[Phi mu_kl(T)] / E[Phi]`, and
    /// absorbing occupancies integrate the inflowing densities.
    pub fn from_affine(graph: &ModelGraph, spec: &AffineSpec, grid: &TimeGrid) -> Result<Self> {
        let n = graph.num_states();
        let nf = spec.num_factors();
        let transient: Vec<bool> = (0..n).map(|k| !graph.is_absorbing(k)).collect();
        for i in &spec.intensities {
            if !graph.has_transition(i.from, i.to) {
                return Err(Error::InvalidAffine(format!(
                    "intensity {}->{} is not a transition of the model",
                    i.from, i.to
                )));
            }
            if transient[i.to] && i.loadings.iter().any(|l| *l != 0.0) {
                return Err(Error::Unsupported(format!(
                    "stochastic intensity {}->{} between transient states",
                    i.from, i.to
                )));
            }
        }
        let mut gamma: Option<Vec<f64>> = None;
        for k in (0..n).filter(|&k| transient[k]) {
            let mut g = vec![0.0; nf];
            for i in spec.intensities.iter().filter(|i| i.from == k) {
                for (a, b) in g.iter_mut().zip(&i.loadings) {
                    *a += b;
                }
            }
            match &gamma {
                None => gamma = Some(g),
                Some(g0) => {
                    if g0.iter().zip(&g).any(|(a, b)| (a - b).abs() > 1e-12) {
                        return Err(Error::Unsupported(format!(
                            "total exit loadings differ between states: {g0:?} vs {g:?}"
                        )));
                    }
                }
            }
        }
        let gamma = gamma.unwrap_or_else(|| vec![0.0; nf]);

        let shifts: Vec<(usize, usize, TimeFunction)> = spec
            .intensities
            .iter()
            .map(|i| (i.from, i.to, i.shift.clone()))
            .collect();
        let det = DeterministicRates::new(n, shifts)?;
        let q = solve_forward(&det, grid)?;

        let sols = spec.riccati_all(&gamma, grid)?;
        let phi: Vec<f64> = (0..grid.len())
            .map(|node| {
                sols.iter()
                    .zip(&spec.factors)
                    .map(|(s, f)| s.a[node] - s.b[node] * f.initial)
                    .sum::<f64>()
                    .exp()
            })
            .collect();

        let nn = n * n;
        let mut kernel = vec![0.0; grid.len() * nn];
        for (node, s) in grid.nodes().enumerate() {
            for i in &spec.intensities {
                let stoch: f64 = i
                    .loadings
                    .iter()
                    .zip(sols.iter().zip(&spec.factors))
                    .filter(|(l, _)| **l != 0.0)
                    .map(|(l, (sol, f))| l * sol.terminal_mean(node, f.initial))
                    .sum();
                kernel[node * nn + i.from * n + i.to] = i.shift.value(s) + stoch;
            }
        }

        let mut probs = vec![0.0; grid.len() * nn];
        let mut dens = vec![0.0; grid.len() * nn * n];
        for j in 0..n {
            if !transient[j] {
                for node in 0..grid.len() {
                    probs[node * nn + j * n + j] = 1.0;
                }
                continue;
            }
            for node in 0..grid.len() {
                for k in (0..n).filter(|&k| transient[k]) {
                    let p = phi[node] * q.get(node, j, k);
                    probs[node * nn + j * n + k] = p;
                    for l in (0..n).filter(|&l| l != k) {
                        dens[(node * nn + j * n + k) * n + l] = p * kernel[node * nn + k * n + l];
                    }
                }
            }
            for k in (0..n).filter(|&k| !transient[k]) {
                let inflow: Vec<f64> = (0..grid.len())
                    .map(|node| {
                        (0..n)
                            .filter(|&l| l != k)
                            .map(|l| dens[(node * nn + j * n + l) * n + k])
                            .sum()
                    })
                    .collect();
                let acc = cumulative_simpson(grid.step(), &inflow);
                for (node, a) in acc.into_iter().enumerate() {
                    probs[node * nn + j * n + k] = a;
                }
            }
        }
        for node in 0..grid.len() {
            for k in (0..n).filter(|&k| !transient[k]) {
                for l in 0..n {
                    kernel[node * nn + k * n + l] = 0.0;
                }
            }
        }
        Ok(Self {
            probabilities: TransitionCurve::from_values(*grid, n, probs)?,
            densities: dens,
            kernel: Some(kernel),
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        self.probabilities.grid()
    }

    pub fn num_states(&self) -> usize {
        self.probabilities.num_states()
    }

    pub fn probabilities(&self) -> &TransitionCurve {
        &self.probabilities
    }

    pub fn probability(&self, node: usize, j: usize, k: usize) -> f64 {
        self.probabilities.get(node, j, k)
    }

    pub fn density(&self, node: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.num_states();
        self.densities[((node * n + j) * n + k) * n + l]
    }

    /// `d/dT P_jk = sum_{l != k} D_jlk - sum_{l != k} D_jkl`.
    pub fn derivative(&self, node: usize, j: usize, k: usize) -> f64 {
        let n = self.num_states();
        let mut v = 0.0;
        for l in (0..n).filter(|&l| l != k) {
            v += self.density(node, j, l, k) - self.density(node, j, k, l);
        }
        v
    }

    /// The derivative curve, flattened like [`TransitionCurve`].
    pub fn derivative_values(&self) -> Vec<f64> {
        let n = self.num_states();
        let mut out = Vec::with_capacity(self.grid().len() * n * n);
        for node in 0..self.grid().len() {
            for j in 0..n {
                for k in 0..n {
                    out.push(self.derivative(node, j, k));
                }
            }
        }
        out
    }

    /// `D_jkl / P_jk`, or `None` where `P_jk <= OCCUPANCY_FLOOR`.
    pub fn statewise(&self, node: usize, j: usize, k: usize, l: usize) -> Option<f64> {
        let p = self.probability(node, j, k);
        if p <= OCCUPANCY_FLOOR {
            return None;
        }
        if let Some(kernel) = &self.kernel {
            let n = self.num_states();
            return Some(kernel[(node * n + k) * n + l]);
        }
        Some(self.density(node, j, k, l) / p)
    }

    /// Integrand `sum_j pi_j sum_k (P_jk b_k + sum_l D_jkl b_kl)` at every node.
    pub fn cash_flow_rate(&self, payments: &PaymentSpec, start: &[f64]) -> Result<Vec<f64>> {
        let n = self.num_states();
        check_start(start, n)?;
        check_payments(payments, n)?;
        Ok(self
            .grid()
            .nodes()
            .enumerate()
            .map(|(node, s)| {
                let mut total = 0.0;
                for (j, &pi) in start.iter().enumerate().filter(|(_, p)| **p != 0.0) {
                    for k in 0..n {
                        let mut v = self.probability(node, j, k) * payments.sojourn(k).value(s);
                        for p in payments.transition_payments().iter().filter(|p| p.from == k) {
                            v += self.density(node, j, k, p.to) * p.amount.value(s);
                        }
                        total += pi * v;
                    }
                }
                total
            })
            .collect())
    }
}

fn check_start(start: &[f64], n: usize) -> Result<()> {
    if start.len() != n {
        return Err(Error::InvalidModel(format!(
            "start distribution has {} entries for {n} states",
            start.len()
        )));
    }
    let total: f64 = start.iter().sum();
    if start.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidModel(
            "start distribution must be nonnegative and sum to 1".into(),
        ));
    }
    Ok(())
}

fn check_payments(payments: &PaymentSpec, n: usize) -> Result<()> {
    if payments.num_states() != n {
        return Err(Error::GridMismatch(format!(
            "payments cover {} states, model has {n}",
            payments.num_states()
        )));
    }
    Ok(())
}

/// Point mass on `state`.
pub fn point_mass(n: usize, state: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[state] = 1.0;
    v
}

/// Running integral of equally spaced samples, fourth order.
///
/// Even nodes accumulate Simpson panels; odd nodes add a one-interval
/// quadratic rule to the preceding even node.
pub fn cumulative_simpson(h: f64, f: &[f64]) -> Vec<f64> {
    let len = f.len();
    let mut out = vec![0.0; len];
    if len < 2 {
        return out;
    }
    if len == 2 {
        out[1] = 0.5 * h * (f[0] + f[1]);
        return out;
    }
    for i in 1..len {
        out[i] = if i % 2 == 0 {
            out[i - 2] + h / 3.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i])
        } else if i + 1 < len {
            out[i - 1] + h / 12.0 * (5.0 * f[i - 1] + 8.0 * f[i] - f[i + 1])
        } else {
            out[i - 1] + h / 12.0 * (-f[i - 2] + 8.0 * f[i - 1] + 5.0 * f[i])
        };
    }
    out
}

/// Expected accumulated cash flow `A(t, T)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CashFlow {
    pub grid: TimeGrid,
    /// `A(t, T)` per node; `A(t, t) = 0`.
    pub accumulated: Vec<f64>,
    /// `dA/dT` per node.
    pub rate: Vec<f64>,
    /// Optional split of `accumulated` by the state paying (sojourn in `k`
    /// or transition out of `k`).
    pub by_state: Option<Vec<Vec<f64>>>,
}

impl CashFlow {
    pub fn from_rate(grid: TimeGrid, rate: Vec<f64>) -> Result<Self> {
        if rate.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} cash-flow rates for {} nodes",
                rate.len(),
                grid.len()
            )));
        }
        let accumulated = cumulative_simpson(grid.step(), &rate);
        Ok(Self {
            grid,
            accumulated,
            rate,
            by_state: None,
        })
    }

    /// `A(t, horizon)`.
    pub fn total(&self) -> f64 {
        *self.accumulated.last().expect("grid has nodes")
    }

    /// Keep only the nodes of `coarse` and re-integrate the rate there.
    pub fn restrict(&self, coarse: &TimeGrid) -> Result<Self> {
        let idx = restriction_indices(&self.grid, coarse)?;
        let rate = idx.iter().map(|&i| self.rate[i]).collect();
        Self::from_rate(*coarse, rate)
    }
}

/// `A(t, T) = \int_t^T sum_j pi_j sum_k P_jk(s) (b_k(s) + sum_l m_kl(s) b_kl(s)) ds`
/// where the rates are those for starting state `j`.
pub fn expected_cash_flow(
    curve: &TransitionCurve,
    rates: &dyn TransitionRates,
    payments: &PaymentSpec,
    start: &[f64],
) -> Result<CashFlow> {
    let n = curve.num_states();
    if rates.num_states() != n {
        return Err(Error::GridMismatch(format!(
            "rates for {} states, curve has {n}",
            rates.num_states()
        )));
    }
    check_start(start, n)?;
    check_payments(payments, n)?;
    let grid = *curve.grid();
    let mut mu = vec![0.0; n * n];
    let mut per_state = vec![vec![0.0; grid.len()]; n];
    for (node, s) in grid.nodes().enumerate() {
        for (j, &pi) in start.iter().enumerate().filter(|(_, p)| **p != 0.0) {
            rates.fill(j, s, &mut mu)?;
            for k in 0..n {
                let mut v = payments.sojourn(k).value(s);
                for p in payments.transition_payments().iter().filter(|p| p.from == k) {
                    v += mu[k * n + p.to] * p.amount.value(s);
                }
                per_state[k][node] += pi * curve.get(node, j, k) * v;
            }
        }
    }
    let rate: Vec<f64> = (0..grid.len())
        .map(|node| per_state.iter().map(|r| r[node]).sum())
        .collect();
    let mut cf = CashFlow::from_rate(grid, rate)?;
    cf.by_state = Some(
        per_state
            .iter()
            .map(|r| cumulative_simpson(grid.step(), r))
            .collect(),
    );
    Ok(cf)
}

/// `V(t) = \int_t^horizon exp(-\int_t^s r) dA(t, s)` with deterministic `r`.
pub fn prospective_reserve(cash_flow: &CashFlow, short_rate: &TimeFunction) -> f64 {
    let t = cash_flow.grid.t0();
    let discounted: Vec<f64> = cash_flow
        .grid
        .nodes()
        .zip(&cash_flow.rate)
        .map(|(s, a)| (-short_rate.integral(t, s)).exp() * a)
        .collect();
    *cumulative_simpson(cash_flow.grid.step(), &discounted)
        .last()
        .expect("grid has nodes")
}
