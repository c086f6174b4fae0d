//! Intensities driven by independent CIR factors.
//!
//! Each intensity is `shift(s) + sum_f loading_f * Z_f(s)` with
//! `dZ_f = kappa_f (theta_f - Z_f) dt + sigma_f sqrt(Z_f) dW_f`. Conditional
//! expectations of `exp(-\int gamma . Z)` and of `exp(-\int gamma . Z) Z_f(T)`
//! are exponential-affine in the current factor values with coefficients given
//! by Riccati ODEs in the time to maturity.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::model_graph::Transition;
use crate::rk4;
use crate::time_fn::TimeFunction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirFactor {
    /// Mean-reversion speed.
    pub kappa: f64,
    /// Long-run level.
    pub theta: f64,
    /// Volatility.
    pub sigma: f64,
    /// Factor value at the valuation time.
    pub initial: f64,
}

impl CirFactor {
    pub fn new(kappa: f64, theta: f64, sigma: f64, initial: f64) -> Self {
        Self {
            kappa,
            theta,
            sigma,
            initial,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = [self.kappa, self.theta, self.sigma, self.initial]
            .iter()
            .all(|x| x.is_finite() && *x >= 0.0);
        if !ok {
            return Err(Error::InvalidAffine(format!(
                "CIR parameters must be finite and nonnegative: {self:?}"
            )));
        }
        Ok(())
    }

    /// `2 kappa theta >= sigma^2`; reported, never enforced.
    pub fn satisfies_feller(&self) -> bool {
        2.0 * self.kappa * self.theta >= self.sigma * self.sigma
    }

    /// `E[Z_s]` for `s` years ahead.
    pub fn mean(&self, s: f64) -> f64 {
        self.theta + (self.initial - self.theta) * (-self.kappa * s).exp()
    }

    /// Draw `Z` on every node of `grid` from the exact transition law
    /// (scaled noncentral chi-square), starting at `initial`.
    pub fn sample_path<R: Rng + ?Sized>(&self, rng: &mut R, grid: &TimeGrid) -> Vec<f64> {
        let dt = grid.step();
        let decay = (-self.kappa * dt).exp();
        let mut out = Vec::with_capacity(grid.len());
        let mut z = self.initial;
        out.push(z);
        if self.sigma == 0.0 {
            for _ in 0..grid.intervals() {
                z = self.theta + (z - self.theta) * decay;
                out.push(z);
            }
            return out;
        }
        let scale = if self.kappa == 0.0 {
            0.25 * self.sigma * self.sigma * dt
        } else {
            self.sigma * self.sigma * (-(-self.kappa * dt).exp_m1()) / (4.0 * self.kappa)
        };
        let dof = 4.0 * self.kappa * self.theta / (self.sigma * self.sigma);
        for _ in 0..grid.intervals() {
            let noncentrality = z * decay / scale;
            z = scale * noncentral_chi_square(rng, dof, noncentrality);
            out.push(z);
        }
        out
    }
}

/// Poisson mixture of central chi-squares.
fn noncentral_chi_square<R: Rng + ?Sized>(rng: &mut R, dof: f64, noncentrality: f64) -> f64 {
    let extra = if noncentrality > 0.0 {
        Poisson::new(0.5 * noncentrality)
            .expect("positive Poisson mean")
            .sample(rng)
    } else {
        0.0
    };
    let k = dof + 2.0 * extra;
    if k <= 0.0 {
        return 0.0;
    }
    Gamma::new(0.5 * k, 2.0).expect("positive shape").sample(rng)
}

/// `mu_{from,to}(s) = shift(s) + sum_f loadings[f] * Z_f(s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineIntensity {
    pub from: usize,
    pub to: usize,
    #[serde(default)]
    pub shift: TimeFunction,
    pub loadings: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineSpec {
    pub factors: Vec<CirFactor>,
    pub intensities: Vec<AffineIntensity>,
}

/// Riccati coefficients of one factor on a grid of times to maturity.
///
/// With `z` the current factor value and `tau` the time to maturity:
/// `E[exp(-gamma \int Z)] = exp(a - b z)` and
/// `E[exp(-gamma \int Z) Z_T] = exp(a - b z) (c + d z)`.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

impl RiccatiSolution {
    pub fn transform(&self, node: usize, z: f64) -> f64 {
        (self.a[node] - self.b[node] * z).exp()
    }

    /// `E[exp(-gamma \int Z) Z_T] / E[exp(-gamma \int Z)]`.
    pub fn terminal_mean(&self, node: usize, z: f64) -> f64 {
        self.c[node] + self.d[node] * z
    }
}

impl CirFactor {
    /// Solve
    /// `b' = gamma - kappa b - sigma^2 b^2 / 2`, `a' = -kappa theta b`,
    /// `d' = -(kappa + sigma^2 b) d`, `c' = kappa theta d`
    /// from `(a, b, c, d)(0) = (0, 0, 0, 1)` with one RK4 step per grid
    /// interval; node `i` of the result is time to maturity `i * step`.
    pub fn riccati(&self, gamma: f64, grid: &TimeGrid) -> Result<RiccatiSolution> {
        let (kappa, theta, s2) = (self.kappa, self.theta, self.sigma * self.sigma);
        let tau_grid = TimeGrid::with_intervals(0.0, grid.step(), grid.intervals())?;
        let flat = rk4::integrate(
            |_, y, dy| {
                let (b, d) = (y[1], y[3]);
                dy[0] = -kappa * theta * b;
                dy[1] = gamma - kappa * b - 0.5 * s2 * b * b;
                dy[2] = kappa * theta * d;
                dy[3] = -(kappa + s2 * b) * d;
                if dy.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Riccati(format!(
                        "non-finite derivative at state {y:?} (gamma = {gamma})"
                    )));
                }
                Ok(())
            },
            &tau_grid,
            &[0.0, 0.0, 0.0, 1.0],
        )?;
        let n = grid.len();
        let mut sol = RiccatiSolution {
            a: Vec::with_capacity(n),
            b: Vec::with_capacity(n),
            c: Vec::with_capacity(n),
            d: Vec::with_capacity(n),
        };
        for y in flat.chunks_exact(4) {
            if y.iter().any(|v| !v.is_finite() || v.abs() > 1e300) {
                return Err(Error::Riccati(format!("solution blew up: {y:?}")));
            }
            sol.a.push(y[0]);
            sol.b.push(y[1]);
            sol.c.push(y[2]);
            sol.d.push(y[3]);
        }
        Ok(sol)
    }
}

impl AffineSpec {
    pub fn new(factors: Vec<CirFactor>, intensities: Vec<AffineIntensity>) -> Result<Self> {
        let spec = Self {
            factors,
            intensities,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.factors.is_empty() {
            return Err(Error::InvalidAffine("need at least one factor".into()));
        }
        for f in &self.factors {
            f.validate()?;
        }
        let mut seen = Vec::new();
        for i in &self.intensities {
            if seen.contains(&(i.from, i.to)) {
                return Err(Error::InvalidAffine(format!(
                    "transition {}->{} specified twice",
                    i.from, i.to
                )));
            }
            seen.push((i.from, i.to));
            if i.loadings.len() != self.factors.len() {
                return Err(Error::InvalidAffine(format!(
                    "transition {}->{} has {} loadings for {} factors",
                    i.from,
                    i.to,
                    i.loadings.len(),
                    self.factors.len()
                )));
            }
            if i.loadings.iter().any(|l| !l.is_finite() || *l < 0.0) {
                return Err(Error::InvalidAffine(format!(
                    "transition {}->{}: loadings must be nonnegative",
                    i.from, i.to
                )));
            }
            i.shift.validate()?;
        }
        Ok(())
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn transitions(&self) -> Vec<Transition> {
        self.intensities.iter().map(|i| (i.from, i.to)).collect()
    }

    pub fn intensity(&self, from: usize, to: usize) -> Option<&AffineIntensity> {
        self.intensities
            .iter()
            .find(|i| (i.from, i.to) == (from, to))
    }

    /// Summed loadings and shifts over `pairs`.
    fn aggregate(&self, pairs: &[Transition]) -> (Vec<f64>, Vec<&TimeFunction>) {
        let mut gamma = vec![0.0; self.num_factors()];
        let mut shifts = Vec::new();
        for &(j, k) in pairs {
            if let Some(i) = self.intensity(j, k) {
                for (g, l) in gamma.iter_mut().zip(&i.loadings) {
                    *g += l;
                }
                shifts.push(&i.shift);
            }
        }
        (gamma, shifts)
    }

    pub fn riccati_all(&self, gamma: &[f64], grid: &TimeGrid) -> Result<Vec<RiccatiSolution>> {
        self.factors
            .iter()
            .zip(gamma)
            .map(|(f, g)| f.riccati(*g, grid))
            .collect()
    }

    /// `E[exp(-\int_t^T sum_{pairs} mu) | F_t]` for every `T` on `grid`
    /// (with `t = grid.t0()`).
    pub fn survival_curve(&self, pairs: &[Transition], grid: &TimeGrid) -> Result<Vec<f64>> {
        let (gamma, shifts) = self.aggregate(pairs);
        let sols = self.riccati_all(&gamma, grid)?;
        Ok((0..grid.len())
            .map(|i| self.survival_at(&sols, &shifts, grid, i))
            .collect())
    }

    fn survival_at(
        &self,
        sols: &[RiccatiSolution],
        shifts: &[&TimeFunction],
        grid: &TimeGrid,
        node: usize,
    ) -> f64 {
        let t = grid.t0();
        let maturity = grid.node(node);
        let det: f64 = shifts.iter().map(|s| s.integral(t, maturity)).sum();
        let stoch: f64 = sols
            .iter()
            .zip(&self.factors)
            .map(|(sol, f)| sol.a[node] - sol.b[node] * f.initial)
            .sum();
        (stoch - det).exp()
    }

    /// `E[mu_terminal(T) exp(-\int_t^T sum_{pairs} mu) | F_t] /
    /// E[exp(-\int_t^T sum_{pairs} mu) | F_t]` on `grid`.
    pub fn conditional_terminal_rate(
        &self,
        pairs: &[Transition],
        terminal: Transition,
        grid: &TimeGrid,
    ) -> Result<Vec<f64>> {
        let (gamma, _) = self.aggregate(pairs);
        let sols = self.riccati_all(&gamma, grid)?;
        Ok((0..grid.len())
            .map(|i| self.terminal_rate_at(&sols, terminal, grid.node(i), i))
            .collect())
    }

    fn terminal_rate_at(
        &self,
        sols: &[RiccatiSolution],
        terminal: Transition,
        maturity: f64,
        node: usize,
    ) -> f64 {
        let Some(term) = self.intensity(terminal.0, terminal.1) else {
            return 0.0;
        };
        let stoch: f64 = term
            .loadings
            .iter()
            .zip(sols.iter().zip(&self.factors))
            .filter(|(l, _)| **l != 0.0)
            .map(|(l, (sol, f))| l * sol.terminal_mean(node, f.initial))
            .sum();
        term.shift.value(maturity) + stoch
    }

    /// `E[exp(-\int_t^T sum_{pairs} mu) mu_terminal(T) | F_t]` on `grid`.
    pub fn weighted_terminal_curve(
        &self,
        pairs: &[Transition],
        terminal: Transition,
        grid: &TimeGrid,
    ) -> Result<Vec<f64>> {
        let (gamma, shifts) = self.aggregate(pairs);
        let sols = self.riccati_all(&gamma, grid)?;
        Ok((0..grid.len())
            .map(|i| {
                self.survival_at(&sols, &shifts, grid, i)
                    * self.terminal_rate_at(&sols, terminal, grid.node(i), i)
            })
            .collect())
    }

    /// The deterministic path the factors follow when every volatility is 0.
    pub fn mean_path_intensity(&self, from: usize, to: usize, t0: f64) -> Option<MeanPathIntensity> {
        self.intensity(from, to).map(|i| MeanPathIntensity {
            t0,
            shift: i.shift.clone(),
            loadings: i.loadings.clone(),
            factors: self.factors.clone(),
        })
    }
}

/// Intensity evaluated along `E[Z_s]`; coincides with the zero-volatility
/// limit of the factor dynamics.
#[derive(Debug, Clone)]
pub struct MeanPathIntensity {
    t0: f64,
    shift: TimeFunction,
    loadings: Vec<f64>,
    factors: Vec<CirFactor>,
}

impl MeanPathIntensity {
    pub fn value(&self, s: f64) -> f64 {
        let u = s - self.t0;
        self.shift.value(s)
            + self
                .loadings
                .iter()
                .zip(&self.factors)
                .map(|(l, f)| l * f.mean(u))
                .sum::<f64>()
    }

    pub fn integral(&self, from: f64, to: f64) -> f64 {
        let (a, b) = (from - self.t0, to - self.t0);
        let stoch: f64 = self
            .loadings
            .iter()
            .zip(&self.factors)
            .map(|(l, f)| {
                let decay_part = if f.kappa == 0.0 {
                    (f.initial - f.theta) * (b - a)
                } else {
                    (f.initial - f.theta) * ((-f.kappa * a).exp() - (-f.kappa * b).exp()) / f.kappa
                };
                l * (f.theta * (b - a) + decay_part)
            })
            .sum();
        self.shift.integral(from, to) + stoch
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Closed-form CIR bond-price coefficients for `E[exp(-gamma \int Z)]`.
    fn closed_form_ab(f: &CirFactor, gamma: f64, tau: f64) -> (f64, f64) {
        let s2 = f.sigma * f.sigma;
        let h = (f.kappa * f.kappa + 2.0 * s2 * gamma).sqrt();
        let e = (h * tau).exp_m1();
        let denom = 2.0 * h + (f.kappa + h) * e;
        let b = 2.0 * gamma * e / denom;
        let a = 2.0 * f.kappa * f.theta / s2
            * (2.0 * h * ((f.kappa + h) * tau / 2.0).exp() / denom).ln();
        (a, b)
    }

    fn factor() -> CirFactor {
        CirFactor::new(0.6, 0.02, 0.12, 0.015)
    }

    #[test]
    fn riccati_matches_closed_form() {
        let f = factor();
        let grid = TimeGrid::new(0.0, 10.0, 0.01).unwrap();
        let sol = f.riccati(1.0, &grid).unwrap();
        for i in [1, 50, 300, 1000] {
            let (a, b) = closed_form_ab(&f, 1.0, grid.node(i));
            assert!((sol.a[i] - a).abs() < 1e-11, "a at {i}: {} vs {a}", sol.a[i]);
            assert!((sol.b[i] - b).abs() < 1e-11, "b at {i}: {} vs {b}", sol.b[i]);
        }
    }

    #[test]
    fn terminal_mean_is_minus_log_derivative() {
        // d/dT E[e^{-\int Z}] = -E[e^{-\int Z} Z_T]
        let f = factor();
        let h = 1e-4;
        for tau in [0.5, 2.0, 7.0] {
            let (a1, b1) = closed_form_ab(&f, 1.0, tau + h);
            let (a0, b0) = closed_form_ab(&f, 1.0, tau - h);
            let p = |a: f64, b: f64| (a - b * f.initial).exp();
            let fd = -(p(a1, b1) - p(a0, b0)) / (2.0 * h);
            let grid = TimeGrid::new(0.0, tau, 0.001).unwrap();
            let sol = f.riccati(1.0, &grid).unwrap();
            let n = grid.intervals();
            let exact = sol.transform(n, f.initial) * sol.terminal_mean(n, f.initial);
            assert!(((exact - fd) / exact).abs() < 1e-6, "{exact} vs {fd}");
        }
    }

    #[test]
    fn zero_maturity_transform_is_one() {
        let grid = TimeGrid::new(0.0, 1.0, 0.1).unwrap();
        let sol = factor().riccati(3.0, &grid).unwrap();
        assert_eq!(sol.transform(0, 0.4), 1.0);
        assert_eq!(sol.terminal_mean(0, 0.4), 0.4);
    }

    #[test]
    fn exact_sampler_has_right_mean() {
        let f = factor();
        let grid = TimeGrid::new(0.0, 2.0, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 40_000;
        let mut acc = vec![0.0; grid.len()];
        for _ in 0..n {
            for (a, z) in acc.iter_mut().zip(f.sample_path(&mut rng, &grid)) {
                assert!(z >= 0.0);
                *a += z;
            }
        }
        for (i, a) in acc.iter().enumerate() {
            let m = a / n as f64;
            let target = f.mean(grid.node(i));
            // var(Z_s) <= sigma^2 * max(z0, theta) * s, generous 5 SE band
            let se = (f.sigma * f.sigma * 0.02 * grid.node(i) / n as f64).sqrt();
            assert!((m - target).abs() <= 5.0 * se + 1e-12, "node {i}: {m} vs {target}");
        }
    }

    #[test]
    fn mean_path_integral_matches_quadrature() {
        let spec = AffineSpec::new(
            vec![factor(), CirFactor::new(1.5, 0.05, 0.2, 0.09)],
            vec![AffineIntensity {
                from: 0,
                to: 1,
                shift: TimeFunction::constant(0.001),
                loadings: vec![1.0, 0.5],
            }],
        )
        .unwrap();
        let p = spec.mean_path_intensity(0, 1, 1.0).unwrap();
        let n = 4000;
        let h = 3.0 / n as f64;
        let mut simpson = p.value(1.0) + p.value(4.0);
        for i in 1..n {
            simpson += if i % 2 == 1 { 4.0 } else { 2.0 } * p.value(1.0 + i as f64 * h);
        }
        simpson *= h / 3.0;
        assert!((p.integral(1.0, 4.0) - simpson).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_loadings_and_bad_factor_counts() {
        let bad = AffineSpec::new(
            vec![factor()],
            vec![AffineIntensity {
                from: 0,
                to: 1,
                shift: TimeFunction::zero(),
                loadings: vec![-1.0],
            }],
        );
        assert!(bad.is_err());
        let bad = AffineSpec::new(
            vec![factor()],
            vec![AffineIntensity {
                from: 0,
                to: 1,
                shift: TimeFunction::zero(),
                loadings: vec![1.0, 1.0],
            }],
        );
        assert!(bad.is_err());
        assert!(AffineSpec::new(vec![], vec![]).is_err());
    }
}
