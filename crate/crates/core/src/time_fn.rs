//! Deterministic functions of calendar time.
//!
//! The same family serves as intensity paths (which must be nonnegative),
//! payment rates and short rates. Every variant has a closed-form integral.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TimeFunction {
    Constant {
        value: f64,
    },
    /// Linear interpolation between `(times[i], values[i])`, flat outside.
    PiecewiseLinear {
        times: Vec<f64>,
        values: Vec<f64>,
    },
    /// `a + b * exp(c * (age0 + s))` at calendar time `s`.
    GompertzMakeham {
        a: f64,
        b: f64,
        c: f64,
        #[serde(default)]
        age0: f64,
    },
    /// `coeffs[0] + coeffs[1] * s + coeffs[2] * s^2 + ...`
    Polynomial {
        coeffs: Vec<f64>,
    },
    Sum {
        terms: Vec<TimeFunction>,
    },
}

impl TimeFunction {
    pub fn constant(value: f64) -> Self {
        TimeFunction::Constant { value }
    }

    pub fn zero() -> Self {
        TimeFunction::Constant { value: 0.0 }
    }

    pub fn piecewise_linear(points: &[(f64, f64)]) -> Result<Self> {
        let f = TimeFunction::PiecewiseLinear {
            times: points.iter().map(|p| p.0).collect(),
            values: points.iter().map(|p| p.1).collect(),
        };
        f.validate()?;
        Ok(f)
    }

    pub fn gompertz_makeham(a: f64, b: f64, c: f64, age0: f64) -> Self {
        TimeFunction::GompertzMakeham { a, b, c, age0 }
    }

    pub fn sum(terms: Vec<TimeFunction>) -> Self {
        TimeFunction::Sum { terms }
    }

    /// Structural checks: finite parameters, sorted knots.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Parse(format!("time function: {msg}")));
        match self {
            TimeFunction::Constant { value } => {
                if !value.is_finite() {
                    return bad("constant must be finite");
                }
            }
            TimeFunction::PiecewiseLinear { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return bad("piecewise-linear needs equally many (>= 1) times and values");
                }
                if times.iter().chain(values).any(|x| !x.is_finite()) {
                    return bad("piecewise-linear knots must be finite");
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("piecewise-linear times must be strictly increasing");
                }
            }
            TimeFunction::GompertzMakeham { a, b, c, age0 } => {
                if [a, b, c, age0].iter().any(|x| !x.is_finite()) {
                    return bad("Gompertz-Makeham parameters must be finite");
                }
            }
            TimeFunction::Polynomial { coeffs } => {
                if coeffs.iter().any(|x| !x.is_finite()) {
                    return bad("polynomial coefficients must be finite");
                }
            }
            TimeFunction::Sum { terms } => {
                for t in terms {
                    t.validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            TimeFunction::Constant { value } => *value == 0.0,
            TimeFunction::PiecewiseLinear { values, .. } => values.iter().all(|v| *v == 0.0),
            TimeFunction::GompertzMakeham { a, b, .. } => *a == 0.0 && *b == 0.0,
            TimeFunction::Polynomial { coeffs } => coeffs.iter().all(|c| *c == 0.0),
            TimeFunction::Sum { terms } => terms.iter().all(TimeFunction::is_zero),
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        match self {
            TimeFunction::Constant { value } => *value,
            TimeFunction::PiecewiseLinear { times, values } => pwl_value(times, values, s),
            TimeFunction::GompertzMakeham { a, b, c, age0 } => a + b * (c * (age0 + s)).exp(),
            TimeFunction::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
            }
            TimeFunction::Sum { terms } => terms.iter().map(|t| t.value(s)).sum(),
        }
    }

    /// `\int_from^to f(s) ds`, signed (negative when `to < from`).
    pub fn integral(&self, from: f64, to: f64) -> f64 {
        if from == to {
            return 0.0;
        }
        match self {
            TimeFunction::Constant { value } => value * (to - from),
            TimeFunction::PiecewiseLinear { times, values } => {
                if to < from {
                    -pwl_integral(times, values, to, from)
                } else {
                    pwl_integral(times, values, from, to)
                }
            }
            TimeFunction::GompertzMakeham { a, b, c, age0 } => {
                let len = to - from;
                let exp_part = if *c == 0.0 {
                    b * len
                } else {
                    b * (c * (age0 + from)).exp() * (c * len).exp_m1() / c
                };
                a * len + exp_part
            }
            TimeFunction::Polynomial { coeffs } => {
                let anti = |s: f64| {
                    coeffs
                        .iter()
                        .enumerate()
                        .rev()
                        .fold(0.0, |acc, (i, c)| acc * s + c / (i + 1) as f64)
                        * s
                };
                anti(to) - anti(from)
            }
            TimeFunction::Sum { terms } => terms.iter().map(|t| t.integral(from, to)).sum(),
        }
    }

    /// An upper bound of `f` on `[from, to]`; exact for every variant except
    /// polynomials and sums.
    pub fn sup_on(&self, from: f64, to: f64) -> f64 {
        let (lo, hi) = if from <= to { (from, to) } else { (to, from) };
        match self {
            TimeFunction::Constant { value } => *value,
            TimeFunction::PiecewiseLinear { times, values } => {
                let mut m = pwl_value(times, values, lo).max(pwl_value(times, values, hi));
                for (t, v) in times.iter().zip(values) {
                    if *t > lo && *t < hi {
                        m = m.max(*v);
                    }
                }
                m
            }
            TimeFunction::GompertzMakeham { .. } => self.value(lo).max(self.value(hi)),
            TimeFunction::Polynomial { coeffs } => {
                let r = lo.abs().max(hi.abs());
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c.abs() * r.powi(i as i32))
                    .sum()
            }
            TimeFunction::Sum { terms } => terms.iter().map(|t| t.sup_on(lo, hi)).sum(),
        }
    }

    /// Minimum of `f` on `[from, to]`. Exact for constant, piecewise-linear and
    /// Gompertz-Makeham; sampled on 2001 points otherwise.
    pub fn inf_on(&self, from: f64, to: f64) -> f64 {
        let (lo, hi) = if from <= to { (from, to) } else { (to, from) };
        match self {
            TimeFunction::Constant { value } => *value,
            TimeFunction::PiecewiseLinear { times, values } => {
                let mut m = pwl_value(times, values, lo).min(pwl_value(times, values, hi));
                for (t, v) in times.iter().zip(values) {
                    if *t > lo && *t < hi {
                        m = m.min(*v);
                    }
                }
                m
            }
            TimeFunction::GompertzMakeham { .. } => self.value(lo).min(self.value(hi)),
            _ => (0..=2000)
                .map(|i| self.value(lo + (hi - lo) * i as f64 / 2000.0))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

impl Default for TimeFunction {
    fn default() -> Self {
        TimeFunction::zero()
    }
}

fn pwl_value(times: &[f64], values: &[f64], s: f64) -> f64 {
    let n = times.len();
    if s <= times[0] {
        return values[0];
    }
    if s >= times[n - 1] {
        return values[n - 1];
    }
    // first knot strictly greater than s
    let i = times.partition_point(|t| *t <= s);
    let (t0, t1) = (times[i - 1], times[i]);
    let (v0, v1) = (values[i - 1], values[i]);
    v0 + (v1 - v0) * (s - t0) / (t1 - t0)
}

fn pwl_integral(times: &[f64], values: &[f64], from: f64, to: f64) -> f64 {
    // trapezoid is exact between consecutive breakpoints
    let mut pts = vec![from];
    pts.extend(times.iter().copied().filter(|t| *t > from && *t < to));
    pts.push(to);
    pts.windows(2)
        .map(|w| 0.5 * (w[1] - w[0]) * (pwl_value(times, values, w[0]) + pwl_value(times, values, w[1])))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: &TimeFunction, a: f64, b: f64) -> f64 {
        let n = 2000;
        let h = (b - a) / n as f64;
        let mut s = f.value(a) + f.value(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f.value(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn closed_form_integrals_match_quadrature() {
        let fs = [
            TimeFunction::constant(0.3),
            TimeFunction::piecewise_linear(&[(0.0, 0.1), (0.7, 0.4), (1.5, 0.2)]).unwrap(),
            TimeFunction::gompertz_makeham(0.0005, 0.00007, 0.09, 40.0),
            TimeFunction::Polynomial {
                coeffs: vec![1.0, -0.5, 0.25],
            },
            TimeFunction::sum(vec![
                TimeFunction::constant(0.01),
                TimeFunction::gompertz_makeham(0.0, 0.001, 0.05, 30.0),
            ]),
        ];
        for f in &fs {
            // piecewise-linear kinks cost Simpson accuracy; split at them
            let exact = f.integral(-0.2, 2.0);
            let approx = simpson(f, -0.2, 0.0)
                + simpson(f, 0.0, 0.7)
                + simpson(f, 0.7, 1.5)
                + simpson(f, 1.5, 2.0);
            assert!((exact - approx).abs() < 1e-10, "{f:?}: {exact} vs {approx}");
            assert!((f.integral(2.0, -0.2) + exact).abs() < 1e-14);
        }
    }

    #[test]
    fn pwl_is_flat_outside_knots() {
        let f = TimeFunction::piecewise_linear(&[(1.0, 2.0), (2.0, 4.0)]).unwrap();
        assert_eq!(f.value(0.0), 2.0);
        assert_eq!(f.value(1.5), 3.0);
        assert_eq!(f.value(9.0), 4.0);
        assert!((f.integral(0.0, 3.0) - (2.0 + 3.0 + 4.0)).abs() < 1e-14);
    }

    #[test]
    fn sup_bounds_values() {
        let f = TimeFunction::piecewise_linear(&[(0.0, 0.1), (0.5, 0.9), (1.0, 0.2)]).unwrap();
        assert_eq!(f.sup_on(0.0, 1.0), 0.9);
        assert_eq!(f.sup_on(0.6, 1.0), f.value(0.6));
        assert_eq!(f.inf_on(0.0, 1.0), 0.1);
        let g = TimeFunction::gompertz_makeham(0.001, 0.0001, 0.1, 50.0);
        assert_eq!(g.sup_on(0.0, 10.0), g.value(10.0));
    }

    #[test]
    fn rejects_unsorted_knots() {
        assert!(TimeFunction::piecewise_linear(&[(1.0, 0.0), (0.5, 1.0)]).is_err());
    }
}
