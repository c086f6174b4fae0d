//! Fixed-step classical Runge-Kutta integrator.
//!
//! Shared by the Kolmogorov forward solver and the Riccati transforms so both
//! carry the same error model.

use crate::error::Result;
use crate::grid::TimeGrid;

/// Scratch buffers for one RK4 step of a system of dimension `dim`.
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Advance `y` in place from `t` to `t + h`.
    ///
    /// `rhs(s, y, dy)` writes the derivative at `(s, y)` into `dy`. The
    /// right-hand side is only evaluated at `t`, `t + h/2` and `t + h`.
    pub fn step<F>(&mut self, rhs: &mut F, t: f64, h: f64, y: &mut [f64]) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = y.len();
        let half = 0.5 * h;
        let mid = t + half;
        rhs(t, y, &mut self.k1)?;
        for i in 0..n {
            self.tmp[i] = y[i] + half * self.k1[i];
        }
        rhs(mid, &self.tmp, &mut self.k2)?;
        for i in 0..n {
            self.tmp[i] = y[i] + half * self.k2[i];
        }
        rhs(mid, &self.tmp, &mut self.k3)?;
        for i in 0..n {
            self.tmp[i] = y[i] + h * self.k3[i];
        }
        rhs(t + h, &self.tmp, &mut self.k4)?;
        for i in 0..n {
            y[i] += h / 6.0 * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
        Ok(())
    }
}

/// Integrate from `grid.t0()` with initial state `y0`, one RK4 step per grid
/// interval. Returns the state at every node, flattened node-major.
pub fn integrate<F>(mut rhs: F, grid: &TimeGrid, y0: &[f64]) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let dim = y0.len();
    let mut out = Vec::with_capacity(dim * grid.len());
    out.extend_from_slice(y0);
    let mut y = y0.to_vec();
    let mut stepper = Rk4::new(dim);
    for i in 0..grid.intervals() {
        stepper.step(&mut rhs, grid.node(i), grid.step(), &mut y)?;
        out.extend_from_slice(&y);
    }
    Ok(out)
}
