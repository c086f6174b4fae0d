use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time grid `t0, t0 + step, ..., t0 + n * step`.
///
/// The number of intervals is `round((horizon - t0) / step)`, so the last node
/// never falls short of the requested horizon by more than half a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t0: f64,
    step: f64,
    intervals: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, horizon: f64, step: f64) -> Result<Self> {
        if !t0.is_finite() || !horizon.is_finite() {
            return Err(Error::InvalidGrid("t0 and horizon must be finite".into()));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
        }
        if horizon <= t0 {
            return Err(Error::InvalidGrid(format!(
                "horizon {horizon} must exceed start time {t0}"
            )));
        }
        let intervals = ((horizon - t0) / step).round().max(1.0) as usize;
        Ok(Self {
            t0,
            step,
            intervals,
        })
    }

    pub fn with_intervals(t0: f64, step: f64, intervals: usize) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::InvalidGrid("grid needs at least one interval".into()));
        }
        Self::new(t0, t0 + step * intervals as f64, step)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Time of node `i`. Computed as `t0 + i * step` so nodes are reproducible
    /// across grids sharing `t0` and `step`.
    pub fn node(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.step
    }

    pub fn last(&self) -> f64 {
        self.node(self.intervals)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    /// Same span, half the step. Node `2i` of the refined grid is node `i` here.
    pub fn refined(&self) -> Self {
        Self {
            t0: self.t0,
            step: 0.5 * self.step,
            intervals: 2 * self.intervals,
        }
    }

    /// Every other node; inverse of [`TimeGrid::refined`].
    pub fn coarsened(&self) -> Result<Self> {
        if self.intervals % 2 != 0 {
            return Err(Error::InvalidGrid(
                "cannot coarsen a grid with an odd number of intervals".into(),
            ));
        }
        Ok(Self {
            t0: self.t0,
            step: 2.0 * self.step,
            intervals: self.intervals / 2,
        })
    }

    /// Index of the node at `time`, if `time` lies on the grid.
    pub fn index_of(&self, time: f64) -> Option<usize> {
        let x = (time - self.t0) / self.step;
        let i = x.round();
        if i < 0.0 || i > self.intervals as f64 || (x - i).abs() > 1e-6 {
            None
        } else {
            Some(i as usize)
        }
    }

    /// True when `other` has the same start and its nodes are every `k`-th
    /// node of `self` for some positive integer `k`.
    pub fn contains_grid(&self, other: &TimeGrid) -> bool {
        if (self.t0 - other.t0).abs() > 1e-12 {
            return false;
        }
        let ratio = other.step / self.step;
        let k = ratio.round();
        k >= 1.0 && (ratio - k).abs() < 1e-9 && other.intervals * k as usize <= self.intervals
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_node_covers_horizon() {
        let g = TimeGrid::new(0.0, 1.0, 0.3).unwrap();
        assert_eq!(g.intervals(), 3);
        assert!(g.last() >= 1.0 - 0.15);
        let g = TimeGrid::new(2.0, 3.0, 0.01).unwrap();
        assert_eq!(g.len(), 101);
        assert!((g.last() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn refine_and_coarsen() {
        let g = TimeGrid::new(0.0, 2.0, 0.1).unwrap();
        let f = g.refined();
        assert_eq!(f.intervals(), 40);
        assert_eq!(f.index_of(g.node(7)), Some(14));
        assert_eq!(f.coarsened().unwrap(), g);
        assert!(f.contains_grid(&g));
        assert!(!g.contains_grid(&f));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(TimeGrid::new(0.0, 1.0, 0.0).is_err());
        assert!(TimeGrid::new(1.0, 1.0, 0.1).is_err());
        assert!(TimeGrid::new(0.0, f64::NAN, 0.1).is_err());
    }

    #[test]
    fn off_grid_lookup() {
        let g = TimeGrid::new(0.0, 1.0, 0.1).unwrap();
        assert_eq!(g.index_of(0.35), None);
        assert_eq!(g.index_of(1.2), None);
        assert_eq!(g.index_of(0.3), Some(3));
    }
}
