//! Uniform time grids anchored to an integer step lattice.
//!
//! Grid node `i` sits at `(k_start + i) * step`, so node times are exact
//! products of an integer and the step. In particular `t = 0` is hit exactly
//! whenever the grid straddles zero, which anchors two-sided paths, and shift
//! maps move nodes by integer offsets without floating-point drift.

use alloc::format;
use serde::Serialize;

use crate::{Result, SimError};

/// Relative snap tolerance when locating a time on the step lattice.
const SNAP_TOL: f64 = 1e-6;

/// A uniform time grid `t_i = (k_start + i) * step`, `i = 0..=n_cells`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    k_start: i64,
    n_cells: usize,
    step: f64,
}

impl TimeGrid {
    /// Build a grid from endpoints; both must lie on the step lattice within
    /// a relative tolerance of `1e-6 * step`.
    pub fn new(t_start: f64, t_end: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(SimError::InvalidParameter(format!(
                "step must be positive and finite, got {step}"
            )));
        }
        if !(t_start < t_end) {
            return Err(SimError::Grid(format!(
                "t_start {t_start} must be below t_end {t_end}"
            )));
        }
        let k_start = Self::snap(t_start, step)?;
        let k_end = Self::snap(t_end, step)?;
        if k_end <= k_start {
            return Err(SimError::Grid(format!(
                "grid [{t_start}, {t_end}] has no cells at step {step}"
            )));
        }
        Ok(TimeGrid {
            k_start,
            n_cells: (k_end - k_start) as usize,
            step,
        })
    }

    /// Build a grid directly from lattice coordinates.
    pub fn from_lattice(k_start: i64, n_cells: usize, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(SimError::InvalidParameter(format!(
                "step must be positive and finite, got {step}"
            )));
        }
        if n_cells == 0 {
            return Err(SimError::Grid("grid must have at least one cell".into()));
        }
        Ok(TimeGrid {
            k_start,
            n_cells,
            step,
        })
    }

    fn snap(t: f64, step: f64) -> Result<i64> {
        let k = crate::math::round(t / step);
        if crate::math::abs(k * step - t) > SNAP_TOL * step {
            return Err(SimError::Grid(format!(
                "time {t} is not on the step-{step} lattice"
            )));
        }
        Ok(k as i64)
    }

    #[inline]
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of cells (one less than the number of nodes).
    #[inline]
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Number of nodes.
    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    #[inline]
    pub fn k_start(&self) -> i64 {
        self.k_start
    }

    /// Time of node `i`.
    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        (self.k_start + i as i64) as f64 * self.step
    }

    #[inline]
    pub fn t_start(&self) -> f64 {
        self.time(0)
    }

    #[inline]
    pub fn t_end(&self) -> f64 {
        self.time(self.n_cells)
    }

    /// Iterator over node times.
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(move |i| self.time(i))
    }

    /// Node index of time `t`; errors if `t` is off-lattice or outside the
    /// grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = Self::snap(t, self.step)?;
        if k < self.k_start || k > self.k_start + self.n_cells as i64 {
            return Err(SimError::OutOfSupport(format!(
                "time {t} outside grid [{}, {}]",
                self.t_start(),
                self.t_end()
            )));
        }
        Ok((k - self.k_start) as usize)
    }

    /// Whether zero is an interior lattice point (strictly inside).
    pub fn straddles_zero(&self) -> bool {
        self.k_start < 0 && self.k_start + (self.n_cells as i64) > 0
    }

    /// Node index of time zero, when on the grid.
    pub fn index_of_zero(&self) -> Option<usize> {
        if self.k_start <= 0 && self.k_start + (self.n_cells as i64) >= 0 {
            Some((-self.k_start) as usize)
        } else {
            None
        }
    }

    /// Grid translated by `offset` lattice steps (same nodes, relabelled
    /// times).
    pub fn translate(&self, offset: i64) -> TimeGrid {
        TimeGrid {
            k_start: self.k_start - offset,
            n_cells: self.n_cells,
            step: self.step,
        }
    }

    /// Sub-grid spanning nodes `i_start ..= i_end`.
    pub fn subgrid(&self, i_start: usize, i_end: usize) -> Result<TimeGrid> {
        if i_start >= i_end || i_end > self.n_cells {
            return Err(SimError::Grid(format!(
                "invalid subgrid [{i_start}, {i_end}] of {} cells",
                self.n_cells
            )));
        }
        Ok(TimeGrid {
            k_start: self.k_start + i_start as i64,
            n_cells: i_end - i_start,
            step: self.step,
        })
    }

    /// Grid with every cell split into `factor` equal subcells.
    pub fn refine(&self, factor: usize) -> Result<TimeGrid> {
        if factor == 0 {
            return Err(SimError::InvalidParameter("refine factor 0".into()));
        }
        Ok(TimeGrid {
            k_start: self.k_start * factor as i64,
            n_cells: self.n_cells * factor,
            step: self.step / factor as f64,
        })
    }

    /// Grid keeping every `factor`-th node; `k_start` and `n_cells` must be
    /// divisible so the lattice stays exact.
    pub fn coarsen(&self, factor: usize) -> Result<TimeGrid> {
        if factor == 0 {
            return Err(SimError::InvalidParameter("coarsen factor 0".into()));
        }
        if self.k_start.rem_euclid(factor as i64) != 0 || self.n_cells % factor != 0 {
            return Err(SimError::Grid(format!(
                "grid (k_start {}, {} cells) not divisible by {factor}",
                self.k_start, self.n_cells
            )));
        }
        Ok(TimeGrid {
            k_start: self.k_start / factor as i64,
            n_cells: self.n_cells / factor,
            step: self.step * factor as f64,
        })
    }

    /// True when `other` uses the same step (bitwise) and its node set is a
    /// subset of ours.
    pub fn covers(&self, other: &TimeGrid) -> bool {
        self.step == other.step
            && self.k_start <= other.k_start
            && self.k_start + self.n_cells as i64 >= other.k_start + other.n_cells as i64
    }

    /// Node index in `self` of `other`'s first node, when `self` covers
    /// `other`.
    pub fn offset_of(&self, other: &TimeGrid) -> Result<usize> {
        if !self.covers(other) {
            return Err(SimError::Alignment(format!(
                "grid [{}, {}] step {} does not cover [{}, {}] step {}",
                self.t_start(),
                self.t_end(),
                self.step,
                other.t_start(),
                other.t_end(),
                other.step
            )));
        }
        Ok((other.k_start - self.k_start) as usize)
    }
}
