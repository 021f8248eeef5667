use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One dimension of a grid: `[lower, upper)` cut into half-open cells of
/// equal `width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
}

/// Cells covered by a half-open box along one axis, clipped to the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overlap {
    pub cells: RangeInclusive<usize>,
    /// The box reaches past the grid and was clipped to a boundary cell.
    pub escaped: bool,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, width: f64) -> Result<Self> {
        let axis = Axis { lower, upper, width };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.width.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if self.width <= 0.0 {
            return Err(Error::InvalidGrid(format!("width {} must be positive", self.width)));
        }
        if self.upper <= self.lower {
            return Err(Error::InvalidGrid("upper bound must exceed lower bound".into()));
        }
        let ratio = (self.upper - self.lower) / self.width;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::InvalidGrid(format!(
                "span {} is not a multiple of width {}",
                self.upper - self.lower,
                self.width
            )));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        ((self.upper - self.lower) / self.width).round() as usize
    }

    fn bound(&self, k: i64) -> f64 {
        if k == self.cells() as i64 {
            self.upper
        } else {
            // k * span / n is correctly rounded for decimal bounds such as 0.3
            self.lower + (k as f64 * (self.upper - self.lower)) / self.cells() as f64
        }
    }

    /// Index of the half-open cell containing `x`, unclipped (may be
    /// negative or past the last cell). Consistent with [`Axis::cell_bounds`].
    fn raw_index(&self, x: f64) -> i64 {
        let mut k = ((x - self.lower) / self.width).floor() as i64;
        while self.bound(k + 1) <= x {
            k += 1;
        }
        while self.bound(k) > x {
            k -= 1;
        }
        k
    }

    /// Lower-inclusive cell membership; `None` outside `[lower, upper)`.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        let k = self.raw_index(x);
        (0..self.cells() as i64).contains(&k).then_some(k as usize)
    }

    /// Cell of `x` clipped into the grid, with a flag set when clipping
    /// happened.
    pub fn clamped_cell(&self, x: f64) -> (usize, bool) {
        let k = self.raw_index(x);
        let last = self.cells() as i64 - 1;
        if k < 0 {
            (0, true)
        } else if k > last {
            (last as usize, true)
        } else {
            (k as usize, false)
        }
    }

    pub fn cell_bounds(&self, k: usize) -> (f64, f64) {
        (self.bound(k as i64), self.bound(k as i64 + 1))
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        let (lo, hi) = self.cell_bounds(k);
        0.5 * (lo + hi)
    }

    /// Cells intersecting the half-open interval `[lo, hi)`.
    pub fn cells_overlapping(&self, lo: f64, hi: f64) -> Overlap {
        let last = self.cells() as i64 - 1;
        let first = self.raw_index(lo);
        let mut end = self.raw_index(hi);
        if self.bound(end) == hi && end > first {
            end -= 1;
        }
        let escaped = first < 0 || end > last;
        let clip = |k: i64| k.clamp(0, last) as usize;
        Overlap {
            cells: clip(first)..=clip(end),
            escaped,
        }
    }
}

/// A hyperrectangular grid: the product of one [`Axis`] per dimension.
/// Cells are numbered row-major with the first dimension most significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one dimension".into()));
        }
        for a in &axes {
            a.validate()?;
        }
        Ok(Grid { axes })
    }

    /// `dims` copies of the same axis.
    pub fn uniform(dims: usize, axis: Axis) -> Result<Self> {
        Self::new(vec![axis; dims])
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn cell_counts(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::cells).collect()
    }

    pub fn num_cells(&self) -> usize {
        self.axes.iter().map(Axis::cells).product()
    }

    pub fn flatten(&self, cell: &[usize]) -> usize {
        debug_assert_eq!(cell.len(), self.dims());
        cell.iter()
            .zip(&self.axes)
            .fold(0, |acc, (&k, a)| acc * a.cells() + k)
    }

    pub fn unflatten(&self, mut index: usize) -> Vec<usize> {
        let mut cell = vec![0; self.dims()];
        for (d, a) in self.axes.iter().enumerate().rev() {
            cell[d] = index % a.cells();
            index /= a.cells();
        }
        cell
    }

    pub fn cell_of(&self, x: &[f64]) -> Option<Vec<usize>> {
        x.iter().zip(&self.axes).map(|(&v, a)| a.cell_of(v)).collect()
    }

    /// Cell of `x` with every coordinate clipped into the grid; the flag is
    /// set when any coordinate was outside.
    pub fn clamped_cell(&self, x: &[f64]) -> (Vec<usize>, bool) {
        let mut clipped = false;
        let cell = x
            .iter()
            .zip(&self.axes)
            .map(|(&v, a)| {
                let (k, c) = a.clamped_cell(v);
                clipped |= c;
                k
            })
            .collect();
        (cell, clipped)
    }

    pub fn midpoint(&self, cell: &[usize]) -> Vec<f64> {
        cell.iter().zip(&self.axes).map(|(&k, a)| a.midpoint(k)).collect()
    }
}
