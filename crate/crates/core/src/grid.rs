//! Uniform periodic grids.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A uniform grid of `n_points` cells covering `[-extent/2, extent/2)`.
///
/// The grid is periodic for Fourier purposes; the point `+extent/2` is the
/// periodic image of the first point. With an even number of points the grid
/// contains the origin and is mirror symmetric under `j -> n - j (mod n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub n_points: usize,
    pub extent: f64,
}

impl Grid1D {
    pub fn new(n_points: usize, extent: f64) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::Domain(format!("grid needs at least 2 points, got {n_points}")));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::Domain(format!("grid extent must be positive, got {extent}")));
        }
        Ok(Self { n_points, extent })
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.n_points as f64
    }

    pub fn origin(&self) -> f64 {
        -0.5 * self.extent
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        self.origin() + j as f64 * self.spacing()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.coordinate(j)).collect()
    }

    /// Index of the mirror image `-x` of point `j`.
    pub fn mirror_index(&self, j: usize) -> usize {
        (self.n_points - j) % self.n_points
    }

    /// Signed mode number of FFT slot `idx` (0, 1, .., n/2-1, -n/2, .., -1).
    pub fn mode_number(&self, idx: usize) -> i64 {
        let n = self.n_points as i64;
        let i = idx as i64;
        if i < (n + 1) / 2 {
            i
        } else {
            i - n
        }
    }

    /// FFT slot of signed mode `m`.
    pub fn mode_slot(&self, m: i64) -> usize {
        m.rem_euclid(self.n_points as i64) as usize
    }

    /// Wavenumber k = 2π m / L of FFT slot `idx`.
    pub fn wavenumber(&self, idx: usize) -> f64 {
        2.0 * PI * self.mode_number(idx) as f64 / self.extent
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.wavenumber(i)).collect()
    }
}

/// Row-major strides for a shape (last axis fastest).
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * shape[a + 1];
    }
    s
}

/// Multi-index of flat offset `flat`.
pub fn unravel(mut flat: usize, shape: &[usize], out: &mut [usize]) {
    for a in (0..shape.len()).rev() {
        out[a] = flat % shape[a];
        flat /= shape[a];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_is_extent_over_points() {
        let g = Grid1D::new(64, 320.0).unwrap();
        assert_eq!(g.spacing(), 5.0);
        assert_eq!(g.coordinate(32), 0.0);
        assert_eq!(g.coordinate(0), -160.0);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid1D::new(1, 1.0).is_err());
        assert!(Grid1D::new(4, 0.0).is_err());
    }

    #[test]
    fn mode_numbers_round_trip() {
        for n in [7usize, 8] {
            let g = Grid1D::new(n, 10.0).unwrap();
            for idx in 0..n {
                assert_eq!(g.mode_slot(g.mode_number(idx)), idx);
            }
        }
        let g = Grid1D::new(8, 10.0).unwrap();
        assert_eq!(g.mode_number(3), 3);
        assert_eq!(g.mode_number(4), -4);
        assert_eq!(g.mode_number(7), -1);
    }

    #[test]
    fn mirror_maps_coordinates_to_negatives() {
        let g = Grid1D::new(10, 20.0).unwrap();
        for j in 1..10 {
            assert!((g.coordinate(g.mirror_index(j)) + g.coordinate(j)).abs() < 1e-12);
        }
    }
}
