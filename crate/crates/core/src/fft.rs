//! N-dimensional unitary DFT built from rustfft line transforms.
//!
//! Each pass transforms the contiguous last axis and then rotates the axes by
//! one (a 2D transpose of `outer × last`). After `rank` passes every axis has
//! been transformed and the layout is back in its original order. Lines are
//! independent, so the result is identical for any thread count.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

pub struct NdFft {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    scale: f64,
}

impl std::fmt::Debug for NdFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NdFft").field("shape", &self.shape).finish()
    }
}

impl NdFft {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let total: usize = shape.iter().product();
        Self { shape: shape.to_vec(), forward, inverse, scale: 1.0 / (total as f64).sqrt() }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// In-place unitary transform. `scratch` must have the same length as `data`.
    pub fn process_with_scratch(&self, data: &mut [C64], scratch: &mut [C64], dir: Direction) {
        assert_eq!(data.len(), self.len());
        assert_eq!(scratch.len(), data.len());
        let rank = self.shape.len();
        let plans = match dir {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        };
        // pass p transforms original axis rank-1-p, which sits last after p rotations
        for pass in 0..rank {
            let axis = rank - 1 - pass;
            let last = self.shape[axis];
            let plan = &plans[axis];
            if last > 1 {
                data.par_chunks_mut(last).for_each_init(
                    || vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()],
                    |buf, line| plan.process_with_scratch(line, buf),
                );
            }
            let outer = data.len() / last;
            transpose(data, scratch, outer, last);
            data.copy_from_slice(scratch);
        }
        let s = self.scale;
        data.par_iter_mut().for_each(|z| *z *= s);
    }

    pub fn process(&self, data: &mut [C64], dir: Direction) {
        let mut scratch = vec![C64::new(0.0, 0.0); data.len()];
        self.process_with_scratch(data, &mut scratch, dir);
    }
}

/// out[j, i] = inp[i, j] for an `rows × cols` row-major input.
fn transpose(inp: &[C64], out: &mut [C64], rows: usize, cols: usize) {
    out.par_chunks_mut(rows).enumerate().for_each(|(j, orow)| {
        for (i, o) in orow.iter_mut().enumerate() {
            *o = inp[i * cols + j];
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive(data: &[C64], shape: &[usize], sign: f64) -> Vec<C64> {
        let total: usize = shape.iter().product();
        let st = crate::grid::strides(shape);
        let mut out = vec![C64::new(0.0, 0.0); total];
        let mut a = vec![0; shape.len()];
        let mut b = vec![0; shape.len()];
        for (o, out_v) in out.iter_mut().enumerate() {
            crate::grid::unravel(o, shape, &mut a);
            let _ = &st;
            for (i, v) in data.iter().enumerate() {
                crate::grid::unravel(i, shape, &mut b);
                let mut ph = 0.0;
                for ax in 0..shape.len() {
                    ph += (a[ax] * b[ax]) as f64 / shape[ax] as f64;
                }
                *out_v += v * C64::from_polar(1.0, sign * 2.0 * PI * ph);
            }
        }
        let s = 1.0 / (total as f64).sqrt();
        out.iter().map(|z| z * s).collect()
    }

    #[test]
    fn matches_naive_dft_on_uneven_shape() {
        let shape = [3usize, 4, 5];
        let data: Vec<C64> = (0..60).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let fft = NdFft::new(&shape);
        let mut fwd = data.clone();
        fft.process(&mut fwd, Direction::Forward);
        let reference = naive(&data, &shape, -1.0);
        for (x, y) in fwd.iter().zip(&reference) {
            assert!((x - y).norm() < 1e-12);
        }
        fft.process(&mut fwd, Direction::Inverse);
        for (x, y) in fwd.iter().zip(&data) {
            assert!((x - y).norm() < 1e-13);
        }
    }
}
