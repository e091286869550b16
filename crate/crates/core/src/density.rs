//! Reduced density matrices of multi-coordinate fields.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::field::WaveField;
use crate::grid::{strides, unravel};
use crate::{Error, Result};

/// Reduced density matrix over a subset of the field's axes. Rows and columns
/// run over the kept axes in row-major order.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub kept: Vec<usize>,
    pub dims: Vec<usize>,
    pub matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// tr(ρ²), real for Hermitian ρ.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                err = err.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        err
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }
}

fn check_keep(rank: usize, keep: &[usize]) -> Result<Vec<usize>> {
    let mut k = keep.to_vec();
    k.sort_unstable();
    k.dedup();
    if k.is_empty() || k.len() >= rank || k.len() != keep.len() || k.iter().any(|&a| a >= rank) {
        return Err(Error::Usage(format!(
            "keep set {keep:?} must be a nonempty proper subset of {rank} axes without repeats"
        )));
    }
    Ok(k)
}

/// Reshape the field into an (kept × traced) matrix scaled by √(cell volume).
fn bipartition(field: &WaveField, keep: &[usize]) -> (Vec<usize>, usize, usize, Vec<C64>) {
    let shape = field.shape();
    let rank = shape.len();
    let traced: Vec<usize> = (0..rank).filter(|a| !keep.contains(a)).collect();
    let kdims: Vec<usize> = keep.iter().map(|&a| shape[a]).collect();
    let tdims: Vec<usize> = traced.iter().map(|&a| shape[a]).collect();
    let nk: usize = kdims.iter().product();
    let nt: usize = tdims.iter().product();
    let st = strides(&shape);
    let w = field.cell_volume().sqrt();
    let amps = field.amplitudes();
    let mut m = vec![C64::new(0.0, 0.0); nk * nt];
    m.par_chunks_mut(nt).enumerate().for_each(|(row, out)| {
        let mut ki = vec![0usize; keep.len()];
        let mut ti = vec![0usize; traced.len()];
        unravel(row, &kdims, &mut ki);
        let base: usize = keep.iter().zip(&ki).map(|(&a, &i)| st[a] * i).sum();
        for (col, o) in out.iter_mut().enumerate() {
            unravel(col, &tdims, &mut ti);
            let off: usize = traced.iter().zip(&ti).map(|(&a, &i)| st[a] * i).sum();
            *o = amps[base + off] * w;
        }
    });
    (kdims, nk, nt, m)
}

/// ρ(a, a') = Σ_b ψ(a, b) ψ*(a', b) dV, over the kept axes `keep`.
pub fn partial_trace(field: &WaveField, keep: &[usize]) -> Result<DensityMatrix> {
    let keep = check_keep(field.rank(), keep)?;
    let (dims, nk, nt, m) = bipartition(field, &keep);
    let mut rho = DMatrix::<C64>::zeros(nk, nk);
    let rows: Vec<Vec<C64>> = (0..nk)
        .into_par_iter()
        .map(|i| {
            let ri = &m[i * nt..(i + 1) * nt];
            (0..nk)
                .map(|j| {
                    let rj = &m[j * nt..(j + 1) * nt];
                    ri.iter().zip(rj).fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x * y.conj())
                })
                .collect()
        })
        .collect();
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            rho[(i, j)] = v;
        }
    }
    Ok(DensityMatrix { kept: keep, dims, matrix: rho })
}

/// tr(ρ²) of the reduced state on `keep`, computed from the Gram matrix of the
/// smaller side of the bipartition without forming ρ on the larger one.
pub fn purity(field: &WaveField, keep: &[usize]) -> Result<f64> {
    let keep = check_keep(field.rank(), keep)?;
    let (_, nk, nt, m) = bipartition(field, &keep);
    // tr(ρ_A²) = tr(ρ_B²) = ‖M M†‖_F² = ‖M† M‖_F²
    let gram: Vec<C64> = if nk <= nt {
        (0..nk * nk)
            .into_par_iter()
            .map(|ij| {
                let (i, j) = (ij / nk, ij % nk);
                let ri = &m[i * nt..(i + 1) * nt];
                let rj = &m[j * nt..(j + 1) * nt];
                ri.iter().zip(rj).fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x * y.conj())
            })
            .collect()
    } else {
        (0..nt * nt)
            .into_par_iter()
            .map(|ij| {
                let (i, j) = (ij / nt, ij % nt);
                (0..nk).fold(C64::new(0.0, 0.0), |acc, r| acc + m[r * nt + i].conj() * m[r * nt + j])
            })
            .collect()
    };
    Ok(gram.iter().map(|z| z.norm_sqr()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Space;
    use crate::grid::Grid1D;

    fn gaussian(x: f64, c: f64, s: f64) -> f64 {
        (-(x - c).powi(2) / (2.0 * s * s)).exp()
    }

    #[test]
    fn product_state_is_pure() {
        let g = Grid1D::new(24, 24.0).unwrap();
        let f = WaveField::from_fn(vec![g, g], |x| {
            C64::new(gaussian(x[0], -2.0, 1.5), 0.3 * gaussian(x[0], 1.0, 1.0)) * gaussian(x[1], 3.0, 2.0)
        })
        .normalize()
        .unwrap();
        let rho = partial_trace(&f, &[0]).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-10);
        assert!((rho.purity() - 1.0).abs() < 1e-10);
        assert!((purity(&f, &[0]).unwrap() - 1.0).abs() < 1e-10);
        let ev = rho.eigenvalues();
        assert!((ev[ev.len() - 1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bell_like_localized_pair_has_half_purity() {
        let g = Grid1D::new(40, 40.0).unwrap();
        let l = |x: f64| gaussian(x, -10.0, 1.5);
        let r = |x: f64| gaussian(x, 10.0, 1.5);
        let f = WaveField::from_fn(vec![g, g], |x| C64::new(l(x[0]) * r(x[1]) + r(x[0]) * l(x[1]), 0.0))
            .normalize()
            .unwrap();
        let rho = partial_trace(&f, &[0]).unwrap();
        assert!((rho.purity() - 0.5).abs() < 1e-10);
        assert!((purity(&f, &[1]).unwrap() - 0.5).abs() < 1e-10);
        assert!(rho.hermiticity_error() < 1e-14);
        assert!(rho.eigenvalues()[0] > -1e-10);
    }

    #[test]
    fn keep_set_must_be_proper() {
        let g = Grid1D::new(4, 4.0).unwrap();
        let f = WaveField::zeros(vec![g, g], Space::Position);
        assert!(matches!(partial_trace(&f, &[]), Err(Error::Usage(_))));
        assert!(matches!(partial_trace(&f, &[0, 1]), Err(Error::Usage(_))));
        assert!(matches!(purity(&f, &[2]), Err(Error::Usage(_))));
    }
}
