//! Boosted-frame Hamiltonian in a plane-wave basis and its lowest eigenstates.
//!
//! The basis for an axis with N_k is the 2N_k+1 plane waves of a periodic box,
//! paired with the 2N_k+1 point grid they are sampled on. The potential acts
//! through its Fourier coefficients at mode differences, which is exactly
//! FFT -> multiply -> FFT on that grid.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::davidson::{davidson, DavidsonOptions, Eigenpairs};
use crate::fft::{Direction, NdFft};
use crate::field::{inner_product, Space, WaveField};
use crate::grid::{unravel, Grid1D};
use crate::potentials::PotentialSpec;
use crate::units::UnitSystem;
use crate::{reduce, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dispersion {
    /// ħ²k²/2m
    #[default]
    Continuum,
    /// (ħ²/mΔx²)(1 - cos kΔx)
    Lattice,
}

impl Dispersion {
    pub fn energy(self, k: f64, dx: f64, hbar2_over_mass: f64) -> f64 {
        match self {
            Dispersion::Continuum => 0.5 * hbar2_over_mass * k * k,
            Dispersion::Lattice => hbar2_over_mass / (dx * dx) * (1.0 - (k * dx).cos()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumBasisSpec {
    pub modes_per_axis: Vec<usize>,
    pub extent_per_axis: Vec<f64>,
}

impl MomentumBasisSpec {
    pub fn new(modes_per_axis: Vec<usize>, extent_per_axis: Vec<f64>) -> Result<Self> {
        if modes_per_axis.is_empty() || modes_per_axis.len() != extent_per_axis.len() {
            return Err(Error::Shape("one mode count and one extent per axis".into()));
        }
        if modes_per_axis.iter().any(|&n| n == 0) || extent_per_axis.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Domain("mode counts and extents must be positive".into()));
        }
        Ok(Self { modes_per_axis, extent_per_axis })
    }

    /// Two-dimensional single-particle basis.
    pub fn planar(nk_x: usize, nk_y: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::new(vec![nk_x, nk_y], vec![lx, ly])
    }

    /// The two-particle basis: this basis repeated for each particle.
    pub fn paired(&self) -> Self {
        let mut m = self.modes_per_axis.clone();
        m.extend_from_slice(&self.modes_per_axis);
        let mut e = self.extent_per_axis.clone();
        e.extend_from_slice(&self.extent_per_axis);
        Self { modes_per_axis: m, extent_per_axis: e }
    }

    /// Sampling grids with 2N_k+1 points per axis.
    pub fn grids(&self) -> Vec<Grid1D> {
        self.modes_per_axis
            .iter()
            .zip(&self.extent_per_axis)
            .map(|(&n, &l)| Grid1D { n_points: 2 * n + 1, extent: l })
            .collect()
    }

    pub fn dimension(&self) -> usize {
        self.modes_per_axis.iter().map(|&n| 2 * n + 1).product()
    }
}

/// Index map of particle exchange on a grid whose axes split into two
/// identical halves.
pub fn exchange_permutation(shape: &[usize]) -> Result<Vec<usize>> {
    let r = shape.len();
    if r % 2 != 0 || shape[..r / 2] != shape[r / 2..] {
        return Err(Error::Shape("exchange needs two identical single-particle grids".into()));
    }
    let half: usize = shape[..r / 2].iter().product();
    Ok((0..half * half).map(|a| (a % half) * half + a / half).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    Full,
    Symmetric,
    Antisymmetric,
}

impl Sector {
    fn sign(self) -> f64 {
        match self {
            Sector::Antisymmetric => -1.0,
            _ => 1.0,
        }
    }
}

/// Kinetic energy of every plane wave of `grids`, in FFT slot order.
pub fn kinetic_diagonal(grids: &[Grid1D], units: &UnitSystem, dispersion: Dispersion) -> Vec<f64> {
    let shape: Vec<usize> = grids.iter().map(|g| g.n_points).collect();
    let n: usize = shape.iter().product();
    let h2m = units.hbar2_over_mass();
    let per_axis: Vec<Vec<f64>> = grids
        .iter()
        .map(|g| g.wavenumbers().iter().map(|&k| dispersion.energy(k, g.spacing(), h2m)).collect())
        .collect();
    (0..n)
        .into_par_iter()
        .map_init(
            || vec![0usize; shape.len()],
            |idx, flat| {
                unravel(flat, &shape, idx);
                idx.iter().enumerate().map(|(a, &i)| per_axis[a][i]).sum()
            },
        )
        .collect()
}

/// Matrix-free Hamiltonian T(k) + V(x) on a plane-wave basis.
#[derive(Debug)]
pub struct MomentumHamiltonian {
    grids: Vec<Grid1D>,
    kinetic: Vec<f64>,
    potential: Vec<f64>,
    fft: NdFft,
}

impl MomentumHamiltonian {
    pub fn new(basis: &MomentumBasisSpec, potential: Vec<f64>, units: &UnitSystem, dispersion: Dispersion) -> Result<Self> {
        let grids = basis.grids();
        Self::on_grids(grids, potential, units, dispersion)
    }

    /// Same construction on arbitrary grids (each grid's DFT modes form the basis).
    pub fn on_grids(grids: Vec<Grid1D>, potential: Vec<f64>, units: &UnitSystem, dispersion: Dispersion) -> Result<Self> {
        let shape: Vec<usize> = grids.iter().map(|g| g.n_points).collect();
        let n: usize = shape.iter().product();
        if potential.len() != n {
            return Err(Error::Shape(format!("potential has {} samples, grid has {n}", potential.len())));
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("potential has non-finite samples".into()));
        }
        let kinetic = kinetic_diagonal(&grids, units, dispersion);
        let fft = NdFft::new(&shape);
        Ok(Self { grids, kinetic, potential, fft })
    }

    pub fn grids(&self) -> &[Grid1D] {
        &self.grids
    }

    pub fn dimension(&self) -> usize {
        self.kinetic.len()
    }

    pub fn kinetic(&self) -> &[f64] {
        &self.kinetic
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn set_potential(&mut self, potential: Vec<f64>) -> Result<()> {
        if potential.len() != self.potential.len() {
            return Err(Error::Shape("potential size changed".into()));
        }
        self.potential = potential;
        Ok(())
    }

    /// Upper estimate of ‖H‖: max T + max |V|.
    pub fn norm_estimate(&self) -> f64 {
        let t = self.kinetic.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        let v = self.potential.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        t + v
    }

    /// Mean potential plus kinetic energy: the diagonal of the dense matrix.
    pub fn diagonal(&self) -> Vec<f64> {
        let mean = reduce::sum_by(&self.potential, |&v| v) / self.potential.len() as f64;
        self.kinetic.iter().map(|t| t + mean).collect()
    }

    /// out = H·input on momentum coefficients (FFT slot order).
    pub fn apply(&self, input: &[C64], out: &mut [C64]) {
        let mut work = input.to_vec();
        let mut scratch = vec![C64::new(0.0, 0.0); work.len()];
        self.fft.process_with_scratch(&mut work, &mut scratch, Direction::Inverse);
        work.par_iter_mut().zip(&self.potential).for_each(|(w, v)| *w *= v);
        self.fft.process_with_scratch(&mut work, &mut scratch, Direction::Forward);
        out.par_iter_mut()
            .zip(input.par_iter().zip(&self.kinetic))
            .zip(&work)
            .for_each(|((o, (x, t)), w)| *o = x * t + w);
    }

    /// Fourier coefficients (1/N)Σ_j V_j e^{-2πi j·d/N}, in FFT slot order of d.
    pub fn potential_coefficients(&self) -> Vec<C64> {
        let mut v: Vec<C64> = self.potential.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.fft.process(&mut v, Direction::Forward);
        let s = 1.0 / (v.len() as f64).sqrt();
        v.iter().map(|c| c * s).collect()
    }

    /// Dense matrix H_kq = T_k δ_kq + V̂(k - q).
    pub fn to_dense(&self) -> DMatrix<C64> {
        let shape: Vec<usize> = self.grids.iter().map(|g| g.n_points).collect();
        let n = self.dimension();
        let vhat = self.potential_coefficients();
        let mut rows = vec![C64::new(0.0, 0.0); n * n];
        rows.par_chunks_mut(n).enumerate().for_each(|(r, row)| {
            let mut ir = vec![0usize; shape.len()];
            let mut ic = vec![0usize; shape.len()];
            unravel(r, &shape, &mut ir);
            for (c, h) in row.iter_mut().enumerate() {
                unravel(c, &shape, &mut ic);
                let mut d = 0;
                for a in 0..shape.len() {
                    d = d * shape[a] + (ir[a] + shape[a] - ic[a]) % shape[a];
                }
                *h = vhat[d];
            }
            row[r] += self.kinetic[r];
        });
        DMatrix::from_row_slice(n, n, &rows)
    }
}

/// Dense H for a potential sampled on the basis grids. Fails if the assembled
/// matrix is not Hermitian to 1e-12.
pub fn assemble_momentum_hamiltonian(
    potential: &[f64],
    basis: &MomentumBasisSpec,
    units: &UnitSystem,
    dispersion: Dispersion,
) -> Result<DMatrix<C64>> {
    let h = MomentumHamiltonian::new(basis, potential.to_vec(), units, dispersion)?.to_dense();
    let err = hermiticity_error(&h);
    if err > 1e-12 * h.iter().fold(1.0_f64, |a, z| a.max(z.norm())) {
        return Err(Error::Consistency(format!("assembled Hamiltonian non-Hermitian by {err:e}")));
    }
    Ok(h)
}

pub fn hermiticity_error(h: &DMatrix<C64>) -> f64 {
    let n = h.nrows();
    let mut e = 0.0_f64;
    for i in 0..n {
        for j in 0..=i {
            e = e.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    e
}

/// Lowest `count` eigenpairs of a dense Hermitian matrix, ascending.
pub fn solve_eigenpairs(h: &DMatrix<C64>, count: usize) -> Result<(Vec<f64>, Vec<DVector<C64>>)> {
    let n = h.nrows();
    if count == 0 || count > n || h.ncols() != n {
        return Err(Error::Usage(format!("cannot take {count} eigenpairs of a {}x{} matrix", n, h.ncols())));
    }
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (h[(i, j)] + h[(j, i)].conj()));
    let eig = sym.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let norm = sym.iter().fold(0.0_f64, |a, z| a.max(z.norm())) * (n as f64).sqrt();
    let mut values = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    for &i in order.iter().take(count) {
        let e = eig.eigenvalues[i];
        let v: DVector<C64> = eig.eigenvectors.column(i).into_owned();
        let r = (&sym * &v - &v * C64::new(e, 0.0)).norm();
        residuals.push(r);
        values.push(e);
        vectors.push(v);
    }
    if residuals.iter().any(|&r| r > 1e-8 * norm.max(1e-300)) {
        return Err(Error::Convergence { iterations: 0, residuals });
    }
    Ok((values, vectors))
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Residual target relative to the ‖H‖ estimate.
    pub tol_rel: f64,
    pub max_iter: usize,
    /// Sector dimension above which the iterative solver is used.
    pub dense_limit: usize,
    pub max_subspace: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol_rel: 1e-8, max_iter: 600, dense_limit: 1600, max_subspace: 40 }
    }
}

/// Orthonormal basis of a symmetry sector as (index, partner, coefficient) triples.
fn sector_basis(perm: Option<&[usize]>, n: usize, sector: Sector) -> Vec<(usize, usize, f64)> {
    match (sector, perm) {
        (Sector::Full, _) | (_, None) => (0..n).map(|a| (a, a, 1.0)).collect(),
        (s, Some(p)) => {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            (0..n)
                .filter_map(|a| {
                    let b = p[a];
                    if a == b {
                        (s == Sector::Symmetric).then_some((a, a, 1.0))
                    } else if a < b {
                        Some((a, b, r))
                    } else {
                        None
                    }
                })
                .collect()
        }
    }
}

/// Lowest `count` eigenpairs of `h` within `sector`, as unit-norm momentum
/// coefficient vectors.
pub fn solve_sector(
    h: &MomentumHamiltonian,
    sector: Sector,
    count: usize,
    guesses: Vec<Vec<C64>>,
    opts: &SolveOptions,
) -> Result<Eigenpairs> {
    let n = h.dimension();
    let shape: Vec<usize> = h.grids.iter().map(|g| g.n_points).collect();
    let perm = match sector {
        Sector::Full => None,
        _ => Some(exchange_permutation(&shape)?),
    };
    let basis = sector_basis(perm.as_deref(), n, sector);
    let sign = sector.sign();
    let tol = opts.tol_rel * h.norm_estimate();
    if basis.len() <= opts.dense_limit {
        let dense = h.to_dense();
        let m = basis.len();
        let col = |j: usize| -> Vec<(usize, C64)> {
            let (a, b, c) = basis[j];
            if a == b {
                vec![(a, C64::new(c, 0.0))]
            } else {
                vec![(a, C64::new(c, 0.0)), (b, C64::new(sign * c, 0.0))]
            }
        };
        let cols: Vec<Vec<(usize, C64)>> = (0..m).map(col).collect();
        let hs = DMatrix::from_fn(m, m, |i, j| {
            let mut s = C64::new(0.0, 0.0);
            for &(r, cr) in &cols[i] {
                for &(c, cc) in &cols[j] {
                    s += cr.conj() * dense[(r, c)] * cc;
                }
            }
            s
        });
        let (values, vecs) = solve_eigenpairs(&hs, count)?;
        let mut vectors = Vec::with_capacity(count);
        let mut residuals = Vec::with_capacity(count);
        for (e, v) in values.iter().zip(&vecs) {
            let mut full = vec![C64::new(0.0, 0.0); n];
            for (j, cj) in cols.iter().enumerate() {
                for &(r, c) in cj {
                    full[r] += c * v[j];
                }
            }
            let mut hv = vec![C64::new(0.0, 0.0); n];
            h.apply(&full, &mut hv);
            let r: f64 = hv.iter().zip(&full).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt();
            residuals.push(r);
            vectors.push(full);
        }
        if residuals.iter().any(|&r| r > tol.max(1e-9)) {
            return Err(Error::Convergence { iterations: 0, residuals });
        }
        return Ok(Eigenpairs { values, vectors, residuals, iterations: 0 });
    }
    let project = |x: &mut [C64]| {
        if let Some(p) = &perm {
            let y: Vec<C64> = (0..x.len()).map(|a| 0.5 * (x[a] + sign * x[p[a]])).collect();
            x.copy_from_slice(&y);
        }
    };
    let apply = |x: &[C64], y: &mut [C64]| h.apply(x, y);
    let dopts = DavidsonOptions { tol, max_iter: opts.max_iter, max_subspace: opts.max_subspace };
    davidson(&apply, &h.diagonal(), guesses, count, &project, &dopts)
}

/// Position-space field from unit-norm momentum coefficients on `grids`.
pub fn coefficients_to_field(grids: &[Grid1D], coeffs: &[C64]) -> Result<WaveField> {
    let dv: f64 = grids.iter().map(|g| g.spacing()).product();
    let m = WaveField::new(grids.to_vec(), coeffs.iter().map(|c| c / dv.sqrt()).collect(), Space::Momentum)?;
    Ok(m.dft(Direction::Inverse))
}

/// Unit-norm momentum coefficients of a position-space field.
pub fn field_to_coefficients(field: &WaveField) -> Vec<C64> {
    let m = match field.space() {
        Space::Position => field.dft(Direction::Forward),
        Space::Momentum => field.clone(),
    };
    let s = m.cell_volume().sqrt();
    m.amplitudes().iter().map(|c| c * s).collect()
}

/// Rotate so the largest-modulus amplitude is real and positive. Near-ties
/// (within 1e-6 relative) go to the last such point in row-major order.
pub fn fix_phase(field: &WaveField) -> WaveField {
    let amps = field.amplitudes();
    let max = amps.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    if max == 0.0 {
        return field.clone();
    }
    let pick = amps.iter().rposition(|z| z.norm() >= max * (1.0 - 1e-6)).unwrap_or(0);
    let phase = amps[pick].conj() / amps[pick].norm();
    field.scaled(phase)
}

/// Interpolate a field onto a finer grid of the same extents by zero-padding
/// its plane-wave coefficients.
pub fn zero_padded(field: &WaveField, points_per_axis: &[usize]) -> Result<WaveField> {
    let grids = field.grids();
    if points_per_axis.len() != grids.len() || points_per_axis.iter().zip(grids).any(|(&m, g)| m < g.n_points) {
        return Err(Error::Shape("padded grid must have at least the original points per axis".into()));
    }
    let mom = match field.space() {
        Space::Position => field.dft(Direction::Forward),
        Space::Momentum => field.clone(),
    };
    let new_grids: Vec<Grid1D> =
        grids.iter().zip(points_per_axis).map(|(g, &m)| Grid1D { n_points: m, extent: g.extent }).collect();
    let shape = mom.shape();
    let new_shape: Vec<usize> = points_per_axis.to_vec();
    let mut out = WaveField::zeros(new_grids.clone(), Space::Momentum);
    let mut idx = vec![0usize; shape.len()];
    for (flat, z) in mom.amplitudes().iter().enumerate() {
        unravel(flat, &shape, &mut idx);
        let mut dst = 0;
        for a in 0..shape.len() {
            let m = grids[a].mode_number(idx[a]);
            dst = dst * new_shape[a] + new_grids[a].mode_slot(m);
        }
        out.amplitudes_mut()[dst] = *z;
    }
    let n_old: usize = shape.iter().product();
    let n_new: usize = new_shape.iter().product();
    let pos = out.dft(Direction::Inverse);
    Ok(pos.scaled(C64::new((n_new as f64 / n_old as f64).sqrt(), 0.0)))
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub energies: Vec<f64>,
    /// Position space on the basis grid, normalized, phase-fixed.
    pub states: Vec<WaveField>,
    /// ⟨ψ|Pψ⟩ under particle exchange; `None` for single-particle states.
    pub parities: Vec<Option<f64>>,
    pub residuals: Vec<f64>,
    pub singlet_index: Option<usize>,
    pub triplet_index: Option<usize>,
    /// E_T - E_S.
    pub delta_e: Option<f64>,
    /// ΔE below 1e-10 meV: singlet and triplet cannot be told apart by energy.
    pub near_degenerate: bool,
}

impl EigenResult {
    pub fn singlet(&self) -> Option<&WaveField> {
        self.singlet_index.map(|i| &self.states[i])
    }

    pub fn triplet(&self) -> Option<&WaveField> {
        self.triplet_index.map(|i| &self.states[i])
    }

    fn from_sectors(grids: &[Grid1D], sets: Vec<(Eigenpairs, Option<f64>)>) -> Result<Self> {
        let mut rows: Vec<(f64, WaveField, Option<f64>, f64)> = Vec::new();
        for (pairs, expected) in sets {
            for ((e, v), r) in pairs.values.iter().zip(&pairs.vectors).zip(&pairs.residuals) {
                let f = fix_phase(&coefficients_to_field(grids, v)?.normalize()?);
                let parity = match expected {
                    Some(_) => Some(inner_product(&f, &f.exchanged()?)?.re),
                    None => None,
                };
                rows.push((*e, f, parity, *r));
            }
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let singlet_index = rows.iter().position(|r| r.2.is_some_and(|p| p > 0.5));
        let triplet_index = rows.iter().position(|r| r.2.is_some_and(|p| p < -0.5));
        let delta_e = match (singlet_index, triplet_index) {
            (Some(s), Some(t)) => Some(rows[t].0 - rows[s].0),
            _ => None,
        };
        Ok(Self {
            energies: rows.iter().map(|r| r.0).collect(),
            parities: rows.iter().map(|r| r.2).collect(),
            residuals: rows.iter().map(|r| r.3).collect(),
            states: rows.into_iter().map(|r| r.1).collect(),
            singlet_index,
            triplet_index,
            delta_e,
            near_degenerate: delta_e.is_some_and(|d| d.abs() < 1e-10),
        })
    }
}

/// Lowest `count` single-particle states of `spec` at time `t`.
pub fn solve_single_particle(
    spec: &PotentialSpec,
    basis: &MomentumBasisSpec,
    units: &UnitSystem,
    dispersion: Dispersion,
    count: usize,
    t: f64,
    opts: &SolveOptions,
) -> Result<EigenResult> {
    if basis.modes_per_axis.len() != 2 {
        return Err(Error::Shape("single-particle basis must be two-dimensional".into()));
    }
    let g = basis.grids();
    let h = MomentumHamiltonian::new(basis, spec.sample_single(&g[0], &g[1], t), units, dispersion)?;
    let pairs = solve_sector(&h, Sector::Full, count, vec![], opts)?;
    EigenResult::from_sectors(&g, vec![(pairs, None)])
}

/// Products of single-particle vectors, symmetrized into `sector`, ordered by
/// the sum of their energies.
fn product_guesses(values: &[f64], vectors: &[Vec<C64>], sector: Sector, count: usize) -> Vec<Vec<C64>> {
    let mut pairs = Vec::new();
    for a in 0..values.len() {
        for b in a..values.len() {
            if sector == Sector::Antisymmetric && a == b {
                continue;
            }
            pairs.push((values[a] + values[b], a, b));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let sign = sector.sign();
    pairs
        .iter()
        .take(count)
        .map(|&(_, a, b)| {
            let (u, w) = (&vectors[a], &vectors[b]);
            let half = u.len();
            let mut out = vec![C64::new(0.0, 0.0); half * half];
            out.par_chunks_mut(half).enumerate().for_each(|(i, row)| {
                for (j, o) in row.iter_mut().enumerate() {
                    *o = u[i] * w[j] + sign * w[i] * u[j];
                }
            });
            out
        })
        .collect()
}

/// Lowest `count` states in each exchange sector of the two-particle
/// Hamiltonian; the singlet (symmetric) and triplet (antisymmetric) spatial
/// ground states and their splitting.
pub fn solve_two_particle(
    spec: &PotentialSpec,
    single_basis: &MomentumBasisSpec,
    units: &UnitSystem,
    dispersion: Dispersion,
    count: usize,
    t: f64,
    opts: &SolveOptions,
) -> Result<EigenResult> {
    if single_basis.modes_per_axis.len() != 2 {
        return Err(Error::Shape("single-particle basis must be two-dimensional".into()));
    }
    let g1 = single_basis.grids();
    let basis = single_basis.paired();
    let h = MomentumHamiltonian::new(&basis, spec.sample_pair(&g1[0], &g1[1], t), units, dispersion)?;
    solve_pair_hamiltonian(&h, spec, single_basis, units, dispersion, count, t, opts)
}

/// As [`solve_two_particle`] on an already assembled two-particle Hamiltonian.
#[allow(clippy::too_many_arguments)]
pub fn solve_pair_hamiltonian(
    h: &MomentumHamiltonian,
    spec: &PotentialSpec,
    single_basis: &MomentumBasisSpec,
    units: &UnitSystem,
    dispersion: Dispersion,
    count: usize,
    t: f64,
    opts: &SolveOptions,
) -> Result<EigenResult> {
    let g1 = single_basis.grids();
    let one = MomentumHamiltonian::new(single_basis, spec.sample_single(&g1[0], &g1[1], t), units, dispersion)?;
    let m = (count + 3).min(one.dimension());
    let singles = solve_sector(&one, Sector::Full, m, vec![], opts)?;
    let mut sets = Vec::new();
    for (sector, parity) in [(Sector::Symmetric, 1.0), (Sector::Antisymmetric, -1.0)] {
        let guesses = product_guesses(&singles.values, &singles.vectors, sector, count + 2);
        sets.push((solve_sector(h, sector, count, guesses, opts)?, Some(parity)));
    }
    EigenResult::from_sectors(h.grids(), sets)
}

#[derive(Debug, Clone)]
pub struct LocalizedPair {
    /// Particle 1 in the left channel (x < 0), particle 2 in the right.
    pub psi_lr: WaveField,
    pub psi_rl: WaveField,
}

/// Probability that particle 1 sits at x1 < 0 and particle 2 at x2 > 0.
pub fn left_right_mass(field: &WaveField) -> f64 {
    let half = field.rank() / 2;
    field.mass_where(|x| x[0] < 0.0 && x[half] > 0.0)
}

/// |Ψ^RL⟩ = (|Ψ^S⟩ + |Ψ^A⟩)/√2 and |Ψ^LR⟩ = (|Ψ^S⟩ - |Ψ^A⟩)/√2.
///
/// Fails with a phase-convention error when Ψ^LR does not put at least
/// `min_mass` of particle 1 at x1 < 0 and particle 2 at x2 > 0.
pub fn build_localized_pair_with(eig: &EigenResult, min_mass: f64) -> Result<LocalizedPair> {
    let (s, a) = match (eig.singlet(), eig.triplet()) {
        (Some(s), Some(a)) => (s, a),
        _ => return Err(Error::Usage("eigen result lacks a singlet/triplet pair".into())),
    };
    let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let psi_rl = s.combine(r, a, r)?;
    let psi_lr = s.combine(r, a, -r)?;
    let half = psi_lr.rank() / 2;
    let p1 = psi_lr.mass_where(|x| x[0] < 0.0);
    let p2 = psi_lr.mass_where(|x| x[half] > 0.0);
    if p1 < min_mass || p2 < min_mass {
        return Err(Error::PhaseConvention(format!(
            "Ψ^LR puts {p1:.4} of particle 1 left and {p2:.4} of particle 2 right"
        )));
    }
    Ok(LocalizedPair { psi_lr, psi_rl })
}

pub fn build_localized_pair(eig: &EigenResult) -> Result<LocalizedPair> {
    build_localized_pair_with(eig, 0.95)
}

/// Coefficients on (Ψ^LR, Ψ^RL) at time t for a state starting in Ψ^LR.
pub fn two_level_evolution(eig: &EigenResult, t: f64, units: &UnitSystem) -> Result<(C64, C64)> {
    let (s, a) = match (eig.singlet_index, eig.triplet_index) {
        (Some(s), Some(a)) => (s, a),
        _ => return Err(Error::Usage("eigen result lacks a singlet/triplet pair".into())),
    };
    let hb = units.hbar;
    let es = C64::from_polar(1.0, -eig.energies[s] * t / hb);
    let et = C64::from_polar(1.0, -eig.energies[a] * t / hb);
    // Ψ^LR = (S - A)/√2 evolves to (e_S S - e_T A)/√2, and
    // S = (LR + RL)/√2, A = (RL - LR)/√2.
    Ok((0.5 * (es + et), 0.5 * (es - et)))
}
