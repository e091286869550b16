//! Two-site exchange estimates: Hubbard and Hund-Mulliken.
//!
//! Both models start from a pair of channel-localized orbitals. Two-body
//! matrix elements use the softened Coulomb kernel and are evaluated on the
//! orbital grid, refined by zero-padding until the estimates settle.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{self, Dispersion, MomentumBasisSpec, SolveOptions};
use crate::fft::{Direction, NdFft};
use crate::field::inner_product;
use crate::potentials::{softened_coulomb, ChannelProfile, CoulombParams, DevicePotentialParams, PotentialSpec, SawParams};
use crate::special::adaptive_gk;
use crate::{Error, Grid1D, Result, UnitSystem, WaveField, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitalMethod {
    /// (ψ₀ ± ψ₁)/√2 from the two lowest single-particle eigenstates.
    #[default]
    Numeric,
    /// Gaussians at the well minima with widths from the local curvature.
    Oscillator,
}

/// What goes into the one-body hopping matrix element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hopping {
    /// ⟨Φ₊|p²/2m|Φ₋⟩ only.
    #[default]
    Kinetic,
    /// ⟨Φ₊|p²/2m + V|Φ₋⟩.
    SingleParticle,
}

/// Left/right localized orbitals on a 2D (x, y) grid.
#[derive(Debug, Clone)]
pub struct OrbitalPair {
    pub phi_left: WaveField,
    pub phi_right: WaveField,
    /// ⟨φ₊|φ₋⟩.
    pub overlap_s: f64,
    /// (1 - √(1 - S²))/S, zero when S is.
    pub g: f64,
    /// Orthonormalized Φ₋ (left) and Φ₊ (right).
    pub ortho_left: WaveField,
    pub ortho_right: WaveField,
    /// Single-particle potential the orbitals were built in, row-major on the orbital grid.
    pub potential: Vec<f64>,
    pub dispersion: Dispersion,
}

impl OrbitalPair {
    /// Orthonormalize a localized pair: Φ± = (φ± - g φ∓)/√(1 - 2Sg + g²).
    pub fn from_localized(
        phi_left: WaveField,
        phi_right: WaveField,
        potential: Vec<f64>,
        dispersion: Dispersion,
    ) -> Result<Self> {
        let phi_left = phi_left.normalize()?;
        let phi_right = phi_right.normalize()?;
        let s = inner_product(&phi_right, &phi_left)?.re;
        if s.abs() >= 1.0 {
            return Err(Error::Domain(format!("orbital overlap {s} is not below 1")));
        }
        // (1 - √(1-S²))/S without the 0/0 at S = 0
        let g = s / (1.0 + (1.0 - s * s).sqrt());
        let scale = 1.0 / (1.0 - 2.0 * s * g + g * g).sqrt();
        let one = C64::new(scale, 0.0);
        let minus_g = C64::new(-g * scale, 0.0);
        let ortho_left = phi_left.combine(one, &phi_right, minus_g)?;
        let ortho_right = phi_right.combine(one, &phi_left, minus_g)?;
        Ok(Self { phi_left, phi_right, overlap_s: s, g, ortho_left, ortho_right, potential, dispersion })
    }

    pub fn grids(&self) -> &[Grid1D] {
        self.phi_left.grids()
    }

    /// ⟨Φ₊|Φ₋⟩ after orthonormalization.
    pub fn ortho_overlap(&self) -> f64 {
        inner_product(&self.ortho_right, &self.ortho_left).map(|z| z.norm()).unwrap_or(f64::NAN)
    }

    /// One-body matrix element ⟨Φ₊|h|Φ₋⟩ under the chosen hopping convention.
    pub fn hopping(&self, units: &UnitSystem, convention: Hopping) -> Result<f64> {
        let grids = self.grids().to_vec();
        let t = eigen::kinetic_diagonal(&grids, units, self.dispersion);
        let a = eigen::field_to_coefficients(&self.ortho_right);
        let b = eigen::field_to_coefficients(&self.ortho_left);
        let kin: C64 = a.iter().zip(&b).zip(&t).map(|((x, y), k)| x.conj() * y * k).sum();
        let mut total = kin.re;
        if convention == Hopping::SingleParticle {
            let dv = self.ortho_left.cell_volume();
            let pot: C64 = self
                .ortho_right
                .amplitudes()
                .iter()
                .zip(self.ortho_left.amplitudes())
                .zip(&self.potential)
                .map(|((x, y), v)| x.conj() * y * v)
                .sum();
            total += pot.re * dv;
        }
        Ok(total)
    }
}

/// Orbital grid and confinement along the channel.
#[derive(Debug, Clone)]
pub struct OrbitalSetup {
    pub saw: SawParams,
    pub basis: MomentumBasisSpec,
    pub dispersion: Dispersion,
    pub solve: SolveOptions,
}

impl OrbitalSetup {
    pub fn new(saw: SawParams, basis: MomentumBasisSpec) -> Self {
        Self { saw, basis, dispersion: Dispersion::default(), solve: SolveOptions::default() }
    }

    /// Single-particle spec with the device frozen at the coupled-region midpoint.
    pub fn spec(&self, device: &DevicePotentialParams) -> PotentialSpec {
        PotentialSpec {
            device: *device,
            saw: self.saw,
            coulomb: None,
            profile: ChannelProfile::Frozen { y_eval: device.y_mid() },
        }
    }
}

fn mirrored(field: &WaveField) -> WaveField {
    let g = field.grids();
    let (nx, ny) = (g[0].n_points, g[1].n_points);
    let src = field.amplitudes();
    let mut out = field.clone();
    for (i, row) in out.amplitudes_mut().chunks_mut(ny).enumerate() {
        let m = g[0].mirror_index(i);
        row.copy_from_slice(&src[m * ny..(m + 1) * ny]);
    }
    let _ = nx;
    out
}

/// Right- and left-localized orbitals of the frozen double channel.
pub fn build_orbitals(
    device: &DevicePotentialParams,
    method: OrbitalMethod,
    setup: &OrbitalSetup,
    units: &UnitSystem,
) -> Result<OrbitalPair> {
    if setup.basis.modes_per_axis.len() != 2 {
        return Err(Error::Shape("orbital basis must be two-dimensional".into()));
    }
    let w = device.window(device.y_mid());
    let (x_min, v_min) = device.profile_minimum(w);
    let grids = setup.basis.grids();
    if x_min < grids[0].spacing() || device.profile(0.0, w) - v_min <= 1e-9 {
        return Err(Error::Domain(format!("no double well: transverse minimum at x = {x_min:.3} nm")));
    }
    if 2.0 * x_min >= grids[0].extent {
        return Err(Error::Domain(format!("wells at ±{x_min:.1} nm lie outside the orbital grid")));
    }
    let spec = setup.spec(device);
    let potential = spec.sample_single(&grids[0], &grids[1], 0.0);
    let right = match method {
        OrbitalMethod::Numeric => {
            let eig = eigen::solve_single_particle(&spec, &setup.basis, units, setup.dispersion, 2, 0.0, &setup.solve)?;
            let half = C64::new(0.5, 0.0);
            let (p0, p1) = (&eig.states[0], &eig.states[1]);
            // enforce the mirror parity the exact states carry
            let even = p0.combine(half, &mirrored(p0), half)?.normalize()?;
            let mut odd = p1.combine(half, &mirrored(p1), -half)?.normalize()?;
            if odd.mass_where(|x| x[0] > 0.0) < 0.5 || right_lobe_sign(&odd) < 0.0 {
                odd = odd.scaled(C64::new(-1.0, 0.0));
            }
            let r = C64::new(FRAC_1_SQRT_2, 0.0);
            even.combine(r, &odd, r)?
        }
        OrbitalMethod::Oscillator => {
            let (lx, ly) = oscillator_lengths(device, &setup.saw, units, x_min);
            WaveField::from_fn(grids.clone(), |p| {
                let (dx, y) = (p[0] - x_min, p[1]);
                C64::new((-dx * dx / (2.0 * lx * lx) - y * y / (2.0 * ly * ly)).exp(), 0.0)
            })
        }
    };
    let right = right.normalize()?;
    let left = mirrored(&right);
    OrbitalPair::from_localized(left, right, potential, setup.dispersion)
}

fn right_lobe_sign(f: &WaveField) -> f64 {
    let half = f.grids()[0].n_points / 2;
    let ny = f.grids()[1].n_points;
    f.amplitudes()[(half + 1) * ny..].iter().map(|z| z.re).sum()
}

/// Oscillator lengths (x, y) of the quadratic fit at the right well.
pub fn oscillator_lengths(device: &DevicePotentialParams, saw: &SawParams, units: &UnitSystem, x_min: f64) -> (f64, f64) {
    let w = device.window(device.y_mid());
    let h = 1e-2 * device.sigma1.min(device.sigma2.max(1.0));
    let second = (device.profile(x_min + h, w) - 2.0 * device.profile(x_min, w) + device.profile(x_min - h, w)) / (h * h);
    let length = |c2: f64| (units.hbar2_over_mass() / c2).sqrt().sqrt();
    // V ≈ ½ V'' x²: ℓ⁴ = ħ²/(m V'')
    (length(second), length(2.0 * saw.curvature()))
}

/// Closed-form overlap of two unit Gaussians e^{-x²/2σ²} a distance d apart.
pub fn gaussian_overlap(d: f64, sigma: f64) -> f64 {
    (-d * d / (4.0 * sigma * sigma)).exp()
}

/// Two-body matrix elements between orthonormalized orbitals (meV).
///
/// Indices: + right, - left. `direct` ⟨+-|C|+-⟩, `exchange` ⟨+-|C|-+⟩,
/// `onsite` ⟨++|C|++⟩, `pair_hop` ⟨++|C|--⟩, `assisted` ⟨++|C|+-⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoulombElements {
    pub direct: f64,
    pub exchange: f64,
    pub onsite: f64,
    pub onsite_left: f64,
    pub pair_hop: f64,
    pub assisted: f64,
    /// Largest relative change at the last refinement.
    pub change: f64,
    /// Refinement factor of the accepted level.
    pub refinement: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub tol: f64,
    pub start: usize,
    pub max_levels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { tol: 1e-4, start: 2, max_levels: 5 }
    }
}

/// Cell-averaged softened Coulomb kernel on an aperiodic (2nx, 2ny) layout,
/// row-major, index offsets wrapped.
fn kernel(coulomb: &CoulombParams, gx: &Grid1D, gy: &Grid1D) -> Vec<C64> {
    let (hx, hy) = (gx.spacing(), gy.spacing());
    let (px, py) = (2 * gx.n_points, 2 * gy.n_points);
    let signed = |i: usize, n: usize| if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
    (0..px * py)
        .into_par_iter()
        .map(|ij| {
            let (a, b) = (signed(ij / py, px), signed(ij % py, py));
            C64::new(cell_average(coulomb, a * hx, b * hy, hx, hy), 0.0)
        })
        .collect()
}

/// Mean of the kernel over the cell centred at (x, y). Cells near the origin
/// are integrated; the rest use the centre value plus the h²∇²/24 term, which
/// otherwise leaves an O(h) error summed over the 1/r tail.
fn cell_average(coulomb: &CoulombParams, x: f64, y: f64, hx: f64, hy: f64) -> f64 {
    if x.abs() > 3.5 * hx || y.abs() > 3.5 * hy {
        let r = x.hypot(y);
        let d = 1e-3 * r;
        let c = |r: f64| softened_coulomb(coulomb, r);
        let (c0, cp, cm) = (c(r), c(r + d), c(r - d));
        let d1 = (cp - cm) / (2.0 * d);
        let d2 = (cp - 2.0 * c0 + cm) / (d * d);
        let (x2, y2, r2) = (x * x, y * y, r * r);
        let cxx = d2 * x2 / r2 + d1 * y2 / (r2 * r);
        let cyy = d2 * y2 / r2 + d1 * x2 / (r2 * r);
        return c0 + (hx * hx * cxx + hy * hy * cyy) / 24.0;
    }
    let f = |xx: f64, yy: f64| softened_coulomb(coulomb, xx.hypot(yy));
    let inner = |xx: f64| {
        // split at y = 0 where the origin cell peaks
        let (a, b) = (y - 0.5 * hy, y + 0.5 * hy);
        if a < 0.0 && b > 0.0 {
            adaptive_gk(&|yy| f(xx, yy), a, 0.0, 1e-11, 30) + adaptive_gk(&|yy| f(xx, yy), 0.0, b, 1e-11, 30)
        } else {
            adaptive_gk(&|yy| f(xx, yy), a, b, 1e-11, 30)
        }
    };
    let (a, b) = (x - 0.5 * hx, x + 0.5 * hx);
    let total = if a < 0.0 && b > 0.0 {
        adaptive_gk(&inner, a, 0.0, 1e-10, 30) + adaptive_gk(&inner, 0.0, b, 1e-10, 30)
    } else {
        adaptive_gk(&inner, a, b, 1e-10, 30)
    };
    total / (hx * hy)
}

struct Convolver {
    fft: NdFft,
    kernel_hat: Vec<C64>,
    nx: usize,
    ny: usize,
    scale: f64,
}

impl Convolver {
    fn new(coulomb: &CoulombParams, gx: &Grid1D, gy: &Grid1D) -> Self {
        let (nx, ny) = (gx.n_points, gy.n_points);
        let fft = NdFft::new(&[2 * nx, 2 * ny]);
        let mut kernel_hat = kernel(coulomb, gx, gy);
        fft.process(&mut kernel_hat, Direction::Forward);
        let scale = ((4 * nx * ny) as f64).sqrt();
        Self { fft, kernel_hat, nx, ny, scale }
    }

    /// (K ⋆ b) on the original grid.
    fn convolve(&self, b: &[C64]) -> Vec<C64> {
        let py = 2 * self.ny;
        let mut buf = vec![C64::new(0.0, 0.0); 4 * self.nx * self.ny];
        for (i, row) in b.chunks(self.ny).enumerate() {
            buf[i * py..i * py + self.ny].copy_from_slice(row);
        }
        self.fft.process(&mut buf, Direction::Forward);
        for (z, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *z *= k * self.scale;
        }
        self.fft.process(&mut buf, Direction::Inverse);
        let mut out = Vec::with_capacity(b.len());
        for i in 0..self.nx {
            out.extend_from_slice(&buf[i * py..i * py + self.ny]);
        }
        out
    }
}

fn elements_at(pair: &OrbitalPair, coulomb: &CoulombParams, factor: usize) -> Result<[f64; 6]> {
    let g = pair.grids();
    let points = [g[0].n_points * factor, g[1].n_points * factor];
    let right = eigen::zero_padded(&pair.ortho_right, &points)?;
    let left = eigen::zero_padded(&pair.ortho_left, &points)?;
    let grids = right.grids().to_vec();
    let conv = Convolver::new(coulomb, &grids[0], &grids[1]);
    let (r, l) = (right.amplitudes(), left.amplitudes());
    let rho_r: Vec<C64> = r.iter().map(|z| C64::new(z.norm_sqr(), 0.0)).collect();
    let rho_l: Vec<C64> = l.iter().map(|z| C64::new(z.norm_sqr(), 0.0)).collect();
    let mixed: Vec<C64> = r.iter().zip(l).map(|(a, b)| a.conj() * b).collect();
    let (c_r, c_l, c_m) = (conv.convolve(&rho_r), conv.convolve(&rho_l), conv.convolve(&mixed));
    let dv = right.cell_volume();
    let w = dv * dv;
    let sum = |a: &[C64], b: &[C64], conj: bool| -> f64 {
        let s: C64 = a.iter().zip(b).map(|(x, y)| if conj { x.conj() * y } else { x * y }).sum();
        s.re * w
    };
    Ok([
        sum(&rho_l, &c_r, false),
        sum(&mixed, &c_m, true),
        sum(&rho_r, &c_r, false),
        sum(&rho_l, &c_l, false),
        sum(&mixed, &c_m, false),
        sum(&mixed, &c_r, false),
    ])
}

/// All two-body elements by refined tensor-grid quadrature.
///
/// Each level doubles the points per axis. A level is accepted when the raw
/// values, or their h² Richardson extrapolations, change by less than
/// `opts.tol` relative (with a floor of 1e-6 U for elements near zero).
pub fn coulomb_elements(pair: &OrbitalPair, coulomb: &CoulombParams, opts: &QuadratureOptions) -> Result<CoulombElements> {
    let mut factor = opts.start.max(1);
    let mut prev = elements_at(pair, coulomb, factor)?;
    let mut prev_rich: Option<[f64; 6]> = None;
    let mut change = f64::INFINITY;
    for _ in 1..opts.max_levels.max(2) {
        factor *= 2;
        let cur = elements_at(pair, coulomb, factor)?;
        let floor = 1e-6 * cur[2].abs();
        let rel = |a: &[f64; 6], b: &[f64; 6]| {
            a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(floor)).fold(0.0, f64::max)
        };
        let raw = rel(&cur, &prev);
        let rich: [f64; 6] = std::array::from_fn(|i| (4.0 * cur[i] - prev[i]) / 3.0);
        if raw <= opts.tol {
            return Ok(pack(cur, raw, factor));
        }
        if let Some(pr) = prev_rich {
            let rc = rel(&rich, &pr);
            if rc <= opts.tol {
                return Ok(pack(rich, rc, factor));
            }
            change = rc.min(raw);
        } else {
            change = raw;
        }
        prev = cur;
        prev_rich = Some(rich);
    }
    Err(Error::Accuracy { achieved: change, target: opts.tol })
}

fn pack(v: [f64; 6], change: f64, refinement: usize) -> CoulombElements {
    CoulombElements {
        direct: v[0],
        exchange: v[1],
        onsite: v[2],
        onsite_left: v[3],
        pair_hop: v[4],
        assisted: v[5],
        change,
        refinement,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HundMullikenParams {
    pub u_onsite: f64,
    pub x_exchange: f64,
    pub v_plus: f64,
    pub v_minus: f64,
    pub t_h: f64,
    /// U - V₊ + X.
    pub u_h: f64,
}

impl HundMullikenParams {
    pub fn new(u_onsite: f64, x_exchange: f64, v_plus: f64, v_minus: f64, t_h: f64) -> Self {
        Self { u_onsite, x_exchange, v_plus, v_minus, t_h, u_h: u_onsite - v_plus + x_exchange }
    }

    /// Basis (Ψˢ₋, Ψˢ₊, Ψᵈ₊, Ψᵈ₋). The singlet Ψˢ₊ hops into both doubly
    /// occupied states; the triplet Ψˢ₋ is decoupled.
    pub fn matrix(&self) -> DMatrix<f64> {
        let t = -SQRT_2 * self.t_h;
        let (u, x) = (self.u_onsite, self.x_exchange);
        DMatrix::from_row_slice(4, 4, &[
            self.v_minus, 0.0, 0.0, 0.0,
            0.0, self.v_plus, t, t,
            0.0, t, u, x,
            0.0, t, x, u,
        ])
    }

    /// E_T - E_S in closed form (meV).
    pub fn splitting(&self) -> f64 {
        let uh = self.u_h;
        self.v_minus - self.v_plus + 0.5 * ((uh * uh + 16.0 * self.t_h * self.t_h).sqrt() - uh)
    }

    /// E_T - E_S from diagonalizing [`Self::matrix`]: the triplet is the
    /// eigenvector on Ψˢ₋, the singlet the lowest one on Ψˢ₊.
    pub fn splitting_by_diagonalization(&self) -> f64 {
        let eig = SymmetricEigen::new(self.matrix());
        let weights = |k: usize| {
            let v = eig.eigenvectors.column(k);
            (v[0].powi(2), v[1].powi(2) + 0.5 * (v[2] + v[3]).powi(2))
        };
        sector_gap(eig.eigenvalues.as_slice(), weights)
    }

    /// J = (E_T - E_S)/2πħ in ps⁻¹.
    pub fn j(&self, units: &UnitSystem) -> f64 {
        self.splitting() / (2.0 * PI * units.hbar)
    }
}

pub fn hund_mulliken_params(elements: &CoulombElements, hopping: f64) -> HundMullikenParams {
    let e = elements;
    HundMullikenParams::new(
        e.onsite,
        e.pair_hop,
        e.direct + e.exchange,
        e.direct - e.exchange,
        // ⟨Ψˢ₊|C|Ψᵈ±⟩ = √2 ⟨++|C|+-⟩, scaled by 1/√2
        hopping - e.assisted,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HundMullikenReport {
    pub params: HundMullikenParams,
    pub elements: CoulombElements,
    /// ps⁻¹.
    pub j: f64,
    /// 2πħJ in meV.
    pub delta_e: f64,
}

pub fn hund_mulliken_j(
    orbitals: &OrbitalPair,
    coulomb: &CoulombParams,
    units: &UnitSystem,
    hopping: Hopping,
    opts: &QuadratureOptions,
) -> Result<HundMullikenReport> {
    let elements = coulomb_elements(orbitals, coulomb, opts)?;
    let params = hund_mulliken_params(&elements, orbitals.hopping(units, hopping)?);
    Ok(HundMullikenReport { params, elements, j: params.j(units), delta_e: params.splitting() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HubbardParams {
    pub u_onsite: f64,
    pub t_lr: f64,
    pub v_intersite: f64,
}

impl HubbardParams {
    /// Basis (↑,↑), (↓,↓), (↑,↓), (↓,↑), (↑↓,0), (0,↑↓).
    pub fn matrix(&self) -> DMatrix<f64> {
        let (t, u, v) = (self.t_lr, self.u_onsite, self.v_intersite);
        DMatrix::from_row_slice(6, 6, &[
            v, 0.0, 0.0, 0.0, 0.0, 0.0,
            0.0, v, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0, -t, -t,
            0.0, 0.0, 0.0, 0.0, t, t,
            0.0, 0.0, -t, t, u, 0.0,
            0.0, 0.0, -t, t, 0.0, u,
        ])
    }

    pub fn splitting(&self) -> f64 {
        let u = self.u_onsite;
        0.5 * (-u + (u * u + 16.0 * self.t_lr * self.t_lr).sqrt())
    }

    /// E_T - E_S from the 6×6 matrix. The m = 0 triplet is
    /// ((↑,↓) + (↓,↑))/√2; the singlet is the lowest state on
    /// ((↑,↓) - (↓,↑))/√2 and the doubly occupied pair.
    pub fn splitting_by_diagonalization(&self) -> f64 {
        let eig = SymmetricEigen::new(self.matrix());
        let weights = |k: usize| {
            let v = eig.eigenvectors.column(k);
            (0.5 * (v[2] + v[3]).powi(2), 0.5 * (v[2] - v[3]).powi(2) + v[4].powi(2) + v[5].powi(2))
        };
        sector_gap(eig.eigenvalues.as_slice(), weights)
    }

    pub fn j(&self, units: &UnitSystem) -> f64 {
        self.splitting() / (2.0 * PI * units.hbar)
    }
}

/// Lowest triplet minus lowest singlet eigenvalue. `weights(k)` gives the
/// (triplet, singlet) weight of eigenvector k. The Hamiltonian conserves spin,
/// so any eigenvalue carrying weight in a sector belongs to that sector's
/// spectrum, even inside a degenerate group.
fn sector_gap<W: Fn(usize) -> (f64, f64)>(values: &[f64], weights: W) -> f64 {
    let (mut e_t, mut e_s) = (f64::INFINITY, f64::INFINITY);
    for (k, &e) in values.iter().enumerate() {
        let (wt, ws) = weights(k);
        if wt > 1e-6 {
            e_t = e_t.min(e);
        }
        if ws > 1e-6 {
            e_s = e_s.min(e);
        }
    }
    e_t - e_s
}

/// J = (-U + √(U² + 16 t²))/4πħ in ps⁻¹.
pub fn hubbard_j(params: &HubbardParams, units: &UnitSystem) -> f64 {
    params.j(units)
}

pub fn hubbard_params_from_elements(elements: &CoulombElements, hopping: f64) -> HubbardParams {
    HubbardParams { u_onsite: elements.onsite, t_lr: hopping, v_intersite: elements.direct }
}

pub fn hubbard_params_from_orbitals(
    orbitals: &OrbitalPair,
    coulomb: &CoulombParams,
    units: &UnitSystem,
    hopping: Hopping,
    opts: &QuadratureOptions,
) -> Result<HubbardParams> {
    let elements = coulomb_elements(orbitals, coulomb, opts)?;
    Ok(hubbard_params_from_elements(&elements, orbitals.hopping(units, hopping)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub delta_z: f64,
    /// ps⁻¹, from the full two-particle splitting.
    pub j_full: f64,
    pub j_hubbard: f64,
    pub j_hund_mulliken: f64,
    pub delta_e_full: f64,
    pub hubbard: HubbardParams,
    pub hund_mulliken: HundMullikenParams,
}

/// J from the full solver and both two-site models for each Δ_z.
///
/// `full` maps a Coulomb setting to the two-particle splitting E_T - E_S in
/// meV. Points are evaluated in parallel; rows come back in input order.
pub fn model_comparison_sweep<F>(
    delta_z: &[f64],
    orbitals: &OrbitalPair,
    units: &UnitSystem,
    hopping: Hopping,
    opts: &QuadratureOptions,
    full: F,
) -> Result<Vec<ComparisonRow>>
where
    F: Fn(&CoulombParams) -> Result<f64> + Sync,
{
    let t = orbitals.hopping(units, hopping)?;
    let two_pi_hbar = 2.0 * PI * units.hbar;
    delta_z
        .par_iter()
        .map(|&dz| {
            if !(dz > 0.0) {
                return Err(Error::Domain(format!("Δz must be positive, got {dz}")));
            }
            let c = CoulombParams::new(dz, units);
            let elements = coulomb_elements(orbitals, &c, opts)?;
            let hm = hund_mulliken_params(&elements, t);
            let hub = hubbard_params_from_elements(&elements, t);
            let de = full(&c)?;
            Ok(ComparisonRow {
                delta_z: dz,
                j_full: de / two_pi_hbar,
                j_hubbard: hub.j(units),
                j_hund_mulliken: hm.j(units),
                delta_e_full: de,
                hubbard: hub,
                hund_mulliken: hm,
            })
        })
        .collect()
}

/// The full-solver provider used by the sweep: E_T - E_S of the frozen
/// two-particle Hamiltonian on `setup`'s basis.
pub fn full_splitting(
    device: &DevicePotentialParams,
    setup: &OrbitalSetup,
    units: &UnitSystem,
    coulomb: &CoulombParams,
) -> Result<f64> {
    let spec = PotentialSpec { coulomb: Some(*coulomb), ..setup.spec(device) };
    let r = eigen::solve_two_particle(&spec, &setup.basis, units, setup.dispersion, 1, 0.0, &setup.solve)?;
    r.delta_e.ok_or_else(|| Error::Consistency("two-particle solve returned no singlet/triplet pair".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn units() -> UnitSystem {
        UnitSystem::gaas()
    }

    #[test]
    fn hubbard_closed_form_matches_diagonalization() {
        for (u, t, v) in [(1.0, 0.05, 0.3), (0.0, 0.2, 0.0), (5.0, 1.0, 2.0), (0.3, 0.0, 0.1)] {
            let p = HubbardParams { u_onsite: u, t_lr: t, v_intersite: v };
            assert!((p.splitting() - p.splitting_by_diagonalization()).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn hubbard_limits() {
        let u = units();
        let p = HubbardParams { u_onsite: 0.0, t_lr: 0.07, v_intersite: 0.0 };
        assert!((hubbard_j(&p, &u) - 0.07 / (PI * u.hbar)).abs() < 1e-14);
        let p = HubbardParams { u_onsite: 2.0, t_lr: 0.0, v_intersite: 0.4 };
        assert_eq!(hubbard_j(&p, &u), 0.0);
    }

    #[test]
    fn hund_mulliken_closed_form_matches_diagonalization() {
        for (u, x, vp, vm, t) in [(3.0, 0.01, 1.2, 1.1, 0.2), (1.0, 0.0, 0.5, 0.5, 0.0), (0.8, 0.05, 0.4, 0.45, -0.3)] {
            let p = HundMullikenParams::new(u, x, vp, vm, t);
            assert!((p.splitting() - p.splitting_by_diagonalization()).abs() < 1e-12, "{p:?}");
            let m = p.matrix();
            assert_eq!(m, m.transpose());
        }
    }

    #[test]
    fn hund_mulliken_decoupled_and_perturbative_limits() {
        let p = HundMullikenParams::new(2.0, 0.1, 0.7, 0.7, 0.0);
        assert!(p.splitting().abs() < 1e-15);
        let (u, t) = (5.0, 0.04);
        let p = HundMullikenParams::new(u, 0.0, 0.0, -0.001, t);
        assert!(p.u_h / t >= 100.0);
        let series = p.v_minus - p.v_plus + 4.0 * t * t / p.u_h;
        assert!((p.splitting() - series).abs() < 0.01 * p.splitting().abs());
    }

    #[test]
    fn orthonormalization_removes_overlap() {
        let g = vec![Grid1D::new(64, 300.0).unwrap(), Grid1D::new(8, 80.0).unwrap()];
        let gauss = |c: f64| {
            WaveField::from_fn(g.clone(), move |p| C64::new((-(p[0] - c).powi(2) / 800.0 - p[1] * p[1] / 400.0).exp(), 0.0))
        };
        let pair = OrbitalPair::from_localized(gauss(-30.0), gauss(30.0), vec![0.0; 512], Dispersion::Continuum).unwrap();
        assert!(pair.overlap_s > 0.1 && pair.overlap_s < 1.0);
        assert!(pair.ortho_overlap() < 1e-10);
        assert!((pair.ortho_left.norm_sqr() - 1.0).abs() < 1e-10);
        assert!((pair.ortho_right.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cell_average_matches_fine_midpoint_sum() {
        let c = CoulombParams::new(2.0, &units());
        for (x, y) in [(0.0, 0.0), (3.0, 0.0), (3.0, -6.0)] {
            let avg = cell_average(&c, x, y, 3.0, 3.0);
            let n = 400;
            let mut sum = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let dx = x - 1.5 + 3.0 * (i as f64 + 0.5) / n as f64;
                    let dy = y - 1.5 + 3.0 * (j as f64 + 0.5) / n as f64;
                    sum += softened_coulomb(&c, dx.hypot(dy));
                }
            }
            let brute = sum / (n * n) as f64;
            assert!((avg - brute).abs() / brute < 1e-5, "({x},{y}): {avg} vs {brute}");
        }
    }

    fn setup(nkx: usize, nky: usize) -> OrbitalSetup {
        OrbitalSetup::new(SawParams::default(), MomentumBasisSpec::planar(nkx, nky, 320.0, 340.0).unwrap())
    }

    fn device(atb: f64) -> DevicePotentialParams {
        DevicePotentialParams::default().with_barrier_height(atb).unwrap()
    }

    #[test]
    fn numeric_orbitals_are_mirror_images_with_quadrature_overlap() {
        let o = build_orbitals(&device(2.0), OrbitalMethod::Numeric, &setup(6, 5), &units()).unwrap();
        let m = mirrored(&o.phi_right);
        let err = m.amplitudes().iter().zip(o.phi_left.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-8);
        assert!(o.phi_right.mass_where(|x| x[0] > 0.0) > 0.9);
        let dv = o.phi_left.cell_volume();
        let mut s = 0.0;
        for (a, b) in o.phi_right.amplitudes().iter().zip(o.phi_left.amplitudes()) {
            s += (a.conj() * b).re * dv;
        }
        assert!((s - o.overlap_s).abs() < 1e-12);
        assert!(o.ortho_overlap() < 1e-10);
    }

    #[test]
    fn oscillator_overlap_matches_gaussian_formula() {
        let d = device(2.0);
        let st = setup(12, 6);
        let o = build_orbitals(&d, OrbitalMethod::Oscillator, &st, &units()).unwrap();
        let (x_min, _) = d.profile_minimum(d.window(d.y_mid()));
        let (lx, _) = oscillator_lengths(&d, &st.saw, &units(), x_min);
        let exact = gaussian_overlap(2.0 * x_min, lx);
        assert!(o.overlap_s > 0.0 && o.overlap_s < 1.0);
        assert!((o.overlap_s - exact).abs() < 1e-6, "{} vs {exact}", o.overlap_s);
        assert!(o.ortho_overlap() < 1e-10);
    }

    #[test]
    fn tall_barrier_decouples_wells() {
        let d = DevicePotentialParams { a1: 400.0, ..DevicePotentialParams::default() };
        let st = OrbitalSetup::new(SawParams::default(), MomentumBasisSpec::planar(16, 5, 480.0, 340.0).unwrap());
        let o = build_orbitals(&d, OrbitalMethod::Oscillator, &st, &units()).unwrap();
        assert!(o.overlap_s.abs() < 1e-6, "{}", o.overlap_s);
    }

    #[test]
    fn single_well_is_rejected() {
        let d = DevicePotentialParams { a1: 0.0, a2: 0.0, ..DevicePotentialParams::default() };
        for m in [OrbitalMethod::Numeric, OrbitalMethod::Oscillator] {
            assert!(matches!(build_orbitals(&d, m, &setup(4, 3), &units()), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn onsite_energy_matches_brute_force_sum() {
        let o = build_orbitals(&device(2.0), OrbitalMethod::Oscillator, &setup(8, 6), &units()).unwrap();
        let c = CoulombParams::new(30.0, &units());
        let e = coulomb_elements(&o, &c, &QuadratureOptions::default()).unwrap();
        assert!((e.onsite - e.onsite_left).abs() < 1e-6 * e.onsite);
        // plain double sum of |Φ|² V_C |Φ|² on a 3x interpolated grid
        let g = o.grids();
        let f = eigen::zero_padded(&o.ortho_right, &[3 * g[0].n_points, 3 * g[1].n_points]).unwrap();
        let fg = f.grids();
        let (xs, ys) = (fg[0].coordinates(), fg[1].coordinates());
        let pts: Vec<(f64, f64, f64)> = f
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(k, z)| (xs[k / ys.len()], ys[k % ys.len()], z.norm_sqr()))
            .filter(|p| p.2 > 1e-12)
            .collect();
        let dv = f.cell_volume();
        let brute: f64 = pts
            .par_iter()
            .map(|a| pts.iter().map(|b| a.2 * b.2 * softened_coulomb(&c, (a.0 - b.0).hypot(a.1 - b.1))).sum::<f64>())
            .sum::<f64>()
            * dv
            * dv;
        assert!((brute - e.onsite).abs() / e.onsite < 1e-3, "{brute} vs {}", e.onsite);
    }

    #[test]
    fn softening_lowers_onsite_repulsion() {
        let o = build_orbitals(&device(2.0), OrbitalMethod::Numeric, &setup(6, 5), &units()).unwrap();
        let q = QuadratureOptions::default();
        let soft = coulomb_elements(&o, &CoulombParams::new(10.0, &units()), &q).unwrap();
        let hard = coulomb_elements(&o, &CoulombParams::new(1.0, &units()), &q).unwrap();
        assert!(soft.onsite < hard.onsite);
        assert!(soft.direct <= hard.direct);
    }

    #[test]
    fn far_apart_orbitals_lose_hopping_and_interaction() {
        let g = vec![Grid1D::new(96, 960.0).unwrap(), Grid1D::new(16, 160.0).unwrap()];
        let blob = |c: f64| {
            WaveField::from_fn(g.clone(), move |p| C64::new((-(p[0] - c).powi(2) / 800.0 - p[1] * p[1] / 800.0).exp(), 0.0))
        };
        let q = QuadratureOptions { start: 1, ..QuadratureOptions::default() };
        let c = CoulombParams::new(20.0, &units());
        let near = OrbitalPair::from_localized(blob(-40.0), blob(40.0), vec![0.0; 96 * 16], Dispersion::Continuum).unwrap();
        let far = OrbitalPair::from_localized(blob(-300.0), blob(300.0), vec![0.0; 96 * 16], Dispersion::Continuum).unwrap();
        let en = coulomb_elements(&near, &c, &q).unwrap();
        let ef = coulomb_elements(&far, &c, &q).unwrap();
        let hn = hubbard_params_from_elements(&en, near.hopping(&units(), Hopping::Kinetic).unwrap());
        let hf = hubbard_params_from_elements(&ef, far.hopping(&units(), Hopping::Kinetic).unwrap());
        assert!(hf.t_lr.abs() < 1e-12 && hn.t_lr.abs() > 1e-3);
        assert!(hf.v_intersite < 0.25 * hf.u_onsite && hf.v_intersite < hn.v_intersite);
        assert!((hf.u_onsite - ef.onsite_left).abs() < 1e-9);
        // a lone orbital's self-energy
        let lone = OrbitalPair::from_localized(blob(0.0), blob(300.0), vec![0.0; 96 * 16], Dispersion::Continuum).unwrap();
        let el = coulomb_elements(&lone, &c, &q).unwrap();
        assert!((el.onsite_left - ef.onsite).abs() < 1e-6 * ef.onsite);
    }
}
