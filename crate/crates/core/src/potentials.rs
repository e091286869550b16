//! Device, SAW and softened-Coulomb potentials.
//!
//! The SAW travels along the channel direction y. In the boosted frame the
//! SAW minimum sits at y = 0 and the device potential slides past at the SAW
//! velocity.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::{unravel, Grid1D};
use crate::special::hyperu_mhalf_zero;
use crate::units::UnitSystem;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DevicePotentialParams {
    /// ω_x² in meV/(nm²·m_e).
    pub omega_x2: f64,
    /// Mass (in m_e) multiplying ω_x² in the harmonic term.
    pub confinement_mass: f64,
    pub a1: f64,
    pub sigma1: f64,
    pub a2: f64,
    pub sigma2: f64,
    pub sigma_y: f64,
    pub y_d: f64,
    pub y_u: f64,
}

impl Default for DevicePotentialParams {
    fn default() -> Self {
        Self {
            omega_x2: 0.002,
            confinement_mass: 1.0,
            a1: 15.3,
            sigma1: 35.0,
            a2: 510.0,
            sigma2: 0.8,
            sigma_y: 10.0,
            y_d: 36.0,
            y_u: 144.0,
        }
    }
}

impl DevicePotentialParams {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.sigma1 > 0.0 && self.sigma2 > 0.0 && self.sigma_y > 0.0) {
            bad.push("widths must be positive".to_string());
        }
        if !(self.y_u > self.y_d) {
            bad.push("y_u must exceed y_d".to_string());
        }
        if self.a1 < 0.0 || self.a2 < 0.0 || self.omega_x2 < 0.0 || self.confinement_mass <= 0.0 {
            bad.push("amplitudes and confinement must be non-negative".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }

    /// Coefficient of x² in meV/nm².
    pub fn harmonic_coefficient(&self) -> f64 {
        0.5 * self.confinement_mass * self.omega_x2
    }

    /// 2 - tanh((y - y_d)/σ_y) - tanh(-(y - y_u)/σ_y): 0 deep inside the
    /// coupled region, 2 far outside it.
    pub fn window(&self, y: f64) -> f64 {
        2.0 - ((y - self.y_d) / self.sigma_y).tanh() - (-(y - self.y_u) / self.sigma_y).tanh()
    }

    pub fn y_mid(&self) -> f64 {
        0.5 * (self.y_d + self.y_u)
    }

    /// Transverse profile for a given window value.
    pub fn profile(&self, x: f64, window: f64) -> f64 {
        self.harmonic_coefficient() * x * x
            + self.a1 * (-x * x / (2.0 * self.sigma1 * self.sigma1)).exp()
            + 0.5 * self.a2 * (-x * x / (2.0 * self.sigma2 * self.sigma2)).exp() * window
    }

    /// Minimum of the transverse profile over x ≥ 0 at window `w`, as (x, V).
    pub fn profile_minimum(&self, window: f64) -> (f64, f64) {
        let hi = (5.0 * self.sigma1).max(10.0 * self.sigma2);
        let n = 4000;
        let mut best = (0.0, self.profile(0.0, window));
        for i in 1..=n {
            let x = hi * i as f64 / n as f64;
            let v = self.profile(x, window);
            if v < best.1 {
                best = (x, v);
            }
        }
        // golden-section polish around the coarse minimum
        let step = hi / n as f64;
        let (mut a, mut b) = ((best.0 - step).max(0.0), best.0 + step);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if self.profile(c, window) < self.profile(d, window) {
                b = d;
            } else {
                a = c;
            }
        }
        let x = 0.5 * (a + b);
        let v = self.profile(x, window);
        if v < best.1 {
            (x, v)
        } else {
            best
        }
    }

    /// A_TB: saddle value at the coupled-region midpoint relative to the
    /// channel minimum, V_D(0, y_mid) - min_x V_D(x, y_mid).
    pub fn effective_barrier_height(&self) -> f64 {
        let w = self.window(self.y_mid());
        self.profile(0.0, w) - self.profile_minimum(w).1
    }

    /// Copy with A₁ adjusted so that the effective barrier height equals `target`.
    pub fn with_barrier_height(&self, target: f64) -> Result<Self> {
        if target <= 0.0 {
            return Err(Error::Domain(format!("barrier height must be positive, got {target}")));
        }
        let at = |a1: f64| Self { a1, ..*self }.effective_barrier_height();
        let (mut lo, mut hi) = (0.0, self.a1.max(1.0));
        while at(hi) < target {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::Domain(format!("barrier height {target} meV unreachable")));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Self { a1: 0.5 * (lo + hi), ..*self })
    }
}

/// V_D(x, y).
pub fn device_potential(params: &DevicePotentialParams, x: f64, y: f64) -> f64 {
    params.profile(x, params.window(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SawParams {
    pub amplitude: f64,
    pub wavelength: f64,
    pub velocity: f64,
}

impl Default for SawParams {
    fn default() -> Self {
        Self { amplitude: 25.0, wavelength: 1000.0, velocity: 3.0 }
    }
}

impl SawParams {
    /// Harmonic curvature of the SAW minimum, V ≈ c·s².
    pub fn curvature(&self) -> f64 {
        self.amplitude * PI * PI / (self.wavelength * self.wavelength)
    }
}

/// (A/2)(1 - cos(2π(s - vt)/λ)) with s the along-channel coordinate.
pub fn saw_potential(params: &SawParams, s: f64, t: f64) -> f64 {
    0.5 * params.amplitude * (1.0 - (2.0 * PI * (s - params.velocity * t) / params.wavelength).cos())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoulombParams {
    pub delta_z: f64,
    /// e²/(4πε) in meV·nm.
    pub prefactor: f64,
}

impl CoulombParams {
    pub fn new(delta_z: f64, units: &UnitSystem) -> Self {
        Self { delta_z, prefactor: units.coulomb_prefactor() }
    }
}

/// e²/(4√2 π ε Δ_z U(-1/2, 0, r²/2Δ_z²)).
pub fn softened_coulomb(params: &CoulombParams, r: f64) -> f64 {
    let z = r * r / (2.0 * params.delta_z * params.delta_z);
    params.prefactor / (2f64.sqrt() * params.delta_z * hyperu_mhalf_zero(z))
}

/// Softened Coulomb energies indexed by the absolute grid-index difference
/// along x and y, exact for any pair of points on a uniform grid.
#[derive(Debug, Clone)]
pub struct CoulombTable {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl CoulombTable {
    pub fn new(params: &CoulombParams, gx: &Grid1D, gy: &Grid1D) -> Self {
        let (nx, ny) = (gx.n_points, gy.n_points);
        let (dx, dy) = (gx.spacing(), gy.spacing());
        let values = (0..nx * ny)
            .into_par_iter()
            .map(|ij| {
                let (i, j) = (ij / ny, ij % ny);
                softened_coulomb(params, ((i as f64 * dx).powi(2) + (j as f64 * dy).powi(2)).sqrt())
            })
            .collect();
        Self { nx, ny, values }
    }

    pub fn get(&self, di: usize, dj: usize) -> f64 {
        self.values[di * self.ny + dj]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Boosted,
    Lab,
}

/// How the device potential appears to electrons riding the SAW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelProfile {
    /// Full two-dimensional device potential; the SAW minimum is at lab
    /// position `y_start + v t`.
    Moving { y_start: f64 },
    /// Device potential frozen at lab position `y_eval` and uniform along the
    /// channel: a static snapshot for eigensolves.
    Frozen { y_eval: f64 },
}

/// Everything needed to evaluate the two-particle potential in the boosted frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    pub device: DevicePotentialParams,
    pub saw: SawParams,
    /// `None` switches the interaction off.
    pub coulomb: Option<CoulombParams>,
    pub profile: ChannelProfile,
}

impl PotentialSpec {
    pub fn is_static(&self) -> bool {
        matches!(self.profile, ChannelProfile::Frozen { .. })
    }

    /// Single-particle potential at boosted-frame point (x, y) and time t.
    pub fn single(&self, x: f64, y: f64, t: f64) -> f64 {
        let vd = match self.profile {
            ChannelProfile::Moving { y_start } => {
                device_potential(&self.device, x, y + y_start + self.saw.velocity * t)
            }
            ChannelProfile::Frozen { y_eval } => device_potential(&self.device, x, y_eval),
        };
        vd + saw_potential(&self.saw, y, 0.0)
    }

    /// Single-particle potential on an (x, y) grid, row-major.
    pub fn sample_single(&self, gx: &Grid1D, gy: &Grid1D, t: f64) -> Vec<f64> {
        let xs = gx.coordinates();
        let ys = gy.coordinates();
        let mut out = vec![0.0; xs.len() * ys.len()];
        out.par_chunks_mut(ys.len()).zip(&xs).for_each(|(row, &x)| {
            for (v, &y) in row.iter_mut().zip(&ys) {
                *v = self.single(x, y, t);
            }
        });
        out
    }

    /// Two-particle potential on the (x1, y1, x2, y2) grid built from `gx`, `gy`.
    pub fn sample_pair(&self, gx: &Grid1D, gy: &Grid1D, t: f64) -> Vec<f64> {
        let one = self.sample_single(gx, gy, t);
        let table = self.coulomb.map(|c| CoulombTable::new(&c, gx, gy));
        pair_from_parts(&one, table.as_ref(), gx.n_points, gy.n_points)
    }
}

/// v(r1) + v(r2) + V_C(|r1 - r2|) over the product grid.
pub fn pair_from_parts(one: &[f64], table: Option<&CoulombTable>, nx: usize, ny: usize) -> Vec<f64> {
    let m = nx * ny;
    let mut out = vec![0.0; m * m];
    out.par_chunks_mut(m).enumerate().for_each(|(a, row)| {
        let (i1, j1) = (a / ny, a % ny);
        for (b, v) in row.iter_mut().enumerate() {
            let (i2, j2) = (b / ny, b % ny);
            let c = table.map_or(0.0, |t| t.get(i1.abs_diff(i2), j1.abs_diff(j2)));
            *v = (one[a] + one[b]) + c;
        }
    });
    out
}

/// V_D(r1) + V_D(r2) + V_SAW(r1) + V_SAW(r2) + V_C(|r1 - r2|) on a 4-axis grid
/// ordered (x1, y1, x2, y2).
///
/// In the boosted frame grid y is measured from the SAW minimum, which sits at
/// lab position v·t; in the lab frame grid y is the lab coordinate.
pub fn sample_two_particle_potential(
    device: &DevicePotentialParams,
    saw: &SawParams,
    coulomb: &CoulombParams,
    grids: &[Grid1D; 4],
    frame: Frame,
    t: f64,
) -> Vec<f64> {
    let single = |x: f64, y: f64| match frame {
        Frame::Boosted => device_potential(device, x, y + saw.velocity * t) + saw_potential(saw, y, 0.0),
        Frame::Lab => device_potential(device, x, y) + saw_potential(saw, y, t),
    };
    let shape: Vec<usize> = grids.iter().map(|g| g.n_points).collect();
    let axes: Vec<Vec<f64>> = grids.iter().map(|g| g.coordinates()).collect();
    let n: usize = shape.iter().product();
    (0..n)
        .into_par_iter()
        .map_init(
            || [0usize; 4],
            |idx, flat| {
                unravel(flat, &shape, idx);
                let (x1, y1) = (axes[0][idx[0]], axes[1][idx[1]]);
                let (x2, y2) = (axes[2][idx[2]], axes[3][idx[3]]);
                let r = ((x1 - x2).powi(2) + (y1 - y2).powi(2)).sqrt();
                (single(x1, y1) + single(x2, y2)) + softened_coulomb(coulomb, r)
            },
        )
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coulomb(dz: f64) -> CoulombParams {
        CoulombParams::new(dz, &UnitSystem::gaas())
    }

    #[test]
    fn device_potential_at_region_midpoint() {
        let p = DevicePotentialParams::default();
        let eps = (2.0 - 2.0 * 5.4f64.tanh()) / 2.0;
        let expected = p.a1 + p.a2 * eps;
        let got = device_potential(&p, 0.0, p.y_mid());
        assert!((got - expected).abs() < 1e-12);
        assert!((eps - 4.1e-5).abs() < 1e-6);
        assert!((got - 15.321).abs() < 1e-3);
    }

    #[test]
    fn device_potential_far_outside_region() {
        let p = DevicePotentialParams::default();
        assert!((device_potential(&p, 0.0, -1e4) - 525.3).abs() < 1e-9);
        assert!((device_potential(&p, 0.0, 1e4) - 525.3).abs() < 1e-9);
    }

    #[test]
    fn device_potential_is_harmonic_far_from_barrier() {
        let p = DevicePotentialParams::default();
        let x = 600.0;
        assert!((device_potential(&p, x, 0.0) - p.harmonic_coefficient() * x * x).abs() < 1e-9);
    }

    #[test]
    fn device_potential_is_even_in_x() {
        let p = DevicePotentialParams::default();
        for i in 0..50 {
            let (x, y) = (i as f64 * 3.7, -50.0 + i as f64 * 5.3);
            assert_eq!(device_potential(&p, x, y), device_potential(&p, -x, y));
        }
    }

    #[test]
    fn barrier_window_inside_and_outside() {
        let p = DevicePotentialParams::default();
        let a2_part = |y: f64| 0.5 * p.a2 * p.window(y);
        // (A2/2)(1 - tanh 3) is 2.5e-3 A2, so the interior bound needs a 3.5 σ_y margin
        let inside = (p.y_d + 3.5 * p.sigma_y, p.y_u - 3.5 * p.sigma_y);
        for i in 0..=20 {
            let y = inside.0 + (inside.1 - inside.0) * i as f64 / 20.0;
            assert!(a2_part(y) < 1e-3 * p.a2);
        }
        for y in [p.y_d - 3.0 * p.sigma_y, p.y_u + 3.0 * p.sigma_y, -500.0] {
            assert!(a2_part(y) > 0.95 * p.a2);
        }
    }

    #[test]
    fn saw_minimum_crest_and_quarter() {
        let s = SawParams::default();
        let t = 7.0;
        assert!(saw_potential(&s, s.velocity * t, t).abs() < 1e-12);
        assert!((saw_potential(&s, s.velocity * t + 0.5 * s.wavelength, t) - 25.0).abs() < 1e-12);
        assert!((saw_potential(&s, s.velocity * t + 0.25 * s.wavelength, t) - 12.5).abs() < 1e-12);
    }

    #[test]
    fn coulomb_at_contact_matches_limit_formula() {
        let c = coulomb(50.0);
        // e²/(4 ε Δ_z √(2π)) with e²/ε = 4π·prefactor
        let expected = std::f64::consts::PI * c.prefactor / (c.delta_z * (2.0 * std::f64::consts::PI).sqrt());
        assert!((softened_coulomb(&c, 0.0) - expected).abs() / expected < 1e-14);
    }

    #[test]
    fn coulomb_approaches_bare_at_large_distance() {
        let c = coulomb(20.0);
        let r = 100.0 * c.delta_z;
        let bare = c.prefactor / r;
        assert!((softened_coulomb(&c, r) - bare).abs() / bare < 1e-3);
    }

    #[test]
    fn coulomb_decreases_in_r_and_delta_z() {
        let c = coulomb(30.0);
        let mut last = softened_coulomb(&c, 0.0);
        for i in 1..200 {
            let v = softened_coulomb(&c, i as f64 * 2.5);
            assert!(v < last);
            last = v;
        }
        let r = 40.0;
        let mut last = f64::INFINITY;
        for dz in [1.0, 5.0, 10.0, 30.0, 60.0, 100.0] {
            let v = softened_coulomb(&coulomb(dz), r);
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn coulomb_contact_value_matches_quadrature_of_integral_form() {
        // U(-1/2, 0, 0) through the Kummer-transformed integral at small z
        let c = coulomb(25.0);
        let u0 = crate::special::hyperu_quadrature(1e-14);
        let from_quad = c.prefactor / (2f64.sqrt() * c.delta_z * u0);
        assert!((from_quad - softened_coulomb(&c, 0.0)).abs() / from_quad < 1e-7);
    }

    fn grids4() -> [Grid1D; 4] {
        let gx = Grid1D::new(8, 160.0).unwrap();
        let gy = Grid1D::new(6, 120.0).unwrap();
        [gx, gy, gx, gy]
    }

    #[test]
    fn two_particle_sample_matches_scalar_sum() {
        let d = DevicePotentialParams::default();
        let s = SawParams::default();
        let c = coulomb(50.0);
        let g = [Grid1D::new(4, 160.0).unwrap(), Grid1D::new(2, 40.0).unwrap(), Grid1D::new(4, 160.0).unwrap(), Grid1D::new(2, 40.0).unwrap()];
        // grid points: x ∈ {-80,-40,0,40}, y ∈ {-20, 0}
        let t = 3.0;
        let v = sample_two_particle_potential(&d, &s, &c, &g, Frame::Boosted, t);
        let idx = [1usize, 1, 3, 1]; // (-40, 0, 40, 0)
        let flat = ((idx[0] * 2 + idx[1]) * 4 + idx[2]) * 2 + idx[3];
        let scalar = device_potential(&d, -40.0, 0.0 + s.velocity * t)
            + device_potential(&d, 40.0, 0.0 + s.velocity * t)
            + saw_potential(&s, 0.0, 0.0)
            + saw_potential(&s, 0.0, 0.0)
            + softened_coulomb(&c, 80.0);
        assert!((v[flat] - scalar).abs() < 1e-12);
        let lab = sample_two_particle_potential(&d, &s, &c, &g, Frame::Lab, 0.0);
        let scalar_lab = device_potential(&d, -40.0, 0.0) + device_potential(&d, 40.0, 0.0) + 0.0 + softened_coulomb(&c, 80.0);
        assert!((lab[flat] - scalar_lab).abs() < 1e-12);
    }

    #[test]
    fn coincident_points_are_finite_and_exchange_symmetric() {
        let d = DevicePotentialParams::default();
        let s = SawParams::default();
        let c = coulomb(10.0);
        let g = grids4();
        let v = sample_two_particle_potential(&d, &s, &c, &g, Frame::Boosted, 12.0);
        let (nx, ny) = (8usize, 6usize);
        let at = |a: usize, b: usize, e: usize, f: usize| v[((a * ny + b) * nx + e) * ny + f];
        for a in 0..nx {
            for b in 0..ny {
                assert!(at(a, b, a, b).is_finite());
                for e in 0..nx {
                    for f in 0..ny {
                        assert_eq!(at(a, b, e, f).to_bits(), at(e, f, a, b).to_bits());
                    }
                }
            }
        }
        let spec = PotentialSpec { device: d, saw: s, coulomb: Some(c), profile: ChannelProfile::Moving { y_start: 0.0 } };
        let w = spec.sample_pair(&g[0], &g[1], 12.0);
        let max_dev = v.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(max_dev < 1e-12);
    }

    #[test]
    fn barrier_height_control_round_trips() {
        let p = DevicePotentialParams::default();
        let h = p.effective_barrier_height();
        assert!(h > 5.0 && h < 15.3);
        for target in [2.0, 4.0, 8.0] {
            let q = p.with_barrier_height(target).unwrap();
            assert!((q.effective_barrier_height() - target).abs() < 1e-8);
        }
    }
}
