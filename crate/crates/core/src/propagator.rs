//! Three-level leapfrog time stepping of the Schrödinger equation.
//!
//! ψ^{n+1} = ψ^{n-1} - (2i dt/ħ)(H - E_0)ψ^n, which for a real H is the split
//! update R^{n+1} = R^{n-1} + (2dt/ħ)H I^n, I^{n+1} = I^{n-1} - (2dt/ħ)H R^n.
//! The first level comes from one RK4 step.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density;
use crate::eigen::{kinetic_diagonal, Dispersion, LocalizedPair};
use crate::fft::{Direction, NdFft};
use crate::field::{inner_product, Space, WaveField};
use crate::grid::{strides, Grid1D};
use crate::potentials::{pair_from_parts, saw_potential, CoulombParams, CoulombTable, PotentialSpec, SawParams};
use crate::units::UnitSystem;
use crate::{reduce, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    /// Fourth-order finite differences on the grid.
    Position,
    /// Kinetic energy applied as a diagonal in the plane-wave basis.
    #[default]
    Momentum,
}

/// The kinetic part of H acting on position-space amplitudes.
#[derive(Debug)]
pub enum KineticOperator {
    Spectral { kinetic: Vec<f64>, fft: NdFft },
    Stencil { shape: Vec<usize>, strides: Vec<usize>, weights: Vec<f64> },
}

impl KineticOperator {
    pub fn new(grids: &[Grid1D], units: &UnitSystem, repr: Representation, dispersion: Dispersion) -> Self {
        let shape: Vec<usize> = grids.iter().map(|g| g.n_points).collect();
        match repr {
            Representation::Momentum => {
                Self::Spectral { kinetic: kinetic_diagonal(grids, units, dispersion), fft: NdFft::new(&shape) }
            }
            Representation::Position => {
                let h2m = 0.5 * units.hbar2_over_mass();
                let weights = grids.iter().map(|g| h2m / (12.0 * g.spacing() * g.spacing())).collect();
                Self::Stencil { strides: strides(&shape), shape, weights }
            }
        }
    }

    /// Largest eigenvalue.
    pub fn max_energy(&self) -> f64 {
        match self {
            Self::Spectral { kinetic, .. } => kinetic.iter().fold(0.0, |a: f64, &b| a.max(b)),
            // symbol (30 - 32cos θ + 2cos 2θ)/12Δ² peaks at θ = π
            Self::Stencil { weights, .. } => weights.iter().map(|w| 64.0 * w).sum(),
        }
    }

    pub fn apply(&self, psi: &[C64], out: &mut [C64]) {
        match self {
            Self::Spectral { kinetic, fft } => {
                out.copy_from_slice(psi);
                let mut scratch = vec![C64::new(0.0, 0.0); psi.len()];
                fft.process_with_scratch(out, &mut scratch, Direction::Forward);
                out.par_iter_mut().zip(kinetic).for_each(|(o, t)| *o *= t);
                fft.process_with_scratch(out, &mut scratch, Direction::Inverse);
            }
            Self::Stencil { shape, strides, weights } => {
                out.par_chunks_mut(reduce::CHUNK).enumerate().for_each(|(c, chunk)| {
                    for (i, o) in chunk.iter_mut().enumerate() {
                        let flat = c * reduce::CHUNK + i;
                        let mut acc = C64::new(0.0, 0.0);
                        for a in 0..shape.len() {
                            let (n, s) = (shape[a], strides[a]);
                            let j = (flat / s) % n;
                            let base = flat - j * s;
                            let at = |k: isize| psi[base + ((j as isize + k).rem_euclid(n as isize) as usize) * s];
                            let lap = -at(-2) + 16.0 * at(-1) - 30.0 * psi[flat] + 16.0 * at(1) - at(2);
                            acc -= lap * weights[a];
                        }
                        *o = acc;
                    }
                });
            }
        }
    }
}

/// Potential as a function of time on the propagation grid.
pub enum PotentialSchedule<'a> {
    Static(Vec<f64>),
    TimeDependent(Box<dyn Fn(f64) -> Vec<f64> + Sync + 'a>),
}

impl std::fmt::Debug for PotentialSchedule<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Static(v) => write!(f, "Static({} samples)", v.len()),
            Self::TimeDependent(_) => write!(f, "TimeDependent"),
        }
    }
}

impl<'a> PotentialSchedule<'a> {
    pub fn is_static(&self) -> bool {
        matches!(self, Self::Static(_))
    }

    pub fn sample(&self, t: f64) -> Vec<f64> {
        match self {
            Self::Static(v) => v.clone(),
            Self::TimeDependent(f) => f(t),
        }
    }

    /// Two-particle potential of `spec` over time, caching the Coulomb table.
    pub fn from_spec(spec: &'a PotentialSpec, gx: Grid1D, gy: Grid1D) -> Self {
        let table = spec.coulomb.map(|c| CoulombTable::new(&c, &gx, &gy));
        if spec.is_static() {
            let one = spec.sample_single(&gx, &gy, 0.0);
            return Self::Static(pair_from_parts(&one, table.as_ref(), gx.n_points, gy.n_points));
        }
        Self::TimeDependent(Box::new(move |t| {
            let one = spec.sample_single(&gx, &gy, t);
            pair_from_parts(&one, table.as_ref(), gx.n_points, gy.n_points)
        }))
    }

    /// `high` outside the window and `low` inside it, blended with
    /// w(t) = [tanh((t - t_in)/width) - tanh((t - t_out)/width)]/2.
    pub fn ramp(high: Vec<f64>, low: Vec<f64>, t_in: f64, t_out: f64, width: f64) -> Self {
        Self::TimeDependent(Box::new(move |t| {
            let w = 0.5 * (((t - t_in) / width).tanh() - ((t - t_out) / width).tanh());
            high.iter().zip(&low).map(|(h, l)| h + w * (l - h)).collect()
        }))
    }
}

/// H = T + V(t) - E_0 on position-space amplitudes.
#[derive(Debug)]
pub struct Evolver<'a> {
    grids: Vec<Grid1D>,
    kinetic: KineticOperator,
    schedule: PotentialSchedule<'a>,
    offset: f64,
    hbar: f64,
    cache: Option<(f64, Vec<f64>)>,
}

impl<'a> Evolver<'a> {
    pub fn new(
        grids: Vec<Grid1D>,
        units: &UnitSystem,
        repr: Representation,
        dispersion: Dispersion,
        schedule: PotentialSchedule<'a>,
    ) -> Self {
        let kinetic = KineticOperator::new(&grids, units, repr, dispersion);
        Self { grids, kinetic, schedule, offset: 0.0, hbar: units.hbar, cache: None }
    }

    /// Subtract a constant energy (changes only the global phase).
    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    /// Offset at the energy of `psi`, keeping its phase advance per step small.
    pub fn referenced_to(mut self, psi: &WaveField, t: f64) -> Self {
        self.offset = 0.0;
        let e = self.energy(psi, t);
        self.with_offset(e)
    }

    pub fn grids(&self) -> &[Grid1D] {
        &self.grids
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Bounds [min V, max T + max V] on the spectrum over the given times.
    pub fn spectrum_bounds(&self, times: &[f64]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let ts: Vec<f64> = if self.schedule.is_static() { vec![0.0] } else { times.to_vec() };
        for t in ts {
            let v = self.schedule.sample(t);
            lo = lo.min(v.iter().copied().fold(f64::INFINITY, f64::min));
            hi = hi.max(v.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
        (lo, hi + self.kinetic.max_energy())
    }

    /// ħ / max|E - E_0| over the spectrum bounds.
    pub fn stability_bound(&self, times: &[f64]) -> f64 {
        let (lo, hi) = self.spectrum_bounds(times);
        self.hbar / (lo - self.offset).abs().max((hi - self.offset).abs())
    }

    fn potential(&mut self, t: f64) -> &[f64] {
        let stale = match &self.cache {
            Some((tc, _)) => !self.schedule.is_static() && *tc != t,
            None => true,
        };
        if stale {
            self.cache = Some((t, self.schedule.sample(t)));
        }
        &self.cache.as_ref().unwrap().1
    }

    /// out = (H(t) - E_0)ψ.
    pub fn apply(&mut self, psi: &[C64], t: f64, out: &mut [C64]) {
        self.kinetic.apply(psi, out);
        let off = self.offset;
        let v = self.potential(t).to_vec();
        out.par_iter_mut().zip(psi).zip(&v).for_each(|((o, p), v)| *o += p * (v - off));
    }

    /// ⟨ψ|H(t)|ψ⟩/⟨ψ|ψ⟩ including the offset.
    pub fn energy(&mut self, psi: &WaveField, t: f64) -> f64 {
        let mut h = vec![C64::new(0.0, 0.0); psi.len()];
        self.apply(psi.amplitudes(), t, &mut h);
        reduce::dot(psi.amplitudes(), &h).re / reduce::norm_sqr(psi.amplitudes()) + self.offset
    }

    /// dψ/dt = -(i/ħ)(H - E_0)ψ
    fn derivative(&mut self, psi: &[C64], t: f64) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); psi.len()];
        self.apply(psi, t, &mut out);
        let f = C64::new(0.0, -1.0 / self.hbar);
        out.par_iter_mut().for_each(|o| *o *= f);
        out
    }

    /// One classical RK4 step.
    pub fn rk4_step(&mut self, psi: &[C64], t: f64, dt: f64) -> Vec<C64> {
        let add = |a: &[C64], b: &[C64], s: f64| -> Vec<C64> { a.par_iter().zip(b).map(|(x, y)| x + y * s).collect() };
        let k1 = self.derivative(psi, t);
        let k2 = self.derivative(&add(psi, &k1, 0.5 * dt), t + 0.5 * dt);
        let k3 = self.derivative(&add(psi, &k2, 0.5 * dt), t + 0.5 * dt);
        let k4 = self.derivative(&add(psi, &k3, dt), t + dt);
        psi.par_iter()
            .enumerate()
            .map(|(i, p)| p + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0))
            .collect()
    }
}

/// ψ^{n+1} = ψ^{n-1} - (2i dt/ħ)·hψ^n where `h_psi` is (H - E_0)ψ^n.
///
/// Fails when the norm grows by more than 10% in the step.
pub fn leapfrog_step(previous: &[C64], current: &[C64], h_psi: &[C64], dt: f64, hbar: f64, step: usize) -> Result<Vec<C64>> {
    let f = C64::new(0.0, -2.0 * dt / hbar);
    let next: Vec<C64> = previous.par_iter().zip(h_psi).map(|(p, h)| p + f * h).collect();
    let n0 = reduce::norm_sqr(current);
    let n1 = reduce::norm_sqr(&next);
    if !(n1 <= 1.21 * n0) {
        return Err(Error::Instability { step, norms: vec![n0.sqrt(), n1.sqrt()] });
    }
    Ok(next)
}

/// Two consecutive time levels and the stepping state.
#[derive(Debug, Clone)]
pub struct Leapfrog {
    pub previous: Vec<C64>,
    pub current: Vec<C64>,
    pub time: f64,
    pub dt: f64,
    pub steps: usize,
}

impl Leapfrog {
    /// Bootstrap ψ¹ from ψ⁰ with one RK4 step.
    pub fn start(evolver: &mut Evolver, psi0: &[C64], t0: f64, dt: f64) -> Self {
        let psi1 = evolver.rk4_step(psi0, t0, dt);
        Self { previous: psi0.to_vec(), current: psi1, time: t0 + dt, dt, steps: 1 }
    }

    pub fn step(&mut self, evolver: &mut Evolver) -> Result<()> {
        let mut h = vec![C64::new(0.0, 0.0); self.current.len()];
        evolver.apply(&self.current, self.time, &mut h);
        let next = leapfrog_step(&self.previous, &self.current, &h, self.dt, evolver.hbar, self.steps)?;
        self.previous = std::mem::replace(&mut self.current, next);
        self.time += self.dt;
        self.steps += 1;
        Ok(())
    }

    /// Swap the levels and negate dt so stepping runs backwards in time.
    pub fn reverse(&mut self) {
        std::mem::swap(&mut self.previous, &mut self.current);
        self.time -= self.dt;
        self.dt = -self.dt;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub dt: f64,
    pub total_time: f64,
    pub space: Representation,
    /// Record every this many steps (the last step is always recorded).
    pub snapshot_stride: usize,
    /// Keep full fields at recorded steps.
    pub keep_snapshots: bool,
}

impl PropagationConfig {
    /// Number of steps; `total_time / dt` must be an integer to 1e-9.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !(self.total_time > 0.0) {
            return Err(Error::Domain("dt and total_time must be positive".into()));
        }
        let r = self.total_time / self.dt;
        let n = r.round();
        if (r - n).abs() > 1e-9 * r.max(1.0) {
            return Err(Error::Usage(format!("total_time / dt = {r} is not an integer")));
        }
        Ok(n as usize)
    }

    /// Largest dt ≤ `dt_max` that divides `total_time` into whole steps.
    pub fn fitted(total_time: f64, dt_max: f64, space: Representation, snapshot_stride: usize) -> Self {
        let n = (total_time / dt_max).ceil().max(1.0);
        Self { dt: total_time / n, total_time, space, snapshot_stride: snapshot_stride.max(1), keep_snapshots: false }
    }

    /// Reject dt above the stability bound.
    pub fn check_stability(&self, bound: f64) -> Result<()> {
        if self.dt >= bound {
            return Err(Error::Validation(vec![format!("dt_stability: dt {} ps exceeds bound {bound} ps", self.dt)]));
        }
        Ok(())
    }
}

/// Projection onto the lowest y-modes of the SAW well plus x-sector purity.
#[derive(Debug, Clone)]
pub struct CollisionProbe {
    /// Real, normalized (Σ|χ|²Δy = 1) y-modes on the y grid.
    pub y_modes: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default)]
pub struct Probes<'a> {
    pub localized: Option<&'a LocalizedPair>,
    pub quadrants: bool,
    pub energy: bool,
    pub collision: Option<CollisionProbe>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub time: f64,
    pub norm: f64,
    pub a_lr: Option<C64>,
    pub a_rl: Option<C64>,
    pub p_ll: Option<f64>,
    pub p_rr: Option<f64>,
    pub energy: Option<f64>,
    /// Purity of the (x1, x2) reduced state.
    pub x_purity: Option<f64>,
    /// Purity of particle 1's x reduced state.
    pub x1_purity: Option<f64>,
    /// Occupation of y-mode k, averaged over the two particles.
    pub y_modes: Vec<f64>,
}

impl TraceRow {
    pub fn p_lr(&self) -> Option<f64> {
        self.a_lr.map(|a| a.norm_sqr())
    }

    pub fn p_rl(&self) -> Option<f64> {
        self.a_rl.map(|a| a.norm_sqr())
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub field: WaveField,
}

#[derive(Debug, Clone)]
pub struct PropagationTrace {
    pub rows: Vec<TraceRow>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: WaveField,
    pub dt: f64,
}

impl PropagationTrace {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.time).collect()
    }

    pub fn norms(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.norm).collect()
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.rows.iter().map(|r| (r.norm - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("trace has at least the initial row")
    }
}

/// Occupations of the y-modes for each particle, averaged. Axes are
/// (x1, y1, x2, y2).
pub fn y_mode_occupations(field: &WaveField, modes: &[Vec<f64>]) -> Vec<f64> {
    let s = field.shape();
    let (nx, ny) = (s[0], s[1]);
    let dv = field.cell_volume();
    let dy = field.grids()[1].spacing();
    let amps = field.amplitudes();
    let m = nx * ny;
    modes
        .iter()
        .map(|chi| {
            // particle 1: Σ_{x1,x2,y2} |Σ_{y1} χ(y1)ψ|², particle 2 likewise
            let parts: Vec<f64> = (0..nx)
                .into_par_iter()
                .map(|i1| {
                    let mut p1 = 0.0;
                    let mut p2 = 0.0;
                    for b in 0..m {
                        let mut a = C64::new(0.0, 0.0);
                        for (j1, c) in chi.iter().enumerate() {
                            a += amps[(i1 * ny + j1) * m + b] * c;
                        }
                        p1 += a.norm_sqr();
                    }
                    for j1 in 0..ny {
                        let row = &amps[(i1 * ny + j1) * m..(i1 * ny + j1 + 1) * m];
                        for i2 in 0..nx {
                            let mut a = C64::new(0.0, 0.0);
                            for (j2, c) in chi.iter().enumerate() {
                                a += row[i2 * ny + j2] * c;
                            }
                            p2 += a.norm_sqr();
                        }
                    }
                    p1 + p2
                })
                .collect();
            0.5 * parts.iter().sum::<f64>() * dv * dy
        })
        .collect()
}

fn record(
    evolver: &mut Evolver,
    psi: &WaveField,
    step: usize,
    time: f64,
    probes: &Probes,
) -> Result<TraceRow> {
    let norm = psi.norm_sqr();
    let (a_lr, a_rl) = match probes.localized {
        Some(p) => (Some(inner_product(&p.psi_lr, psi)?), Some(inner_product(&p.psi_rl, psi)?)),
        None => (None, None),
    };
    let half = psi.rank() / 2;
    let (p_ll, p_rr) = if probes.quadrants {
        (
            Some(psi.mass_where(|x| x[0] < 0.0 && x[half] < 0.0)),
            Some(psi.mass_where(|x| x[0] > 0.0 && x[half] > 0.0)),
        )
    } else {
        (None, None)
    };
    let energy = probes.energy.then(|| evolver.energy(psi, time));
    let (x_purity, x1_purity, y_modes) = match &probes.collision {
        Some(c) => {
            let unit = psi.scaled(C64::new(1.0 / norm.sqrt(), 0.0));
            (
                Some(density::purity(&unit, &[0, 2])?),
                Some(density::purity(&unit, &[0])?),
                y_mode_occupations(&unit, &c.y_modes),
            )
        }
        None => (None, None, Vec::new()),
    };
    Ok(TraceRow { step, time, norm, a_lr, a_rl, p_ll, p_rr, energy, x_purity, x1_purity, y_modes })
}

/// Propagate `initial` for `config.total_time`, recording probes every
/// `snapshot_stride` steps.
pub fn propagate(initial: &WaveField, config: &PropagationConfig, evolver: &mut Evolver, probes: &Probes) -> Result<PropagationTrace> {
    let n = config.steps()?;
    if initial.space() != Space::Position || initial.grids() != evolver.grids() {
        return Err(Error::Shape("initial state must be a position field on the evolver grid".into()));
    }
    let norm0 = initial.norm_sqr();
    if (norm0 - 1.0).abs() > 1e-6 {
        return Err(Error::Domain(format!("initial state norm {norm0} is not 1")));
    }
    let sample: Vec<f64> = (0..=8).map(|i| config.total_time * i as f64 / 8.0).collect();
    config.check_stability(evolver.stability_bound(&sample))?;
    let grids = initial.grids().to_vec();
    let stride = config.snapshot_stride.max(1);
    let mut rows = vec![record(evolver, initial, 0, 0.0, probes)?];
    let mut snapshots = Vec::new();
    if config.keep_snapshots {
        snapshots.push(Snapshot { step: 0, time: 0.0, field: initial.clone() });
    }
    let mut lf = Leapfrog::start(evolver, initial.amplitudes(), 0.0, config.dt);
    let mut norms = vec![1.0];
    loop {
        let k = lf.steps;
        let cur_norm = reduce::norm_sqr(&lf.current) * initial.cell_volume();
        norms.push(cur_norm);
        if !(cur_norm < 1.21) {
            return Err(Error::Instability { step: k, norms });
        }
        if k % stride == 0 || k == n {
            let f = WaveField::new(grids.clone(), lf.current.clone(), Space::Position)?;
            rows.push(record(evolver, &f, k, k as f64 * config.dt, probes)?);
            if config.keep_snapshots {
                snapshots.push(Snapshot { step: k, time: k as f64 * config.dt, field: f });
            }
        }
        if k >= n {
            break;
        }
        lf.step(evolver)?;
    }
    let final_state = WaveField::new(grids, lf.current, Space::Position)?;
    Ok(PropagationTrace { rows, snapshots, final_state, dt: config.dt })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BarrierRemoval {
    #[default]
    Abrupt,
}

/// Single harmonic x-channel with SAW confinement along y, entered by two
/// electrons prepared in separate wells at ±`separation/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionChannel {
    /// Coefficient of x² (meV/nm²).
    pub harmonic_coefficient: f64,
    /// Distance between the two starting wells (nm).
    pub separation: f64,
    pub saw: SawParams,
    pub coulomb: CoulombParams,
}

impl CollisionChannel {
    pub fn omega_x(&self, units: &UnitSystem) -> f64 {
        (2.0 * self.harmonic_coefficient / units.mass()).sqrt()
    }

    /// Oscillator length of the x-channel.
    pub fn x_length(&self, units: &UnitSystem) -> f64 {
        (units.hbar / (units.mass() * self.omega_x(units))).sqrt()
    }

    /// Oscillator length of the harmonic approximation to the SAW well.
    pub fn y_length(&self, units: &UnitSystem) -> f64 {
        let w = (2.0 * self.saw.curvature() / units.mass()).sqrt();
        (units.hbar / (units.mass() * w)).sqrt()
    }

    /// Time for the packets to reach the opposite turning points: one collision.
    pub fn half_period(&self, units: &UnitSystem) -> f64 {
        std::f64::consts::PI / self.omega_x(units)
    }

    /// Grids sized to the channel: x covers the wells plus 5 oscillator
    /// lengths, y covers ±5.5 SAW-well lengths.
    pub fn grids(&self, units: &UnitSystem, nx: usize, ny: usize) -> Result<(Grid1D, Grid1D)> {
        let lx = 2.0 * (0.5 * self.separation + 5.0 * self.x_length(units));
        let ly = 11.0 * self.y_length(units);
        Ok((Grid1D::new(nx, lx)?, Grid1D::new(ny, ly)?))
    }

    pub fn single_particle_y(&self, y: f64) -> f64 {
        saw_potential(&self.saw, y, 0.0)
    }
}

/// Lowest `count` eigenvectors of the 1D SAW-well Hamiltonian on `gy`, using
/// the same kinetic discretization as the propagation. Normalized with Δy.
pub fn y_modes(saw: &SawParams, gy: &Grid1D, units: &UnitSystem, repr: Representation, count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = gy.n_points;
    let kin = KineticOperator::new(&[*gy], units, repr, Dispersion::Continuum);
    let mut h = nalgebra::DMatrix::<f64>::zeros(n, n);
    let mut e = vec![C64::new(0.0, 0.0); n];
    let mut col = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        e.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        e[j] = C64::new(1.0, 0.0);
        kin.apply(&e, &mut col);
        for i in 0..n {
            h[(i, j)] = col[i].re;
        }
        h[(j, j)] += saw_potential(saw, gy.coordinate(j), 0.0);
    }
    let h = 0.5 * (&h + h.transpose());
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let s = 1.0 / gy.spacing().sqrt();
    let mut energies = Vec::new();
    let mut vecs = Vec::new();
    for &k in order.iter().take(count) {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().map(|x| x * s).collect();
        // sign: largest entry positive
        let big = v.iter().copied().fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
        if big < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        energies.push(eig.eigenvalues[k]);
        vecs.push(v);
    }
    Ok((energies, vecs))
}

/// Product of Gaussian packets at ±separation/2 (particle 1 left) in the x
/// channel ground-state width, times the SAW-well y ground mode for each.
pub fn collision_initial_state(channel: &CollisionChannel, gx: &Grid1D, gy: &Grid1D, chi0: &[f64], units: &UnitSystem) -> Result<WaveField> {
    let l = channel.x_length(units);
    let x0 = 0.5 * channel.separation;
    let xs = gx.coordinates();
    let packet = |c: f64| -> Vec<f64> { xs.iter().map(|x| (-(x - c) * (x - c) / (2.0 * l * l)).exp()).collect() };
    let norm = |v: &[f64]| -> Vec<f64> {
        let s = (v.iter().map(|x| x * x).sum::<f64>() * gx.spacing()).sqrt();
        v.iter().map(|x| x / s).collect()
    };
    let left = norm(&packet(-x0));
    let right = norm(&packet(x0));
    let (nx, ny) = (gx.n_points, gy.n_points);
    let mut amps = vec![C64::new(0.0, 0.0); nx * ny * nx * ny];
    amps.par_chunks_mut(nx * ny).enumerate().for_each(|(a, row)| {
        let (i1, j1) = (a / ny, a % ny);
        let p1 = left[i1] * chi0[j1];
        for (b, z) in row.iter_mut().enumerate() {
            let (i2, j2) = (b / ny, b % ny);
            *z = C64::new(p1 * right[i2] * chi0[j2], 0.0);
        }
    });
    WaveField::new(vec![*gx, *gy, *gx, *gy], amps, Space::Position)?.normalize()
}

/// Two-particle potential of the joined channel on (x1, y1, x2, y2).
pub fn collision_potential(channel: &CollisionChannel, gx: &Grid1D, gy: &Grid1D) -> Vec<f64> {
    let (nx, ny) = (gx.n_points, gy.n_points);
    let xs = gx.coordinates();
    let ys = gy.coordinates();
    let mut one = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            one[i * ny + j] = channel.harmonic_coefficient * xs[i] * xs[i] + channel.single_particle_y(ys[j]);
        }
    }
    let table = CoulombTable::new(&channel.coulomb, gx, gy);
    pair_from_parts(&one, Some(&table), nx, ny)
}

/// Abrupt barrier removal at t = 0: the prepared packets fall together in
/// the joined harmonic channel and collide once over `duration`.
///
/// The trace carries x-sector purity and y-mode occupations at every
/// recorded step; `y_mode_count` modes are projected. Full fields are kept
/// at recorded steps when `keep_snapshots` is set.
#[allow(clippy::too_many_arguments)]
pub fn collision_scenario(
    initial: &WaveField,
    channel: &CollisionChannel,
    _removal: BarrierRemoval,
    duration: f64,
    units: &UnitSystem,
    repr: Representation,
    y_mode_count: usize,
    stride: usize,
    keep_snapshots: bool,
) -> Result<PropagationTrace> {
    let g = initial.grids();
    if g.len() != 4 {
        return Err(Error::Shape("collision runs on (x1, y1, x2, y2)".into()));
    }
    let (gx, gy) = (g[0], g[1]);
    let (_, modes) = y_modes(&channel.saw, &gy, units, repr, y_mode_count)?;
    let schedule = PotentialSchedule::Static(collision_potential(channel, &gx, &gy));
    let mut evolver = Evolver::new(g.to_vec(), units, repr, Dispersion::Continuum, schedule).referenced_to(initial, 0.0);
    let bound = evolver.stability_bound(&[0.0]);
    let config = PropagationConfig { keep_snapshots, ..PropagationConfig::fitted(duration, 0.9 * bound, repr, stride) };
    let probes = Probes { quadrants: true, energy: true, collision: Some(CollisionProbe { y_modes: modes }), ..Default::default() };
    propagate(initial, &config, &mut evolver, &probes)
}
