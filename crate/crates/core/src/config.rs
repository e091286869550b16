//! Run configuration: one TOML file per run, parsed, validated and
//! serialized back without loss.

use serde::{Deserialize, Serialize};

use crate::eigen::{Dispersion, MomentumBasisSpec};
use crate::models::{oscillator_lengths, Hopping, OrbitalMethod};
use crate::potentials::{CoulombParams, DevicePotentialParams, PotentialSpec, SawParams};
use crate::propagator::{CollisionChannel, Representation};
use crate::{Error, Result, UnitSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Eigensolve,
    TunnelingSweep,
    Collision,
    ModelComparison,
    FisherReport,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Self::Eigensolve => "eigensolve",
            Self::TunnelingSweep => "tunneling_sweep",
            Self::Collision => "collision",
            Self::ModelComparison => "model_comparison",
            Self::FisherReport => "fisher_report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoulombSection {
    pub delta_z: f64,
    /// Switch the interaction off in eigensolves and tunneling runs.
    pub enabled: bool,
}

impl Default for CoulombSection {
    fn default() -> Self {
        Self { delta_z: 50.0, enabled: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub nk_x: usize,
    pub nk_y: usize,
    pub extent_x: f64,
    pub extent_y: f64,
    /// Time step in ps; unset picks `dt_fraction` of the stability bound.
    pub dt: Option<f64>,
    pub dt_fraction: f64,
    pub space: Representation,
    pub dispersion: Dispersion,
    /// States per exchange sector in eigensolves.
    pub eigen_count: usize,
    pub tol_rel: f64,
    /// Minimum fraction of Ψ^LR with particle 1 left and particle 2 right.
    pub min_localization: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            nk_x: 8,
            nk_y: 6,
            extent_x: 320.0,
            extent_y: 340.0,
            dt: None,
            dt_fraction: 0.5,
            space: Representation::Momentum,
            dispersion: Dispersion::Continuum,
            eigen_count: 2,
            tol_rel: 1e-8,
            min_localization: 0.75,
        }
    }
}

impl Numerics {
    pub fn basis(&self) -> Result<MomentumBasisSpec> {
        MomentumBasisSpec::planar(self.nk_x, self.nk_y, self.extent_x, self.extent_y)
    }
}

/// How the barrier appears during a tunneling run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TunnelProfile {
    /// Device frozen at the coupled-region midpoint for the whole run.
    #[default]
    Static,
    /// Window entered and left in time as the SAW minimum crosses y_d and y_u.
    Ramp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TunnelingSection {
    /// Effective barrier height A_TB (meV); unset keeps the device's A₁.
    pub barrier_height: Option<f64>,
    /// Interaction time (ps).
    pub tau: f64,
    pub profile: TunnelProfile,
    /// Ramp runs start and end this many σ_y outside the coupled region.
    pub ramp_margin: f64,
}

impl Default for TunnelingSection {
    fn default() -> Self {
        Self { barrier_height: None, tau: 36.0, profile: TunnelProfile::Static, ramp_margin: 4.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollisionSection {
    pub nx: usize,
    pub ny: usize,
    pub separation: f64,
    /// Coefficient of x² in the joined channel (meV/nm²).
    pub harmonic_coefficient: f64,
    /// Run length (ps); unset runs one collision (half an x period).
    pub duration: Option<f64>,
    pub y_mode_count: usize,
    pub space: Representation,
}

impl Default for CollisionSection {
    fn default() -> Self {
        Self {
            nx: 40,
            ny: 16,
            separation: 134.0,
            harmonic_coefficient: 0.001,
            duration: None,
            y_mode_count: 3,
            space: Representation::Position,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsSection {
    pub orbital_method: OrbitalMethod,
    pub hopping: Hopping,
    pub quadrature_tol: f64,
    pub quadrature_levels: usize,
}

impl Default for ModelsSection {
    fn default() -> Self {
        Self { orbital_method: OrbitalMethod::Numeric, hopping: Hopping::Kinetic, quadrature_tol: 1e-4, quadrature_levels: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FisherSection {
    pub j0: f64,
    pub b: f64,
    pub a_tb: f64,
    /// Unset: τ from J τ = π/2 at `a_tb`.
    pub tau: Option<f64>,
    pub n_trials: u64,
}

impl Default for FisherSection {
    fn default() -> Self {
        Self { j0: 2.888, b: 0.933, a_tb: 3.86, tau: None, n_trials: 3000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    BarrierHeight,
    DeltaZ,
    SawAmplitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        if n == 1 {
            return vec![self.start];
        }
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    return self.stop;
                }
                let f = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.start + f * (self.stop - self.start),
                    Spacing::Log => (self.start.ln() + f * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Wfld,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: String,
    pub formats: Vec<Format>,
    /// Record every this many propagation steps.
    pub snapshot_stride: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: "out".into(), formats: vec![Format::Csv, Format::Wfld], snapshot_stride: 50 }
    }
}

impl OutputSection {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub allow_out_of_range: bool,
    /// Scaled-down grids for smoke tests; results are not physical.
    #[serde(default)]
    pub quick: bool,
    #[serde(default)]
    pub units: UnitSystem,
    #[serde(default)]
    pub device: DevicePotentialParams,
    #[serde(default)]
    pub saw: SawParams,
    #[serde(default)]
    pub coulomb: CoulombSection,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub tunneling: TunnelingSection,
    #[serde(default)]
    pub collision: CollisionSection,
    #[serde(default)]
    pub models: ModelsSection,
    #[serde(default)]
    pub fisher: FisherSection,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            seed: 0,
            allow_out_of_range: false,
            quick: false,
            units: UnitSystem::gaas(),
            device: DevicePotentialParams::default(),
            saw: SawParams::default(),
            coulomb: CoulombSection::default(),
            numerics: Numerics::default(),
            tunneling: TunnelingSection::default(),
            collision: CollisionSection::default(),
            models: ModelsSection::default(),
            fisher: FisherSection::default(),
            sweep: None,
            output: OutputSection::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = match e.span() {
                Some(span) => line_column(text, span.start),
                None => (0, 0),
            };
            Error::Parse { line, column, message: e.message().to_string() }
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Consistency(format!("config does not serialize: {e}")))
    }

    /// Copy with the grid and time scales reduced for smoke tests.
    pub fn quickened(&self) -> Self {
        let mut c = self.clone();
        c.quick = true;
        c.numerics.nk_x = c.numerics.nk_x.min(6);
        c.numerics.nk_y = c.numerics.nk_y.min(6);
        c.tunneling.tau *= 0.25;
        c.collision.nx = c.collision.nx.min(24);
        c.collision.ny = c.collision.ny.min(10);
        c.models.quadrature_tol = c.models.quadrature_tol.max(1e-3);
        c
    }

    pub fn coulomb_params(&self) -> Option<CoulombParams> {
        self.coulomb.enabled.then(|| CoulombParams::new(self.coulomb.delta_z, &self.units))
    }

    /// Device with the configured barrier height applied.
    pub fn device_params(&self) -> Result<DevicePotentialParams> {
        match self.tunneling.barrier_height {
            Some(a) => self.device.with_barrier_height(a),
            None => Ok(self.device),
        }
    }

    pub fn collision_channel(&self) -> CollisionChannel {
        CollisionChannel {
            harmonic_coefficient: self.collision.harmonic_coefficient,
            separation: self.collision.separation,
            saw: self.saw,
            coulomb: CoulombParams::new(self.coulomb.delta_z, &self.units),
        }
    }
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: String,
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(code: &str, field: &str, message: String) -> Self {
        Self { code: code.into(), field: field.into(), message }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({}): {}", self.code, self.field, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: &str) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    pub fn has_warning(&self, code: &str) -> bool {
        self.warnings.iter().any(|v| v.code == code)
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::Validation(self.violations.iter().map(|v| v.to_string()).collect()))
        }
    }
}

/// Gaussian ground-state density at distance `d` from the centre of a packet
/// of oscillator length `l`, relative to the peak.
fn edge_density(d: f64, l: f64) -> f64 {
    (-(d * d) / (l * l)).exp()
}

const EDGE_DENSITY_LIMIT: f64 = 1e-6;

fn push(report: &mut ValidationReport, code: &str, field: &str, message: String) {
    report.violations.push(Violation::new(code, field, message));
}

/// Out of the tabulated range: a violation, or a warning with the override set.
fn range(config: &RunConfig, report: &mut ValidationReport, field: &str, value: f64, lo: f64, hi: f64) {
    if !(lo..=hi).contains(&value) {
        let v = Violation::new("out_of_range", field, format!("{value} outside [{lo}, {hi}]"));
        if config.allow_out_of_range {
            report.warnings.push(v);
        } else {
            report.violations.push(v);
        }
    }
}

/// Check a config without running it: parameter ranges, the leapfrog
/// stability bound for an explicit dt, and decay of the states at the box edges.
pub fn validate(config: &RunConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    range(config, &mut report, "device.sigma1", config.device.sigma1, 30.0, 40.0);
    range(config, &mut report, "coulomb.delta_z", config.coulomb.delta_z, 10.0, 100.0);

    if let Err(Error::Validation(bad)) = config.device.validate() {
        for b in bad {
            push(&mut report, "invalid_device", "device", b);
        }
    }
    if !config.units.is_valid() {
        push(&mut report, "invalid_units", "units", "ħ, mass and permittivity must be positive".into());
    }
    if !(config.saw.amplitude >= 0.0 && config.saw.wavelength > 0.0) {
        push(&mut report, "invalid_saw", "saw", "amplitude must be ≥ 0 and wavelength > 0".into());
    }
    if !(config.coulomb.delta_z > 0.0) {
        push(&mut report, "invalid_coulomb", "coulomb.delta_z", "Δz must be positive".into());
    }
    let n = &config.numerics;
    if n.nk_x == 0 || n.nk_y == 0 || !(n.extent_x > 0.0 && n.extent_y > 0.0) {
        push(&mut report, "invalid_grid", "numerics", "N_k and extents must be positive".into());
    }
    if !(n.dt_fraction > 0.0 && n.dt_fraction < 1.0) {
        push(&mut report, "invalid_dt_fraction", "numerics.dt_fraction", format!("{} not in (0, 1)", n.dt_fraction));
    }
    if let Some(dt) = n.dt {
        if !(dt > 0.0) {
            push(&mut report, "invalid_dt", "numerics.dt", format!("dt must be positive, got {dt}"));
        }
    }
    if !(config.tunneling.tau > 0.0) {
        push(&mut report, "invalid_tau", "tunneling.tau", "τ must be positive".into());
    }
    if config.tunneling.barrier_height.is_some_and(|a| !(a > 0.0)) {
        push(&mut report, "invalid_barrier", "tunneling.barrier_height", "A_TB must be positive".into());
    }
    if config.output.snapshot_stride == 0 {
        push(&mut report, "invalid_stride", "output.snapshot_stride", "stride must be at least 1".into());
    }
    if config.fisher.n_trials == 0 {
        push(&mut report, "invalid_trials", "fisher.n_trials", "N must be at least 1".into());
    }
    if let Some(s) = &config.sweep {
        if s.points == 0 {
            push(&mut report, "invalid_sweep", "sweep.points", "a sweep needs at least one point".into());
        }
        if s.spacing == Spacing::Log && !(s.start > 0.0 && s.stop > 0.0) {
            push(&mut report, "invalid_sweep", "sweep", "log spacing needs positive bounds".into());
        }
        let allowed = match config.scenario {
            Scenario::TunnelingSweep => matches!(s.variable, SweepVariable::BarrierHeight | SweepVariable::DeltaZ),
            Scenario::Collision => matches!(s.variable, SweepVariable::SawAmplitude | SweepVariable::DeltaZ),
            Scenario::ModelComparison => s.variable == SweepVariable::DeltaZ,
            Scenario::Eigensolve | Scenario::FisherReport => false,
        };
        if !allowed {
            push(&mut report, "invalid_sweep", "sweep.variable", format!("{:?} cannot be swept in {}", s.variable, config.scenario.name()));
        }
        if s.variable == SweepVariable::DeltaZ {
            for v in s.values() {
                range(config, &mut report, "sweep.delta_z", v, 10.0, 100.0);
            }
        }
    }
    if config.scenario == Scenario::ModelComparison && config.sweep.is_none() {
        report.violations.push(Violation::new("invalid_sweep", "sweep", "model comparison needs a Δz sweep".into()));
    }
    if !report.is_ok() {
        return report;
    }
    match config.scenario {
        Scenario::Eigensolve | Scenario::TunnelingSweep | Scenario::ModelComparison => check_basis(config, &mut report),
        Scenario::Collision => check_collision(config, &mut report),
        Scenario::FisherReport => {}
    }
    report
}

fn check_basis(config: &RunConfig, report: &mut ValidationReport) {
    let device = match config.device_params() {
        Ok(d) => d,
        Err(e) => {
            report.violations.push(Violation::new("invalid_barrier", "tunneling.barrier_height", e.to_string()));
            return;
        }
    };
    let n = &config.numerics;
    let w = device.window(device.y_mid());
    let (x_min, _) = device.profile_minimum(w);
    let (lx, ly) = oscillator_lengths(&device, &config.saw, &config.units, x_min);
    let dx = 0.5 * n.extent_x - x_min;
    if !(dx > 0.0) || edge_density(dx, lx) > EDGE_DENSITY_LIMIT {
        report.violations.push(Violation::new(
            "grid_decay",
            "numerics.extent_x",
            format!("well at x = {x_min:.1} nm with width {lx:.1} nm is not contained in ±{:.1} nm", 0.5 * n.extent_x),
        ));
    }
    if edge_density(0.5 * n.extent_y, ly) > EDGE_DENSITY_LIMIT {
        report.violations.push(Violation::new(
            "grid_decay",
            "numerics.extent_y",
            format!("SAW well of width {ly:.1} nm is not contained in ±{:.1} nm", 0.5 * n.extent_y),
        ));
    }
    if config.scenario == Scenario::TunnelingSweep {
        if let Some(dt) = n.dt {
            let Ok(basis) = n.basis() else { return };
            let g = basis.grids();
            let spec = PotentialSpec {
                device,
                saw: config.saw,
                coulomb: config.coulomb_params(),
                profile: crate::potentials::ChannelProfile::Frozen { y_eval: device.y_mid() },
            };
            let v = spec.sample_pair(&g[0], &g[1], 0.0);
            let bound = crate::runner::stability_bound(&g, v, &config.units, n.space, n.dispersion);
            stability(dt, bound, report);
        }
    }
}

fn check_collision(config: &RunConfig, report: &mut ValidationReport) {
    let c = &config.collision;
    if c.nx < 4 || c.ny < 4 || c.y_mode_count == 0 || !(c.separation > 0.0 && c.harmonic_coefficient > 0.0) {
        report.violations.push(Violation::new("invalid_collision", "collision", "grids ≥ 4 points, positive separation and confinement".into()));
        return;
    }
    if let Some(dt) = config.numerics.dt {
        let channel = config.collision_channel();
        if let Ok((gx, gy)) = channel.grids(&config.units, c.nx, c.ny) {
            let v = crate::propagator::collision_potential(&channel, &gx, &gy);
            let bound = crate::runner::stability_bound(&[gx, gy, gx, gy], v, &config.units, c.space, Dispersion::Continuum);
            stability(dt, bound, report);
        }
    }
}

fn stability(dt: f64, bound: f64, report: &mut ValidationReport) {
    if dt >= bound {
        report.violations.push(Violation::new("dt_stability", "numerics.dt", format!("dt {dt} ps exceeds the stability bound {bound:.3e} ps")));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let mut c = RunConfig::new(Scenario::TunnelingSweep);
        c.sweep = Some(Sweep { variable: SweepVariable::BarrierHeight, start: 1.5, stop: 3.0, points: 8, spacing: Spacing::Linear });
        c.numerics.dt = Some(0.004);
        let text = c.to_toml().unwrap();
        assert_eq!(RunConfig::parse(&text).unwrap(), c);
    }

    #[test]
    fn minimal_file_takes_defaults() {
        let c = RunConfig::parse("scenario = \"eigensolve\"\n[device]\nsigma1 = 32.0\n").unwrap();
        assert_eq!(c.device.sigma1, 32.0);
        assert_eq!(c.device.a2, 510.0);
        assert_eq!(c.saw, SawParams::default());
    }

    #[test]
    fn parse_errors_carry_position() {
        let text = "scenario = \"eigensolve\"\n[saw]\namplitude = \"loud\"\n";
        match RunConfig::parse(text) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 13)),
            other => panic!("{other:?}"),
        }
        match RunConfig::parse("scenario = \"eigensolve\"\n[saw]\nampl = 3.0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn table_ranges() {
        let mut c = RunConfig::new(Scenario::FisherReport);
        c.device.sigma1 = 35.0;
        assert!(validate(&c).is_ok());
        c.coulomb.delta_z = 5.0;
        let r = validate(&c);
        assert!(r.has("out_of_range"));
        c.allow_out_of_range = true;
        let r = validate(&c);
        assert!(r.is_ok() && r.has_warning("out_of_range"));
    }

    #[test]
    fn explicit_dt_above_bound_is_rejected() {
        let mut c = RunConfig::new(Scenario::TunnelingSweep);
        c.tunneling.barrier_height = Some(2.0);
        c.numerics.dt = Some(1.0);
        assert!(validate(&c).has("dt_stability"));
        c.numerics.dt = Some(1e-4);
        assert!(validate(&c).is_ok(), "{:?}", validate(&c));
    }

    #[test]
    fn small_box_fails_decay_check() {
        let mut c = RunConfig::new(Scenario::Eigensolve);
        c.numerics.extent_y = 120.0;
        assert!(validate(&c).has("grid_decay"));
        assert!(validate(&RunConfig::new(Scenario::Eigensolve)).is_ok());
    }

    #[test]
    fn log_sweep_spans_decades() {
        let s = Sweep { variable: SweepVariable::SawAmplitude, start: 2.5, stop: 2500.0, points: 4, spacing: Spacing::Log };
        let v = s.values();
        for (a, b) in v.iter().zip([2.5, 25.0, 250.0, 2500.0]) {
            assert!((a - b).abs() < 1e-9 * b);
        }
    }
}
