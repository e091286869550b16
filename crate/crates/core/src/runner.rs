//! Scenario execution: config in, artifacts and manifest out.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analysis::{
    self, collision_samples, effective_gate_fidelity, fisher_information, gate_matrix, root_of_swap_time,
    swap_sensitivity_slope, CollisionSample, SwapFit, QUOTED_SLOPE_PER_UEV,
};
use crate::config::{validate, Format, RunConfig, Scenario, SweepVariable, TunnelProfile};
use crate::eigen::{self, build_localized_pair_with, left_right_mass, Dispersion, EigenResult, LocalizedPair, SolveOptions};
use crate::models::{self, ComparisonRow, OrbitalSetup, QuadratureOptions};
use crate::output::{complex, num, opt, ManifestEntry, OutputDir};
use crate::potentials::{ChannelProfile, CoulombParams, DevicePotentialParams, PotentialSpec};
use crate::propagator::{
    self, collision_initial_state, collision_scenario, y_modes, BarrierRemoval, Evolver, PotentialSchedule,
    PropagationConfig, PropagationTrace, Probes, Representation,
};
use crate::{Error, Grid1D, Result, UnitSystem};

/// Process exit status for an error: 2 bad input, 3 failed run, 4 I/O.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::Validation(_) => 2,
        Error::Io(_) => 4,
        _ => 3,
    }
}

/// Largest stable leapfrog step for a static potential on `grids`.
pub fn stability_bound(grids: &[Grid1D], potential: Vec<f64>, units: &UnitSystem, repr: Representation, dispersion: Dispersion) -> f64 {
    Evolver::new(grids.to_vec(), units, repr, dispersion, PotentialSchedule::Static(potential)).stability_bound(&[0.0])
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub directory: PathBuf,
    pub manifest: Vec<ManifestEntry>,
    /// One line per headline number.
    pub summary: Vec<String>,
    pub quick: bool,
}

/// Validate and run `config`, writing into `directory` (or the configured one).
pub fn run(config: &RunConfig, directory: Option<&Path>) -> Result<RunOutcome> {
    validate(config).into_result()?;
    let dir = directory.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&config.output.directory));
    let mut out = OutputDir::create(&dir)?;
    let mut notes = vec![format!("scenario: {}", config.scenario.name())];
    if config.quick {
        notes.push("quick mode: reduced grids and times, results are not physical".into());
    }
    let result = match config.scenario {
        Scenario::Eigensolve => run_eigensolve(config, &mut out),
        Scenario::TunnelingSweep => run_tunneling(config, &mut out),
        Scenario::Collision => run_collision(config, &mut out),
        Scenario::ModelComparison => run_model_comparison(config, &mut out),
        Scenario::FisherReport => run_fisher(config, &mut out),
    };
    let summary = match result {
        Ok(s) => s,
        Err(e) => {
            if let Error::Instability { step, norms } = &e {
                let rows: Vec<Vec<String>> = norms.iter().enumerate().map(|(i, n)| vec![i.to_string(), num(*n)]).collect();
                out.write_csv("instability_dump.csv", &["step", "norm"], &rows)?;
                notes.push(format!("run aborted: unstable at step {step}"));
                out.write_manifest(&notes)?;
            }
            return Err(e);
        }
    };
    let manifest = out.write_manifest(&notes)?;
    Ok(RunOutcome { directory: dir, manifest, summary, quick: config.quick })
}

fn solve_options(config: &RunConfig) -> SolveOptions {
    SolveOptions { tol_rel: config.numerics.tol_rel, ..SolveOptions::default() }
}

fn frozen_spec(config: &RunConfig, device: DevicePotentialParams, coulomb: Option<CoulombParams>, y_eval: f64) -> PotentialSpec {
    PotentialSpec { device, saw: config.saw, coulomb, profile: ChannelProfile::Frozen { y_eval } }
}

fn energies_rows(eig: &EigenResult) -> Vec<Vec<String>> {
    (0..eig.energies.len())
        .map(|i| {
            let sector = match eig.parities[i] {
                Some(p) if p > 0.5 => "singlet",
                Some(p) if p < -0.5 => "triplet",
                _ => "mixed",
            };
            vec![i.to_string(), num(eig.energies[i]), sector.into(), opt(eig.parities[i]), num(eig.residuals[i])]
        })
        .collect()
}

const ENERGY_HEADER: [&str; 5] = ["index", "energy_mev", "sector", "exchange_parity", "residual"];

fn run_eigensolve(config: &RunConfig, out: &mut OutputDir) -> Result<Vec<String>> {
    let device = config.device_params()?;
    let spec = frozen_spec(config, device, config.coulomb_params(), device.y_mid());
    let basis = config.numerics.basis()?;
    let n = &config.numerics;
    let eig = eigen::solve_two_particle(&spec, &basis, &config.units, n.dispersion, n.eigen_count.max(1), 0.0, &solve_options(config))?;
    out.write_csv("energies.csv", &ENERGY_HEADER, &energies_rows(&eig))?;
    let (es, et) = match (eig.singlet_index, eig.triplet_index) {
        (Some(s), Some(t)) => (eig.energies[s], eig.energies[t]),
        _ => return Err(Error::Consistency("eigensolve found no singlet/triplet pair".into())),
    };
    let de = et - es;
    out.write_csv(
        "summary.csv",
        &["barrier_height_mev", "e_singlet_mev", "e_triplet_mev", "delta_e_mev", "j_per_ps", "j_cycles_per_ps", "near_degenerate"],
        &[vec![
            num(device.effective_barrier_height()),
            num(es),
            num(et),
            num(de),
            num(de / config.units.hbar),
            num(de / (2.0 * PI * config.units.hbar)),
            eig.near_degenerate.to_string(),
        ]],
    )?;
    if config.output.wants(Format::Wfld) {
        out.write_wfld("singlet.wfld", eig.singlet().expect("singlet index checked"))?;
        out.write_wfld("triplet.wfld", eig.triplet().expect("triplet index checked"))?;
    }
    Ok(vec![format!("E_S = {es} meV"), format!("E_T = {et} meV"), format!("delta_E = {de} meV")])
}

/// One static (or ramped) tunneling run started in Ψ^LR.
#[derive(Debug, Clone)]
pub struct TunnelingPoint {
    pub barrier_height: f64,
    pub delta_z: Option<f64>,
    pub eigen: EigenResult,
    pub pair: LocalizedPair,
    /// E_T - E_S (meV).
    pub delta_e: f64,
    /// ΔE/ħ (ps⁻¹).
    pub j: f64,
    /// Fraction of Ψ^LR with particle 1 left and particle 2 right.
    pub localization: f64,
    /// Time over which the barrier is lowered (ps).
    pub tau: f64,
    /// |⟨Ψ^RL|ψ(τ)⟩|².
    pub p_swap: f64,
    /// sin²(ΔE τ/2ħ).
    pub p_two_level: f64,
    /// Largest |P_RL(t) - sin²(ΔE t/2ħ)| over the recorded rows (static runs).
    pub max_deviation: f64,
    pub norm_drift: f64,
    /// Against SWAP^{1/2}.
    pub fidelity_root_swap: f64,
    pub trace: PropagationTrace,
}

/// Eigensolve at the frozen midpoint, then propagate Ψ^LR.
pub fn tunneling_point(config: &RunConfig, device: &DevicePotentialParams, coulomb: Option<CoulombParams>) -> Result<TunnelingPoint> {
    let n = &config.numerics;
    let units = &config.units;
    let basis = n.basis()?;
    let low = frozen_spec(config, *device, coulomb, device.y_mid());
    let eig = eigen::solve_two_particle(&low, &basis, units, n.dispersion, n.eigen_count.max(1), 0.0, &solve_options(config))?;
    let delta_e = eig.delta_e.ok_or_else(|| Error::Consistency("no singlet/triplet pair".into()))?;
    let pair = build_localized_pair_with(&eig, n.min_localization)?;
    let g1 = basis.grids();
    let grids = basis.paired().grids();
    let t = &config.tunneling;
    let v = config.saw.velocity;
    let (schedule, total, tau) = match t.profile {
        TunnelProfile::Static => (PotentialSchedule::Static(low.sample_pair(&g1[0], &g1[1], 0.0)), t.tau, t.tau),
        TunnelProfile::Ramp => {
            let margin = t.ramp_margin * device.sigma_y;
            let high = frozen_spec(config, *device, coulomb, device.y_d - margin);
            let t_in = margin / v;
            let tau = (device.y_u - device.y_d) / v;
            let schedule = PotentialSchedule::ramp(
                high.sample_pair(&g1[0], &g1[1], 0.0),
                low.sample_pair(&g1[0], &g1[1], 0.0),
                t_in,
                t_in + tau,
                device.sigma_y / v,
            );
            (schedule, tau + 2.0 * t_in, tau)
        }
    };
    let mut evolver = Evolver::new(grids, units, n.space, n.dispersion, schedule).referenced_to(&pair.psi_lr, 0.0);
    let sample: Vec<f64> = (0..=8).map(|i| total * i as f64 / 8.0).collect();
    let dt_max = n.dt.unwrap_or_else(|| n.dt_fraction * evolver.stability_bound(&sample));
    let prop = PropagationConfig::fitted(total, dt_max, n.space, config.output.snapshot_stride);
    let probes = Probes { localized: Some(&pair), quadrants: true, ..Default::default() };
    let trace = propagator::propagate(&pair.psi_lr, &prop, &mut evolver, &probes)?;
    let hbar = units.hbar;
    let max_deviation = match t.profile {
        TunnelProfile::Static => trace
            .rows
            .iter()
            .map(|r| (r.p_rl().unwrap_or(0.0) - analysis::two_level_swap(delta_e, r.time, hbar)).abs())
            .fold(0.0, f64::max),
        TunnelProfile::Ramp => f64::NAN,
    };
    let last = trace.last();
    let (a_lr, a_rl) = (last.a_lr.unwrap_or_default(), last.a_rl.unwrap_or_default());
    Ok(TunnelingPoint {
        barrier_height: device.effective_barrier_height(),
        delta_z: coulomb.map(|c| c.delta_z),
        delta_e,
        j: delta_e / hbar,
        localization: left_right_mass(&pair.psi_lr),
        tau,
        p_swap: a_rl.norm_sqr(),
        p_two_level: analysis::two_level_swap(delta_e, tau, hbar),
        max_deviation,
        norm_drift: trace.max_norm_drift(),
        fidelity_root_swap: effective_gate_fidelity(a_lr, a_rl, &gate_matrix(0.5)),
        eigen: eig,
        pair,
        trace,
    })
}

fn point_dir(i: usize) -> String {
    format!("point_{i:03}")
}

fn run_tunneling(config: &RunConfig, out: &mut OutputDir) -> Result<Vec<String>> {
    let base = config.device_params()?;
    let settings: Vec<(DevicePotentialParams, Option<CoulombParams>)> = match &config.sweep {
        None => vec![(base, config.coulomb_params())],
        Some(s) => s
            .values()
            .into_iter()
            .map(|x| match s.variable {
                SweepVariable::BarrierHeight => Ok((config.device.with_barrier_height(x)?, config.coulomb_params())),
                SweepVariable::DeltaZ => Ok((base, Some(CoulombParams::new(x, &config.units)))),
                SweepVariable::SawAmplitude => Err(Error::Usage("SAW amplitude is swept in collision runs".into())),
            })
            .collect::<Result<_>>()?,
    };
    let points: Vec<TunnelingPoint> =
        settings.par_iter().map(|(d, c)| tunneling_point(config, d, *c)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let dir = point_dir(i);
        out.write_csv(&format!("{dir}/energies.csv"), &ENERGY_HEADER, &energies_rows(&p.eigen))?;
        let trace_rows: Vec<Vec<String>> = p
            .trace
            .rows
            .iter()
            .map(|r| {
                let [lr_re, lr_im] = complex(r.a_lr.unwrap_or_default());
                let [rl_re, rl_im] = complex(r.a_rl.unwrap_or_default());
                vec![
                    r.step.to_string(),
                    num(r.time),
                    num(r.norm),
                    lr_re,
                    lr_im,
                    rl_re,
                    rl_im,
                    opt(r.p_rl()),
                    num(analysis::two_level_swap(p.delta_e, r.time, config.units.hbar)),
                    opt(r.p_ll),
                    opt(r.p_rr),
                ]
            })
            .collect();
        out.write_csv(
            &format!("{dir}/trace.csv"),
            &["step", "time_ps", "norm", "a_lr_re", "a_lr_im", "a_rl_re", "a_rl_im", "p_rl", "p_two_level", "p_ll", "p_rr"],
            &trace_rows,
        )?;
        if config.output.wants(Format::Wfld) {
            out.write_wfld(&format!("{dir}/psi_lr.wfld"), &p.pair.psi_lr)?;
            out.write_wfld(&format!("{dir}/final.wfld"), &p.trace.final_state)?;
        }
        rows.push(vec![
            num(p.barrier_height),
            opt(p.delta_z),
            num(p.delta_e),
            num(p.j),
            num(p.localization),
            num(p.tau),
            num(p.p_swap),
            num(p.p_two_level),
            num(p.max_deviation),
            num(p.norm_drift),
            num(p.fidelity_root_swap),
        ]);
    }
    out.write_csv(
        "swap_probabilities.csv",
        &[
            "barrier_height_mev",
            "delta_z_nm",
            "delta_e_mev",
            "j_per_ps",
            "localization",
            "tau_ps",
            "p_swap",
            "p_two_level",
            "max_deviation",
            "norm_drift",
            "fidelity_root_swap",
        ],
        &rows,
    )?;
    let mut summary: Vec<String> = points
        .iter()
        .map(|p| format!("A_TB = {:.4} meV: delta_E = {:.6e} meV, P_swap = {:.6}", p.barrier_height, p.delta_e, p.p_swap))
        .collect();
    let by_barrier = config.sweep.is_some_and(|s| s.variable == SweepVariable::BarrierHeight);
    if by_barrier && points.len() >= 4 {
        let tau = points[0].tau;
        let data: Vec<(f64, f64)> = points.iter().map(|p| (p.barrier_height, p.p_swap)).collect();
        let fit_row = match analysis::fit_exponential_swap(&data, tau) {
            Ok(f) => {
                summary.push(format!("fit: J0 = {:.6} ps^-1, b = {:.6} meV^-1, R2 = {:.6}", f.j0, f.b, f.r2));
                vec!["ok".into(), num(f.j0), num(f.b), num(f.tau), num(f.r2), num(f.residual)]
            }
            Err(e) => {
                summary.push(format!("fit failed: {e}"));
                vec![e.to_string(), String::new(), String::new(), num(tau), String::new(), String::new()]
            }
        };
        out.write_csv("fit_report.csv", &["status", "j0_per_ps", "b_per_mev", "tau_ps", "r2", "residual"], &[fit_row])?;
        let law: Vec<(f64, f64)> = points.iter().map(|p| (p.barrier_height, p.j)).collect();
        if let Ok((j0, b, r2)) = analysis::exponential_law(&law) {
            out.write_csv("exponential_law.csv", &["j0_per_ps", "b_per_mev", "r2"], &[vec![num(j0), num(b), num(r2)]])?;
            summary.push(format!("ln J vs A_TB: J0 = {j0:.6} ps^-1, b = {b:.6} meV^-1, R2 = {r2:.6}"));
        }
    }
    Ok(summary)
}

/// One collision run and its diagnostics.
#[derive(Debug, Clone)]
pub struct CollisionPoint {
    pub saw_amplitude: f64,
    pub delta_z: f64,
    pub samples: Vec<CollisionSample>,
    /// Particle 1 ends at x > 0 and particle 2 at x < 0.
    pub transmitted: f64,
    pub min_x_purity: f64,
    pub min_lowest_two: f64,
    pub final_lowest_two: f64,
    pub trace: PropagationTrace,
}

pub fn collision_point(config: &RunConfig, saw_amplitude: f64, delta_z: f64, keep_snapshots: bool) -> Result<CollisionPoint> {
    let mut channel = config.collision_channel();
    channel.saw.amplitude = saw_amplitude;
    channel.coulomb = CoulombParams::new(delta_z, &config.units);
    let c = &config.collision;
    let units = &config.units;
    let (gx, gy) = channel.grids(units, c.nx, c.ny)?;
    let (_, modes) = y_modes(&channel.saw, &gy, units, c.space, 1)?;
    let psi = collision_initial_state(&channel, &gx, &gy, &modes[0], units)?;
    let duration = c.duration.unwrap_or_else(|| channel.half_period(units));
    let trace = collision_scenario(
        &psi,
        &channel,
        BarrierRemoval::Abrupt,
        duration,
        units,
        c.space,
        c.y_mode_count,
        config.output.snapshot_stride,
        keep_snapshots,
    )?;
    let samples = collision_samples(&trace)?;
    let lowest: Vec<f64> = samples.iter().map(CollisionSample::lowest_two).collect();
    Ok(CollisionPoint {
        saw_amplitude,
        delta_z,
        transmitted: trace.final_state.mass_where(|x| x[0] > 0.0 && x[2] < 0.0),
        min_x_purity: samples.iter().map(|s| s.x_purity).fold(f64::INFINITY, f64::min),
        min_lowest_two: lowest.iter().copied().fold(f64::INFINITY, f64::min),
        final_lowest_two: *lowest.last().expect("trace has rows"),
        samples,
        trace,
    })
}

fn run_collision(config: &RunConfig, out: &mut OutputDir) -> Result<Vec<String>> {
    let settings: Vec<(f64, f64)> = match &config.sweep {
        None => vec![(config.saw.amplitude, config.coulomb.delta_z)],
        Some(s) => s
            .values()
            .into_iter()
            .map(|x| match s.variable {
                SweepVariable::SawAmplitude => (x, config.coulomb.delta_z),
                _ => (config.saw.amplitude, x),
            })
            .collect(),
    };
    let keep = config.output.wants(Format::Wfld);
    let mut summary = Vec::new();
    let mut rows = Vec::new();
    // points run one after another: each already fills every core and a 4D
    // field per point is the memory bottleneck
    for (i, &(amp, dz)) in settings.iter().enumerate() {
        let p = collision_point(config, amp, dz, keep)?;
        let dir = point_dir(i);
        let n_modes = config.collision.y_mode_count;
        let mut header: Vec<String> = ["step", "time_ps", "norm", "energy_mev", "p_ll", "p_rr", "x_purity", "x1_purity"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((0..n_modes).map(|k| format!("y_mode_{k}")));
        header.push("lowest_two".into());
        let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
        let trace_rows: Vec<Vec<String>> = p
            .trace
            .rows
            .iter()
            .zip(&p.samples)
            .map(|(r, s)| {
                let mut row = vec![
                    r.step.to_string(),
                    num(r.time),
                    num(r.norm),
                    opt(r.energy),
                    opt(r.p_ll),
                    opt(r.p_rr),
                    num(s.x_purity),
                    num(s.x1_purity),
                ];
                row.extend(s.y_modes.iter().map(|&y| num(y)));
                row.push(num(s.lowest_two()));
                row
            })
            .collect();
        out.write_csv(&format!("{dir}/trace.csv"), &header_ref, &trace_rows)?;
        for snap in &p.trace.snapshots {
            out.write_wfld(&format!("{dir}/snap_{:06}.wfld", snap.step), &snap.field)?;
        }
        summary.push(format!(
            "A_SAW = {amp} meV, dz = {dz} nm: min x-purity {:.5}, min lowest-two {:.5}, transmitted {:.5}",
            p.min_x_purity, p.min_lowest_two, p.transmitted
        ));
        rows.push(vec![
            num(amp),
            num(dz),
            num(p.min_x_purity),
            num(p.min_lowest_two),
            num(p.final_lowest_two),
            num(p.transmitted),
            num(p.trace.max_norm_drift()),
            num(p.trace.dt),
        ]);
    }
    out.write_csv(
        "collision_summary.csv",
        &["saw_amplitude_mev", "delta_z_nm", "min_x_purity", "min_lowest_two", "final_lowest_two", "transmitted", "norm_drift", "dt_ps"],
        &rows,
    )?;
    Ok(summary)
}

/// Orbitals, two-site parameters and full-solver J for each Δz.
pub fn model_comparison(config: &RunConfig, delta_z: &[f64]) -> Result<(models::OrbitalPair, Vec<ComparisonRow>)> {
    let device = config.device_params()?;
    let mut setup = OrbitalSetup::new(config.saw, config.numerics.basis()?);
    setup.dispersion = config.numerics.dispersion;
    setup.solve = solve_options(config);
    let units = &config.units;
    let orbitals = models::build_orbitals(&device, config.models.orbital_method, &setup, units)?;
    let quad = QuadratureOptions { tol: config.models.quadrature_tol, max_levels: config.models.quadrature_levels, ..Default::default() };
    let rows = models::model_comparison_sweep(delta_z, &orbitals, units, config.models.hopping, &quad, |c| {
        models::full_splitting(&device, &setup, units, c)
    })?;
    Ok((orbitals, rows))
}

fn run_model_comparison(config: &RunConfig, out: &mut OutputDir) -> Result<Vec<String>> {
    let dz = config.sweep.as_ref().map(|s| s.values()).unwrap_or_else(|| vec![config.coulomb.delta_z]);
    let (orbitals, rows) = model_comparison(config, &dz)?;
    let main: Vec<Vec<String>> =
        rows.iter().map(|r| vec![num(r.delta_z), num(r.j_full), num(r.j_hubbard), num(r.j_hund_mulliken)]).collect();
    out.write_csv("model_comparison.csv", &["delta_z_nm", "j_full_per_ps", "j_hubbard_per_ps", "j_hm_per_ps"], &main)?;
    let params: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let (h, m) = (&r.hubbard, &r.hund_mulliken);
            vec![
                num(r.delta_z),
                num(r.delta_e_full),
                num(h.u_onsite),
                num(h.v_intersite),
                num(h.t_lr),
                num(h.splitting()),
                num(m.u_onsite),
                num(m.x_exchange),
                num(m.v_plus),
                num(m.v_minus),
                num(m.t_h),
                num(m.splitting()),
            ]
        })
        .collect();
    out.write_csv(
        "model_parameters.csv",
        &[
            "delta_z_nm",
            "delta_e_full_mev",
            "hubbard_u_mev",
            "hubbard_v_mev",
            "hubbard_t_mev",
            "hubbard_delta_e_mev",
            "hm_u_mev",
            "hm_x_mev",
            "hm_v_plus_mev",
            "hm_v_minus_mev",
            "hm_t_h_mev",
            "hm_delta_e_mev",
        ],
        &params,
    )?;
    let t = orbitals.hopping(&config.units, config.models.hopping)?;
    out.write_csv("orbitals.csv", &["overlap_s", "g", "hopping_mev"], &[vec![num(orbitals.overlap_s), num(orbitals.g), num(t)]])?;
    if config.output.wants(Format::Wfld) {
        out.write_wfld("orbital_left.wfld", &orbitals.ortho_left)?;
        out.write_wfld("orbital_right.wfld", &orbitals.ortho_right)?;
    }
    Ok(rows
        .iter()
        .map(|r| {
            format!(
                "dz = {} nm: J full {:.4e}, Hubbard {:.4e}, Hund-Mulliken {:.4e} ps^-1",
                r.delta_z, r.j_full, r.j_hubbard, r.j_hund_mulliken
            )
        })
        .collect())
}

fn run_fisher(config: &RunConfig, out: &mut OutputDir) -> Result<Vec<String>> {
    let f = &config.fisher;
    let tau = f.tau.unwrap_or_else(|| root_of_swap_time(f.j0, f.b, f.a_tb));
    let fit = SwapFit { j0: f.j0, b: f.b, tau, residual: 0.0, r2: 1.0 };
    let r = fisher_information(&fit, f.a_tb, tau, f.n_trials)?;
    out.write_csv(
        "fisher_report.csv",
        &[
            "a_tb_mev",
            "tau_ps",
            "n_trials",
            "p_swap",
            "f_barrier_per_mev2",
            "f_tau_per_ps2",
            "sigma_barrier_mev",
            "sigma_tau_ps",
            "f_barrier_numeric",
            "f_tau_numeric",
            "unbounded",
        ],
        &[vec![
            num(r.a_tb),
            num(r.tau),
            r.n_trials.to_string(),
            num(r.probability),
            num(r.f_barrier),
            num(r.f_tau),
            num(r.sigma_barrier),
            num(r.sigma_tau),
            opt(r.f_barrier_numeric),
            opt(r.f_tau_numeric),
            r.unbounded.to_string(),
        ]],
    )?;
    let slope = swap_sensitivity_slope(&SwapFit { tau: config.tunneling.tau, ..fit }).ok();
    out.write_csv(
        "slope.csv",
        &["tau_ps", "slope_per_uev", "quoted_slope_per_uev"],
        &[vec![num(config.tunneling.tau), opt(slope), num(QUOTED_SLOPE_PER_UEV)]],
    )?;
    let mut gates = String::new();
    for (name, n) in [("SWAP^1/2", 0.5), ("SWAP", 1.0)] {
        gates.push_str(&format!("{name}\n{}\n", gate_matrix(n).to_table()));
    }
    out.write_text("gates.txt", &gates)?;
    let mut summary = vec![
        format!("tau = {tau:.6} ps, P = {:.6}", r.probability),
        format!("F(A_TB) = {:.6} meV^-2, sigma_A_TB >= {:.6} meV", r.f_barrier, r.sigma_barrier),
        format!("F(tau) = {:.6e} ps^-2, sigma_tau >= {:.6} ps", r.f_tau, r.sigma_tau),
    ];
    if let Some(s) = slope {
        summary.push(format!("dP/dA_TB at P = 0.5: {s:.4e} per ueV (quoted {QUOTED_SLOPE_PER_UEV:.3e})"));
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Validation(vec![])), 2);
        assert_eq!(exit_code(&Error::Parse { line: 1, column: 1, message: String::new() }), 2);
        assert_eq!(exit_code(&Error::Instability { step: 3, norms: vec![] }), 3);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 4);
    }

    #[test]
    fn fisher_scenario_writes_manifested_report() {
        let dir = tempfile::tempdir().unwrap();
        let outcome = run(&RunConfig::new(Scenario::FisherReport), Some(dir.path())).unwrap();
        let names: Vec<&str> = outcome.manifest.iter().map(|e| e.path.as_str()).collect();
        assert_eq!(names, ["fisher_report.csv", "gates.txt", "slope.csv"]);
        assert!(crate::output::verify_manifest(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn invalid_config_does_not_run() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = RunConfig::new(Scenario::FisherReport);
        c.coulomb.delta_z = 5.0;
        let err = run(&c, Some(dir.path())).unwrap_err();
        assert_eq!(exit_code(&err), 2);
        assert!(!dir.path().join("manifest.txt").exists());
    }
}
