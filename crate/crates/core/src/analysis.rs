//! SWAP probabilities, the exponential barrier law, gate matrices,
//! fidelities, Fisher information and collision diagnostics.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::density;
use crate::eigen::LocalizedPair;
use crate::field::inner_product;
use crate::propagator::{y_mode_occupations, CollisionProbe, PropagationTrace, TraceRow};
use crate::{Error, Result, WaveField, C64};

/// Rate of change of P_SWAP around P = 0.5 quoted for the simulated device (μeV⁻¹).
pub const QUOTED_SLOPE_PER_UEV: f64 = 8.07e-4;

/// |⟨Ψ^RL|ψ⟩|².
pub fn swap_probability(state: &WaveField, pair: &LocalizedPair) -> Result<f64> {
    Ok(inner_product(&pair.psi_rl, state)?.norm_sqr())
}

/// sin²(½ J₀ e^{-bA} τ).
pub fn swap_law(j0: f64, b: f64, a_tb: f64, tau: f64) -> f64 {
    (0.5 * j0 * (-b * a_tb).exp() * tau).sin().powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapFit {
    /// ps⁻¹.
    pub j0: f64,
    /// meV⁻¹.
    pub b: f64,
    pub tau: f64,
    /// Σ (P_i - model)².
    pub residual: f64,
    pub r2: f64,
}

impl SwapFit {
    pub fn probability(&self, a_tb: f64) -> f64 {
        swap_law(self.j0, self.b, a_tb, self.tau)
    }

    pub fn frequency(&self, a_tb: f64) -> f64 {
        self.j0 * (-self.b * a_tb).exp()
    }
}

/// Seed (J₀, b) by unwrapping θ_i = 2·arcsin(√P_i) along decreasing A and
/// regressing ln(θ/τ) on A.
///
/// Walking from the tallest barrier down, J τ/2 grows monotonically, so each
/// point takes the smallest branch kπ ± arcsin √P not below its predecessor.
/// Points on the principal branch (J τ < π) alone are used when there are at
/// least two of them. Near-singular points (P < 0.001 or P > 0.999) are
/// skipped.
pub fn arcsin_seed(points: &[(f64, f64)], tau: f64) -> Result<(f64, f64)> {
    let mut sorted: Vec<(f64, f64)> = points.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut phase_prev = 0.0_f64;
    let mut unwrapped = Vec::new();
    for &(a, p) in &sorted {
        let base = p.clamp(0.0, 1.0).sqrt().asin();
        let mut best = f64::INFINITY;
        for k in 0..64 {
            let kp = k as f64 * PI;
            for cand in [kp - base, kp + base] {
                if cand > 0.0 && cand >= phase_prev - 0.05 && cand < best {
                    best = cand;
                }
            }
            if best.is_finite() && kp - PI > best {
                break;
            }
        }
        if !best.is_finite() {
            continue;
        }
        phase_prev = best;
        if p > 1e-3 && p < 0.999 {
            unwrapped.push((a, best));
        }
    }
    let principal: Vec<(f64, f64)> = unwrapped.iter().copied().filter(|&(_, ph)| ph < FRAC_PI_2).collect();
    let use_pts = if principal.len() >= 2 { principal } else { unwrapped };
    if use_pts.len() < 2 {
        return Err(Error::Fit("fewer than two usable points for the arcsin seed".into()));
    }
    // ln J = ln J0 - b A with J = 2 φ / τ
    let xs: Vec<f64> = use_pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = use_pts.iter().map(|p| (2.0 * p.1 / tau).ln()).collect();
    let (slope, intercept, _) = linear_regression(&xs, &ys)?;
    Ok((intercept.exp(), -slope))
}

/// Least-squares y = slope·x + intercept, with R².
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(Error::Fit("regression needs at least two paired points".into()));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all abscissae are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((slope, intercept, r2))
}

/// ln J versus A_TB: returns (J₀, b, R²) for J = J₀ e^{-b A}.
pub fn exponential_law(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.iter().any(|p| !(p.1 > 0.0)) {
        return Err(Error::Fit("frequencies must be positive for a log fit".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, r2) = linear_regression(&xs, &ys)?;
    Ok((intercept.exp(), -slope, r2))
}

fn weight(p: f64) -> f64 {
    if !(1e-3..=0.999).contains(&p) {
        0.1
    } else {
        1.0
    }
}

/// Largest half-phase ½Jτ considered by the grid search (about 16 swaps).
const MAX_HALF_PHASE: f64 = 50.0;

/// Half-phase samples: geometric at small u, then steps of 0.1 rad.
fn half_phase_samples() -> Vec<f64> {
    let mut u = 0.01;
    let mut out = Vec::new();
    while u <= MAX_HALF_PHASE {
        out.push(u);
        u += (0.15 * u).min(0.1);
    }
    out
}

/// Coarse global search over the half-phase at the lowest barrier and the
/// log-ratio b·ΔA across the data. Returns the `keep` cheapest (ln J₀, b).
fn grid_seeds<C: Fn(f64, f64) -> f64>(points: &[(f64, f64)], tau: f64, cost: C, keep: usize) -> Vec<(f64, f64)> {
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !(span > 0.0) {
        return Vec::new();
    }
    let ratios: Vec<f64> = (0..=100).map(|i| 1e-3 * 1e4f64.powf(i as f64 / 100.0)).collect();
    let us = half_phase_samples();
    let (nu, nr) = (us.len(), ratios.len());
    let mut grid = vec![(0.0, 0.0, 0.0); nu * nr];
    for (i, &u_lo) in us.iter().enumerate() {
        for (j, &r) in ratios.iter().enumerate() {
            let b = r / span;
            let lj = (2.0 * u_lo / tau).ln() + b * lo;
            grid[i * nr + j] = (cost(lj, b), lj, b);
        }
    }
    // local minima over the 8-neighbourhood, cheapest first
    let mut minima: Vec<(f64, f64, f64)> = Vec::new();
    for i in 0..nu {
        for j in 0..nr {
            let c = grid[i * nr + j].0;
            let lowest = (i.saturating_sub(1)..(i + 2).min(nu))
                .flat_map(|k| (j.saturating_sub(1)..(j + 2).min(nr)).map(move |l| (k, l)))
                .all(|(k, l)| grid[k * nr + l].0 >= c);
            if lowest {
                minima.push(grid[i * nr + j]);
            }
        }
    }
    minima.sort_by(|x, y| x.0.total_cmp(&y.0));
    minima.into_iter().take(keep).map(|(_, lj, b)| (lj, b)).collect()
}

/// Damped Gauss-Newton on (ln J₀, b) from a starting point; returns the end
/// point and its cost.
fn refine<C: Fn(f64, f64) -> f64>(points: &[(f64, f64)], tau: f64, cost: &C, lj0: f64, b0: f64) -> (f64, f64, f64) {
    let (mut lj, mut bb) = (lj0, b0);
    let mut c = cost(lj, bb);
    let mut lambda = 1e-3;
    for _ in 0..500 {
        // normal equations for (ln J0, b)
        let (mut h11, mut h12, mut h22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(a, p) in points {
            let u = 0.5 * (lj - bb * a).exp() * tau;
            let r = p - u.sin().powi(2);
            let dpdu = (2.0 * u).sin();
            let (d1, d2) = (dpdu * u, -dpdu * u * a);
            let w = weight(p);
            h11 += w * d1 * d1;
            h12 += w * d1 * d2;
            h22 += w * d2 * d2;
            g1 += w * d1 * r;
            g2 += w * d2 * r;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let (a11, a22) = (h11 * (1.0 + lambda), h22 * (1.0 + lambda));
            let det = a11 * a22 - h12 * h12;
            if det.abs() < 1e-300 {
                lambda *= 10.0;
                continue;
            }
            let s1 = (a22 * g1 - h12 * g2) / det;
            let s2 = (a11 * g2 - h12 * g1) / det;
            let trial = cost(lj + s1, bb + s2);
            if trial <= c {
                let small = s1.abs() < 1e-15 * lj.abs().max(1.0) && s2.abs() < 1e-15 * bb.abs().max(1.0);
                lj += s1;
                bb += s2;
                let improvement = c - trial;
                c = trial;
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                if small || improvement <= 1e-30 {
                    return (lj, bb, c);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    (lj, bb, c)
}

/// Least-squares fit of P = sin²(½ J₀ e^{-bA} τ). Starting points come from
/// the arcsin seed and a coarse grid over the half-phases at the ends of the
/// barrier range; each is polished by damped Gauss-Newton on (ln J₀, b) and
/// the cheapest physical result wins.
pub fn fit_exponential_swap(points: &[(f64, f64)], tau: f64) -> Result<SwapFit> {
    if points.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 points, got {}", points.len())));
    }
    if !(tau > 0.0) {
        return Err(Error::Fit(format!("interaction time must be positive, got {tau}")));
    }
    // measured frequencies may stray slightly outside [0, 1]
    if points.iter().any(|p| !p.1.is_finite() || !p.0.is_finite()) {
        return Err(Error::Fit("points must be finite".into()));
    }
    let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean).powi(2)).sum();
    if ss_tot < 1e-24 {
        return Err(Error::Fit("all probabilities are equal".into()));
    }
    let cost = |lj: f64, b: f64| -> f64 {
        points.iter().map(|&(a, p)| weight(p) * (p - swap_law(lj.exp(), b, a, tau)).powi(2)).sum()
    };
    let mut starts = grid_seeds(points, tau, cost, 40);
    if let Ok((j0, b)) = arcsin_seed(points, tau) {
        starts.insert(0, (j0.ln(), b));
    }
    let best = starts
        .into_iter()
        .map(|(lj, b)| refine(points, tau, &cost, lj, b))
        .filter(|&(lj, b, c)| lj.is_finite() && b > 0.0 && c.is_finite())
        .min_by(|x, y| x.2.total_cmp(&y.2));
    match best {
        Some((lj, b, _)) => finish(points, tau, lj, b, ss_tot),
        None => Err(Error::Fit("no starting point converged to a physical fit".into())),
    }
}

fn finish(points: &[(f64, f64)], tau: f64, lj: f64, b: f64, ss_tot: f64) -> Result<SwapFit> {
    let j0 = lj.exp();
    if !(j0 > 0.0 && j0.is_finite() && b > 0.0) {
        return Err(Error::Fit(format!("fit left the physical region: J0 = {j0}, b = {b}")));
    }
    let residual: f64 = points.iter().map(|&(a, p)| (p - swap_law(j0, b, a, tau)).powi(2)).sum();
    Ok(SwapFit { j0, b, tau, residual, r2: 1.0 - residual / ss_tot })
}

/// Barrier height of the first P = 0.5 crossing (J τ = π/2).
pub fn half_swap_barrier(fit: &SwapFit) -> Result<f64> {
    let a = (fit.j0 * fit.tau / FRAC_PI_2).ln() / fit.b;
    if !(a > 0.0) {
        return Err(Error::Domain(format!("no P = 0.5 crossing at positive A_TB (J0 τ = {})", fit.j0 * fit.tau)));
    }
    Ok(a)
}

/// |dP/dA_TB| at the principal-branch P = 0.5 crossing, in μeV⁻¹.
///
/// With u = ½Jτ, dP/dA = -b u sin 2u; at u = π/4 this is bπ/4 per meV.
pub fn swap_sensitivity_slope(fit: &SwapFit) -> Result<f64> {
    let a = half_swap_barrier(fit)?;
    let u = 0.5 * fit.frequency(a) * fit.tau;
    Ok(fit.b * u * (2.0 * u).sin().abs() * 1e-3)
}

/// τ at which J τ = π/2.
pub fn root_of_swap_time(j0: f64, b: f64, a_tb: f64) -> f64 {
    FRAC_PI_2 / (j0 * (-b * a_tb).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherReport {
    /// meV⁻².
    pub f_barrier: f64,
    /// ps⁻².
    pub f_tau: f64,
    pub n_trials: u64,
    /// meV.
    pub sigma_barrier: f64,
    /// ps.
    pub sigma_tau: f64,
    /// Two-outcome sums with complex-step derivatives; `None` where P is 0 or 1.
    pub f_barrier_numeric: Option<f64>,
    pub f_tau_numeric: Option<f64>,
    /// P is exactly 0 or 1: the outcome distribution is degenerate.
    pub unbounded: bool,
    pub a_tb: f64,
    pub tau: f64,
    pub probability: f64,
}

/// Σ_i P_i (∂ ln P_i)² for the outcomes (swapped, not swapped), with ∂P from
/// a complex step of `p` (P as a holomorphic function of the parameter).
fn two_outcome_fisher<F: Fn(C64) -> C64>(p: F, theta: f64) -> Option<f64> {
    let h = 1e-30 * theta.abs().max(1.0);
    let at = p(C64::new(theta, h));
    let (prob, dp) = (at.re, at.im / h);
    if prob <= 0.0 || prob >= 1.0 {
        return None;
    }
    let outcomes = [(prob, dp), (1.0 - prob, -dp)];
    Some(outcomes.iter().map(|&(q, dq)| q * (dq / q).powi(2)).sum())
}

/// Fisher information of the binary swap measurement with respect to the
/// barrier height and the interaction time, and the Cramér-Rao bounds for
/// `n_trials` repetitions.
pub fn fisher_information(fit: &SwapFit, a_tb: f64, tau: f64, n_trials: u64) -> Result<FisherReport> {
    let (j0, b) = (fit.j0, fit.b);
    if n_trials == 0 || !(tau > 0.0) || !(j0 > 0.0) {
        return Err(Error::Domain("Fisher information needs N > 0, τ > 0 and J0 > 0".into()));
    }
    let j = j0 * (-b * a_tb).exp();
    let f_barrier = (b * tau * j).powi(2);
    let f_tau = j * j;
    let n = n_trials as f64;
    let law = |a: C64, t: C64| (0.5 * j0 * (-b * a).exp() * t).sin().powi(2);
    let f_barrier_numeric = two_outcome_fisher(|a| law(a, C64::new(tau, 0.0)), a_tb);
    let f_tau_numeric = two_outcome_fisher(|t| law(C64::new(a_tb, 0.0), t), tau);
    let probability = swap_law(j0, b, a_tb, tau);
    Ok(FisherReport {
        f_barrier,
        f_tau,
        n_trials,
        sigma_barrier: 1.0 / (n * f_barrier).sqrt(),
        sigma_tau: 1.0 / (n * f_tau).sqrt(),
        f_barrier_numeric,
        f_tau_numeric,
        unbounded: f_barrier_numeric.is_none(),
        a_tb,
        tau,
        probability,
    })
}

/// A power of SWAP in the basis |00⟩, |01⟩, |10⟩, |11⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateMatrix {
    pub entries: Matrix4<C64>,
    pub power: f64,
}

impl GateMatrix {
    pub fn is_unitary(&self, tol: f64) -> bool {
        let p = self.entries.adjoint() * self.entries;
        (p - Matrix4::identity()).iter().all(|z| z.norm() <= tol)
    }

    pub fn compose(&self, other: &GateMatrix) -> GateMatrix {
        GateMatrix { entries: self.entries * other.entries, power: self.power + other.power }
    }

    /// Rows of "re+imi" entries with 12 significant digits.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for r in 0..4 {
            let row: Vec<String> = (0..4)
                .map(|c| {
                    let z = self.entries[(r, c)];
                    format!("{:.11e}{:+.11e}i", z.re, z.im)
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// SWAPⁿ: identity on |00⟩, |11⟩ and ½(1 ± e^{iπn}) on the |01⟩, |10⟩ block.
pub fn gate_matrix(n: f64) -> GateMatrix {
    let e = C64::from_polar(1.0, PI * n);
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let (d, o) = (0.5 * (one + e), 0.5 * (one - e));
    let entries = Matrix4::new(
        one, zero, zero, zero,
        zero, d, o, zero,
        zero, o, d, zero,
        zero, zero, zero, one,
    );
    GateMatrix { entries, power: n }
}

pub fn swap_permutation() -> Matrix4<C64> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    Matrix4::new(
        one, zero, zero, zero,
        zero, zero, one, zero,
        zero, one, zero, zero,
        zero, zero, zero, one,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateFidelity {
    pub fidelity: f64,
    /// 1 - |a_LR|² - |a_RL|².
    pub leakage: f64,
    /// Double occupancy at the end of the run, when it was probed.
    pub double_occupancy: Option<f64>,
    /// Double occupancy above 1e-2.
    pub leaked: bool,
}

/// Process overlap |tr(U_target† U_eff)|²/16 of the effective gate read off a
/// run that started in Ψ^LR.
///
/// The central block is [[a_LR, -a_RL], [-a_RL, a_LR]]: particle 1 carries
/// spin up, and antisymmetrizing puts the spatial Ψ^RL amplitude on
/// |↓↑⟩ with a minus sign. Exchange symmetry supplies the second column.
/// The |↑↑⟩, |↓↓⟩ entries carry the triplet phase, which a single run does not
/// record; it is chosen to maximize the overlap, so the result is
/// (|o| + |c|)²/16 with o, c the outer and central block overlaps.
pub fn effective_gate_fidelity(a_lr: C64, a_rl: C64, target: &GateMatrix) -> f64 {
    let t = &target.entries;
    let central = [[a_lr, -a_rl], [-a_rl, a_lr]];
    let mut c = C64::new(0.0, 0.0);
    for (r, row) in central.iter().enumerate() {
        for (k, z) in row.iter().enumerate() {
            c += t[(r + 1, k + 1)].conj() * z;
        }
    }
    let o = t[(0, 0)].conj() + t[(3, 3)].conj();
    (o.norm() + c.norm()).powi(2) / 16.0
}

/// Fidelity from the last row of a trace with localized-pair projections.
pub fn trace_gate_fidelity(trace: &PropagationTrace, target: &GateMatrix) -> Result<GateFidelity> {
    let last: &TraceRow = trace.last();
    let (a_lr, a_rl) = match (last.a_lr, last.a_rl) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Usage("trace has no projections onto the localized pair".into())),
    };
    let double_occupancy = match (last.p_ll, last.p_rr) {
        (Some(a), Some(b)) => Some(a + b),
        _ => None,
    };
    Ok(GateFidelity {
        fidelity: effective_gate_fidelity(a_lr, a_rl, target),
        leakage: 1.0 - a_lr.norm_sqr() - a_rl.norm_sqr(),
        double_occupancy,
        leaked: double_occupancy.is_some_and(|d| d > 1e-2),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionSample {
    pub time: f64,
    /// tr ρ² of the (x₁, x₂) reduced state.
    pub x_purity: f64,
    /// tr ρ² of particle 1's x reduced state.
    pub x1_purity: f64,
    /// Occupation of each y-mode, averaged over the particles.
    pub y_modes: Vec<f64>,
}

impl CollisionSample {
    /// Sum of the lowest two y-mode occupations.
    pub fn lowest_two(&self) -> f64 {
        self.y_modes.iter().take(2).sum()
    }
}

/// x-purity and y-mode occupations of every snapshot of a collision run.
pub fn collision_diagnostics(trace: &PropagationTrace, probe: &CollisionProbe) -> Result<Vec<CollisionSample>> {
    if trace.snapshots.is_empty() {
        return Err(Error::Usage("collision diagnostics need a trace recorded with snapshots".into()));
    }
    trace
        .snapshots
        .iter()
        .map(|s| {
            if s.field.rank() != 4 {
                return Err(Error::Shape("collision snapshots must be (x1, y1, x2, y2) fields".into()));
            }
            let unit = s.field.normalize()?;
            Ok(CollisionSample {
                time: s.time,
                x_purity: density::purity(&unit, &[0, 2])?,
                x1_purity: density::purity(&unit, &[0])?,
                y_modes: y_mode_occupations(&unit, &probe.y_modes),
            })
        })
        .collect()
}

/// The same samples from the probes already recorded in the trace rows.
pub fn collision_samples(trace: &PropagationTrace) -> Result<Vec<CollisionSample>> {
    trace
        .rows
        .iter()
        .map(|r| match (r.x_purity, r.x1_purity) {
            (Some(x_purity), Some(x1_purity)) => Ok(CollisionSample { time: r.time, x_purity, x1_purity, y_modes: r.y_modes.clone() }),
            _ => Err(Error::Usage("trace was recorded without the collision probe".into())),
        })
        .collect()
}

/// P_RL(t) from the two-level model starting in Ψ^LR: sin²(ΔE t/2ħ).
pub fn two_level_swap(delta_e: f64, t: f64, hbar: f64) -> f64 {
    (0.5 * delta_e * t / hbar).sin().powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    const J0: f64 = 2.888;
    const B: f64 = 0.933;

    #[test]
    fn root_of_swap_squares_to_swap() {
        let h = gate_matrix(0.5);
        let sq = h.entries * h.entries;
        assert!((sq - swap_permutation()).iter().all(|z| z.norm() < 1e-12));
        assert!((h.entries[(1, 1)] - C64::new(0.5, 0.5)).norm() < 1e-15);
        assert!((h.entries[(1, 2)] - C64::new(0.5, -0.5)).norm() < 1e-15);
        let id = gate_matrix(0.0);
        assert!((id.entries - Matrix4::identity()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn gate_powers_compose_and_repeat() {
        for (n, m) in [(0.3, 0.45), (1.7, -0.2), (2.5, 0.25)] {
            let lhs = gate_matrix(n).compose(&gate_matrix(m)).entries;
            assert!((lhs - gate_matrix(n + m).entries).iter().all(|z| z.norm() < 1e-12));
            assert!((gate_matrix(n + 2.0).entries - gate_matrix(n).entries).iter().all(|z| z.norm() < 1e-12));
            assert!(gate_matrix(n).is_unitary(1e-12));
        }
    }

    #[test]
    fn fisher_at_quoted_operating_point() {
        let a = 3.86;
        let tau = root_of_swap_time(J0, B, a);
        assert!((tau - 20.0).abs() < 0.1, "{tau}");
        let fit = SwapFit { j0: J0, b: B, tau, residual: 0.0, r2: 1.0 };
        let f = fisher_information(&fit, a, tau, 3000).unwrap();
        assert!((f.f_barrier - (B * PI / 2.0).powi(2)).abs() < 1e-12);
        assert!((f.f_barrier - 2.15).abs() / 2.15 < 0.01);
        assert!((f.sigma_barrier - 0.0125).abs() / 0.0125 < 0.01);
        assert!((f.f_tau - 6.17e-3).abs() / 6.17e-3 < 0.01);
        assert!((f.sigma_tau - 0.233).abs() / 0.233 < 0.01);
        assert!((f.f_barrier_numeric.unwrap() - f.f_barrier).abs() / f.f_barrier < 1e-10);
        assert!((f.probability - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fisher_flags_degenerate_outcomes() {
        // τ → 0 leaves P = 0
        let fit = SwapFit { j0: 1.0, b: 1.0, tau: 1.0, residual: 0.0, r2: 1.0 };
        let f = fisher_information(&fit, 0.0, 1e-300, 10).unwrap();
        assert!(f.unbounded);
    }

    #[test]
    fn slope_is_b_pi_over_four() {
        let fit = SwapFit { j0: J0, b: B, tau: 36.0, residual: 0.0, r2: 1.0 };
        let s = swap_sensitivity_slope(&fit).unwrap();
        assert!((s - B * PI / 4.0 * 1e-3).abs() < 1e-15);
        let doubled = SwapFit { b: 2.0 * B, ..fit };
        assert!((swap_sensitivity_slope(&doubled).unwrap() - 2.0 * s).abs() < 1e-15);
        let a = half_swap_barrier(&fit).unwrap();
        let h = 1e-5;
        let fd = (fit.probability(a + h) - fit.probability(a - h)) / (2.0 * h) * 1e-3;
        assert!((fd.abs() - s).abs() < 1e-8);
        let slow = SwapFit { j0: 0.01, ..fit };
        assert!(matches!(swap_sensitivity_slope(&slow), Err(Error::Domain(_))));
    }

    fn synthetic(j0: f64, b: f64, tau: f64, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let a = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                (a, swap_law(j0, b, a, tau))
            })
            .collect()
    }

    #[test]
    fn noiseless_fit_recovers_constants() {
        let pts = synthetic(J0, B, 36.0, 3.0, 7.0, 41);
        let fit = fit_exponential_swap(&pts, 36.0).unwrap();
        assert!((fit.j0 - J0).abs() / J0 < 1e-6, "{fit:?}");
        assert!((fit.b - B).abs() / B < 1e-6);
        assert!(fit.r2 > 1.0 - 1e-10);
    }

    #[test]
    fn two_principal_points_solve_in_closed_form() {
        let pts = synthetic(J0, B, 20.0, 4.0, 5.0, 2);
        let (j0, b) = arcsin_seed(&pts, 20.0).unwrap();
        assert!((j0 - J0).abs() / J0 < 1e-12 && (b - B).abs() / B < 1e-12);
    }

    #[test]
    fn flat_data_is_a_fit_error() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| (3.0 + i as f64, 0.3)).collect();
        assert!(matches!(fit_exponential_swap(&pts, 36.0), Err(Error::Fit(_))));
        assert!(matches!(fit_exponential_swap(&pts[..3], 36.0), Err(Error::Fit(_))));
    }

    #[test]
    fn fidelity_of_ideal_and_idle_gates() {
        let target = gate_matrix(0.5);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for phi in [0.0, 0.7, -2.1] {
            let g = C64::from_polar(r, phi);
            let f = effective_gate_fidelity(g, g * C64::new(0.0, 1.0), &target);
            assert!((f - 1.0).abs() < 1e-10, "{f}");
        }
        let idle = effective_gate_fidelity(C64::new(1.0, 0.0), C64::new(0.0, 0.0), &target);
        let swapped = effective_gate_fidelity(C64::new(0.0, 0.0), C64::new(1.0, 0.0), &target);
        let expected = (2.0 + 2f64.sqrt()).powi(2) / 16.0;
        assert!((idle - expected).abs() < 1e-12 && (swapped - expected).abs() < 1e-12);
    }

    #[test]
    fn exponential_law_fits_exact_data() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| (1.0 + 0.4 * i as f64, 3.0 * (-1.5 * (1.0 + 0.4 * i as f64)).exp())).collect();
        let (j0, b, r2) = exponential_law(&pts).unwrap();
        assert!((j0 - 3.0).abs() < 1e-12 && (b - 1.5).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }
}
