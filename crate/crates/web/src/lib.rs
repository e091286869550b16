//! Browser bindings: the swap law, Fisher bounds and the Hubbard splitting,
//! all closed-form so they run instantly in a page.

use swapsim::analysis::{fisher_information, gate_matrix, root_of_swap_time, swap_law, SwapFit};
use swapsim::models::{HubbardParams, HundMullikenParams};
use wasm_bindgen::prelude::*;

fn js(err: swapsim::Error) -> JsError {
    JsError::new(&err.to_string())
}

/// P_SWAP sampled at `points` barrier heights in [a_min, a_max].
#[wasm_bindgen]
pub fn swap_curve(j0: f64, b: f64, tau: f64, a_min: f64, a_max: f64, points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n)
        .map(|i| {
            let a = a_min + (a_max - a_min) * i as f64 / (n - 1) as f64;
            swap_law(j0, b, a, tau)
        })
        .collect()
}

/// [τ, P, F(A_TB), σ_A_TB, F(τ), σ_τ] at the root-of-SWAP point for `a_tb`.
#[wasm_bindgen]
pub fn fisher_bounds(j0: f64, b: f64, a_tb: f64, n_trials: u32) -> Result<Vec<f64>, JsError> {
    let tau = root_of_swap_time(j0, b, a_tb);
    let fit = SwapFit { j0, b, tau, residual: 0.0, r2: 1.0 };
    let r = fisher_information(&fit, a_tb, tau, n_trials as u64).map_err(js)?;
    Ok(vec![tau, r.probability, r.f_barrier, r.sigma_barrier, r.f_tau, r.sigma_tau])
}

/// [ΔE_Hubbard, ΔE_Hund-Mulliken] in meV for on-site U, hopping t,
/// inter-site V and exchange X (V± = V ± X).
#[wasm_bindgen]
pub fn two_site_splittings(u: f64, t: f64, v: f64, x: f64) -> Vec<f64> {
    let hub = HubbardParams { u_onsite: u, t_lr: t, v_intersite: v };
    let hm = HundMullikenParams::new(u, x, v + x, v - x, t);
    vec![hub.splitting(), hm.splitting()]
}

/// SWAPⁿ as 16 (re, im) pairs, row-major.
#[wasm_bindgen]
pub fn swap_power(n: f64) -> Vec<f64> {
    let g = gate_matrix(n);
    let mut out = Vec::with_capacity(32);
    for r in 0..4 {
        for c in 0..4 {
            let z = g.entries[(r, c)];
            out.push(z.re);
            out.push(z.im);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_endpoints_follow_the_law() {
        let c = swap_curve(2.888, 0.933, 36.0, 3.0, 7.0, 5);
        assert_eq!(c.len(), 5);
        assert_eq!(c[0], swap_law(2.888, 0.933, 3.0, 36.0));
        assert_eq!(c[4], swap_law(2.888, 0.933, 7.0, 36.0));
    }

    #[test]
    fn fisher_at_root_of_swap() {
        let f = fisher_bounds(2.888, 0.933, 3.86, 3000).unwrap();
        assert!((f[1] - 0.5).abs() < 1e-12);
        assert!((f[2] - (0.933 * std::f64::consts::PI / 2.0).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn uncoupled_sites_do_not_split() {
        assert_eq!(two_site_splittings(1.0, 0.0, 0.2, 0.0), vec![0.0, 0.0]);
    }

    #[test]
    fn half_power_has_complex_block() {
        let m = swap_power(0.5);
        // entry (1, 1)
        assert!((m[10] - 0.5).abs() < 1e-15 && (m[11] - 0.5).abs() < 1e-15);
    }
}
