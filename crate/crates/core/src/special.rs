//! Tricomi's confluent hypergeometric function U(-1/2, 0, z), the kernel of
//! the softened Coulomb interaction.
//!
//! Three evaluation routes cover z ≥ 0:
//! * z < 2: the Bessel form U(-1/2, 0, z) = (z / 2√π) e^{z/2} [K₁(z/2) + K₀(z/2)]
//!   with the small-argument series of K₀ and K₁;
//! * z > 30: the large-z asymptotic series truncated at its smallest term;
//! * otherwise: adaptive Gauss-Kronrod quadrature of the integral
//!   representation after Kummer's transformation U(a, b, z) = z^{1-b} U(a-b+1, 2-b, z),
//!   which puts the first parameter at +1/2 where the integral converges:
//!   U(-1/2, 0, z) = (2/√π) ∫₀^∞ e^{-u²} √(z + u²) du.

use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_MAX: f64 = 2.0;
const ASYMPTOTIC_MIN: f64 = 30.0;

/// U(-1/2, 0, z) for z ≥ 0.
pub fn hyperu_mhalf_zero(z: f64) -> f64 {
    assert!(z >= 0.0, "U(-1/2, 0, z) requires z >= 0, got {z}");
    if z < SERIES_MAX {
        hyperu_series(z)
    } else if z > ASYMPTOTIC_MIN {
        hyperu_asymptotic(z)
    } else {
        hyperu_quadrature(z)
    }
}

/// Small-z route through the modified Bessel functions K₀, K₁ at x = z/2.
pub fn hyperu_series(z: f64) -> f64 {
    let x = 0.5 * z;
    let (xk0, xk1) = if x == 0.0 { (0.0, 1.0) } else { (x * bessel_k0_small(x), x_bessel_k1_small(x)) };
    x.exp() * (xk1 + xk0) / PI.sqrt()
}

/// K₀(x) for 0 < x ≲ 2 by its ascending series.
fn bessel_k0_small(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let lg = (0.5 * x).ln() + EULER_GAMMA;
    let mut term = 1.0; // q^k / (k!)²
    let mut harmonic = 0.0;
    let mut i0 = 1.0;
    let mut tail = 0.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        tail += term * harmonic;
        if term < 1e-18 {
            break;
        }
    }
    -lg * i0 + tail
}

/// x·K₁(x) for 0 < x ≲ 2, finite as x → 0.
fn x_bessel_k1_small(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let ln_half = (0.5 * x).ln();
    // I₁(x) = (x/2) Σ q^k / (k!(k+1)!)
    // K₁(x) = 1/x + ln(x/2) I₁(x) - (x/4) Σ [ψ(k+1) + ψ(k+2)] q^k / (k!(k+1)!)
    let mut term = 1.0; // q^k/(k!(k+1)!)
    let mut psi1 = -EULER_GAMMA; // ψ(k+1)
    let mut psi2 = 1.0 - EULER_GAMMA; // ψ(k+2)
    let mut i1_sum = 1.0;
    let mut psi_sum = psi1 + psi2;
    for k in 1..60 {
        let kf = k as f64;
        term *= q / (kf * (kf + 1.0));
        psi1 += 1.0 / kf;
        psi2 += 1.0 / (kf + 1.0);
        i1_sum += term;
        psi_sum += (psi1 + psi2) * term;
        if term < 1e-18 {
            break;
        }
    }
    let i1 = 0.5 * x * i1_sum;
    1.0 + x * ln_half * i1 - 0.25 * x * x * psi_sum
}

/// U(a, b, z) ~ z^{-a} Σ (a)_n (a-b+1)_n / n! (-z)^{-n}, truncated at the smallest term.
pub fn hyperu_asymptotic(z: f64) -> f64 {
    let (a, b) = (-0.5, 0.0);
    let mut term: f64 = 1.0;
    let mut sum: f64 = 1.0;
    let mut last = f64::INFINITY;
    for n in 0..200 {
        let nf = n as f64;
        let next = term * (a + nf) * (a - b + 1.0 + nf) / ((nf + 1.0) * -z);
        if next.abs() >= last || next.abs() < 1e-17 * sum.abs() {
            if next.abs() < last {
                sum += next;
            }
            break;
        }
        last = next.abs();
        term = next;
        sum += term;
    }
    z.sqrt() * sum
}

/// (2/√π) ∫₀^∞ e^{-u²} √(z + u²) du by adaptive Gauss-Kronrod (7/15).
pub fn hyperu_quadrature(z: f64) -> f64 {
    let f = |u: f64| (-u * u).exp() * (z + u * u).sqrt();
    // e^{-u²} < 1e-30 beyond u = 8.5
    let upper = 8.5;
    let knee = z.sqrt().min(upper * 0.5).max(1e-3);
    let total = adaptive_gk(&f, 0.0, knee, 1e-15, 40) + adaptive_gk(&f, knee, upper, 1e-15, 40);
    2.0 / PI.sqrt() * total
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS_K: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WEIGHTS_G: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WEIGHTS_K[7] * fc;
    let mut g = GK_WEIGHTS_G[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        k += GK_WEIGHTS_K[i] * s;
        if i % 2 == 1 {
            g += GK_WEIGHTS_G[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Recursive bisection until the Kronrod-Gauss difference drops below `tol`
/// (relative to the running estimate).
pub fn adaptive_gk<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let (val, err) = gk15(f, a, b);
    if depth == 0 || err <= tol * val.abs().max(1e-300) {
        return val;
    }
    let m = 0.5 * (a + b);
    adaptive_gk(f, a, m, tol, depth - 1) + adaptive_gk(f, m, b, tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    // mpmath.hyperu(-0.5, 0, z) at 30 digits
    const REFERENCE: [(f64, f64); 14] = [
        (0.0, 0.564_189_583_547_756_3),
        (1e-6, 0.564_193_991_164_075_1),
        (0.01, 0.582_325_662_488_717_4),
        (0.1, 0.682_792_654_015_477_7),
        (0.5, 0.957_797_918_589_021_2),
        (1.0, 1.200_346_934_790_947_7),
        (2.0, 1.568_794_902_417_112),
        (5.0, 2.340_996_231_563_453_4),
        (10.0, 3.238_677_899_893_688_7),
        (20.0, 4.527_048_783_935_64),
        (35.0, 5.957_899_975_617_07),
        (50.0, 7.106_164_341_885_292),
        (100.0, 10.024_907_397_016_025),
        (1000.0, 31.630_679_334_896_62),
    ];

    #[test]
    fn matches_arbitrary_precision_reference() {
        for (z, expected) in REFERENCE {
            let got = hyperu_mhalf_zero(z);
            assert!((got - expected).abs() / expected < 1e-12, "z={z}: {got} vs {expected}");
        }
    }

    #[test]
    fn value_at_origin_is_inverse_sqrt_pi() {
        assert!((hyperu_mhalf_zero(0.0) - 1.0 / PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn routes_agree_where_they_overlap() {
        for z in [0.3, 1.0, 1.9, 2.5] {
            let (s, q) = (hyperu_series(z), hyperu_quadrature(z));
            assert!((s - q).abs() / q < 1e-12, "z={z}: {s} vs {q}");
        }
        for z in [25.0, 31.0, 40.0, 80.0] {
            let (a, q) = (hyperu_asymptotic(z), hyperu_quadrature(z));
            assert!((a - q).abs() / q < 1e-11, "z={z}: {a} vs {q}");
        }
    }

    #[test]
    fn grows_like_sqrt_z() {
        let z = 1e6;
        assert!((hyperu_mhalf_zero(z) / z.sqrt() - 1.0).abs() < 1e-6);
    }
}
