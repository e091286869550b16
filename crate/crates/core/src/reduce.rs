//! Reductions whose result does not depend on the number of worker threads.
//!
//! Work is split into fixed-size chunks, each chunk is summed sequentially and
//! the partial sums are combined in chunk order.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

pub const CHUNK: usize = 4096;

pub fn sum_by<T: Sync, F>(data: &[T], f: F) -> f64
where
    F: Fn(&T) -> f64 + Sync,
{
    let partial: Vec<f64> = data.par_chunks(CHUNK).map(|c| c.iter().map(&f).sum::<f64>()).collect();
    partial.iter().sum()
}

pub fn sum_pairs_by<A: Sync, B: Sync, F>(a: &[A], b: &[B], f: F) -> C64
where
    F: Fn(&A, &B) -> C64 + Sync,
{
    assert_eq!(a.len(), b.len());
    let partial: Vec<C64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(ca, cb)| ca.iter().zip(cb).fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + f(x, y)))
        .collect();
    partial.iter().fold(C64::new(0.0, 0.0), |acc, p| acc + p)
}

/// Σ |z|².
pub fn norm_sqr(data: &[C64]) -> f64 {
    sum_by(data, |z| z.norm_sqr())
}

/// Σ conj(a)·b.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    sum_pairs_by(a, b, |x, y| x.conj() * y)
}

/// Σ w·conj(a)·b with real weights.
pub fn weighted_dot(w: &[f64], a: &[C64], b: &[C64]) -> C64 {
    assert_eq!(w.len(), a.len());
    assert_eq!(a.len(), b.len());
    let partial: Vec<C64> = w
        .par_chunks(CHUNK)
        .zip(a.par_chunks(CHUNK))
        .zip(b.par_chunks(CHUNK))
        .map(|((cw, ca), cb)| {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..cw.len() {
                acc += cw[i] * ca[i].conj() * cb[i];
            }
            acc
        })
        .collect();
    partial.iter().fold(C64::new(0.0, 0.0), |acc, p| acc + p)
}
