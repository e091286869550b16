//! Block Davidson iteration for the lowest eigenpairs of a Hermitian operator
//! given only its action on vectors.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::reduce;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct DavidsonOptions {
    /// Absolute residual tolerance ‖Hv - θv‖.
    pub tol: f64,
    pub max_iter: usize,
    pub max_subspace: usize,
}

impl Default for DavidsonOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 400, max_subspace: 48 }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// Unit Euclidean norm.
    pub vectors: Vec<Vec<C64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    y.par_iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}

fn scale(y: &mut [C64], a: f64) {
    y.par_iter_mut().for_each(|y| *y *= a);
}

/// Σ_i c_i v_i with a fixed summation order per element.
fn combine(vs: &[Vec<C64>], c: &[C64]) -> Vec<C64> {
    let n = vs[0].len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    out.par_chunks_mut(reduce::CHUNK).enumerate().for_each(|(k, chunk)| {
        let off = k * reduce::CHUNK;
        let len = chunk.len();
        for (v, ci) in vs.iter().zip(c) {
            for (o, x) in chunk.iter_mut().zip(&v[off..off + len]) {
                *o += ci * x;
            }
        }
    });
    out
}

struct Subspace<'a, A, P> {
    apply: &'a A,
    project: &'a P,
    v: Vec<Vec<C64>>,
    av: Vec<Vec<C64>>,
    m: Vec<Vec<C64>>,
}

impl<A, P> Subspace<'_, A, P>
where
    A: Fn(&[C64], &mut [C64]),
    P: Fn(&mut [C64]),
{
    /// Orthonormalize `x` against the basis and append it; false if it was
    /// (numerically) already in the span.
    fn push(&mut self, mut x: Vec<C64>) -> bool {
        (self.project)(&mut x);
        let n0 = reduce::norm_sqr(&x).sqrt();
        if !(n0 > 0.0) || !n0.is_finite() {
            return false;
        }
        scale(&mut x, 1.0 / n0);
        for _ in 0..2 {
            for b in &self.v {
                let c = reduce::dot(b, &x);
                axpy(&mut x, -c, b);
            }
        }
        let n = reduce::norm_sqr(&x).sqrt();
        if n < 1e-8 {
            return false;
        }
        scale(&mut x, 1.0 / n);
        let mut ax = vec![C64::new(0.0, 0.0); x.len()];
        (self.apply)(&x, &mut ax);
        (self.project)(&mut ax);
        // row_i = <x|A b_i> = conj(<b_i|A x>)
        let mut row: Vec<C64> = self.v.iter().map(|b| reduce::dot(b, &ax).conj()).collect();
        let diag = C64::new(reduce::dot(&x, &ax).re, 0.0);
        for (i, r) in row.iter().enumerate() {
            self.m[i].push(r.conj());
        }
        row.push(diag);
        self.m.push(row);
        self.v.push(x);
        self.av.push(ax);
        true
    }

    fn ritz(&self) -> (Vec<f64>, DMatrix<C64>) {
        let k = self.v.len();
        let m = DMatrix::from_fn(k, k, |i, j| 0.5 * (self.m[i][j] + self.m[j][i].conj()));
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs = DMatrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, order[c])]);
        (vals, vecs)
    }
}

/// Lowest `count` eigenpairs of the operator `apply` restricted to the range
/// of the projector `project` (pass a no-op for the full space).
///
/// `diag` is the diagonal used for the (D - θ)⁻¹ preconditioner. `guesses`
/// seed the search space; unit vectors at the smallest diagonal entries fill
/// in when fewer than `count` usable guesses are given.
pub fn davidson<A, P>(
    apply: &A,
    diag: &[f64],
    guesses: Vec<Vec<C64>>,
    count: usize,
    project: &P,
    opts: &DavidsonOptions,
) -> Result<Eigenpairs>
where
    A: Fn(&[C64], &mut [C64]),
    P: Fn(&mut [C64]),
{
    let n = diag.len();
    if count == 0 || count > n {
        return Err(Error::Usage(format!("cannot find {count} eigenpairs of a {n}-dimensional operator")));
    }
    let max_sub = opts.max_subspace.max(3 * count).min(n);
    let mut s = Subspace { apply, project, v: Vec::new(), av: Vec::new(), m: Vec::new() };
    for g in guesses {
        if s.v.len() >= max_sub / 2 {
            break;
        }
        s.push(g);
    }
    if s.v.len() < count {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));
        for &i in &order {
            if s.v.len() >= count + 1 || s.v.len() >= n {
                break;
            }
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[i] = C64::new(1.0, 0.0);
            s.push(e);
        }
    }
    if s.v.len() < count {
        return Err(Error::Usage("search space smaller than the requested eigenpair count".into()));
    }

    let mut residuals = vec![f64::INFINITY; count];
    for iter in 0..opts.max_iter {
        let (theta, y) = s.ritz();
        let mut xs = Vec::with_capacity(count);
        let mut rs = Vec::with_capacity(count);
        for c in 0..count {
            let coef: Vec<C64> = y.column(c).iter().copied().collect();
            let x = combine(&s.v, &coef);
            let mut r = combine(&s.av, &coef);
            axpy(&mut r, C64::new(-theta[c], 0.0), &x);
            residuals[c] = reduce::norm_sqr(&r).sqrt();
            xs.push(x);
            rs.push(r);
        }
        if residuals.iter().all(|&r| r <= opts.tol) {
            return Ok(Eigenpairs { values: theta[..count].to_vec(), vectors: xs, residuals, iterations: iter });
        }
        let pending: Vec<usize> = (0..count).filter(|&c| residuals[c] > opts.tol).collect();
        if s.v.len() + pending.len() > max_sub {
            // restart from the current best Ritz vectors
            let keep = (2 * count).min(s.v.len());
            let mut v = Vec::with_capacity(keep);
            let mut av = Vec::with_capacity(keep);
            for c in 0..keep {
                let coef: Vec<C64> = y.column(c).iter().copied().collect();
                v.push(combine(&s.v, &coef));
                av.push(combine(&s.av, &coef));
            }
            s.m = (0..keep)
                .map(|i| (0..keep).map(|j| if i == j { C64::new(theta[i], 0.0) } else { C64::new(0.0, 0.0) }).collect())
                .collect();
            s.v = v;
            s.av = av;
        }
        let mut added = 0;
        for &c in &pending {
            let th = theta[c];
            let t: Vec<C64> = rs[c]
                .par_iter()
                .zip(diag)
                .map(|(r, d)| {
                    let mut den = d - th;
                    if den.abs() < 1e-6 {
                        den = 1e-6_f64.copysign(den);
                    }
                    r / den
                })
                .collect();
            if s.push(t) {
                added += 1;
            } else if s.push(rs[c].clone()) {
                added += 1;
            }
        }
        if added == 0 {
            break;
        }
    }
    Err(Error::Convergence { iterations: opts.max_iter, residuals })
}
