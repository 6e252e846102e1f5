//! Extremal eigenvalues by the Lanczos iteration.
//!
//! No reorthogonalization: ghost copies of converged Ritz values do not move
//! the extremes, and only the extremes are needed for rescaling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, normalize, LinearOperator, C64};

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Stop when both extremes move by less than this between checks.
    pub tol: f64,
    pub max_iter: usize,
    pub check_every: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: 1e-9,
            max_iter: 3000,
            check_every: 5,
            seed: 0x5eed,
        }
    }
}

/// `(e_min, e_max)` of a Hermitian operator.
pub fn lanczos_extrema<O: LinearOperator + ?Sized>(op: &O, opts: &LanczosOptions) -> Result<(f64, f64)> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let dim = op.dim();
    if dim == 0 {
        return Err(Error::invalid("operator", "has dimension zero"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    normalize(&mut v);
    let mut v_prev = vec![C64::new(0.0, 0.0); dim];
    let mut w = vec![C64::new(0.0, 0.0); dim];

    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = (f64::NAN, f64::NAN);
    let mut b_prev = 0.0;

    for it in 0..opts.max_iter {
        op.apply_into(&v, &mut w);
        for (wi, pi) in w.iter_mut().zip(&v_prev) {
            *wi -= pi * b_prev;
        }
        let a = dot(&v, &w).re;
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi -= vi * a;
        }
        alpha.push(a);
        let b = norm(&w);

        let scale = alpha.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
        let exhausted = b <= 1e-12 * scale || it + 1 >= dim;
        if exhausted || (it + 1) % opts.check_every == 0 {
            let cur = tridiagonal_extrema(&alpha, &beta);
            if exhausted || ((cur.0 - last.0).abs() < opts.tol && (cur.1 - last.1).abs() < opts.tol) {
                return Ok(cur);
            }
            last = cur;
        }
        beta.push(b);
        b_prev = b;
        std::mem::swap(&mut v_prev, &mut v);
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / b;
        }
    }
    Err(Error::LanczosNotConverged {
        iterations: opts.max_iter,
        e_min: last.0,
        e_max: last.1,
    })
}

/// Smallest and largest eigenvalue of the symmetric tridiagonal matrix with
/// diagonal `a` and off-diagonal `b`, by Sturm-sequence bisection.
pub fn tridiagonal_extrema(a: &[f64], b: &[f64]) -> (f64, f64) {
    let m = a.len();
    debug_assert!(b.len() + 1 >= m);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = if i > 0 { b[i - 1].abs() } else { 0.0 } + if i + 1 < m { b[i].abs() } else { 0.0 };
        lo = lo.min(a[i] - r);
        hi = hi.max(a[i] + r);
    }
    let smallest = bisect(a, b, lo, hi, 0);
    let largest = bisect(a, b, lo, hi, m - 1);
    (smallest, largest)
}

// number of eigenvalues strictly below x
fn sturm_count(a: &[f64], b: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..a.len() {
        let off = if i > 0 { b[i - 1] * b[i - 1] } else { 0.0 };
        d = a[i] - x - off / d;
        if d == 0.0 {
            d = -1e-300;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

// k-th eigenvalue (0-based, ascending)
fn bisect(a: &[f64], b: &[f64], mut lo: f64, mut hi: f64, k: usize) -> f64 {
    let width = (hi - lo).abs().max(hi.abs()).max(lo.abs()).max(1e-300);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * width {
            break;
        }
        if sturm_count(a, b, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
