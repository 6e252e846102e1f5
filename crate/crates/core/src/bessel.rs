//! Bessel functions of the first kind, integer order.
//!
//! Two routes are provided: the ascending power series for single values at
//! moderate arguments, and Miller's downward recurrence for whole sequences
//! `J_0(x), …, J_n(x)` as needed by the Chebyshev time propagator.

/// `J_n(x)` for integer `n >= 0`.
///
/// Uses the power series for `|x| <= 4`, where its alternating terms do not
/// cancel badly, and the normalized downward recurrence otherwise.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    if x.abs() <= 4.0 {
        series(n, x)
    } else {
        bessel_j_sequence(x, n as usize)[n as usize]
    }
}

fn series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    // (x/2)^n / n!
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let q = -half * half;
    let mut sum = term;
    let mut k = 0u32;
    loop {
        k += 1;
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() || k > 200 {
            break;
        }
    }
    sum
}

/// `[J_0(x), J_1(x), …, J_{n_max}(x)]` by Miller's downward recurrence,
/// normalized with `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_sequence(x: f64, n_max: usize) -> Vec<f64> {
    let ax = x.abs();
    if ax == 0.0 {
        let mut out = vec![0.0; n_max + 1];
        out[0] = 1.0;
        return out;
    }
    // Start well above both the requested order and the argument.
    let top = n_max.max(ax.ceil() as usize);
    let mut start = top + 20 + (40.0 * top as f64).sqrt() as usize;
    start += start % 2;

    let mut vals = vec![0.0; start + 2];
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k, arbitrary seed
    vals[start] = cur;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        vals[k - 1] = cur;
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            for v in vals[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
        }
    }
    norm += vals[0];
    vals.truncate(n_max + 1);
    let sign_odd = if x < 0.0 { -1.0 } else { 1.0 };
    for (k, v) in vals.iter_mut().enumerate() {
        *v /= norm;
        if k % 2 == 1 {
            *v *= sign_odd;
        }
    }
    vals
}
