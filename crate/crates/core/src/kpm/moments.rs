use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::Momentum;
use crate::linalg::{dot, norm_sqr, LinearOperator, C64};

/// Affine map `H~ = (H - b) / a` that squeezes the spectrum into
/// `[-(1 - epsilon), 1 - epsilon]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaleInfo {
    pub e_min: f64,
    pub e_max: f64,
    pub epsilon: f64,
    pub a: f64,
    pub b: f64,
}

impl RescaleInfo {
    pub fn new(e_min: f64, e_max: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid("epsilon", format!("must be in (0, 1), got {epsilon}")));
        }
        if !(e_min.is_finite() && e_max.is_finite() && e_max >= e_min) {
            return Err(Error::invalid(
                "bounds",
                format!("need finite e_min <= e_max, got [{e_min}, {e_max}]"),
            ));
        }
        // a degenerate spectrum still needs a nonzero scale
        let (lo, hi) = if e_max - e_min < 1e-12 * (1.0 + e_max.abs()) {
            let c = 0.5 * (e_min + e_max);
            let h = 0.5 * (1.0 + c.abs());
            (c - h, c + h)
        } else {
            (e_min, e_max)
        };
        Ok(RescaleInfo {
            e_min: lo,
            e_max: hi,
            epsilon,
            a: (hi - lo) / (2.0 * (1.0 - epsilon)),
            b: 0.5 * (hi + lo),
        })
    }

    /// Widen `[e_min, e_max]` by `pad` of its width on both sides first.
    pub fn padded(e_min: f64, e_max: f64, epsilon: f64, pad: f64) -> Result<Self> {
        let w = (e_max - e_min).max(0.0);
        Self::new(e_min - pad * w, e_max + pad * w, epsilon)
    }

    pub fn to_rescaled(&self, energy: f64) -> f64 {
        (energy - self.b) / self.a
    }

    pub fn to_energy(&self, x: f64) -> f64 {
        self.a * x + self.b
    }
}

/// `μ_n = ⟨start| T_n(H~) |start⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub k: Option<Momentum>,
    pub moments: Vec<f64>,
    pub n_c: usize,
    /// Operator applications spent.
    pub applications: usize,
}

const IMAG_TOL: f64 = 1e-10;
const BOUND_TOL: f64 = 1e-8;

fn check(n: usize, v: C64) -> Result<f64> {
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::Unstable(format!(
            "moment {n} is not finite; probable unrescaled spectrum"
        )));
    }
    if v.im.abs() >= IMAG_TOL {
        return Err(Error::Unstable(format!(
            "moment {n} has imaginary part {:e}; operator not Hermitian?",
            v.im
        )));
    }
    if v.re.abs() > 1.0 + BOUND_TOL {
        return Err(Error::Unstable(format!(
            "|moment {n}| = {} exceeds 1; probable unrescaled spectrum",
            v.re.abs()
        )));
    }
    Ok(v.re)
}

/// Chebyshev moments of the rescaled operator with the doubling trick:
/// `μ_{2n} = 2⟨α_n|α_n⟩ - μ_0`, `μ_{2n+1} = 2⟨α_{n+1}|α_n⟩ - μ_1`, where
/// `α_{n+1} = 2H~ α_n - α_{n-1}`. Three work vectors, `⌊n_c/2⌋` operator
/// applications (one more than that if `n_c` is 1 or 2).
pub fn chebyshev_moments<O: LinearOperator + ?Sized>(op: &O, start: &[C64], n_c: usize) -> Result<MomentSet> {
    if n_c == 0 {
        return Err(Error::invalid("n_c", "need at least one moment"));
    }
    if start.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: start.len(),
        });
    }
    let mu0 = norm_sqr(start);
    if (mu0 - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("start", format!("must be normalized, |start|² = {mu0}")));
    }
    let mut moments = Vec::with_capacity(n_c);
    moments.push(mu0);
    if n_c == 1 {
        return Ok(MomentSet {
            k: None,
            moments,
            n_c,
            applications: 0,
        });
    }

    let dim = start.len();
    let mut prev = start.to_vec();
    let mut cur = vec![C64::new(0.0, 0.0); dim];
    let mut next = vec![C64::new(0.0, 0.0); dim];
    op.apply_into(&prev, &mut cur);
    let mut applications = 1;
    let mu1 = check(1, dot(&cur, &prev))?;
    moments.push(mu1);

    let mut n = 1;
    while moments.len() < n_c {
        // cur = α_n, prev = α_{n-1}
        moments.push(check(2 * n, C64::new(2.0 * norm_sqr(&cur) - mu0, 0.0))?);
        if moments.len() == n_c {
            break;
        }
        op.apply_into(&cur, &mut next);
        applications += 1;
        for (x, p) in next.iter_mut().zip(&prev) {
            *x = 2.0 * *x - p;
        }
        moments.push(check(2 * n + 1, 2.0 * dot(&next, &cur) - mu1)?);
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        n += 1;
    }
    Ok(MomentSet {
        k: None,
        moments,
        n_c,
        applications,
    })
}
