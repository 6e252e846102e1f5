use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::moments::{MomentSet, RescaleInfo};
use crate::error::{Error, Result};
use crate::hilbert::Momentum;
use crate::linalg::C64;

/// Jackson damping factors `g_0 .. g_{n_c - 1}`.
pub fn jackson_factors(n_c: usize) -> Vec<f64> {
    let np1 = n_c as f64 + 1.0;
    let q = PI / np1;
    let cot = q.cos() / q.sin();
    (0..n_c)
        .map(|n| {
            let nf = n as f64;
            ((np1 - nf) * (q * nf).cos() + (q * nf).sin() * cot) / np1
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Jackson,
    /// No damping (all factors one); shows Gibbs ringing.
    Dirichlet,
}

impl Kernel {
    pub fn factors(self, n_c: usize) -> Vec<f64> {
        match self {
            Kernel::Jackson => jackson_factors(n_c),
            Kernel::Dirichlet => vec![1.0; n_c],
        }
    }
}

/// `A(k, ω)` sampled at the Chebyshev nodes, ascending in `ω`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralResult {
    pub k: Option<Momentum>,
    pub omega: Vec<f64>,
    /// Spectral density, units `1/ħδω`.
    pub values: Vec<f64>,
    /// Gauss-Chebyshev weight carried by each node; sums to the total weight.
    pub weights: Vec<f64>,
    pub rescale: RescaleInfo,
    pub kernel: Kernel,
    pub n_moments: usize,
}

impl SpectralResult {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn sum_rule_defect(&self) -> f64 {
        (self.total_weight() - 1.0).abs()
    }

    /// Rescaled coordinate of each node.
    pub fn rescaled_nodes(&self) -> Vec<f64> {
        self.omega.iter().map(|&w| self.rescale.to_rescaled(w)).collect()
    }

    /// Kernel resolution `π/N_C` converted to energy units.
    pub fn kernel_width(&self) -> f64 {
        self.rescale.a * PI / self.n_moments as f64
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Evaluate the damped series at the `N_C` Chebyshev nodes
/// `x_j = cos(π(j + ½)/N_C)` with one complex FFT of length `2 N_C`.
pub fn reconstruct(moments: &MomentSet, factors: &[f64], kernel: Kernel, rescale: &RescaleInfo) -> Result<SpectralResult> {
    let n = moments.moments.len();
    if factors.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: factors.len(),
        });
    }
    if n == 0 {
        return Err(Error::invalid("moments", "empty moment set"));
    }
    let sums = dct3(&moments.moments, factors);

    let mut omega = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    // nodes descend in j; walk backwards so ω ascends
    for j in (0..n).rev() {
        let theta = PI * (j as f64 + 0.5) / n as f64;
        let x = theta.cos();
        let f = sums[j] / (PI * theta.sin());
        omega.push(rescale.to_energy(x));
        values.push(f / rescale.a);
        weights.push(sums[j] / n as f64);
    }
    Ok(SpectralResult {
        k: moments.k,
        omega,
        values,
        weights,
        rescale: *rescale,
        kernel,
        n_moments: n,
    })
}

// S_j = a_0 + 2 Σ_{n≥1} g_n μ_n cos(πn(j + ½)/N)
fn dct3(mu: &[f64], g: &[f64]) -> Vec<f64> {
    let n = mu.len();
    let m = 2 * n;
    let mut buf: Vec<C64> = vec![C64::new(0.0, 0.0); m];
    for k in 0..n {
        let a = if k == 0 { g[0] * mu[0] } else { 2.0 * g[k] * mu[k] };
        let ph = PI * k as f64 / m as f64;
        buf[k] = C64::new(a * ph.cos(), a * ph.sin());
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(m).process(&mut buf);
    buf[..n].iter().map(|c| c.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(moments: Vec<f64>) -> MomentSet {
        MomentSet {
            k: None,
            n_c: moments.len(),
            moments,
            applications: 0,
        }
    }

    fn cheb(n: usize, x: f64) -> f64 {
        (n as f64 * x.acos()).cos()
    }

    #[test]
    fn jackson_closed_form() {
        for n_c in [1, 2, 3, 4, 17, 1000] {
            let g = jackson_factors(n_c);
            assert!((g[0] - 1.0).abs() < 1e-15);
            assert!(g.windows(2).all(|w| w[1] < w[0]), "n_c = {n_c}");
            assert!(*g.last().unwrap() > 0.0);
        }
        assert!((jackson_factors(2)[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dct_matches_direct_sum() {
        let mu: Vec<f64> = (0..37).map(|n| (0.3 * n as f64).cos() / (1.0 + n as f64)).collect();
        let g = jackson_factors(37);
        let fast = dct3(&mu, &g);
        for (j, s) in fast.iter().enumerate() {
            let th = PI * (j as f64 + 0.5) / 37.0;
            let mut want = g[0] * mu[0];
            for n in 1..37 {
                want += 2.0 * g[n] * mu[n] * (n as f64 * th).cos();
            }
            assert!((s - want).abs() < 1e-12);
        }
    }

    #[test]
    fn leading_term_only() {
        let mut mu = vec![0.0; 64];
        mu[0] = 1.0;
        let r = RescaleInfo::new(-1.0 / 0.99, 1.0 / 0.99, 0.01).unwrap();
        let s = reconstruct(&set(mu), &jackson_factors(64), Kernel::Jackson, &r).unwrap();
        for (w, v) in s.omega.iter().zip(&s.values) {
            let x = r.to_rescaled(*w);
            let want = 1.0 / (PI * (1.0 - x * x).sqrt()) / r.a;
            assert!((v - want).abs() < 1e-10 * want);
        }
        assert!(s.sum_rule_defect() < 1e-14);
        assert!(s.omega.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn point_spectrum_peak() {
        let n_c = 2000;
        let x0 = 0.3137;
        let mu: Vec<f64> = (0..n_c).map(|n| cheb(n, x0)).collect();
        let r = RescaleInfo::new(-1.0, 1.0, 0.01).unwrap();
        let s = reconstruct(&set(mu), &jackson_factors(n_c), Kernel::Jackson, &r).unwrap();
        assert!(s.sum_rule_defect() < 1e-12);
        assert!(s.min_value() > -1e-12);
        let xs = s.rescaled_nodes();
        let (jmax, _) = s
            .values
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        let spacing = PI / n_c as f64;
        assert!((xs[jmax] - x0).abs() <= spacing);
        let mean: f64 = s.weights.iter().zip(&xs).map(|(w, x)| w * x).sum();
        let var: f64 = s.weights.iter().zip(&xs).map(|(w, x)| w * (x - mean).powi(2)).sum();
        assert!(var.sqrt() <= PI / n_c as f64, "σ = {}", var.sqrt());
    }

    #[test]
    fn kernel_width_at_band_center() {
        for n_c in [100, 1000, 10_000] {
            let mu: Vec<f64> = (0..n_c).map(|n| cheb(n, 0.0)).collect();
            let r = RescaleInfo::new(-1.0, 1.0, 0.01).unwrap();
            let s = reconstruct(&set(mu), &jackson_factors(n_c), Kernel::Jackson, &r).unwrap();
            let xs = s.rescaled_nodes();
            let var: f64 = s.weights.iter().zip(&xs).map(|(w, x)| w * x * x).sum();
            assert!(var.sqrt() <= PI / n_c as f64, "n_c = {n_c}: σ = {}", var.sqrt());
        }
    }

    #[test]
    fn length_mismatch() {
        let r = RescaleInfo::new(-1.0, 1.0, 0.01).unwrap();
        assert!(reconstruct(&set(vec![1.0, 0.0]), &[1.0], Kernel::Jackson, &r).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn jackson_positive_and_decreasing(n_c in 2usize..5000) {
                let g = jackson_factors(n_c);
                prop_assert!((g[0] - 1.0).abs() < 1e-14);
                prop_assert!(g.windows(2).all(|w| w[1] < w[0]));
                prop_assert!(g.iter().all(|&x| x > 0.0));
            }

            #[test]
            fn lines_keep_weight_and_positivity(
                lines in proptest::collection::vec((-0.98..0.98f64, 0.01..1.0f64), 1..5),
                n_c in 64usize..1500,
            ) {
                let total: f64 = lines.iter().map(|l| l.1).sum();
                let mu: Vec<f64> = (0..n_c)
                    .map(|n| lines.iter().map(|&(x, w)| w / total * cheb(n, x)).sum())
                    .collect();
                let r = RescaleInfo::new(-1.0, 1.0, 0.01).unwrap();
                let s = reconstruct(&set(mu), &jackson_factors(n_c), Kernel::Jackson, &r).unwrap();
                prop_assert!(s.sum_rule_defect() < 1e-10);
                prop_assert!(s.min_value() > -1e-10);
            }
        }
    }
}
