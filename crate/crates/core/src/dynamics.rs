//! Loschmidt amplitude `⟨ψ0| e^{-iHt} |ψ0⟩` of a bare Bloch state, from a
//! reconstructed spectrum or by direct Chebyshev time stepping.

use serde::{Deserialize, Serialize};

use crate::bessel::bessel_j_sequence;
use crate::error::{Error, Result};
use crate::hamiltonian::SectorOperator;
use crate::hilbert::{bloch_start_vector, Momentum};
use crate::kpm::{sector_rescale, KpmOptions, RescaleInfo, SpectralResult};
use crate::linalg::{norm, LinearOperator, Rescaled, C64};
use crate::params::ModelParams;

/// Chebyshev coefficients below this magnitude end the series.
pub const COEFF_CUTOFF: f64 = 1e-14;

/// Longest rescaled time `a·t` taken in one expansion.
pub const MAX_TAU: f64 = 40.0;

/// Sum-rule defect above which a spectrum-derived echo is flagged.
pub const ECHO_DEFECT_WARN: f64 = 1e-2;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EchoTrace {
    pub k: Option<Momentum>,
    pub times: Vec<f64>,
    pub amplitude: Vec<C64>,
    /// `|amplitude|²`.
    pub echo: Vec<f64>,
    /// Largest `| ‖ψ(t)‖ - 1 |` seen while propagating (direct method only).
    pub unitarity_defect: Option<f64>,
    pub warning: Option<String>,
}

impl EchoTrace {
    fn new(k: Option<Momentum>, times: Vec<f64>, amplitude: Vec<C64>) -> Self {
        let echo = amplitude.iter().map(|a| a.norm_sqr()).collect();
        EchoTrace {
            k,
            times,
            amplitude,
            echo,
            unitarity_defect: None,
            warning: None,
        }
    }
}

/// 400 points on `t·δω ∈ [0, 50]`.
pub fn default_times() -> Vec<f64> {
    linspace(0.0, 50.0, 400)
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `Σ_j w_j e^{-iω_j t}` over the Chebyshev nodes of a reconstructed spectrum.
pub fn echo_from_spectrum(spec: &SpectralResult, times: &[f64]) -> EchoTrace {
    let amplitude = times
        .iter()
        .map(|&t| {
            spec.omega
                .iter()
                .zip(&spec.weights)
                .map(|(&w, &q)| C64::from_polar(q, -w * t))
                .sum()
        })
        .collect();
    let mut trace = EchoTrace::new(spec.k, times.to_vec(), amplitude);
    let defect = spec.sum_rule_defect();
    if defect > ECHO_DEFECT_WARN {
        trace.warning = Some(format!(
            "sum-rule defect {defect:.3e} exceeds {ECHO_DEFECT_WARN:e}; echo normalization unreliable"
        ));
    }
    trace
}

/// `e^{-iHt}` through the Bessel-weighted Chebyshev series of `H~ = (H - b)/a`.
pub struct ChebyshevPropagator<O> {
    op: Rescaled<O>,
}

impl<O: LinearOperator> ChebyshevPropagator<O> {
    pub fn new(op: O, rescale: &RescaleInfo) -> Self {
        ChebyshevPropagator {
            op: Rescaled {
                inner: op,
                scale: rescale.a,
                shift: rescale.b,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// `e^{-iHt} state` for `t >= 0`, in chunks of at most [`MAX_TAU`].
    pub fn propagate(&self, state: &[C64], t: f64) -> Result<Vec<C64>> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::invalid("t", format!("must be finite and non-negative, got {t}")));
        }
        if state.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.len(),
            });
        }
        let tau = self.op.scale * t;
        let chunks = (tau / MAX_TAU).ceil().max(1.0) as usize;
        let dt = t / chunks as f64;
        let mut psi = state.to_vec();
        if t == 0.0 {
            return Ok(psi);
        }
        let coeffs = self.coefficients(dt);
        for _ in 0..chunks {
            psi = self.step(&psi, &coeffs, dt);
        }
        Ok(psi)
    }

    /// Propagate along ascending `times`, calling `visit(i, ψ(t_i))`.
    /// Returns the largest norm deviation seen.
    pub fn trajectory(&self, start: &[C64], times: &[f64], mut visit: impl FnMut(usize, &[C64])) -> Result<f64> {
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("times", "must be ascending"));
        }
        if times.first().is_some_and(|&t| t < 0.0) {
            return Err(Error::invalid("times", "must be non-negative"));
        }
        let n0 = norm(start);
        let mut psi = self.propagate(start, times.first().copied().unwrap_or(0.0))?;
        let mut defect: f64 = 0.0;
        let mut last_dt = f64::NAN;
        let mut coeffs = Vec::new();
        for (i, &t) in times.iter().enumerate() {
            if i > 0 {
                let dt = t - times[i - 1];
                if dt > 0.0 {
                    if self.op.scale * dt > MAX_TAU {
                        psi = self.propagate(&psi, dt)?;
                    } else {
                        // uniform grids reuse one coefficient set
                        if dt != last_dt {
                            coeffs = self.coefficients(dt);
                            last_dt = dt;
                        }
                        psi = self.step(&psi, &coeffs, dt);
                    }
                }
            }
            defect = defect.max((norm(&psi) - n0).abs());
            visit(i, &psi);
        }
        Ok(defect)
    }

    // c_n = (2 - δ_{n0}) (-i)^n J_n(a·dt), truncated at COEFF_CUTOFF
    fn coefficients(&self, dt: f64) -> Vec<C64> {
        let tau = self.op.scale * dt;
        let n_max = (tau * 1.5 + 40.0).ceil() as usize;
        let j = bessel_j_sequence(tau, n_max);
        let mut last = j.len();
        while last > 1 && j[last - 1].abs() < COEFF_CUTOFF {
            last -= 1;
        }
        let mi = [
            C64::new(1.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(-1.0, 0.0),
            C64::new(0.0, 1.0),
        ];
        (0..last)
            .map(|n| mi[n % 4] * (if n == 0 { 1.0 } else { 2.0 } * j[n]))
            .collect()
    }

    fn step(&self, psi: &[C64], coeffs: &[C64], dt: f64) -> Vec<C64> {
        let dim = psi.len();
        let mut out: Vec<C64> = psi.iter().map(|v| v * coeffs[0]).collect();
        if coeffs.len() > 1 {
            let mut prev = psi.to_vec();
            let mut cur = vec![C64::new(0.0, 0.0); dim];
            let mut next = vec![C64::new(0.0, 0.0); dim];
            self.op.apply_into(&prev, &mut cur);
            for (o, c) in out.iter_mut().zip(&cur) {
                *o += c * coeffs[1];
            }
            for c in &coeffs[2..] {
                self.op.apply_into(&cur, &mut next);
                for ((nx, p), o) in next.iter_mut().zip(&prev).zip(out.iter_mut()) {
                    *nx = 2.0 * *nx - p;
                    *o += *nx * c;
                }
                std::mem::swap(&mut prev, &mut cur);
                std::mem::swap(&mut cur, &mut next);
            }
        }
        let phase = C64::from_polar(1.0, -self.op.shift * dt);
        for o in out.iter_mut() {
            *o *= phase;
        }
        out
    }
}

/// `e^{-iHt} state` for a rescaled sector operator.
pub fn chebyshev_propagate(op: &SectorOperator, rescale: &RescaleInfo, state: &[C64], t: f64) -> Result<Vec<C64>> {
    ChebyshevPropagator::new(op, rescale).propagate(state, t)
}

/// Echo of `c†_k |0⟩ ⊗ |0⟩_ph` by direct time stepping in its sector.
pub fn echo_direct(model: &ModelParams, k: Momentum, times: &[f64], opts: &KpmOptions) -> Result<EchoTrace> {
    let op = SectorOperator::for_momentum(model, k)?;
    let rescale = sector_rescale(&op, opts)?;
    let start = bloch_start_vector(op.sector());
    let prop = ChebyshevPropagator::new(&op, &rescale);
    let mut amplitude = vec![C64::new(0.0, 0.0); times.len()];
    let defect = prop.trajectory(&start, times, |i, psi| amplitude[i] = psi[0])?;
    let mut trace = EchoTrace::new(Some(k), times.to_vec(), amplitude);
    trace.unitarity_defect = Some(defect);
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kpm::{reconstruct, Kernel, MomentSet};
    use crate::linalg::DenseOperator;
    use crate::oracle::diagonalize_sector;

    #[test]
    fn identity_at_zero_time() {
        let op = DenseOperator::diagonal(&[-0.5, 0.2, 0.9]);
        let r = RescaleInfo::new(-0.5, 0.9, 0.01).unwrap();
        let p = ChebyshevPropagator::new(op, &r);
        let s = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)];
        assert_eq!(p.propagate(&s, 0.0).unwrap(), s);
        assert!(p.propagate(&s, -1.0).is_err());
    }

    #[test]
    fn diagonal_phases_over_long_times() {
        let e = [-3.0, 0.25, 7.0];
        let op = DenseOperator::diagonal(&e);
        let r = RescaleInfo::padded(-3.0, 7.0, 0.01, 1e-3).unwrap();
        let p = ChebyshevPropagator::new(op, &r);
        let s = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)];
        for t in [0.1, 3.0, 57.3] {
            let out = p.propagate(&s, t).unwrap();
            for i in 0..3 {
                let want = s[i] * C64::from_polar(1.0, -e[i] * t);
                assert!((out[i] - want).norm() < 1e-11, "t={t} i={i}");
            }
        }
    }

    #[test]
    fn k0_eigenstate_phase() {
        let model = ModelParams::new(6, 3, 0.93, 0.99).unwrap();
        let op = SectorOperator::for_momentum(&model, Momentum::new(0, 6)).unwrap();
        let r = sector_rescale(&op, &KpmOptions::default()).unwrap();
        let s = bloch_start_vector(op.sector());
        for t in [0.7, 12.0] {
            let out = chebyshev_propagate(&op, &r, &s, t).unwrap();
            let want = C64::from_polar(1.0, 2.0 * model.t0 * t);
            assert!((out[0] - want).norm() < 1e-10);
            assert!((norm(&out) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn overlap_matches_lehmann_sum() {
        let model = ModelParams::new(4, 2, 0.9, 0.8).unwrap();
        let k = Momentum::new(1, 4);
        let spec = diagonalize_sector(&model, k).unwrap();
        let times = linspace(0.0, 30.0, 61);
        let tr = echo_direct(&model, k, &times, &KpmOptions::default()).unwrap();
        for (t, a) in times.iter().zip(&tr.amplitude) {
            let want: C64 = spec
                .eigenvalues
                .iter()
                .zip(&spec.weights)
                .map(|(&e, &w)| C64::from_polar(w, -e * t))
                .sum();
            assert!((a - want).norm() < 1e-8, "t = {t}");
        }
        assert!(tr.unitarity_defect.unwrap() < 1e-10);
    }

    #[test]
    fn free_model_echo_is_one() {
        let model = ModelParams::new(5, 2, 0.9, 0.0).unwrap();
        let tr = echo_direct(&model, Momentum::new(2, 5), &default_times(), &KpmOptions::default()).unwrap();
        assert!(tr.echo.iter().all(|&l| (l - 1.0).abs() < 1e-10));
    }

    #[test]
    fn two_line_interference() {
        // weights ½ at ω±; the echo is cos²((ω₊ - ω₋)t/2)
        let (xp, xm) = (0.4f64, -0.3f64);
        let n_c = 4000;
        let mu: Vec<f64> = (0..n_c)
            .map(|n| 0.5 * ((n as f64 * xp.acos()).cos() + (n as f64 * xm.acos()).cos()))
            .collect();
        let set = MomentSet {
            k: None,
            n_c,
            moments: mu,
            applications: 0,
        };
        let r = RescaleInfo::new(-2.0, 2.0, 0.01).unwrap();
        let spec = reconstruct(&set, &crate::kpm::jackson_factors(n_c), Kernel::Jackson, &r).unwrap();
        let (wp, wm) = (r.to_energy(xp), r.to_energy(xm));
        let times = linspace(0.0, 20.0, 41);
        let tr = echo_from_spectrum(&spec, &times);
        assert!(tr.warning.is_none());
        for (t, l) in times.iter().zip(&tr.echo) {
            let want = (0.5 * (wp - wm) * t).cos().powi(2);
            assert!((l - want).abs() < 1e-3, "t={t}: {l} vs {want}");
        }
    }

    #[test]
    fn defect_warning() {
        let set = MomentSet {
            k: None,
            n_c: 4,
            moments: vec![0.9, 0.0, 0.0, 0.0],
            applications: 0,
        };
        let r = RescaleInfo::new(-1.0, 1.0, 0.01).unwrap();
        let spec = reconstruct(&set, &[1.0; 4], Kernel::Dirichlet, &r).unwrap();
        assert!(echo_from_spectrum(&spec, &[0.0]).warning.is_some());
    }
}
