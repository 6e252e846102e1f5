//! Kernel polynomial method for `A(k, ω)`.
//!
//! Pipeline per momentum: sector operator, Lanczos bounds, rescaling,
//! Chebyshev moments of the Bloch start vector, Jackson damping, and
//! evaluation at the Chebyshev nodes.

mod lanczos;
mod moments;
mod peaks;
mod reconstruct;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use lanczos::{lanczos_extrema, tridiagonal_extrema, LanczosOptions};
pub use moments::{chebyshev_moments, MomentSet, RescaleInfo};
pub use peaks::{clusters, find_peaks, Peak};
pub use reconstruct::{jackson_factors, reconstruct, Kernel, SpectralResult};

use crate::error::Result;
use crate::hamiltonian::SectorOperator;
use crate::hilbert::{allowed_momenta, bloch_start_vector, KSector, Momentum, PhononBasis};
use crate::linalg::Rescaled;
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Bounds {
    /// Each sector rescaled by its own extrema.
    #[default]
    PerSector,
    /// One rescaling for all sectors, so every `k` shares a frequency grid.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpmOptions {
    pub n_moments: usize,
    pub epsilon: f64,
    /// Relative widening of the Lanczos bounds before rescaling.
    pub pad: f64,
    pub bounds: Bounds,
    pub kernel: Kernel,
    pub lanczos: LanczosSettings,
}

/// Serializable subset of [`LanczosOptions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanczosSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl From<LanczosSettings> for LanczosOptions {
    fn from(s: LanczosSettings) -> Self {
        LanczosOptions {
            tol: s.tol,
            max_iter: s.max_iter,
            seed: s.seed,
            ..LanczosOptions::default()
        }
    }
}

impl Default for KpmOptions {
    fn default() -> Self {
        let l = LanczosOptions::default();
        KpmOptions {
            n_moments: 10_000,
            epsilon: 0.01,
            pad: 1e-3,
            bounds: Bounds::PerSector,
            kernel: Kernel::Jackson,
            lanczos: LanczosSettings {
                tol: l.tol,
                max_iter: l.max_iter,
                seed: l.seed,
            },
        }
    }
}

/// Rescaling for one sector from its Lanczos extrema.
pub fn sector_rescale(op: &SectorOperator, opts: &KpmOptions) -> Result<RescaleInfo> {
    let (lo, hi) = lanczos_extrema(op, &opts.lanczos.into())?;
    RescaleInfo::padded(lo, hi, opts.epsilon, opts.pad)
}

/// `A(k, ω)` for one sector with a given rescaling.
pub fn spectral_in_sector(op: &SectorOperator, rescale: &RescaleInfo, opts: &KpmOptions) -> Result<SpectralResult> {
    let h = Rescaled {
        inner: op,
        scale: rescale.a,
        shift: rescale.b,
    };
    let start = bloch_start_vector(op.sector());
    let mut mom = chebyshev_moments(&h, &start, opts.n_moments)?;
    mom.k = Some(op.sector().k);
    let factors = opts.kernel.factors(opts.n_moments);
    reconstruct(&mom, &factors, opts.kernel, rescale)
}

/// `A(k, ω)` at lattice momentum `k`.
pub fn spectral_function(model: &ModelParams, k: Momentum, opts: &KpmOptions) -> Result<SpectralResult> {
    let mut out = spectral_functions(model, &[k], opts)?;
    Ok(out.remove(0))
}

/// `A(k, ω)` for several momenta, one task per momentum.
pub fn spectral_functions(model: &ModelParams, ks: &[Momentum], opts: &KpmOptions) -> Result<Vec<SpectralResult>> {
    model.validate()?;
    let basis = Arc::new(PhononBasis::enumerate(model.n_sites, model.n_ph_max)?);
    let build = |k: Momentum| SectorOperator::new(model, KSector::new(k, basis.clone())?);

    let global = match opts.bounds {
        Bounds::PerSector => None,
        Bounds::Global => {
            let ext: Vec<(f64, f64)> = allowed_momenta(model.n_sites)
                .into_par_iter()
                .map(|k| lanczos_extrema(&build(k)?, &opts.lanczos.into()))
                .collect::<Result<_>>()?;
            let lo = ext.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
            let hi = ext.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
            Some(RescaleInfo::padded(lo, hi, opts.epsilon, opts.pad)?)
        }
    };

    ks.par_iter()
        .map(|&k| {
            let op = build(k)?;
            let rescale = match global {
                Some(r) => r,
                None => sector_rescale(&op, opts)?,
            };
            spectral_in_sector(&op, &rescale, opts)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k0_single_peak_at_bare_energy() {
        let g = 0.99;
        for lambda in [0.51, 3.17] {
            let model = ModelParams::new(6, 3, 1.0, g).unwrap().with_lambda(lambda).unwrap();
            let opts = KpmOptions {
                n_moments: 2000,
                ..KpmOptions::default()
            };
            let s = spectral_function(&model, Momentum::new(0, 6), &opts).unwrap();
            assert!(s.sum_rule_defect() < 1e-10);
            let p = find_peaks(&s, 1e-4);
            assert_eq!(p.len(), 1, "{p:?}");
            assert!((p[0].center + 2.0 * model.t0).abs() < s.kernel_width());
        }
    }

    #[test]
    fn global_bounds_share_grid() {
        let model = ModelParams::new(4, 2, 1.0, 0.7).unwrap();
        let opts = KpmOptions {
            n_moments: 256,
            bounds: Bounds::Global,
            ..KpmOptions::default()
        };
        let ks = allowed_momenta(4);
        let all = spectral_functions(&model, &ks, &opts).unwrap();
        for s in &all[1..] {
            assert_eq!(s.omega, all[0].omega);
        }
        for s in &all {
            assert!(s.sum_rule_defect() < 1e-10);
            assert!(s.min_value() > -1e-12);
        }
    }
}
