//! Shared fixtures for the kernel benchmarks.

use polaron_core::hilbert::Momentum;
use polaron_core::{ModelParams, SectorOperator};

/// Coupling of the standard device, dimensionless.
pub const G: f64 = 0.991_942_155_585_279;

/// Sector operator at `λ = 1.41`, momentum index `j`.
pub fn sector(n_sites: usize, n_ph_max: usize, j: i64) -> SectorOperator {
    let model = ModelParams::new(n_sites, n_ph_max, 1.0, G)
        .and_then(|m| m.with_lambda(1.41))
        .expect("valid benchmark model");
    SectorOperator::for_momentum(&model, Momentum::new(j, n_sites)).expect("benchmark sector")
}
