//! Spectral functions, quench dynamics and Ramsey-protocol simulation for a
//! one-dimensional lattice excitation coupled to Einstein phonons through
//! Peierls (hopping-modulating) and breathing-mode interactions.
//!
//! Energies are in units of the phonon quantum `ħδω`, times in `1/δω`.
//!
//! ```
//! use polaron_core::{hilbert::Momentum, params::ModelParams, kpm::{spectral_function, KpmOptions}};
//!
//! let model = ModelParams::new(4, 2, 1.0, 0.5).unwrap();
//! let opts = KpmOptions { n_moments: 512, ..KpmOptions::default() };
//! let spec = spectral_function(&model, Momentum::new(1, 4), &opts).unwrap();
//! assert!(spec.sum_rule_defect() < 1e-3);
//! ```

pub mod bessel;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod hilbert;
pub mod kpm;
pub mod linalg;
pub mod oracle;
pub mod params;
pub mod ramsey;

pub use error::{Error, Result};
pub use hamiltonian::{RealSpaceOperator, SectorOperator};
pub use hilbert::{KSector, Momentum, PhononBasis, PhononConfig};
pub use linalg::{LinearOperator, C64};
pub use params::{Boundary, CouplingSummary, DeviceParams, ModelParams};

pub use dynamics::EchoTrace;
pub use kpm::{MomentSet, RescaleInfo, SpectralResult};
pub use oracle::SectorSpectrum;
pub use ramsey::{GreensFunctions, RamseyRecord, RamseySimulator, RamseyState};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
