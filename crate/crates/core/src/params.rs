//! Device-level simulator parameters and the dimensionless lattice model.
//!
//! Frequencies on the device side are in MHz (all quoted as `x / 2π`). Inside
//! the lattice model the energy unit is the phonon quantum `ħ δω`, so the
//! free-phonon term has coefficient exactly one.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bessel::bessel_j;
use crate::error::{Error, Result};

/// Largest supported lattice (phonon configurations are stored in fixed-size
/// scratch arrays on the hot path).
pub const MAX_SITES: usize = 64;

/// Largest supported phonon cutoff (occupations are stored as `u8`).
pub const MAX_PHONONS: usize = 255;

/// Flux-tunable hardware knobs of the superconducting simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// dc flux through the lower coupler loops, radians.
    pub phi_dc: f64,
    /// Effective phonon (detuned photon) frequency `δω/2π`, MHz.
    pub delta_omega_over_2pi: f64,
    /// Resonator flux constant `δθ_r`.
    pub delta_theta_r: f64,
    /// `δφ₀² E_J / 2πħ`, MHz.
    pub ej_scale_over_2pi: f64,
}

impl DeviceParams {
    pub const STANDARD_DELTA_OMEGA_OVER_2PI: f64 = 200.0;
    pub const STANDARD_DELTA_THETA_R: f64 = 3.5e-3;
    pub const STANDARD_EJ_SCALE_OVER_2PI: f64 = 1.0e5;

    pub fn new(
        phi_dc: f64,
        delta_omega_over_2pi: f64,
        delta_theta_r: f64,
        ej_scale_over_2pi: f64,
    ) -> Result<Self> {
        let dev = DeviceParams {
            phi_dc,
            delta_omega_over_2pi,
            delta_theta_r,
            ej_scale_over_2pi,
        };
        dev.validate()?;
        Ok(dev)
    }

    /// Standard resonator/junction constants (δω/2π = 200 MHz,
    /// δθ_r = 3.5e-3, δφ₀²E_J/2πħ = 100 GHz) at the given `φ_dc/π`.
    pub fn standard(phi_dc_over_pi: f64) -> Result<Self> {
        Self::new(
            phi_dc_over_pi * PI,
            Self::STANDARD_DELTA_OMEGA_OVER_2PI,
            Self::STANDARD_DELTA_THETA_R,
            Self::STANDARD_EJ_SCALE_OVER_2PI,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi_dc >= 0.0 && self.phi_dc < PI) {
            return Err(Error::invalid(
                "phi_dc",
                format!("must lie in [0, π), got {}", self.phi_dc),
            ));
        }
        for (name, v) in [
            ("delta_omega_over_2pi", self.delta_omega_over_2pi),
            ("delta_theta_r", self.delta_theta_r),
            ("ej_scale_over_2pi", self.ej_scale_over_2pi),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `1 + cos φ_dc`, evaluated as `2 cos²(φ_dc/2)` to keep precision near π.
    fn flux_factor(&self) -> Result<f64> {
        let c = (0.5 * self.phi_dc).cos();
        let f = 2.0 * c * c;
        if f <= 1e-300 {
            return Err(Error::Domain(format!(
                "1 + cos(phi_dc) underflows at phi_dc = {}",
                self.phi_dc
            )));
        }
        Ok(f)
    }

    /// Lattice model for this device on `n_sites` sites with the given cutoff.
    pub fn to_model(&self, n_sites: usize, n_ph_max: usize) -> Result<ModelParams> {
        let t0 = effective_hopping(self)? / self.delta_omega_over_2pi;
        ModelParams::new(n_sites, n_ph_max, t0, coupling_g(self)?)
    }
}

/// Bare hopping `t₀(φ_dc) = E_Jb δφ₀² (1 + cos φ_dc)` with `E_Jb = 2 E_J J₀(π/2)`, in MHz.
pub fn effective_hopping(dev: &DeviceParams) -> Result<f64> {
    dev.validate()?;
    Ok(2.0 * bessel_j(0, FRAC_PI_2) * dev.ej_scale_over_2pi * dev.flux_factor()?)
}

/// Dimensionless coupling `g` from `g ħδω = δφ₀² E_J J₁(π/2) δθ_r`.
pub fn coupling_g(dev: &DeviceParams) -> Result<f64> {
    dev.validate()?;
    Ok(dev.ej_scale_over_2pi * bessel_j(1, FRAC_PI_2) * dev.delta_theta_r
        / dev.delta_omega_over_2pi)
}

/// Closed-form flux dependence of the effective coupling strength.
pub fn lambda_from_flux(dev: &DeviceParams) -> Result<f64> {
    let g = coupling_g(dev)?;
    let j0 = bessel_j(0, FRAC_PI_2);
    let j1 = bessel_j(1, FRAC_PI_2);
    Ok(1.5 * g * j1 * dev.delta_theta_r / (j0 * dev.flux_factor()?))
}

/// E-ph vertex `γ(k, q) = 2ig [sin k + sin q − sin(k+q)]` in units of ħδω.
pub fn vertex(k: f64, q: f64, g: f64) -> C64 {
    C64::new(0.0, 2.0 * g * (k.sin() + q.sin() - (k + q).sin()))
}

/// Effective coupling `⟨|γ|²⟩ / (2 t_e ħω_ph)` for an arbitrary vertex, with
/// the Brillouin-zone average done on a refined midpoint grid.
pub fn lambda_general<F>(vertex_fn: F, t_e: f64, omega_ph: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> C64,
{
    if !(t_e > 0.0) {
        return Err(Error::invalid("t_e", "must be positive"));
    }
    if !(omega_ph > 0.0) {
        return Err(Error::invalid("omega_ph", "must be positive"));
    }
    let average = |n: usize| -> f64 {
        let h = 2.0 * PI / n as f64;
        let mut sum = 0.0;
        for i in 0..n {
            let k = -PI + (i as f64 + 0.5) * h;
            for j in 0..n {
                let q = -PI + (j as f64 + 0.5) * h;
                sum += vertex_fn(k, q).norm_sqr();
            }
        }
        sum / (n * n) as f64
    };
    let mut n = 16;
    let mut prev = average(n);
    while n < 4096 {
        n *= 2;
        let cur = average(n);
        let scale = cur.abs().max(prev.abs());
        if (cur - prev).abs() <= 1e-8 * scale || scale < 1e-300 {
            return Ok(cur / (2.0 * t_e * omega_ph));
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged(format!(
        "Brillouin-zone average still changing at a {n}x{n} grid"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

/// Dimensionless lattice model; energies in units of ħδω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n_sites: usize,
    pub n_ph_max: usize,
    /// Bare hopping in units of ħδω.
    pub t0: f64,
    pub g: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl ModelParams {
    pub fn new(n_sites: usize, n_ph_max: usize, t0: f64, g: f64) -> Result<Self> {
        let m = ModelParams {
            n_sites,
            n_ph_max,
            t0,
            g,
            boundary: Boundary::Periodic,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    /// Same lattice and `g`, with `t₀ = 3g²/λ` so that `λ_eff = lambda`.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::invalid("lambda", "must be positive"));
        }
        if self.g == 0.0 {
            return Err(Error::invalid("g", "cannot reach a nonzero λ_eff with g = 0"));
        }
        let mut m = *self;
        m.t0 = 3.0 * self.g * self.g / lambda;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 || self.n_sites > MAX_SITES {
            return Err(Error::invalid(
                "n_sites",
                format!("must be in [2, {MAX_SITES}], got {}", self.n_sites),
            ));
        }
        if self.n_ph_max > MAX_PHONONS {
            return Err(Error::invalid(
                "n_ph_max",
                format!("must be at most {MAX_PHONONS}, got {}", self.n_ph_max),
            ));
        }
        if !(self.t0.is_finite() && self.t0 > 0.0) {
            return Err(Error::invalid("t0", format!("must be positive, got {}", self.t0)));
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(Error::invalid("g", format!("must be non-negative, got {}", self.g)));
        }
        Ok(())
    }

    /// On two sites the neighbours `n+1` and `n-1` coincide and the
    /// breathing term vanishes identically.
    pub fn breathing_cancels(&self) -> bool {
        self.n_sites == 2
    }

    pub fn lambda_eff(&self) -> f64 {
        3.0 * self.g * self.g / self.t0
    }

    pub fn coupling(&self) -> CouplingSummary {
        CouplingSummary {
            lambda_eff: self.lambda_eff(),
            adiabatic: self.t0 > 1.0,
            vertex_scale: 2.0 * self.g,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSummary {
    pub lambda_eff: f64,
    /// `t₀ > ħδω`.
    pub adiabatic: bool,
    /// `2g` in units of ħδω.
    pub vertex_scale: f64,
}
