//! Idealized many-qubit Ramsey interferometry: π/2 pulse on qubit `n`, free
//! evolution, π/2 pulse on qubit `n'`, readout of `σ^z_{n'}`. Two phase
//! settings per pair give the retarded correlators, and from those the
//! single-particle Green's function and `A(k, ω)`.
//!
//! Qubit `|1⟩` is an excitation on that site. The pulse is
//! `R(φ) = (1 + i(e^{iφ}σ⁺ + e^{-iφ}σ⁻))/√2` with `σ⁺ = |1⟩⟨0|`, so the
//! outcome is `M = Re(e^{i(φ₁-φ₂)} ⟨n', 0| e^{-iHt} |n, 0⟩)`.
//!
//! Open chains map onto fermions without boundary strings. On a ring the
//! string operator only touches states with two or more excitations, which
//! the evolution never reaches, so the boundary sign is `+1` and periodic
//! runs describe the same model as the momentum sectors.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::ChebyshevPropagator;
use crate::error::{Error, Result};
use crate::hamiltonian::RealSpaceOperator;
use crate::hilbert::{allowed_momenta, Momentum, PhononBasis};
use crate::kpm::{lanczos_extrema, LanczosOptions, RescaleInfo};
use crate::linalg::{norm_sqr, C64};
use crate::params::ModelParams;

/// Largest real-space dimension the simulator accepts.
pub const RAMSEY_BUDGET: usize = 2_000_000;

/// Default Lorentzian regularizer, units of ħδω.
pub const DEFAULT_ETA: f64 = 0.02;

/// Time horizon in units of `1/η`; `e^{-14} < 10⁻⁶`.
pub const HORIZON_ETA_UNITS: f64 = 14.0;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Amplitudes on `{vacuum, one excitation, two excitations} ⊗ phonons`.
///
/// Evolution is only defined while the two-excitation block is empty; it is
/// populated by the readout pulse and only inspected afterwards.
#[derive(Debug, Clone)]
pub struct RamseyState {
    n_sites: usize,
    basis: Arc<PhononBasis>,
    /// Vacuum block followed by site-major single-excitation blocks, the
    /// layout of [`RealSpaceOperator`].
    low: Vec<C64>,
    /// Pairs `a < b` in lexicographic order, each a phonon block.
    pairs: Vec<C64>,
}

fn pair_index(n: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    // pairs before row a, then offset inside it
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

impl RamseyState {
    /// All qubits in `|0⟩`, phonons in their vacuum.
    pub fn ground(n_sites: usize, basis: Arc<PhononBasis>) -> Self {
        let d = basis.len();
        let mut low = vec![ZERO; d * (n_sites + 1)];
        low[0] = C64::new(1.0, 0.0);
        RamseyState {
            n_sites,
            basis,
            low,
            pairs: vec![ZERO; d * n_sites * (n_sites - 1) / 2],
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.low) + norm_sqr(&self.pairs)
    }

    pub fn has_double_excitations(&self) -> bool {
        self.pairs.iter().any(|v| v.norm_sqr() > 0.0)
    }

    /// Vacuum and single-excitation amplitudes.
    pub fn low_sector(&self) -> &[C64] {
        &self.low
    }

    pub fn vacuum_weight(&self) -> f64 {
        norm_sqr(&self.low[..self.basis.len()])
    }

    /// `⟨σ^z_site⟩` with `σ^z |1⟩ = +|1⟩`.
    pub fn sigma_z(&self, site: usize) -> Result<f64> {
        self.check_site(site)?;
        let d = self.basis.len();
        let n = self.n_sites;
        let total = self.norm_sqr();
        let mut up = norm_sqr(&self.low[d * (site + 1)..d * (site + 2)]);
        for other in (0..n).filter(|&o| o != site) {
            let p = pair_index(n, site, other);
            up += norm_sqr(&self.pairs[p * d..(p + 1) * d]);
        }
        Ok(2.0 * up - total)
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites {
            return Err(Error::SiteOutOfRange {
                site,
                n_sites: self.n_sites,
            });
        }
        Ok(())
    }
}

/// Resonant π/2 pulse with phase `phi` on one qubit.
pub fn rabi_pulse(state: &mut RamseyState, site: usize, phi: f64) -> Result<()> {
    state.check_site(site)?;
    let n = state.n_sites;
    let d = state.basis.len();
    // a doubly excited pair without `site` would become a triple
    for a in 0..n {
        for b in a + 1..n {
            if a == site || b == site {
                continue;
            }
            let p = pair_index(n, a, b);
            if state.pairs[p * d..(p + 1) * d].iter().any(|v| v.norm_sqr() > 0.0) {
                return Err(Error::ExcitationSector(format!(
                    "pulse on site {site} would excite three qubits ({a}, {b}, {site})"
                )));
            }
        }
    }
    let up = C64::from_polar(1.0, phi) * C64::new(0.0, 1.0); // i e^{iφ}
    let down = C64::from_polar(1.0, -phi) * C64::new(0.0, 1.0); // i e^{-iφ}
    let s = FRAC_1_SQRT_2;

    // (0, |site⟩) doublet
    for m in 0..d {
        let v = state.low[m];
        let e = state.low[d * (site + 1) + m];
        state.low[m] = (v + down * e) * s;
        state.low[d * (site + 1) + m] = (e + up * v) * s;
    }
    // (|r⟩, |r, site⟩) doublets
    for r in (0..n).filter(|&r| r != site) {
        let p = pair_index(n, r, site);
        for m in 0..d {
            let v = state.low[d * (r + 1) + m];
            let e = state.pairs[p * d + m];
            state.low[d * (r + 1) + m] = (v + down * e) * s;
            state.pairs[p * d + m] = (e + up * v) * s;
        }
    }
    Ok(())
}

/// Real-space evolution for the protocol.
pub struct RamseySimulator {
    op: RealSpaceOperator,
    rescale: RescaleInfo,
}

impl RamseySimulator {
    pub fn new(model: &ModelParams) -> Result<Self> {
        let d = crate::hilbert::dimension(model.n_sites, model.n_ph_max);
        let dim = d.saturating_mul(model.n_sites as u128 + 1);
        if dim > RAMSEY_BUDGET as u128 {
            return Err(Error::Capacity {
                requested: dim,
                budget: RAMSEY_BUDGET,
            });
        }
        let op = RealSpaceOperator::new(model)?;
        let (lo, hi) = lanczos_extrema(&op, &LanczosOptions::default())?;
        // the vacuum block always contains E = 0
        let rescale = RescaleInfo::padded(lo.min(0.0), hi.max(0.0), 0.01, 1e-3)?;
        Ok(RamseySimulator { op, rescale })
    }

    pub fn model(&self) -> &ModelParams {
        self.op.model()
    }

    /// Padded spectral bounds of the vacuum and single-excitation blocks.
    pub fn energy_bounds(&self) -> (f64, f64) {
        (self.rescale.e_min, self.rescale.e_max)
    }

    pub fn ground(&self) -> RamseyState {
        RamseyState::ground(self.op.model().n_sites, self.op.basis().clone())
    }

    /// `M_{n n'}(φ₁, φ₂, t)` for every `n'` in one pass over `times`:
    /// returns `out[n'][i]` for `phi2s[n']`.
    fn sweep(&self, n: usize, phi1: f64, phi2: f64, times: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n_sites = self.op.model().n_sites;
        let mut st = self.ground();
        rabi_pulse(&mut st, n, phi1)?;
        let prop = ChebyshevPropagator::new(&self.op, &self.rescale);
        let mut out = vec![vec![0.0; times.len()]; n_sites];
        let mut err = None;
        prop.trajectory(&st.low, times, |i, psi| {
            for (np, row) in out.iter_mut().enumerate() {
                let mut s = st.clone();
                s.low.copy_from_slice(psi);
                let r = rabi_pulse(&mut s, np, phi2).and_then(|_| s.sigma_z(np));
                match r {
                    Ok(v) => row[i] = v,
                    Err(e) => err = Some(e),
                }
            }
        })?;
        if let Some(e) = err {
            return Err(e);
        }
        Ok(out)
    }

    /// One protocol setting for one pair of sites.
    pub fn protocol_run(&self, n: usize, n_prime: usize, phi1: f64, phi2: f64, times: &[f64]) -> Result<RamseyRecord> {
        let n_sites = self.op.model().n_sites;
        for s in [n, n_prime] {
            if s >= n_sites {
                return Err(Error::SiteOutOfRange { site: s, n_sites });
            }
        }
        let mut all = self.sweep(n, phi1, phi2, times)?;
        Ok(RamseyRecord {
            n,
            n_prime,
            phi1,
            phi2,
            times: times.to_vec(),
            m_values: all.swap_remove(n_prime),
        })
    }

    /// Records for every ordered pair at `φ₁ - φ₂ = π/2` and `φ₁ = φ₂`.
    pub fn measure_all_pairs(&self, times: &[f64]) -> Result<Vec<RamseyRecord>> {
        let n_sites = self.op.model().n_sites;
        let phi1 = FRAC_PI_2;
        let mut out = Vec::with_capacity(2 * n_sites * n_sites);
        for n in 0..n_sites {
            for phi2 in [0.0, phi1] {
                let rows = self.sweep(n, phi1, phi2, times)?;
                for (n_prime, m_values) in rows.into_iter().enumerate() {
                    out.push(RamseyRecord {
                        n,
                        n_prime,
                        phi1,
                        phi2,
                        times: times.to_vec(),
                        m_values,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// `protocol_run` for a single configuration without keeping the simulator.
pub fn protocol_run(
    model: &ModelParams,
    n: usize,
    n_prime: usize,
    phi1: f64,
    phi2: f64,
    times: &[f64],
) -> Result<RamseyRecord> {
    RamseySimulator::new(model)?.protocol_run(n, n_prime, phi1, phi2, times)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RamseyRecord {
    pub n: usize,
    pub n_prime: usize,
    pub phi1: f64,
    pub phi2: f64,
    pub times: Vec<f64>,
    /// `⟨σ^z_{n'}⟩` after the second pulse.
    pub m_values: Vec<f64>,
}

/// Green's functions reconstructed from protocol outcomes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GreensFunctions {
    pub n_sites: usize,
    pub times: Vec<f64>,
    /// `𝒢ˣˣ + 𝒢ʸʸ` per `[n][n'][t]`.
    pub sym: Vec<Vec<Vec<f64>>>,
    /// `𝒢ˣʸ - 𝒢ʸˣ` per `[n][n'][t]`.
    pub antisym: Vec<Vec<Vec<f64>>>,
    /// Normalized real-space `G_{nn'}(t)`.
    pub real_space: Vec<Vec<Vec<C64>>>,
    pub momenta: Vec<Momentum>,
    /// `G₋(k, t)` per `[k][t]`.
    pub g_minus: Vec<Vec<C64>>,
    /// `G₊(k, t) = -G₋(k, t)`.
    pub g_plus: Vec<Vec<C64>>,
    /// Factor taking pseudospin correlators to fermion Green's functions,
    /// fixed by `G₊(k, 0⁺) = -i`.
    pub normalization: C64,
}

fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Assemble `G_{nn'}(t) = 𝒢ˣˣ + 𝒢ʸʸ - i(𝒢ˣʸ - 𝒢ʸˣ)` from the two phase
/// settings, Fourier transform over `n - n'`, and normalize.
///
/// With `M = -¼[sin Δ (𝒢ˣˣ + 𝒢ʸʸ) - cos Δ (𝒢ˣʸ - 𝒢ʸˣ)]`, `Δ = φ₁ - φ₂`.
pub fn reconstruct_greens(records: &[RamseyRecord], n_sites: usize) -> Result<GreensFunctions> {
    let times = match records.first() {
        Some(r) => r.times.clone(),
        None => return Err(Error::InconsistentGrid("no records".into())),
    };
    if times.first() != Some(&0.0) {
        return Err(Error::InconsistentGrid(
            "time grid must start at t = 0 to fix the normalization".into(),
        ));
    }
    let nt = times.len();
    let mut sym: Vec<Vec<Option<Vec<f64>>>> = vec![vec![None; n_sites]; n_sites];
    let mut anti = sym.clone();
    for r in records {
        if r.times != times || r.m_values.len() != nt {
            return Err(Error::InconsistentGrid(format!(
                "record ({}, {}) uses a different time grid",
                r.n, r.n_prime
            )));
        }
        if r.n >= n_sites || r.n_prime >= n_sites {
            return Err(Error::SiteOutOfRange {
                site: r.n.max(r.n_prime),
                n_sites,
            });
        }
        let delta = wrap_angle(r.phi1 - r.phi2);
        if (delta.abs() - FRAC_PI_2).abs() < 1e-12 {
            let s = -4.0 / delta.sin();
            sym[r.n][r.n_prime] = Some(r.m_values.iter().map(|m| s * m).collect());
        } else if delta.abs() < 1e-12 {
            anti[r.n][r.n_prime] = Some(r.m_values.iter().map(|m| 4.0 * m).collect());
        }
    }
    let mut p = Vec::with_capacity(n_sites);
    let mut q = Vec::with_capacity(n_sites);
    for n in 0..n_sites {
        let mut pr = Vec::with_capacity(n_sites);
        let mut qr = Vec::with_capacity(n_sites);
        for np in 0..n_sites {
            match (sym[n][np].take(), anti[n][np].take()) {
                (Some(a), Some(b)) => {
                    pr.push(a);
                    qr.push(b);
                }
                _ => {
                    return Err(Error::InconsistentGrid(format!(
                        "pair ({n}, {np}) lacks one of the two phase settings"
                    )))
                }
            }
        }
        p.push(pr);
        q.push(qr);
    }

    let raw = |n: usize, np: usize, t: usize| C64::new(p[n][np][t], -q[n][np][t]);
    let momenta = allowed_momenta(n_sites);
    let mut g_minus_raw = vec![vec![ZERO; nt]; momenta.len()];
    for (ki, k) in momenta.iter().enumerate() {
        for n in 0..n_sites {
            for np in 0..n_sites {
                let ph = C64::from_polar(1.0 / n_sites as f64, k.value() * (n as f64 - np as f64));
                for t in 0..nt {
                    g_minus_raw[ki][t] += ph * raw(n, np, t);
                }
            }
        }
    }
    let mean0: C64 = g_minus_raw.iter().map(|g| -g[0]).sum::<C64>() / momenta.len() as f64;
    if mean0.norm() < 1e-12 {
        return Err(Error::Unstable("equal-time correlator vanishes".into()));
    }
    let c = C64::new(0.0, -1.0) / mean0;

    let g_minus: Vec<Vec<C64>> = g_minus_raw.iter().map(|g| g.iter().map(|v| v * c).collect()).collect();
    let g_plus = g_minus.iter().map(|g| g.iter().map(|v| -v).collect()).collect();
    let real_space = (0..n_sites)
        .map(|n| (0..n_sites).map(|np| (0..nt).map(|t| raw(n, np, t) * c).collect()).collect())
        .collect();
    Ok(GreensFunctions {
        n_sites,
        times,
        sym: p,
        antisym: q,
        real_space,
        momenta,
        g_minus,
        g_plus,
        normalization: c,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RamseySpectrum {
    pub momenta: Vec<Momentum>,
    pub omega: Vec<f64>,
    /// `[k][ω]`.
    pub values: Vec<Vec<f64>>,
    pub eta: f64,
    pub warning: Option<String>,
}

/// `A(k, ω) = -(1/π) Im ∫₀^T G₊(k, t) e^{iωt - ηt} dt` by the trapezoidal rule.
pub fn spectral_from_ramsey(greens: &GreensFunctions, eta: f64, omega: &[f64]) -> Result<RamseySpectrum> {
    if !(eta > 0.0) {
        return Err(Error::invalid("eta", "must be positive"));
    }
    let t = &greens.times;
    if t.len() < 2 {
        return Err(Error::InconsistentGrid("need at least two times".into()));
    }
    let t_max = *t.last().unwrap();
    let warning = ((-eta * t_max).exp() >= 1e-6).then(|| {
        format!(
            "time horizon {t_max} too short for η = {eta}: e^(-ηT) = {:.2e} ≥ 1e-6",
            (-eta * t_max).exp()
        )
    });
    // trapezoid weights on a possibly nonuniform grid
    let mut w = vec![0.0; t.len()];
    for i in 0..t.len() - 1 {
        let h = t[i + 1] - t[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    let damp: Vec<f64> = t.iter().zip(&w).map(|(&ti, &wi)| wi * (-eta * ti).exp()).collect();
    let values = greens
        .g_plus
        .iter()
        .map(|g| {
            omega
                .iter()
                .map(|&om| {
                    let mut acc = ZERO;
                    for i in 0..t.len() {
                        acc += g[i] * C64::from_polar(damp[i], om * t[i]);
                    }
                    -acc.im / PI
                })
                .collect()
        })
        .collect();
    Ok(RamseySpectrum {
        momenta: greens.momenta.clone(),
        omega: omega.to_vec(),
        values,
        eta,
        warning,
    })
}

/// Time grid `0, dt, …, T` with `T = 14/η`.
pub fn default_ramsey_times(eta: f64, dt: f64) -> Vec<f64> {
    let t_max = HORIZON_ETA_UNITS / eta;
    let n = (t_max / dt).ceil() as usize;
    (0..=n).map(|i| i as f64 * t_max / n as f64).collect()
}

/// Local maxima of a sampled curve above `min_height`, as `(ω, height)`.
pub fn curve_peaks(omega: &[f64], values: &[f64], min_height: f64) -> Vec<(f64, f64)> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] >= values[i + 1] && values[i] > min_height)
        .map(|i| {
            // parabolic refinement
            let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
            let h = omega[i + 1] - omega[i];
            let den = a - 2.0 * b + c;
            let shift = if den.abs() > 0.0 { 0.5 * (a - c) / den } else { 0.0 };
            (omega[i] + shift.clamp(-1.0, 1.0) * h, b)
        })
        .collect()
}
