//! Dense exact diagonalization for small instances.
//!
//! Deliberately shares no code with [`crate::hamiltonian`]: the real-space
//! Hamiltonian is assembled term by term from the second-quantized form on a
//! hash-indexed basis, and sector matrices are obtained by projecting onto
//! explicitly constructed Bloch vectors.

use std::collections::HashMap;
use std::io::{self, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{nonnegative_momenta, Momentum};
use crate::kpm::{clusters, lanczos_extrema, LanczosOptions, SpectralResult};
use crate::linalg::C64;
use crate::params::{Boundary, ModelParams};
use crate::SectorOperator;

/// Largest matrix the oracle will diagonalize densely.
pub const DENSE_BUDGET: usize = 4000;

/// Eigenvalues closer than this are treated as one level.
const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
enum Phonon {
    One,
    X(usize),
}

// coef · c†_to c_from · phonon
#[derive(Debug, Clone, Copy)]
struct Term {
    to: usize,
    from: usize,
    phonon: Phonon,
    coef: f64,
}

/// Literal term list of `H`, split as `t0 · hopping + rest`.
fn terms(model: &ModelParams) -> (Vec<Term>, Vec<Term>) {
    let n = model.n_sites;
    let g = model.g;
    let periodic = model.boundary == Boundary::Periodic;
    let site = |i: isize| -> Option<usize> {
        if (0..n as isize).contains(&i) {
            Some(i as usize)
        } else if periodic {
            Some(i.rem_euclid(n as isize) as usize)
        } else {
            None
        }
    };
    let mut hop = Vec::new();
    let mut rest = Vec::new();
    for b in 0..n {
        let Some(b1) = site(b as isize + 1) else { continue };
        for (to, from) in [(b, b1), (b1, b)] {
            hop.push(Term { to, from, phonon: Phonon::One, coef: -1.0 });
            rest.push(Term { to, from, phonon: Phonon::X(b1), coef: g });
            rest.push(Term { to, from, phonon: Phonon::X(b), coef: -g });
        }
    }
    for s in 0..n {
        if let Some(r) = site(s as isize + 1) {
            rest.push(Term { to: s, from: s, phonon: Phonon::X(r), coef: -g });
        }
        if let Some(l) = site(s as isize - 1) {
            rest.push(Term { to: s, from: s, phonon: Phonon::X(l), coef: g });
        }
    }
    (hop, rest)
}

fn all_configs(n_sites: usize, n_ph_max: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = vec![0u8; n_sites];
    fn rec(i: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[i] = v as u8;
            rec(i + 1, left - v, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, n_ph_max, &mut cur, &mut out);
    out
}

type Sparse = Vec<Vec<(usize, f64)>>;

/// Single-excitation block of `H` in real space, states `(site, phonons)`.
struct RealSpace {
    configs: Vec<Vec<u8>>,
    config_index: HashMap<Vec<u8>, usize>,
    n_sites: usize,
    hop: Sparse,
    rest: Sparse,
}

impl RealSpace {
    fn build(model: &ModelParams) -> Result<Self> {
        let configs = all_configs(model.n_sites, model.n_ph_max);
        let config_index: HashMap<Vec<u8>, usize> =
            configs.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        let n = model.n_sites;
        let d = configs.len();
        let index = |s: usize, c: usize| s * d + c;
        let (hop_terms, rest_terms) = terms(model);

        let assemble = |list: &[Term], with_number: bool| -> Sparse {
            let mut rows: Vec<HashMap<usize, f64>> = vec![HashMap::new(); n * d];
            for s in 0..n {
                for (ci, m) in configs.iter().enumerate() {
                    let col = index(s, ci);
                    if with_number {
                        let tot: usize = m.iter().map(|&v| v as usize).sum();
                        if tot > 0 {
                            *rows[col].entry(col).or_default() += tot as f64;
                        }
                    }
                    for t in list.iter().filter(|t| t.from == s) {
                        let mut push = |p: &[u8], amp: f64| {
                            if let Some(&pi) = config_index.get(p) {
                                *rows[index(t.to, pi)].entry(col).or_default() += amp;
                            }
                        };
                        match t.phonon {
                            Phonon::One => push(m, t.coef),
                            Phonon::X(j) => {
                                let mut p = m.clone();
                                if m[j] < u8::MAX {
                                    p[j] = m[j] + 1;
                                    push(&p, t.coef * (m[j] as f64 + 1.0).sqrt());
                                }
                                if m[j] > 0 {
                                    p[j] = m[j] - 1;
                                    push(&p, t.coef * (m[j] as f64).sqrt());
                                }
                            }
                        }
                    }
                }
            }
            rows.into_iter()
                .map(|r| {
                    let mut v: Vec<(usize, f64)> = r.into_iter().filter(|e| e.1 != 0.0).collect();
                    v.sort_by_key(|e| e.0);
                    v
                })
                .collect()
        };
        let hop = assemble(&hop_terms, false);
        let rest = assemble(&rest_terms, true);
        Ok(RealSpace {
            configs,
            config_index,
            n_sites: n,
            hop,
            rest,
        })
    }

    fn dim(&self) -> usize {
        self.n_sites * self.configs.len()
    }

    fn dense(&self, t0: f64) -> DMatrix<C64> {
        let dim = self.dim();
        let mut h = DMatrix::zeros(dim, dim);
        for (r, row) in self.hop.iter().enumerate() {
            for &(c, v) in row {
                h[(r, c)] += C64::new(t0 * v, 0.0);
            }
        }
        for (r, row) in self.rest.iter().enumerate() {
            for &(c, v) in row {
                h[(r, c)] += C64::new(v, 0.0);
            }
        }
        h
    }

    /// `⟨K, m'| part |K, m⟩` with `|K, m⟩ = N^{-1/2} Σ_s e^{iKs} |s, T_s m⟩`.
    fn project(&self, part: &Sparse, k: f64) -> DMatrix<C64> {
        let n = self.n_sites;
        let d = self.configs.len();
        let mut out = DMatrix::zeros(d, d);
        let mut shifted = vec![0u8; n];
        for (ci, m) in self.configs.iter().enumerate() {
            for s in 0..n {
                for j in 0..n {
                    shifted[j] = m[(j + n - s) % n];
                }
                let col = s * d + self.config_index[&shifted];
                // part is symmetric, so the row lists column entries too
                for &(r, v) in &part[col] {
                    let (s2, p) = (r / d, &self.configs[r % d]);
                    for j in 0..n {
                        shifted[j] = p[(j + s2) % n];
                    }
                    let ri = self.config_index[&shifted];
                    let ph = k * (s as f64 - s2 as f64);
                    out[(ri, ci)] += C64::new(ph.cos(), ph.sin()) * (v / n as f64);
                }
            }
        }
        out
    }
}

/// Dense sector matrix built independently of [`SectorOperator`], together
/// with the phonon configuration labelling each row.
pub fn sector_matrix(model: &ModelParams, k: Momentum) -> Result<(Vec<Vec<u8>>, DMatrix<C64>)> {
    let (hop, rest) = sector_parts(model, k)?;
    let h = hop * C64::new(model.t0, 0.0) + rest;
    Ok((all_configs(model.n_sites, model.n_ph_max), h))
}

fn sector_parts(model: &ModelParams, k: Momentum) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    model.validate()?;
    if model.boundary != Boundary::Periodic {
        return Err(Error::invalid("boundary", "momentum sectors need periodic boundaries"));
    }
    check_budget(crate::hilbert::dimension(model.n_sites, model.n_ph_max))?;
    let rs = RealSpace::build(model)?;
    Ok((rs.project(&rs.hop, k.value()), rs.project(&rs.rest, k.value())))
}

fn check_budget(dim: u128) -> Result<()> {
    if dim > DENSE_BUDGET as u128 {
        return Err(Error::Capacity {
            requested: dim,
            budget: DENSE_BUDGET,
        });
    }
    Ok(())
}

/// Eigenvalues of one sector with their Bloch-state weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectorSpectrum {
    pub k: Momentum,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `|⟨ψ_j| c†_K |0⟩|²`; within a degenerate level all weight sits on the
    /// first member.
    pub weights: Vec<f64>,
}

impl SectorSpectrum {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `(E_j, w_j)` with `w_j > min_weight`.
    pub fn lines(&self, min_weight: f64) -> Vec<(f64, f64)> {
        self.eigenvalues
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > min_weight)
            .map(|(&e, &w)| (e, w))
            .collect()
    }
}

/// Eigenpairs sorted ascending, with degenerate weight canonicalized.
fn spectrum_from(k: Momentum, h: DMatrix<C64>, start: &[C64]) -> SectorSpectrum {
    let eig = h.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..eig.eigenvalues.len())
        .map(|j| {
            let v = eig.eigenvectors.column(j);
            let overlap: C64 = v.iter().zip(start).map(|(a, b)| a.conj() * b).sum();
            (eig.eigenvalues[j], overlap.norm_sqr())
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut eigenvalues = Vec::with_capacity(pairs.len());
    let mut weights = Vec::with_capacity(pairs.len());
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i + 1;
        while j < pairs.len() && pairs[j].0 - pairs[i].0 < DEGENERACY_TOL {
            j += 1;
        }
        let w: f64 = pairs[i..j].iter().map(|p| p.1).sum();
        for (n, p) in pairs[i..j].iter().enumerate() {
            eigenvalues.push(p.0);
            weights.push(if n == 0 { w } else { 0.0 });
        }
        i = j;
    }
    SectorSpectrum {
        k,
        eigenvalues,
        weights,
    }
}

/// Full eigendecomposition of the sector at momentum `k`.
pub fn diagonalize_sector(model: &ModelParams, k: Momentum) -> Result<SectorSpectrum> {
    let (configs, h) = sector_matrix(model, k)?;
    let mut start = vec![C64::new(0.0, 0.0); configs.len()];
    let zero = configs.iter().position(|c| c.iter().all(|&v| v == 0)).unwrap();
    start[zero] = C64::new(1.0, 0.0);
    Ok(spectrum_from(k, h, &start))
}

/// Lorentzian-broadened Lehmann sum `Σ_j w_j (η/π) / ((ω - E_j)² + η²)`.
pub fn lehmann_spectral(spectrum: &SectorSpectrum, eta: f64, omega: &[f64]) -> Result<Vec<f64>> {
    if !(eta > 0.0) {
        return Err(Error::invalid("eta", "must be positive"));
    }
    Ok(omega
        .iter()
        .map(|&w| {
            spectrum
                .eigenvalues
                .iter()
                .zip(&spectrum.weights)
                .map(|(&e, &wj)| wj * eta / std::f64::consts::PI / ((w - e) * (w - e) + eta * eta))
                .sum()
        })
        .collect())
}

/// `G₊(k, t) = -i ⟨k| e^{-iHt} |k⟩ θ(t)` with `|k⟩ = c†_k |0⟩ ⊗ |0⟩_ph`.
///
/// Periodic models use the sector spectrum. Open chains have no momentum
/// sectors; there the plane-wave state is built in real space and the whole
/// single-excitation block is diagonalized.
pub fn direct_greens(model: &ModelParams, k: Momentum, times: &[f64]) -> Result<Vec<C64>> {
    let lines: Vec<(f64, f64)> = match model.boundary {
        Boundary::Periodic => {
            let s = diagonalize_sector(model, k)?;
            s.lines(0.0)
        }
        Boundary::Open => {
            let d = crate::hilbert::dimension(model.n_sites, model.n_ph_max);
            check_budget(d * model.n_sites as u128)?;
            let rs = RealSpace::build(model)?;
            let h = rs.dense(model.t0);
            let dp = rs.configs.len();
            let zero = rs.config_index[&vec![0u8; model.n_sites]];
            let norm = (model.n_sites as f64).sqrt();
            let mut start = vec![C64::new(0.0, 0.0); rs.dim()];
            for s in 0..model.n_sites {
                let ph = k.value() * s as f64;
                start[s * dp + zero] = C64::new(ph.cos(), ph.sin()) / norm;
            }
            spectrum_from(k, h, &start).lines(0.0)
        }
    };
    Ok(times
        .iter()
        .map(|&t| {
            if t < 0.0 {
                return C64::new(0.0, 0.0);
            }
            let amp: C64 = lines.iter().map(|&(e, w)| C64::from_polar(w, -e * t)).sum();
            C64::new(0.0, -1.0) * amp
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanSolver {
    /// Dense diagonalization within [`DENSE_BUDGET`].
    Dense,
    /// Lanczos lowest eigenvalue of the matrix-free sector operator.
    Lanczos,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanRow {
    pub lambda: f64,
    pub t0: f64,
    /// Ground-state momentum, `K >= 0`; `-K` is degenerate with it.
    pub k_gs: Momentum,
    /// True when `-k_gs` is a distinct momentum with the same energy.
    pub pair: bool,
    pub e_gs: f64,
    pub e_k0: f64,
    /// Best sector with `K != 0`.
    pub k_best_nonzero: Momentum,
    pub e_best_nonzero: f64,
    /// `e_best_nonzero - e_k0`; negative once a finite momentum wins.
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    /// Level crossing between `K = 0` and the best `K != 0` sector, located
    /// by bisection, if the scan brackets one.
    pub critical_lambda: Option<f64>,
}

/// Sector ground energies for `K ∈ [0, π]` as a function of `λ` (varied via `t0`).
struct Scanner {
    model: ModelParams,
    solver: ScanSolver,
    ks: Vec<Momentum>,
    parts: Vec<(DMatrix<C64>, DMatrix<C64>)>,
}

impl Scanner {
    fn new(model: &ModelParams, solver: ScanSolver) -> Result<Self> {
        let ks = nonnegative_momenta(model.n_sites);
        let parts = match solver {
            ScanSolver::Dense => ks.iter().map(|&k| sector_parts(model, k)).collect::<Result<_>>()?,
            ScanSolver::Lanczos => Vec::new(),
        };
        Ok(Scanner {
            model: *model,
            solver,
            ks,
            parts,
        })
    }

    fn energies(&self, lambda: f64) -> Result<(ModelParams, Vec<f64>)> {
        let m = self.model.with_lambda(lambda)?;
        let e = match self.solver {
            ScanSolver::Dense => self
                .parts
                .par_iter()
                .map(|(hop, rest)| {
                    let h = hop * C64::new(m.t0, 0.0) + rest;
                    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
                })
                .collect(),
            ScanSolver::Lanczos => {
                let opts = LanczosOptions {
                    tol: 1e-11,
                    ..LanczosOptions::default()
                };
                self.ks
                    .par_iter()
                    .map(|&k| Ok(lanczos_extrema(&SectorOperator::for_momentum(&m, k)?, &opts)?.0))
                    .collect::<Result<Vec<f64>>>()?
            }
        };
        Ok((m, e))
    }

    fn row(&self, lambda: f64) -> Result<ScanRow> {
        let (m, e) = self.energies(lambda)?;
        let tie = 1e-9 * (1.0 + e.iter().fold(0.0f64, |a, b| a.max(b.abs())));
        let e_min = e.iter().copied().fold(f64::INFINITY, f64::min);
        // ks ascend in |K|, so the first within the tie window wins
        let i_gs = e.iter().position(|&x| x - e_min <= tie).unwrap();
        let (i_nz, &e_nz) = e
            .iter()
            .enumerate()
            .skip(1)
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let k_gs = self.ks[i_gs];
        Ok(ScanRow {
            lambda,
            t0: m.t0,
            k_gs,
            pair: k_gs.neg() != k_gs,
            e_gs: e[i_gs],
            e_k0: e[0],
            k_best_nonzero: self.ks[i_nz],
            e_best_nonzero: e_nz,
            gap: e_nz - e[0],
        })
    }

    fn gap(&self, lambda: f64) -> Result<f64> {
        let (_, e) = self.energies(lambda)?;
        let nz = e[1..].iter().copied().fold(f64::INFINITY, f64::min);
        Ok(nz - e[0])
    }
}

/// Ground-state momentum over a grid of effective couplings.
pub fn ground_state_scan(model: &ModelParams, lambdas: &[f64], solver: ScanSolver) -> Result<ScanTable> {
    if model.n_sites < 2 {
        return Err(Error::invalid("n_sites", "scan needs at least two sites"));
    }
    if model.g <= 0.0 {
        return Err(Error::invalid("g", "scan over λ needs g > 0"));
    }
    let sc = Scanner::new(model, solver)?;
    let rows: Vec<ScanRow> = lambdas.iter().map(|&l| sc.row(l)).collect::<Result<_>>()?;

    let mut critical = None;
    for w in rows.windows(2) {
        if (w[0].gap > 0.0) != (w[1].gap > 0.0) {
            let (mut lo, mut hi) = (w[0].lambda, w[1].lambda);
            let lo_sign = w[0].gap > 0.0;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if (sc.gap(mid)? > 0.0) == lo_sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if (hi - lo).abs() < 1e-10 * hi.abs() {
                    break;
                }
            }
            critical = Some(0.5 * (lo + hi));
            break;
        }
    }
    Ok(ScanTable {
        rows,
        critical_lambda: critical,
    })
}

/// Canonical `K E w` text table for regression files.
pub fn write_golden<W: Write>(spectra: &[SectorSpectrum], out: &mut W) -> io::Result<()> {
    writeln!(out, "# k_index n_sites energy weight")?;
    for s in spectra {
        for (e, w) in s.eigenvalues.iter().zip(&s.weights) {
            // avoid printing -0
            let e = if e.abs() < 5e-13 { 0.0 } else { *e };
            let w = if *w < 5e-13 { 0.0 } else { *w };
            writeln!(out, "{} {} {:.12} {:.12}", s.k.index(), s.k.n_sites(), e, w)?;
        }
    }
    Ok(())
}

/// Outcome of matching a KPM result against exact lines.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KpmComparison {
    pub clusters: usize,
    /// Largest `|KPM centre - oracle weighted centre|`, rescaled units.
    pub max_position_error: f64,
    pub max_weight_error: f64,
    /// Oracle lines above the weight floor that no cluster covers.
    pub uncovered: usize,
    /// Weight of KPM clusters without any oracle line.
    pub spurious_weight: f64,
}

/// Group the KPM node weights into clusters and compare each cluster's
/// weight and centre to the oracle lines inside its range.
pub fn compare_kpm(oracle: &SectorSpectrum, kpm: &SpectralResult, line_floor: f64) -> KpmComparison {
    let r = &kpm.rescale;
    let cl = clusters(kpm, 1e-9, 8);
    let lines = oracle.lines(line_floor);
    let mut covered = vec![false; lines.len()];
    let mut max_pos: f64 = 0.0;
    let mut max_w: f64 = 0.0;
    let mut spurious = 0.0;
    for c in &cl {
        let (mut w, mut m) = (0.0, 0.0);
        for (i, &(e, wl)) in lines.iter().enumerate() {
            if e >= c.lo && e <= c.hi {
                covered[i] = true;
                w += wl;
                m += wl * e;
            }
        }
        if w == 0.0 {
            spurious += c.weight;
            continue;
        }
        max_w = max_w.max((c.weight - w).abs());
        max_pos = max_pos.max((r.to_rescaled(c.center) - r.to_rescaled(m / w)).abs());
    }
    KpmComparison {
        clusters: cl.len(),
        max_position_error: max_pos,
        max_weight_error: max_w,
        uncovered: covered.iter().filter(|c| !**c).count(),
        spurious_weight: spurious,
    }
}
