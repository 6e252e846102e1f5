//! Matrix-free action of the lattice Hamiltonian
//!
//! ```text
//! H = -t0 Σ (c†_n c_{n+1} + h.c.) + Σ a†_n a_n
//!     + g Σ [(c†_n c_{n+1} + h.c.)(x_{n+1} - x_n) - c†_n c_n (x_{n+1} - x_{n-1})]
//! ```
//!
//! with `x_n = a_n + a†_n`, either in a momentum sector or in real space on
//! the zero- and one-excitation subspaces.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{total, KSector, Momentum, PhononBasis};
use crate::linalg::{dot, normalize, LinearOperator, C64};
use crate::params::{Boundary, ModelParams, MAX_SITES};

/// Sectors up to this dimension keep an explicit sparse copy.
pub const CSR_CACHE_MAX_DIM: usize = 200_000;

/// Row-parallel application kicks in above this dimension.
const PARALLEL_MIN_DIM: usize = 4096;

#[derive(Debug, Clone, Default)]
struct Csr<T> {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<T>,
}

impl<T: Copy> Csr<T> {
    fn from_rows(dim: usize, mut row: impl FnMut(usize, &mut Vec<(usize, T)>)) -> Self {
        let mut csr = Csr {
            row_ptr: Vec::with_capacity(dim + 1),
            cols: Vec::new(),
            vals: Vec::new(),
        };
        csr.row_ptr.push(0);
        let mut buf = Vec::new();
        for r in 0..dim {
            buf.clear();
            row(r, &mut buf);
            for &(c, v) in &buf {
                csr.cols.push(c as u32);
                csr.vals.push(v);
            }
            csr.row_ptr.push(csr.cols.len());
        }
        csr
    }

    fn nnz(&self) -> usize {
        self.vals.len()
    }
}

impl Csr<C64> {
    #[inline]
    fn row_dot(&self, r: usize, x: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for p in self.row_ptr[r]..self.row_ptr[r + 1] {
            acc += self.vals[p] * x[self.cols[p] as usize];
        }
        acc
    }
}

impl Csr<f64> {
    #[inline]
    fn row_dot(&self, r: usize, x: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for p in self.row_ptr[r]..self.row_ptr[r + 1] {
            acc += x[self.cols[p] as usize] * self.vals[p];
        }
        acc
    }
}

fn apply_rows(dim: usize, y: &mut [C64], row: impl Fn(usize) -> C64 + Sync) {
    if dim > PARALLEL_MIN_DIM {
        y.par_chunks_mut(1024).enumerate().for_each(|(c, chunk)| {
            let base = c * 1024;
            for (i, yi) in chunk.iter_mut().enumerate() {
                *yi = row(base + i);
            }
        });
    } else {
        for (r, yi) in y.iter_mut().enumerate() {
            *yi = row(r);
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Recenter {
    Stay,
    // excitation now sits at site 1 (right) or N-1 (left) of the old frame
    Right,
    Left,
}

fn recenter(cfg: &[u8], shift: Recenter, out: &mut [u8]) {
    let n = cfg.len();
    match shift {
        Recenter::Stay => out[..n].copy_from_slice(cfg),
        Recenter::Right => {
            for j in 0..n {
                out[j] = cfg[(j + 1) % n];
            }
        }
        Recenter::Left => {
            for j in 0..n {
                out[j] = cfg[(j + n - 1) % n];
            }
        }
    }
}

struct SectorTerms<'a> {
    basis: &'a PhononBasis,
    t0: f64,
    g: f64,
    phase_right: C64,
}

impl SectorTerms<'_> {
    /// `emit(target, amp)` for every term of `H |K, m⟩ = Σ amp |K, target⟩`.
    fn for_each(&self, m: &[u8], emit: &mut impl FnMut(usize, C64)) {
        let n = m.len();
        let tot = total(m);
        let g = self.g;
        let pr = self.phase_right;
        let pl = pr.conj();
        let one = C64::new(1.0, 0.0);
        let mut scratch = [0u8; MAX_SITES];

        emit(self.basis.rank(m), C64::new(tot as f64, 0.0));

        // breathing: -g x_1 + g x_{N-1}
        self.displace(m, tot, 1, -g, Recenter::Stay, one, emit);
        self.displace(m, tot, n - 1, g, Recenter::Stay, one, emit);

        // hop to site 1: (-t0 + g x_1 - g x_0), phase e^{-iK}
        recenter(m, Recenter::Right, &mut scratch);
        emit(self.basis.rank(&scratch[..n]), pr * -self.t0);
        self.displace(m, tot, 1, g, Recenter::Right, pr, emit);
        self.displace(m, tot, 0, -g, Recenter::Right, pr, emit);

        // hop to site N-1: (-t0 + g x_0 - g x_{N-1}), phase e^{iK}
        recenter(m, Recenter::Left, &mut scratch);
        emit(self.basis.rank(&scratch[..n]), pl * -self.t0);
        self.displace(m, tot, 0, g, Recenter::Left, pl, emit);
        self.displace(m, tot, n - 1, -g, Recenter::Left, pl, emit);
    }

    #[allow(clippy::too_many_arguments)]
    #[inline]
    fn displace(
        &self,
        m: &[u8],
        tot: usize,
        site: usize,
        coef: f64,
        shift: Recenter,
        phase: C64,
        emit: &mut impl FnMut(usize, C64),
    ) {
        if coef == 0.0 {
            return;
        }
        let n = m.len();
        let mut p = [0u8; MAX_SITES];
        let mut q = [0u8; MAX_SITES];
        p[..n].copy_from_slice(m);
        let occ = m[site];
        if tot < self.basis.n_ph_max() {
            p[site] = occ + 1;
            recenter(&p[..n], shift, &mut q);
            emit(self.basis.rank(&q[..n]), phase * (coef * (occ as f64 + 1.0).sqrt()));
        }
        if occ > 0 {
            p[site] = occ - 1;
            recenter(&p[..n], shift, &mut q);
            emit(self.basis.rank(&q[..n]), phase * (coef * (occ as f64).sqrt()));
        }
    }
}

/// The Hamiltonian restricted to one total-momentum sector, in the basis
/// `|K, m⟩ = N^{-1/2} Σ_s e^{iKs} |s⟩ ⊗ T_s |m⟩`.
#[derive(Debug, Clone)]
pub struct SectorOperator {
    sector: KSector,
    model: ModelParams,
    phase_right: C64,
    csr: Option<Csr<C64>>,
}

impl SectorOperator {
    pub fn new(model: &ModelParams, sector: KSector) -> Result<Self> {
        Self::with_cache_limit(model, sector, CSR_CACHE_MAX_DIM)
    }

    /// Like [`SectorOperator::new`] with an explicit dimension limit for the
    /// sparse cache (0 forces matrix-free application).
    pub fn with_cache_limit(model: &ModelParams, sector: KSector, cache_max_dim: usize) -> Result<Self> {
        model.validate()?;
        if model.boundary != Boundary::Periodic {
            return Err(Error::invalid(
                "boundary",
                "momentum sectors require periodic boundary conditions",
            ));
        }
        let b = &sector.basis;
        if b.n_sites() != model.n_sites || b.n_ph_max() != model.n_ph_max {
            return Err(Error::invalid(
                "sector",
                format!(
                    "basis ({} sites, cutoff {}) does not match the model ({} sites, cutoff {})",
                    b.n_sites(),
                    b.n_ph_max(),
                    model.n_sites,
                    model.n_ph_max
                ),
            ));
        }
        let k = sector.k.value();
        let mut op = SectorOperator {
            phase_right: C64::new(k.cos(), -k.sin()),
            sector,
            model: *model,
            csr: None,
        };
        if op.dim() <= cache_max_dim {
            let terms = op.terms();
            // row r of H is the conjugate of what H does to |K, m_r⟩
            let csr = Csr::from_rows(op.dim(), |r, buf| {
                terms.for_each(op.sector.basis.occupations(r), &mut |c, a| buf.push((c, a.conj())));
            });
            op.csr = Some(csr);
        }
        Ok(op)
    }

    /// Enumerate the basis and build the sector for momentum `k`.
    pub fn for_momentum(model: &ModelParams, k: Momentum) -> Result<Self> {
        let basis = Arc::new(PhononBasis::enumerate(model.n_sites, model.n_ph_max)?);
        Self::new(model, KSector::new(k, basis)?)
    }

    fn terms(&self) -> SectorTerms<'_> {
        SectorTerms {
            basis: &self.sector.basis,
            t0: self.model.t0,
            g: self.model.g,
            phase_right: self.phase_right,
        }
    }

    pub fn sector(&self) -> &KSector {
        &self.sector
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    pub fn is_cached(&self) -> bool {
        self.csr.is_some()
    }

    pub fn nnz(&self) -> Option<usize> {
        self.csr.as_ref().map(Csr::nnz)
    }
}

impl LinearOperator for SectorOperator {
    fn dim(&self) -> usize {
        self.sector.dim()
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        let dim = self.dim();
        assert_eq!(x.len(), dim);
        assert_eq!(y.len(), dim);
        match &self.csr {
            Some(csr) => apply_rows(dim, y, |r| csr.row_dot(r, x)),
            None => {
                let terms = self.terms();
                let basis = &*self.sector.basis;
                // Hermitian: y_r = Σ_c conj(⟨c|H|r⟩) x_c
                apply_rows(dim, y, |r| {
                    let mut acc = C64::new(0.0, 0.0);
                    terms.for_each(basis.occupations(r), &mut |c, a| acc += a.conj() * x[c]);
                    acc
                })
            }
        }
    }
}

/// The Hamiltonian on `{vacuum} ⊕ {one excitation at site s}`, each tensored
/// with the phonon basis. Vacuum states come first, then site-major blocks.
///
/// Phonon configurations here are absolute (indexed by lattice site).
#[derive(Debug, Clone)]
pub struct RealSpaceOperator {
    model: ModelParams,
    basis: Arc<PhononBasis>,
    csr: Csr<f64>,
}

impl RealSpaceOperator {
    pub fn new(model: &ModelParams) -> Result<Self> {
        let basis = Arc::new(PhononBasis::enumerate(model.n_sites, model.n_ph_max)?);
        Self::with_basis(model, basis)
    }

    pub fn with_basis(model: &ModelParams, basis: Arc<PhononBasis>) -> Result<Self> {
        model.validate()?;
        if basis.n_sites() != model.n_sites || basis.n_ph_max() != model.n_ph_max {
            return Err(Error::invalid("basis", "does not match the model"));
        }
        let d = basis.len();
        let n = model.n_sites;
        let dim = d * (n + 1);
        if dim > u32::MAX as usize {
            return Err(Error::Capacity {
                requested: dim as u128,
                budget: u32::MAX as usize,
            });
        }
        let csr = Csr::from_rows(dim, |r, buf| {
            if r < d {
                let tot = total(basis.occupations(r));
                if tot > 0 {
                    buf.push((r, tot as f64));
                }
            } else {
                let s = (r - d) / d;
                let i = (r - d) % d;
                single_excitation_row(model, &basis, s, basis.occupations(i), &mut |site, j, v| {
                    buf.push((d + site * d + j, v))
                });
            }
        });
        Ok(RealSpaceOperator {
            model: *model,
            basis,
            csr,
        })
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    pub fn basis(&self) -> &Arc<PhononBasis> {
        &self.basis
    }

    pub fn vacuum_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn vacuum_index(&self, config: usize) -> usize {
        config
    }

    pub fn single_index(&self, site: usize, config: usize) -> usize {
        self.basis.len() * (site + 1) + config
    }

    pub fn nnz(&self) -> usize {
        self.csr.nnz()
    }
}

/// Terms of `H |s⟩ ⊗ |m⟩` (absolute phonons) as `(site', config', amp)`.
fn single_excitation_row(
    model: &ModelParams,
    basis: &PhononBasis,
    s: usize,
    m: &[u8],
    emit: &mut impl FnMut(usize, usize, f64),
) {
    let n = model.n_sites;
    let periodic = model.boundary == Boundary::Periodic;
    let g = model.g;
    let tot = total(m);
    let cap = basis.n_ph_max();
    let me = basis.rank(m);

    let displaced = |site: usize, target: usize, coef: f64, emit: &mut dyn FnMut(usize, usize, f64)| {
        if coef == 0.0 {
            return;
        }
        let mut p = [0u8; MAX_SITES];
        p[..n].copy_from_slice(m);
        let occ = m[site];
        if tot < cap {
            p[site] = occ + 1;
            emit(target, basis.rank(&p[..n]), coef * (occ as f64 + 1.0).sqrt());
        }
        if occ > 0 {
            p[site] = occ - 1;
            emit(target, basis.rank(&p[..n]), coef * (occ as f64).sqrt());
        }
    };
    let neighbor = |s: usize, d: isize| -> Option<usize> {
        let t = s as isize + d;
        if (0..n as isize).contains(&t) {
            Some(t as usize)
        } else if periodic {
            Some(t.rem_euclid(n as isize) as usize)
        } else {
            None
        }
    };

    if tot > 0 {
        emit(s, me, tot as f64);
    }
    let right = neighbor(s, 1);
    let left = neighbor(s, -1);
    // -g n_s (x_{s+1} - x_{s-1})
    if let Some(r) = right {
        displaced(r, s, -g, emit);
    }
    if let Some(l) = left {
        displaced(l, s, g, emit);
    }
    // bond (s, s+1): (-t0 + g (x_{s+1} - x_s)) moves the excitation to s+1
    if let Some(r) = right {
        emit(r, me, -model.t0);
        displaced(r, r, g, emit);
        displaced(s, r, -g, emit);
    }
    // bond (s-1, s): (-t0 + g (x_s - x_{s-1})) moves it to s-1
    if let Some(l) = left {
        emit(l, me, -model.t0);
        displaced(s, l, g, emit);
        displaced(l, l, -g, emit);
    }
}

impl LinearOperator for RealSpaceOperator {
    fn dim(&self) -> usize {
        self.basis.len() * (self.model.n_sites + 1)
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        let dim = self.dim();
        assert_eq!(x.len(), dim);
        assert_eq!(y.len(), dim);
        // real symmetric: rows equal columns
        apply_rows(dim, y, |r| self.csr.row_dot(r, x));
    }
}

/// `max |⟨u|Hv⟩ - conj(⟨v|Hu⟩)|` over `trials` random unit vector pairs.
pub fn hermiticity_check<O: LinearOperator + ?Sized>(op: &O, trials: usize, seed: u64) -> f64 {
    let dim = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random_unit = || {
        let mut v: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        normalize(&mut v);
        v
    };
    let mut hu = vec![C64::new(0.0, 0.0); dim];
    let mut hv = vec![C64::new(0.0, 0.0); dim];
    let mut worst: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let u = random_unit();
        let v = random_unit();
        op.apply_into(&u, &mut hu);
        op.apply_into(&v, &mut hv);
        let r = (dot(&u, &hv) - dot(&v, &hu).conj()).norm();
        worst = worst.max(r);
    }
    worst
}
