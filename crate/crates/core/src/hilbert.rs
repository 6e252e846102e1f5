//! Truncated phonon occupation basis and momentum sectors.
//!
//! Configurations are ordered by total phonon number and, within one total,
//! in descending lexicographic order, so for two sites and a cutoff of one the
//! order is `(0,0), (1,0), (0,1)`. The position of a configuration in that
//! order is computed directly (combinatorial number system), no lookup table.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::params::{MAX_PHONONS, MAX_SITES};

/// Default limit on the occupation storage of a basis, in bytes.
pub const DEFAULT_BASIS_BUDGET_BYTES: usize = 1 << 30;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhononConfig {
    pub occupations: Vec<u8>,
}

impl PhononConfig {
    pub fn new(occupations: Vec<u8>) -> Self {
        PhononConfig { occupations }
    }

    pub fn vacuum(n_sites: usize) -> Self {
        PhononConfig {
            occupations: vec![0; n_sites],
        }
    }

    pub fn total(&self) -> usize {
        total(&self.occupations)
    }

    /// Cyclic shift by `n` sites: `out[j] = m[(j - n) mod N]`.
    pub fn translate(&self, n: usize) -> PhononConfig {
        let mut out = vec![0; self.occupations.len()];
        translate_into(&self.occupations, n, &mut out);
        PhononConfig { occupations: out }
    }
}

impl fmt::Display for PhononConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, m) in self.occupations.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn total(m: &[u8]) -> usize {
    m.iter().map(|&v| v as usize).sum()
}

pub(crate) fn translate_into(m: &[u8], n: usize, out: &mut [u8]) {
    let len = m.len();
    let n = n % len;
    for (j, o) in out.iter_mut().enumerate() {
        *o = m[(j + len - n) % len];
    }
}

/// Number of configurations of `n_sites` occupations with total at most
/// `n_ph_max`, i.e. `C(n_ph_max + N, N)`. Saturates at `u128::MAX`.
pub fn dimension(n_sites: usize, n_ph_max: usize) -> u128 {
    binomial(n_ph_max + n_sites, n_sites)
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) is exact at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All configurations of `N` occupations with total `<= n_ph_max`.
#[derive(Debug, Clone)]
pub struct PhononBasis {
    n_sites: usize,
    n_ph_max: usize,
    len: usize,
    occ: Vec<u8>,
    // binom[a * (n_sites + 1) + b] = C(a, b)
    binom: Vec<usize>,
}

impl PhononBasis {
    pub fn enumerate(n_sites: usize, n_ph_max: usize) -> Result<Self> {
        Self::enumerate_with_budget(n_sites, n_ph_max, DEFAULT_BASIS_BUDGET_BYTES)
    }

    pub fn enumerate_with_budget(n_sites: usize, n_ph_max: usize, budget_bytes: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::invalid(
                "n_sites",
                format!("must be in [1, {MAX_SITES}], got {n_sites}"),
            ));
        }
        if n_ph_max > MAX_PHONONS {
            return Err(Error::invalid(
                "n_ph_max",
                format!("must be at most {MAX_PHONONS}, got {n_ph_max}"),
            ));
        }
        let dim = dimension(n_sites, n_ph_max);
        let budget = budget_bytes / n_sites;
        if dim > budget as u128 {
            return Err(Error::Capacity {
                requested: dim,
                budget,
            });
        }
        let len = dim as usize;

        let rows = n_ph_max + n_sites + 1;
        let cols = n_sites + 1;
        let mut binom = vec![0usize; rows * cols];
        for a in 0..rows {
            binom[a * cols] = 1;
            for b in 1..cols.min(a + 1) {
                let v = binom[(a - 1) * cols + b - 1].saturating_add(binom[(a - 1) * cols + b]);
                binom[a * cols + b] = v;
            }
        }

        let mut occ = Vec::with_capacity(len * n_sites);
        let mut cur = vec![0u8; n_sites];
        occ.extend_from_slice(&cur);
        for t in 1..=n_ph_max {
            cur.iter_mut().for_each(|v| *v = 0);
            cur[0] = t as u8;
            loop {
                occ.extend_from_slice(&cur);
                if !successor(&mut cur) {
                    break;
                }
            }
        }
        debug_assert_eq!(occ.len(), len * n_sites);

        Ok(PhononBasis {
            n_sites,
            n_ph_max,
            len,
            occ,
            binom,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_ph_max(&self) -> usize {
        self.n_ph_max
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn occupations(&self, i: usize) -> &[u8] {
        &self.occ[i * self.n_sites..(i + 1) * self.n_sites]
    }

    pub fn config(&self, i: usize) -> PhononConfig {
        PhononConfig::new(self.occupations(i).to_vec())
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> + '_ {
        self.occ.chunks_exact(self.n_sites)
    }

    /// Ordinal of `m`, or `None` if it is not in the truncated space.
    pub fn index_of(&self, m: &[u8]) -> Option<usize> {
        if m.len() != self.n_sites || total(m) > self.n_ph_max {
            return None;
        }
        Some(self.rank(m))
    }

    /// Ordinal of `m`; caller guarantees length and cutoff.
    #[inline]
    pub fn rank(&self, m: &[u8]) -> usize {
        let n = self.n_sites;
        let cols = n + 1;
        let t = total(m);
        if t == 0 {
            return 0;
        }
        // configurations with smaller total: C(t - 1 + N, N)
        let mut r = self.binom[(t - 1 + n) * cols + n];
        let mut rem = t;
        for i in 0..n - 1 {
            let mi = m[i] as usize;
            if rem > mi {
                let a = rem - mi + n - i - 2;
                r += self.binom[a * cols + (n - i - 1)];
            }
            rem -= mi;
            if rem == 0 {
                break;
            }
        }
        r
    }
}

// Next configuration with the same total in descending lexicographic order.
fn successor(m: &mut [u8]) -> bool {
    let n = m.len();
    if n < 2 {
        return false;
    }
    let last = m[n - 1];
    let Some(i) = (0..n - 1).rev().find(|&i| m[i] > 0) else {
        return false;
    };
    m[i] -= 1;
    m[i + 1] = last + 1;
    for v in m[i + 2..].iter_mut() {
        *v = 0;
    }
    true
}

/// Lattice quasimomentum `2πj/N`, with `j` kept in `(-N/2, N/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Momentum {
    j: i64,
    n_sites: usize,
}

impl Momentum {
    pub fn new(j: i64, n_sites: usize) -> Self {
        assert!(n_sites > 0);
        let n = n_sites as i64;
        let mut j = j.rem_euclid(n);
        if 2 * j > n {
            j -= n;
        }
        Momentum { j, n_sites }
    }

    /// Nearest lattice momentum to `k`; errors if `k` is not on the lattice.
    pub fn from_value(k: f64, n_sites: usize) -> Result<Self> {
        let x = k * n_sites as f64 / (2.0 * PI);
        let j = x.round();
        if (x - j).abs() > 1e-9 {
            return Err(Error::invalid(
                "k",
                format!("{k} is not a multiple of 2π/{n_sites}"),
            ));
        }
        Ok(Momentum::new(j as i64, n_sites))
    }

    pub fn index(&self) -> i64 {
        self.j
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn value(&self) -> f64 {
        2.0 * PI * self.j as f64 / self.n_sites as f64
    }

    pub fn neg(&self) -> Self {
        Momentum::new(-self.j, self.n_sites)
    }
}

impl fmt::Display for Momentum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2π·{}/{}", self.j, self.n_sites)
    }
}

/// All `N` lattice momenta, ascending in `(-π, π]`.
pub fn allowed_momenta(n_sites: usize) -> Vec<Momentum> {
    let n = n_sites as i64;
    let lo = -(n - 1) / 2;
    (lo..lo + n).map(|j| Momentum::new(j, n_sites)).collect()
}

/// Momenta in `[0, π]`, the independent ones under `K -> -K`.
pub fn nonnegative_momenta(n_sites: usize) -> Vec<Momentum> {
    (0..=(n_sites as i64) / 2)
        .map(|j| Momentum::new(j, n_sites))
        .collect()
}

/// One total-momentum sector; the basis state for configuration `m` is
/// `N^{-1/2} Σ_s e^{iKs} |s⟩ ⊗ T_s |m⟩`, i.e. phonons are stored relative to
/// the excitation position.
#[derive(Debug, Clone)]
pub struct KSector {
    pub k: Momentum,
    pub basis: Arc<PhononBasis>,
}

impl KSector {
    pub fn new(k: Momentum, basis: Arc<PhononBasis>) -> Result<Self> {
        if k.n_sites() != basis.n_sites() {
            return Err(Error::invalid(
                "k",
                format!(
                    "momentum defined for {} sites but basis has {}",
                    k.n_sites(),
                    basis.n_sites()
                ),
            ));
        }
        Ok(KSector { k, basis })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// `c†_K |0⟩ ⊗ |0⟩_ph` in the sector basis: the unit vector on the vacuum
/// configuration, which is always ordinal 0.
pub fn bloch_start_vector(sector: &KSector) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); sector.dim()];
    v[0] = C64::new(1.0, 0.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_sites_one_phonon() {
        let b = PhononBasis::enumerate(2, 1).unwrap();
        let got: Vec<Vec<u8>> = b.iter().map(|m| m.to_vec()).collect();
        assert_eq!(got, vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn graded_descending_order() {
        let b = PhononBasis::enumerate(3, 2).unwrap();
        let got: Vec<Vec<u8>> = b.iter().map(|m| m.to_vec()).collect();
        let want: Vec<Vec<u8>> = vec![
            vec![0, 0, 0],
            vec![1, 0, 0],
            vec![0, 1, 0],
            vec![0, 0, 1],
            vec![2, 0, 0],
            vec![1, 1, 0],
            vec![1, 0, 1],
            vec![0, 2, 0],
            vec![0, 1, 1],
            vec![0, 0, 2],
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn desk_dimension() {
        assert_eq!(dimension(10, 8), 43_758);
        let b = PhononBasis::enumerate(10, 8).unwrap();
        assert_eq!(b.len(), 43_758);
        assert_eq!(dimension(10, 18), 13_123_110);
    }

    #[test]
    fn capacity_error() {
        let r = PhononBasis::enumerate_with_budget(10, 8, 1000);
        assert!(matches!(r, Err(Error::Capacity { requested: 43_758, budget: 100 })));
        assert_eq!(dimension(64, 255), u128::MAX);
    }

    #[test]
    fn single_site() {
        let b = PhononBasis::enumerate(1, 3).unwrap();
        assert_eq!(b.len(), 4);
        for (i, m) in b.iter().enumerate() {
            assert_eq!(m[0] as usize, i);
        }
    }

    #[test]
    fn index_of_rejects_out_of_space() {
        let b = PhononBasis::enumerate(3, 2).unwrap();
        assert_eq!(b.index_of(&[1, 1, 1]), None);
        assert_eq!(b.index_of(&[1, 1]), None);
        assert_eq!(b.index_of(&[0, 0, 2]), Some(9));
    }

    #[test]
    fn translate_examples() {
        let c = PhononConfig::new(vec![2, 0, 1]);
        assert_eq!(c.translate(1).occupations, vec![1, 2, 0]);
        assert_eq!(c.translate(0), c);
        let d = PhononConfig::new(vec![1, 2, 3, 4]);
        assert_eq!(d.translate(2).translate(2), d);
        assert_eq!(d.to_string(), "(1,2,3,4)");
    }

    #[test]
    fn momenta() {
        let ks: Vec<f64> = allowed_momenta(10).iter().map(|k| k.value()).collect();
        assert_eq!(ks.len(), 10);
        for j in 0..=5 {
            let want = j as f64 * PI / 5.0;
            assert!(ks.iter().any(|&k| (k - want).abs() < 1e-15), "missing {want}");
        }
        let two: Vec<f64> = allowed_momenta(2).iter().map(|k| k.value()).collect();
        assert_eq!(two, vec![0.0, PI]);
        let three: Vec<i64> = allowed_momenta(3).iter().map(|k| k.index()).collect();
        assert_eq!(three, vec![-1, 0, 1]);
        assert!(allowed_momenta(7).iter().all(|k| k.value() > -PI && k.value() <= PI));
        assert_eq!(Momentum::new(-5, 10).index(), 5);
        assert_eq!(Momentum::from_value(-PI / 2.0, 4).unwrap().index(), -1);
        assert!(Momentum::from_value(0.3, 4).is_err());
        assert_eq!(nonnegative_momenta(10).len(), 6);
    }

    #[test]
    fn bloch_vector() {
        let b = Arc::new(PhononBasis::enumerate(4, 2).unwrap());
        let s = KSector::new(Momentum::new(1, 4), b.clone()).unwrap();
        let v = bloch_start_vector(&s);
        assert_eq!(v.len(), 15);
        assert_eq!(b.index_of(&[0, 0, 0, 0]), Some(0));
        assert_eq!(crate::linalg::norm(&v), 1.0);
        assert!(v[1..].iter().all(|x| x.norm() == 0.0));
        assert!(KSector::new(Momentum::new(1, 5), b).is_err());
    }

    proptest! {
        #[test]
        fn count_matches_binomial(n in 1usize..=8, nmax in 0usize..=6) {
            let b = PhononBasis::enumerate(n, nmax).unwrap();
            prop_assert_eq!(b.len() as u128, dimension(n, nmax));
            // brute-force count
            let mut count = 0u64;
            let mut m = vec![0usize; n];
            loop {
                if m.iter().sum::<usize>() <= nmax { count += 1; }
                let mut i = 0;
                loop {
                    if i == n { break; }
                    m[i] += 1;
                    if m[i] <= nmax { break; }
                    m[i] = 0;
                    i += 1;
                }
                if i == n { break; }
            }
            prop_assert_eq!(count as usize, b.len());
        }

        #[test]
        fn rank_round_trip(n in 1usize..=7, nmax in 0usize..=5) {
            let b = PhononBasis::enumerate(n, nmax).unwrap();
            for (i, m) in b.iter().enumerate() {
                prop_assert_eq!(b.index_of(m), Some(i));
                prop_assert!(total(m) <= nmax);
            }
        }

        #[test]
        fn translation_is_bijection(n in 2usize..=6, nmax in 0usize..=4, s in 0usize..6, u in 0usize..6) {
            let b = PhononBasis::enumerate(n, nmax).unwrap();
            let s = s % n;
            let u = u % n;
            let mut seen = vec![false; b.len()];
            for i in 0..b.len() {
                let c = b.config(i);
                let t = c.translate(s);
                prop_assert_eq!(t.total(), c.total());
                let j = b.index_of(&t.occupations).unwrap();
                prop_assert!(!seen[j]);
                seen[j] = true;
                prop_assert_eq!(t.translate(u), c.translate((s + u) % n));
            }
        }
    }
}
