//! Locating discrete peaks in a reconstructed spectral function.

use serde::{Deserialize, Serialize};

use super::reconstruct::SpectralResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Weighted mean position, energy units.
    pub center: f64,
    pub weight: f64,
    /// Energy range of the nodes attributed to this peak.
    pub lo: f64,
    pub hi: f64,
}

/// Contiguous runs of nodes whose quadrature weight exceeds `floor`, with
/// gaps of up to `max_gap` nodes bridged. Every bit of weight above the floor
/// lands in exactly one cluster, so nearby levels share a cluster.
pub fn clusters(spec: &SpectralResult, floor: f64, max_gap: usize) -> Vec<Peak> {
    let q = &spec.weights;
    let mut out = Vec::new();
    let mut j = 0;
    while j < q.len() {
        if q[j] <= floor {
            j += 1;
            continue;
        }
        let start = j;
        let mut end = j;
        let mut k = j + 1;
        while k < q.len() && k <= end + max_gap + 1 {
            if q[k] > floor {
                end = k;
            }
            k += 1;
        }
        out.push(summarize(spec, start, end + 1, 0.0));
        j = end + 1;
    }
    out
}

/// Peaks with at least `min_weight`, found as basins of attraction of the
/// local maxima of the (three-point smoothed) node weights. Neighbouring
/// maxima whose separating dip is shallower than half the lower maximum are
/// merged.
pub fn find_peaks(spec: &SpectralResult, min_weight: f64) -> Vec<Peak> {
    let q = &spec.weights;
    let n = q.len();
    if n == 0 {
        return Vec::new();
    }
    let at = |j: isize| -> f64 {
        if j < 0 || j >= n as isize {
            0.0
        } else {
            q[j as usize].max(0.0)
        }
    };
    let s: Vec<f64> = (0..n as isize)
        .map(|j| 0.25 * at(j - 1) + 0.5 * at(j) + 0.25 * at(j + 1))
        .collect();
    let top = s.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return Vec::new();
    }

    let mut maxima: Vec<usize> = (0..n)
        .filter(|&j| {
            let left = if j > 0 { s[j - 1] } else { 0.0 };
            let right = if j + 1 < n { s[j + 1] } else { 0.0 };
            s[j] >= left && s[j] > right && s[j] > 1e-14 * top
        })
        .collect();

    // saddle between consecutive maxima
    let saddle = |a: usize, b: usize| -> usize {
        (a..=b).min_by(|&x, &y| s[x].total_cmp(&s[y])).unwrap()
    };
    loop {
        let mut merged = false;
        let mut i = 0;
        while i + 1 < maxima.len() {
            let (a, b) = (maxima[i], maxima[i + 1]);
            let dip = s[saddle(a, b)];
            if dip > 0.5 * s[a].min(s[b]) {
                // keep the taller maximum
                if s[a] >= s[b] {
                    maxima.remove(i + 1);
                } else {
                    maxima.remove(i);
                }
                merged = true;
            } else {
                i += 1;
            }
        }
        if !merged {
            break;
        }
    }

    let mut bounds = vec![0];
    for w in maxima.windows(2) {
        bounds.push(saddle(w[0], w[1]));
    }
    bounds.push(n);
    let mut out = Vec::new();
    for (i, &m) in maxima.iter().enumerate() {
        let p = summarize(spec, bounds[i], bounds[i + 1], 1e-6 * s[m]);
        if p.weight >= min_weight {
            out.push(p);
        }
    }
    out
}

fn summarize(spec: &SpectralResult, start: usize, end: usize, core_floor: f64) -> Peak {
    let q = &spec.weights;
    let w: f64 = q[start..end].iter().sum();
    let mut mw = 0.0;
    let mut mx = 0.0;
    for j in start..end {
        if q[j] > core_floor {
            mw += q[j];
            mx += q[j] * spec.omega[j];
        }
    }
    Peak {
        center: if mw > 0.0 { mx / mw } else { spec.omega[(start + end) / 2] },
        weight: w,
        lo: spec.omega[start],
        hi: spec.omega[end - 1],
    }
}
