use std::path::PathBuf;

use polaron_core::hilbert::{allowed_momenta, Momentum, PhononBasis};
use polaron_core::kpm::{find_peaks, spectral_function, KpmOptions};
use polaron_core::linalg::to_dense;
use polaron_core::oracle::{compare_kpm, diagonalize_sector, sector_matrix, write_golden};
use polaron_core::{ModelParams, SectorOperator};

const G: f64 = 0.991_942_155_585_279;

fn model(n: usize, nmax: usize, lambda: f64) -> ModelParams {
    ModelParams::new(n, nmax, 1.0, G).unwrap().with_lambda(lambda).unwrap()
}

#[test]
fn sector_operator_matches_oracle_matrix() {
    let m = model(4, 2, 1.41);
    for k in [Momentum::new(1, 4), Momentum::new(2, 4), Momentum::new(0, 4)] {
        let op = SectorOperator::for_momentum(&m, k).unwrap();
        let ours = to_dense(&op);
        let (configs, oracle) = sector_matrix(&m, k).unwrap();
        let basis = PhononBasis::enumerate(4, 2).unwrap();
        let perm: Vec<usize> = configs.iter().map(|c| basis.index_of(c).unwrap()).collect();
        for (i, &pi) in perm.iter().enumerate() {
            for (j, &pj) in perm.iter().enumerate() {
                let d = (ours[(pi, pj)] - oracle[(i, j)]).norm();
                assert!(d < 1e-12, "k {k} ({i},{j}): {} vs {}", ours[(pi, pj)], oracle[(i, j)]);
            }
        }
    }
}

#[test]
fn kpm_matches_lehmann_lines() {
    for (n, nmax) in [(4, 2), (6, 3)] {
        for lambda in [0.51, 1.41, 3.17] {
            let m = model(n, nmax, lambda);
            let opts = KpmOptions {
                n_moments: 4000,
                ..KpmOptions::default()
            };
            for k in allowed_momenta(n) {
                let exact = diagonalize_sector(&m, k).unwrap();
                let kpm = spectral_function(&m, k, &opts).unwrap();
                let c = compare_kpm(&exact, &kpm, 1e-6);
                let res = std::f64::consts::PI / opts.n_moments as f64;
                assert!(c.max_position_error < res, "N={n} λ={lambda} k={k}: {c:?}");
                assert!(c.max_weight_error < 1e-3, "N={n} λ={lambda} k={k}: {c:?}");
                assert_eq!(c.uncovered, 0);
                assert!(c.spurious_weight < 1e-3);
            }
        }
    }
}

#[test]
fn few_lines_below_threshold_in_strong_coupling() {
    let m = model(6, 3, 3.17);
    let opts = KpmOptions {
        n_moments: 4000,
        ..KpmOptions::default()
    };
    let e_gs = allowed_momenta(6)
        .into_iter()
        .map(|k| diagonalize_sector(&m, k).unwrap().ground_energy())
        .fold(f64::INFINITY, f64::min);
    for k in allowed_momenta(6) {
        let s = spectral_function(&m, k, &opts).unwrap();
        let low = find_peaks(&s, 1e-4).into_iter().filter(|p| p.center < e_gs + 1.0).count();
        assert!(low <= 5, "k {k}: {low} peaks");
    }
}

#[test]
fn ground_energies_decrease_with_cutoff() {
    for k in allowed_momenta(4) {
        let mut prev = f64::INFINITY;
        for nmax in 0..=4 {
            let e = diagonalize_sector(&model(4, nmax, 1.41), k).unwrap().ground_energy();
            assert!(e <= prev + 1e-12, "k {k} nmax {nmax}: {e} > {prev}");
            prev = e;
        }
    }
}

fn parse(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn golden_table() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/n4_p2_lambda141.txt");
    let m = model(4, 2, 1.41);
    let spectra: Vec<_> = allowed_momenta(4).into_iter().map(|k| diagonalize_sector(&m, k).unwrap()).collect();
    let mut buf = Vec::new();
    write_golden(&spectra, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    if std::env::var_os("POLARON_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &text).unwrap();
    }
    let want = parse(&std::fs::read_to_string(&path).unwrap());
    let got = parse(&text);
    assert_eq!(want.len(), got.len());
    for (a, b) in want.iter().zip(&got) {
        assert_eq!(a.len(), 4);
        assert_eq!(a[..2], b[..2]);
        assert!((a[2] - b[2]).abs() < 1e-10 && (a[3] - b[3]).abs() < 1e-10, "{a:?} vs {b:?}");
    }
}
