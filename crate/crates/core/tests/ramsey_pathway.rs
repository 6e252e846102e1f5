use polaron_core::dynamics::linspace;
use polaron_core::kpm::{find_peaks, spectral_function, KpmOptions};
use polaron_core::oracle::direct_greens;
use polaron_core::ramsey::{
    curve_peaks, default_ramsey_times, reconstruct_greens, spectral_from_ramsey, RamseySimulator, DEFAULT_ETA,
};
use polaron_core::{Boundary, ModelParams};

const G: f64 = 0.991_942_155_585_279;

fn model(lambda: f64, boundary: Boundary) -> ModelParams {
    ModelParams::new(4, 2, 1.0, G).unwrap().with_lambda(lambda).unwrap().with_boundary(boundary)
}

#[test]
fn open_chain_matches_direct_greens() {
    for lambda in [0.51, 1.41, 3.17] {
        let m = model(lambda, Boundary::Open);
        let times = linspace(0.0, 20.0, 81);
        let sim = RamseySimulator::new(&m).unwrap();
        let g = reconstruct_greens(&sim.measure_all_pairs(&times).unwrap(), 4).unwrap();
        assert!((g.normalization.re + 0.25).abs() < 1e-12 && g.normalization.im.abs() < 1e-12);
        let mut worst: f64 = 0.0;
        for (ki, k) in g.momenta.iter().enumerate() {
            let d = direct_greens(&m, *k, &times).unwrap();
            for (a, b) in g.g_plus[ki].iter().zip(&d) {
                worst = worst.max((a - b).norm());
            }
        }
        assert!(worst < 1e-8, "lambda {lambda}: {worst:e}");
    }
}

#[test]
fn ring_matches_sector_greens() {
    let m = model(1.41, Boundary::Periodic);
    let times = linspace(0.0, 10.0, 41);
    let sim = RamseySimulator::new(&m).unwrap();
    let g = reconstruct_greens(&sim.measure_all_pairs(&times).unwrap(), 4).unwrap();
    for (ki, k) in g.momenta.iter().enumerate() {
        let d = direct_greens(&m, *k, &times).unwrap();
        for (a, b) in g.g_plus[ki].iter().zip(&d) {
            assert!((a - b).norm() < 1e-8);
        }
    }
}

#[test]
fn reconstructed_spectrum_matches_kpm() {
    for lambda in [0.51, 3.17] {
        check_spectrum(lambda);
    }
}

fn check_spectrum(lambda: f64) {
    let m = model(lambda, Boundary::Periodic);
    let eta = DEFAULT_ETA;
    let times = default_ramsey_times(eta, 0.1);
    let sim = RamseySimulator::new(&m).unwrap();
    let g = reconstruct_greens(&sim.measure_all_pairs(&times).unwrap(), 4).unwrap();
    let opts = KpmOptions {
        n_moments: 4000,
        ..KpmOptions::default()
    };
    let kpm_all: Vec<_> = g.momenta.iter().map(|k| spectral_function(&m, *k, &opts).unwrap()).collect();
    let lo = kpm_all.iter().map(|s| s.rescale.e_min).fold(f64::INFINITY, f64::min) - 3.0;
    let hi = kpm_all.iter().map(|s| s.rescale.e_max).fold(f64::NEG_INFINITY, f64::max) + 3.0;
    let omega = linspace(lo, hi, ((hi - lo) / 0.0025) as usize + 1);
    let a = spectral_from_ramsey(&g, eta, &omega).unwrap();
    assert!(a.warning.is_none());
    for (ki, k) in a.momenta.iter().enumerate() {
        let dw = omega[1] - omega[0];
        let total: f64 = a.values[ki].iter().sum::<f64>() * dw;
        assert!((total - 1.0).abs() < 1e-2, "k {k}: sum {total}");

        let kpm = &kpm_all[ki];
        let tol = eta.max(kpm.kernel_width());
        let kp = find_peaks(kpm, 1e-3);
        let rp = curve_peaks(&omega, &a.values[ki], 1e-3 / (std::f64::consts::PI * eta));
        for p in &kp {
            assert!(rp.iter().any(|r| (r.0 - p.center).abs() < tol), "k {k}: kpm {p:?} vs {rp:?}");
        }
        for r in &rp {
            assert!(kp.iter().any(|p| (r.0 - p.center).abs() < tol), "k {k}: ramsey {r:?} vs {kp:?}");
        }
    }
}

