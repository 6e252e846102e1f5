//! Run configuration: TOML file plus command-line overrides, resolved into a
//! validated [`RunConfig`].

use std::path::{Path, PathBuf};

use polaron_core::hilbert::{nonnegative_momenta, Momentum};
use polaron_core::kpm::{Bounds, KpmOptions};
use polaron_core::oracle::{ScanSolver, DENSE_BUDGET};
use polaron_core::params::lambda_from_flux;
use polaron_core::ramsey::{DEFAULT_ETA, HORIZON_ETA_UNITS};
use polaron_core::{Boundary, DeviceParams, ModelParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const WORKERS_ENV: &str = "POLARON_WORKERS";
pub const DEFAULT_N_PH_MAX: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Spectral,
    Loschmidt,
    RamseyCheck,
    GsScan,
    OracleCompare,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Spectral => "spectral",
            Mode::Loschmidt => "loschmidt",
            Mode::RamseyCheck => "ramsey-check",
            Mode::GsScan => "gs-scan",
            Mode::OracleCompare => "oracle-compare",
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub lattice: Option<LatticeSection>,
    pub device: Option<DeviceSection>,
    pub model: Option<ModelSection>,
    pub kpm: Option<KpmSection>,
    pub time: Option<TimeSection>,
    pub scan: Option<ScanSection>,
    pub output: Option<OutputSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub n_sites: Option<usize>,
    pub n_ph_max: Option<usize>,
    pub boundary: Option<Boundary>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub phi_dc_over_pi: Option<f64>,
    pub delta_omega_over_2pi: Option<f64>,
    pub delta_theta_r: Option<f64>,
    pub ej_scale_over_2pi: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub t0: Option<f64>,
    pub g: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KpmSection {
    pub moments: Option<usize>,
    /// Momentum indices `j`, `k = 2πj/N`.
    pub k: Option<Vec<i64>>,
    pub epsilon: Option<f64>,
    pub bounds: Option<Bounds>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_max: Option<f64>,
    pub points: Option<usize>,
    pub eta: Option<f64>,
    pub dt: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub phi_min_over_pi: Option<f64>,
    pub phi_max_over_pi: Option<f64>,
    pub points: Option<usize>,
    pub lambdas: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// Values given on the command line; each wins over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub n_sites: Option<usize>,
    pub n_ph_max: Option<usize>,
    pub boundary: Option<Boundary>,
    pub phi_dc_over_pi: Option<f64>,
    pub t0: Option<f64>,
    pub g: Option<f64>,
    pub lambda: Option<f64>,
    pub k: Option<Vec<i64>>,
    pub moments: Option<usize>,
    pub eta: Option<f64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Where the lattice couplings came from.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Source {
    Device(DeviceParams),
    Model { t0: f64, g: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanGrid {
    /// `φ_dc/π` per point when scanning a device, empty otherwise.
    pub phi_over_pi: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub solver: ScanSolver,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub source: Source,
    pub model: ModelParams,
    pub momenta: Vec<i64>,
    pub kpm: KpmOptions,
    pub eta: f64,
    pub time: TimeGrid,
    /// Ramsey step; the horizon is `14/η`.
    pub ramsey_dt: f64,
    pub scan: Option<ScanGrid>,
    pub out: PathBuf,
    pub workers: usize,
    pub workers_from: &'static str,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {msg}"))
}

pub fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
}

fn env_workers() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| invalid(WORKERS_ENV, format!("not a worker count: {v:?}"))),
        Err(_) => Ok(None),
    }
}

/// Merge file and flags, fill defaults, and validate.
pub fn resolve(mode: Mode, file: FileConfig, flags: &Overrides) -> Result<RunConfig, CliError> {
    let lattice = file.lattice.unwrap_or_default();
    let n_sites = flags
        .n_sites
        .or(lattice.n_sites)
        .ok_or_else(|| invalid("lattice.n_sites", "missing (set it in [lattice] or pass --sites)"))?;
    let n_ph_max = flags.n_ph_max.or(lattice.n_ph_max).unwrap_or(DEFAULT_N_PH_MAX);
    // the Ramsey check defaults to the open chain, where the qubit mapping is exact
    let boundary = flags.boundary.or(lattice.boundary).unwrap_or(match mode {
        Mode::RamseyCheck => Boundary::Open,
        _ => Boundary::Periodic,
    });
    if boundary == Boundary::Open && mode != Mode::RamseyCheck {
        return Err(invalid("lattice.boundary", "open chains are only supported by ramsey-check"));
    }

    let flag_device = flags.phi_dc_over_pi.is_some();
    let flag_model = flags.t0.is_some() || flags.g.is_some() || flags.lambda.is_some();
    if flag_device && flag_model {
        return Err(invalid("--phi", "cannot be combined with --t0/--g/--lambda"));
    }
    let use_device = match (file.device.is_some() || flag_device, file.model.is_some() || flag_model) {
        (true, true) => {
            return Err(CliError::Validation(
                "give exactly one of [device] or [model], not both".into(),
            ))
        }
        (false, false) => {
            return Err(CliError::Validation(
                "missing couplings: give a [device] or a [model] section (or --phi / --t0 --g)".into(),
            ))
        }
        (d, _) => d,
    };

    let source = if use_device {
        let d = file.device.unwrap_or_default();
        let phi = flags
            .phi_dc_over_pi
            .or(d.phi_dc_over_pi)
            .ok_or_else(|| invalid("device.phi_dc_over_pi", "missing"))?;
        let dev = DeviceParams::new(
            phi * std::f64::consts::PI,
            d.delta_omega_over_2pi.unwrap_or(DeviceParams::STANDARD_DELTA_OMEGA_OVER_2PI),
            d.delta_theta_r.unwrap_or(DeviceParams::STANDARD_DELTA_THETA_R),
            d.ej_scale_over_2pi.unwrap_or(DeviceParams::STANDARD_EJ_SCALE_OVER_2PI),
        )
        .map_err(|e| invalid("device", e))?;
        Source::Device(dev)
    } else {
        let m = file.model.unwrap_or_default();
        let g = flags.g.or(m.g).ok_or_else(|| invalid("model.g", "missing"))?;
        let t0 = flags.t0.or(m.t0);
        let lambda = flags.lambda.or(m.lambda);
        let t0 = match (t0, lambda) {
            (Some(_), Some(_)) => return Err(invalid("model", "give t0 or lambda, not both")),
            (None, None) => return Err(invalid("model.t0", "missing (or give model.lambda)")),
            (Some(t), None) => t,
            (None, Some(l)) => {
                if !(l > 0.0 && l.is_finite()) {
                    return Err(invalid("model.lambda", format!("must be positive, got {l}")));
                }
                3.0 * g * g / l
            }
        };
        Source::Model { t0, g }
    };
    let model = match source {
        Source::Device(d) => d.to_model(n_sites, n_ph_max),
        Source::Model { t0, g } => ModelParams::new(n_sites, n_ph_max, t0, g),
    }
    .map_err(|e| invalid("lattice", e))?
    .with_boundary(boundary);

    let kpm_sec = file.kpm.unwrap_or_default();
    let momenta = match flags.k.clone().or(kpm_sec.k) {
        Some(ks) => {
            let half = n_sites as i64 / 2;
            let lo = -((n_sites as i64 - 1) / 2);
            for &j in &ks {
                if j < lo || j > half {
                    return Err(invalid(
                        "k",
                        format!("index {j} outside the allowed range {lo}..={half} for N = {n_sites}"),
                    ));
                }
            }
            if ks.is_empty() {
                return Err(invalid("k", "empty list"));
            }
            ks
        }
        None => nonnegative_momenta(n_sites).iter().map(Momentum::index).collect(),
    };
    let defaults = KpmOptions::default();
    let kpm = KpmOptions {
        n_moments: flags.moments.or(kpm_sec.moments).unwrap_or(defaults.n_moments),
        epsilon: kpm_sec.epsilon.unwrap_or(defaults.epsilon),
        bounds: kpm_sec.bounds.unwrap_or(defaults.bounds),
        ..defaults
    };
    if kpm.n_moments < 2 {
        return Err(invalid("kpm.moments", "need at least 2"));
    }
    if !(kpm.epsilon > 0.0 && kpm.epsilon < 0.5) {
        return Err(invalid("kpm.epsilon", "must lie in (0, 0.5)"));
    }

    let time = file.time.unwrap_or_default();
    let eta = flags.eta.or(time.eta).unwrap_or(DEFAULT_ETA);
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(invalid("eta", format!("must be positive, got {eta}")));
    }
    let grid = TimeGrid {
        t_max: time.t_max.unwrap_or(50.0),
        points: time.points.unwrap_or(400),
    };
    if !(grid.t_max > 0.0 && grid.t_max.is_finite()) || grid.points < 2 {
        return Err(invalid("time", "need t_max > 0 and at least 2 points"));
    }
    let ramsey_dt = time.dt.unwrap_or(0.1);
    if !(ramsey_dt > 0.0 && ramsey_dt < HORIZON_ETA_UNITS / eta) {
        return Err(invalid("time.dt", format!("must lie in (0, 14/eta), got {ramsey_dt}")));
    }

    let scan = if mode == Mode::GsScan {
        Some(resolve_scan(file.scan.unwrap_or_default(), &source, &model)?)
    } else {
        None
    };

    let out = flags
        .out
        .clone()
        .or(file.output.as_ref().and_then(|o| o.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    let (workers, workers_from) = match (flags.workers, env_workers()?, file.output.and_then(|o| o.workers)) {
        (Some(w), _, _) => (w, "flag"),
        (None, Some(w), _) => (w, "env"),
        (None, None, Some(w)) => (w, "config"),
        _ => (
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            "available-parallelism",
        ),
    };
    if workers == 0 {
        return Err(invalid("workers", "must be at least 1"));
    }

    Ok(RunConfig {
        mode,
        source,
        model,
        momenta,
        kpm,
        eta,
        time: grid,
        ramsey_dt,
        scan,
        out,
        workers,
        workers_from,
    })
}

fn resolve_scan(sec: ScanSection, source: &Source, model: &ModelParams) -> Result<ScanGrid, CliError> {
    let dim = polaron_core::hilbert::dimension(model.n_sites, model.n_ph_max);
    let solver = if dim <= DENSE_BUDGET as u128 {
        ScanSolver::Dense
    } else {
        ScanSolver::Lanczos
    };
    if let Some(l) = sec.lambdas {
        if l.is_empty() || l.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(invalid("scan.lambdas", "need a non-empty list of positive values"));
        }
        return Ok(ScanGrid {
            phi_over_pi: Vec::new(),
            lambdas: l,
            solver,
        });
    }
    let Source::Device(dev) = source else {
        return Err(invalid("scan.lambdas", "required when couplings come from [model]"));
    };
    let lo = sec.phi_min_over_pi.unwrap_or(0.95);
    let hi = sec.phi_max_over_pi.unwrap_or(0.98);
    let n = sec.points.unwrap_or(13);
    if !(lo < hi) || n < 2 {
        return Err(invalid("scan", "need phi_min_over_pi < phi_max_over_pi and at least 2 points"));
    }
    let phis: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let lambdas = phis
        .iter()
        .map(|&p| {
            let d = DeviceParams {
                phi_dc: p * std::f64::consts::PI,
                ..*dev
            };
            lambda_from_flux(&d).map_err(|e| invalid("scan", e))
        })
        .collect::<Result<_, _>>()?;
    Ok(ScanGrid {
        phi_over_pi: phis,
        lambdas,
        solver,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> FileConfig {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn device_config_gives_expected_lambda() {
        let f = parse("[lattice]\nn_sites = 6\nn_ph_max = 3\n[device]\nphi_dc_over_pi = 0.97\ndelta_omega_over_2pi = 200\n");
        let c = resolve(Mode::Spectral, f, &Overrides::default()).unwrap();
        assert!((c.model.lambda_eff() - 1.41).abs() < 0.01);
        assert_eq!(c.momenta, vec![0, 1, 2, 3]);
    }

    #[test]
    fn missing_sites_named() {
        let f = parse("[model]\nt0 = 1.0\ng = 0.5\n");
        let err = resolve(Mode::Spectral, f, &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("lattice.n_sites"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn both_sources_rejected() {
        let f = parse("[lattice]\nn_sites = 4\n[model]\nt0 = 1.0\ng = 0.5\n[device]\nphi_dc_over_pi = 0.9\n");
        let err = resolve(Mode::Spectral, f, &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("not both"));
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(toml::from_str::<FileConfig>("[lattice]\nsites = 4\n").is_err());
    }

    #[test]
    fn momentum_range_checked() {
        let f = parse("[lattice]\nn_sites = 4\n[model]\nlambda = 1.0\ng = 0.5\n");
        let flags = Overrides {
            k: Some(vec![3]),
            ..Overrides::default()
        };
        assert!(resolve(Mode::Spectral, f, &flags).is_err());
    }

    #[test]
    fn flags_override_file() {
        let f = parse("[lattice]\nn_sites = 4\n[model]\nlambda = 1.0\ng = 0.5\n[output]\nworkers = 3\n");
        let flags = Overrides {
            n_sites: Some(6),
            moments: Some(100),
            workers: Some(1),
            ..Overrides::default()
        };
        let c = resolve(Mode::Spectral, f, &flags).unwrap();
        assert_eq!(c.model.n_sites, 6);
        assert_eq!(c.kpm.n_moments, 100);
        assert_eq!((c.workers, c.workers_from), (1, "flag"));
        assert!((c.model.lambda_eff() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn open_boundary_only_for_ramsey() {
        let text = "[lattice]\nn_sites = 4\nboundary = \"open\"\n[model]\nt0 = 1.0\ng = 0.5\n";
        assert!(resolve(Mode::Spectral, parse(text), &Overrides::default()).is_err());
        let c = resolve(Mode::RamseyCheck, parse(text), &Overrides::default()).unwrap();
        assert_eq!(c.model.boundary, Boundary::Open);
    }
}
