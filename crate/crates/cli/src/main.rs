use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polaron_cli::config::{read_file, FileConfig, Mode, Overrides};
use polaron_cli::{execute, resolve, CliError};
use polaron_core::Boundary;

#[derive(Parser)]
#[command(name = "polaron", version, about = "Spectral functions, echoes and Ramsey checks for lattice polarons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// KPM spectral function A(k, ω) per momentum.
    Spectral(Common),
    /// Loschmidt echo by direct propagation.
    Loschmidt(Common),
    /// Simulated Ramsey protocol against direct Green's functions.
    RamseyCheck(Common),
    /// Ground-state momentum versus coupling.
    GsScan(Common),
    /// KPM against dense exact diagonalization.
    OracleCompare(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Momentum indices j (k = 2πj/N), comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    k: Option<Vec<i64>>,
    /// Number of Chebyshev moments.
    #[arg(long)]
    moments: Option<usize>,
    /// Lorentzian broadening, units of ħδω.
    #[arg(long)]
    eta: Option<f64>,
    /// Worker threads (overrides POLARON_WORKERS and the config file).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Lattice sites N.
    #[arg(long)]
    sites: Option<usize>,
    /// Phonon cutoff (total quanta).
    #[arg(long)]
    phonons: Option<usize>,
    #[arg(long, value_parser = parse_boundary)]
    boundary: Option<Boundary>,
    /// dc flux φ_dc/π; selects the device parametrization.
    #[arg(long)]
    phi: Option<f64>,
    /// Bare hopping, units of ħδω.
    #[arg(long)]
    t0: Option<f64>,
    /// Dimensionless coupling g.
    #[arg(long)]
    g: Option<f64>,
    /// Effective coupling; sets t0 = 3g²/λ.
    #[arg(long)]
    lambda: Option<f64>,
}

fn parse_boundary(s: &str) -> Result<Boundary, String> {
    match s {
        "periodic" => Ok(Boundary::Periodic),
        "open" => Ok(Boundary::Open),
        _ => Err(format!("expected periodic or open, got {s}")),
    }
}

fn run(mode: Mode, c: Common) -> Result<(), CliError> {
    let file = match &c.config {
        Some(p) => read_file(p)?,
        None => FileConfig::default(),
    };
    let flags = Overrides {
        n_sites: c.sites,
        n_ph_max: c.phonons,
        boundary: c.boundary,
        phi_dc_over_pi: c.phi,
        t0: c.t0,
        g: c.g,
        lambda: c.lambda,
        k: c.k,
        moments: c.moments,
        eta: c.eta,
        workers: c.workers,
        out: c.out,
    };
    let cfg = resolve(mode, file, &flags)?;
    let report = execute(&cfg)?;
    println!("{}", report.summary);
    println!("wrote {} files to {}", report.files.len(), cfg.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, common) = match cli.command {
        Command::Spectral(c) => (Mode::Spectral, c),
        Command::Loschmidt(c) => (Mode::Loschmidt, c),
        Command::RamseyCheck(c) => (Mode::RamseyCheck, c),
        Command::GsScan(c) => (Mode::GsScan, c),
        Command::OracleCompare(c) => (Mode::OracleCompare, c),
    };
    match run(mode, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("polaron: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
