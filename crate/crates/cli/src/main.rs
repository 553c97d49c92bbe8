//! `talenti-lab`: sweeps over deficits, spectra, shape-derivative checks and Talenti
//! comparisons. Every command prints a CSV table (or JSON with `--json`) and exits with
//! status 0 only when all asserted invariants hold.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{FugledeArgs, SharpnessArgs, SpectrumArgs, TalentiArgs};

#[derive(Debug, Parser)]
#[command(name = "talenti-lab", version, about = "Numerical experiments on Talenti-type stability in the unit ball")]
struct Cli {
    /// Emit JSON instead of CSV.
    #[arg(long, global = true)]
    json: bool,
    /// Leave the generation time out of the header (byte-identical reruns).
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Output file; relative paths are placed in $TALENTI_LAB_OUT_DIR when set.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Default directory for outputs; with it set and no --out, results go to <dir>/<command>.csv.
    #[arg(long, env = "TALENTI_LAB_OUT_DIR", global = true, hide_env_values = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Annulus deficits over a list of asymmetries, with the fitted exponent.
    Sharpness(SharpnessArgs),
    /// Eigenvalues of T by both routes, rho and the coercivity gap.
    Spectrum(SpectrumArgs),
    /// Finite-difference certification of the second shape derivative per mode.
    Fuglede(FugledeArgs),
    /// Seeded sweep of the Talenti comparison and the bathtub inequality.
    Talenti(TalentiArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, result) = match &cli.command {
        Command::Sharpness(a) => ("sharpness", commands::sharpness(a)),
        Command::Spectrum(a) => ("spectrum", commands::spectrum(a)),
        Command::Fuglede(a) => ("fuglede", commands::fuglede(a)),
        Command::Talenti(a) => ("talenti", commands::talenti(a)),
    };
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("talenti-lab {name}: {e}");
            return ExitCode::from(2);
        }
    };
    let stamp = (!cli.no_timestamp).then(output::now);
    let text = if cli.json {
        report.to_json(stamp)
    } else {
        match report.to_csv(stamp) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("talenti-lab {name}: {e}");
                return ExitCode::from(2);
            }
        }
    };
    let ext = if cli.json { "json" } else { "csv" };
    let path = match (&cli.out, &cli.out_dir) {
        (Some(p), dir) => Some(output::resolve(p, dir.as_deref())),
        (None, Some(dir)) => Some(dir.join(format!("{name}.{ext}"))),
        (None, None) => None,
    };
    if let Err(e) = output::emit(&text, path.as_deref()) {
        eprintln!("talenti-lab {name}: cannot write output: {e}");
        return ExitCode::from(2);
    }
    for (check, ok) in &report.checks {
        if !ok {
            eprintln!("talenti-lab {name}: invariant failed: {check}");
        }
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
