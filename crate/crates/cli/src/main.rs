//! `tmscatter`: batch front end for the transfer-matrix scattering library.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure (also an
//! uncertified invisibility run), 4 unmet certificate premise.

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "tmscatter",
    version,
    about = "Transfer-matrix scattering in two and three dimensions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, short)]
    config: PathBuf,
    /// Output file, overriding `output.path`.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Scattering amplitude on the angle mesh (CSV).
    Amplitude(Common),
    /// Differential cross-section on the angle mesh (CSV).
    CrossSection(Common),
    /// Invisibility certificate for a one-sided support (JSON).
    Certify(Common),
    /// Engine against the first Born approximation where it is exact (JSON).
    BornExact(Common),
    /// Conditioning of M22 over the wavenumbers (CSV).
    ScanSs(Common),
    /// Convergence of composed slice transfer matrices (CSV).
    ComposeBench(Common),
    /// Engine against the real-space Born series (CSV).
    OracleCompare(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Amplitude(c) => ("amplitude", c),
        Command::CrossSection(c) => ("cross-section", c),
        Command::Certify(c) => ("certify", c),
        Command::BornExact(c) => ("born-exact", c),
        Command::ScanSs(c) => ("scan-ss", c),
        Command::ComposeBench(c) => ("compose-bench", c),
        Command::OracleCompare(c) => ("oracle-compare", c),
    };
    let run = || -> tmscatter::Result<commands::Status> {
        let mut loaded = config::load(&common.config)?;
        if let Some(p) = &common.output {
            loaded.config.output.path = Some(p.clone());
        }
        commands::run(name, &loaded)
    };
    match run() {
        Ok(commands::Status::Ok) => ExitCode::SUCCESS,
        Ok(commands::Status::NotCertified) => {
            eprintln!("tmscatter {name}: residuals exceed the tolerance; certificate written with certified = false");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("tmscatter {name}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
