// SPDX-License-Identifier: MIT
//! Command-line front end for frequency-filtered photon correlation
//! functions of Markovian open quantum emitters.
//!
//! Data commands write a CSV file plus a JSON sidecar; `model` handles the
//! model file format. All frequencies on the command line are in cm^-1,
//! all rates in 1/ps. Errors leave with a nonzero code and a single
//! machine-parsable line `error: <kind>: <message>` on stderr.

mod commands;
mod grids;
mod model_src;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray_linalg::{Eigh, UPLO};
use specsense::{excited_eigensystem, CM1_TO_RAD_PER_PS};

use crate::grids::{parse_eps_list, parse_grid};
use crate::model_src::{ModelSource, BUILTIN};

/// CLI failure categories; each renders as one line on stderr.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Model(String),
    Compute(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Model(_) => "model",
            CliError::Compute(_) => "compute",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Model(m) | CliError::Compute(m) => m,
        }
    }

    /// One line, newlines flattened, for machine consumption.
    fn render(&self) -> String {
        let flat: Vec<&str> = self
            .message()
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        format!("error: {}: {}", self.kind(), flat.join("; "))
    }
}

impl From<specsense::Error> for CliError {
    fn from(e: specsense::Error) -> Self {
        use specsense::Error as E;
        match &e {
            E::ModelFile(_) | E::UnknownEmissionOp { .. } => CliError::Model(e.to_string()),
            E::InvalidParameter { .. } | E::SensorCount { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

/// Flags shared by every data command.
#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Model source: "builtin-dimer" or a model file path
    #[arg(long, default_value = BUILTIN)]
    pub model: String,
    /// Detector linewidth Gamma (1/ps)
    #[arg(long, default_value_t = 1.0 / 4.8)]
    pub gamma_sensor: f64,
    /// Name of the emission operator to filter
    #[arg(long, default_value = "a")]
    pub emission_op: String,
    /// Worker threads; parallelism runs only over independent grid points
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Output CSV path; the JSON sidecar is written beside it
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Parser, Debug)]
#[command(
    name = "specsense",
    version,
    about = "Frequency-filtered, time-resolved photon correlations of open quantum emitters"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Model file utilities
    Model {
        #[command(subcommand)]
        action: ModelCmd,
    },
    /// Filtered power spectrum over a frequency grid
    Spectrum(SpectrumArgs),
    /// Zero-delay cross correlation with the first filter scanned
    G2map(G2mapArgs),
    /// Delay-resolved two-filter correlation
    G2tau(G2tauArgs),
    /// Zero-delay coincidence of two or three filters
    #[command(name = "gM")]
    GM(GmArgs),
    /// Probe-coupling convergence sweep against the detector-free route
    Convergence(ConvergenceArgs),
}

#[derive(Subcommand, Debug)]
enum ModelCmd {
    /// Write a model file (defaults to the builtin dimer)
    Export {
        /// Model source: "builtin-dimer" or a model file path
        #[arg(long, default_value = BUILTIN)]
        model: String,
        /// Destination path; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report dimensions, spectra, and channels of a model
    Inspect {
        /// Model source: "builtin-dimer" or a model file path
        #[arg(long)]
        model: String,
    },
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Frequency grid LO:HI:N (cm^-1)
    #[arg(long, default_value = "17000:19000:801")]
    grid: String,
    /// Add an explicit-detector column: eps=V (cm^-1)
    #[arg(long)]
    oracle: Option<String>,
}

#[derive(Args, Debug)]
struct G2mapArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Scanned first-filter grid LO:HI:N (cm^-1)
    #[arg(long, default_value = "17000:19000:801")]
    grid: String,
    /// Fixed second-filter position (cm^-1)
    #[arg(long)]
    omega2: f64,
    /// Add explicit-detector columns: eps=V[,V...] (cm^-1)
    #[arg(long)]
    oracle: Option<String>,
}

#[derive(Args, Debug)]
struct G2tauArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// First (earlier for tau > 0) filter position (cm^-1)
    #[arg(long)]
    omega1: f64,
    /// Second filter position (cm^-1)
    #[arg(long)]
    omega2: f64,
    /// Delay grid LO:HI:N (ps); negative delays reverse detection order
    #[arg(long, default_value = "-20:20:201", allow_hyphen_values = true)]
    tau: String,
    /// Add normalized expansion component columns I0, I1, I2
    #[arg(long)]
    components: bool,
    /// Add the explicit-detector column: eps=V (cm^-1)
    #[arg(long)]
    oracle: Option<String>,
}

#[derive(Args, Debug)]
struct GmArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Filter positions (cm^-1); repeat the flag or separate with commas
    #[arg(long = "omega", value_delimiter = ',', num_args = 1..)]
    omega: Vec<f64>,
    /// Compare against the explicit-detector route: eps=V (cm^-1)
    #[arg(long)]
    oracle: Option<String>,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Spectrum filter and first correlation filter (cm^-1)
    #[arg(long)]
    omega1: f64,
    /// Second correlation filter (cm^-1)
    #[arg(long)]
    omega2: f64,
    /// Probe couplings to sweep: eps=V[,V...] (cm^-1)
    #[arg(long)]
    oracle: String,
}

/// Parses `--oracle` for commands that accept exactly one coupling.
fn single_eps(
    oracle: &Option<String>,
    cmd: &str,
) -> Result<Option<(String, f64)>, CliError> {
    match oracle {
        None => Ok(None),
        Some(text) => {
            let list = parse_eps_list(text).map_err(CliError::Usage)?;
            if list.len() != 1 {
                return Err(CliError::Usage(format!(
                    "{cmd} takes a single oracle coupling, got {}",
                    list.len()
                )));
            }
            Ok(list.into_iter().next())
        }
    }
}

fn cmd_model_export(model: &str, out: &Option<PathBuf>) -> Result<(), CliError> {
    let source = ModelSource::load(model)?;
    let text = source.model.to_toml_string().map_err(CliError::from)?;
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_model_inspect(model: &str) -> Result<(), CliError> {
    let source = ModelSource::load(model)?;
    let m = &source.model;
    println!("source: {}", source.source);
    println!("sha256: {}", source.sha256);
    println!("dim: {}", m.dim);
    println!("basis labels: {}", m.basis_labels.join(", "));
    let names: Vec<&str> = m.emission_ops.iter().map(|(n, _)| n.as_str()).collect();
    println!("emission ops: {}", names.join(", "));
    println!("channels: {}", m.channels.len());
    let mut grouped: Vec<(f64, usize)> = Vec::new();
    for ch in &m.channels {
        match grouped.iter_mut().find(|(r, _)| *r == ch.rate) {
            Some((_, n)) => *n += 1,
            None => grouped.push((ch.rate, 1)),
        }
    }
    grouped.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (rate, n) in &grouped {
        println!("  rate {rate} 1/ps x {n}");
    }
    let (vals, _) = m
        .hamiltonian
        .eigh(UPLO::Lower)
        .map_err(|e| CliError::Compute(format!("hamiltonian eigenvalues: {e}")))?;
    println!("hamiltonian eigenvalues (cm^-1):");
    for v in vals.iter() {
        println!("  {:.4}", v / CM1_TO_RAD_PER_PS);
    }
    match excited_eigensystem(m) {
        Ok(excited) => {
            println!("excited eigenstates: {}", excited.len());
            if excited.len() >= 2 {
                let gap = (excited[1].0 - excited[0].0) / CM1_TO_RAD_PER_PS;
                println!("lowest excited gap: {gap:.4} cm^-1");
            }
        }
        Err(_) => {
            println!("excited eigenstates: n/a (requires the dimer block structure)");
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.cmd {
        Cmd::Model { action } => match action {
            ModelCmd::Export { model, out } => cmd_model_export(model, out),
            ModelCmd::Inspect { model } => cmd_model_inspect(model),
        },
        Cmd::Spectrum(args) => {
            let grid = parse_grid(&args.grid, "--grid").map_err(CliError::Usage)?;
            let eps = single_eps(&args.oracle, "spectrum")?;
            let source = ModelSource::load(&args.common.model)?;
            commands::cmd_spectrum(&args.common, &source, &args.grid, &grid, eps.as_ref())
        }
        Cmd::G2map(args) => {
            let grid = parse_grid(&args.grid, "--grid").map_err(CliError::Usage)?;
            let eps_list = match &args.oracle {
                None => Vec::new(),
                Some(text) => parse_eps_list(text).map_err(CliError::Usage)?,
            };
            let source = ModelSource::load(&args.common.model)?;
            commands::cmd_g2map(
                &args.common,
                &source,
                &args.grid,
                &grid,
                args.omega2,
                &eps_list,
            )
        }
        Cmd::G2tau(args) => {
            let taus = parse_grid(&args.tau, "--tau").map_err(CliError::Usage)?;
            let eps = single_eps(&args.oracle, "g2tau")?;
            let source = ModelSource::load(&args.common.model)?;
            commands::cmd_g2tau(
                &args.common,
                &source,
                args.omega1,
                args.omega2,
                &args.tau,
                &taus,
                args.components,
                eps.as_ref(),
            )
        }
        Cmd::GM(args) => {
            let eps = single_eps(&args.oracle, "gM")?;
            let source = ModelSource::load(&args.common.model)?;
            commands::cmd_gm(&args.common, &source, &args.omega, eps.as_ref())
        }
        Cmd::Convergence(args) => {
            let eps_list = parse_eps_list(&args.oracle).map_err(CliError::Usage)?;
            let source = ModelSource::load(&args.common.model)?;
            commands::cmd_convergence(
                &args.common,
                &source,
                args.omega1,
                args.omega2,
                &eps_list,
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let first = e
                .to_string()
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ")
                .to_string();
            eprintln!("error: usage: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.render());
            ExitCode::FAILURE
        }
    }
}
