//! Command-line front end for the sphere boundary-element spectral reports.
//!
//! Exit codes: 0 success, 1 a configured tolerance failed, 2 invalid
//! configuration, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sphere_bem::basis::BasisKind;
use sphere_bem::report::{
    run_error_sweep, run_gram_convergence, run_oracle_check, run_spectrum, CommandOutcome,
    OutputFormat, RunConfig,
};
use sphere_bem::spectrum::OperatorKind;
use sphere_bem::Error;

#[derive(Parser)]
#[command(
    name = "sphere-bem",
    version,
    about = "Spectral reports for boundary-element operators on the unit sphere"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence of the identity-operator block toward the identity matrix.
    GramConvergence(CommonArgs),
    /// Matched operator and matrix spectra at one frequency.
    Spectrum(CommonArgs),
    /// Frequency sweep of transition-region errors with a power-law fit.
    ErrorSweep(CommonArgs),
    /// Cross-route consistency checks at desk scale.
    OracleCheck(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file; the flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Operator kind(s): single-layer, hypersingular, identity.
    #[arg(long = "kind", value_delimiter = ',')]
    kinds: Vec<OperatorKind>,
    /// Frequency ka.
    #[arg(long)]
    ka: Option<f64>,
    /// Sweep frequencies, comma separated and increasing.
    #[arg(long = "ka-list", value_delimiter = ',')]
    ka_list: Vec<f64>,
    /// Grid subdivision count (odd, at least 3).
    #[arg(long = "V")]
    v: Option<usize>,
    /// Sweep grid scale: V = nearest odd to cells-per-ka * ka.
    #[arg(long = "cells-per-ka")]
    cells_per_ka: Option<f64>,
    /// Test-side basis: patch or pyramid.
    #[arg(long = "basis-test")]
    basis_test: Option<BasisKind>,
    /// Source-side basis; defaults to the test side.
    #[arg(long = "basis-source")]
    basis_source: Option<BasisKind>,
    /// Lattice-sum branch cutoff override.
    #[arg(long = "s-max")]
    s_max: Option<i64>,
    /// Degree truncation override.
    #[arg(long = "l-cap")]
    l_cap: Option<usize>,
    /// Adaptive tail tolerance override.
    #[arg(long = "tail-tol")]
    tail_tol: Option<f64>,
    /// Width constant of the transition region in units of ka^(1/3).
    #[arg(long = "transition-window")]
    transition_window: Option<f64>,
    /// Pass/fail bound; meaning is command-specific.
    #[arg(long)]
    threshold: Option<f64>,
    /// Spectrum: process every frequency block instead of p = 0 only.
    #[arg(long = "all-blocks")]
    all_blocks: bool,
    /// Oracle check: also run the direct-quadrature route.
    #[arg(long)]
    quadrature: bool,
    /// Oracle check: corrupt one matrix entry first; checks must then fail.
    #[arg(long = "corrupt-self-test")]
    corrupt_self_test: bool,
    /// Oracle check: dump the assembled matrices next to the report.
    #[arg(long = "dump-matrices")]
    dump_matrices: bool,
    /// Output formats: csv, json, svg.
    #[arg(long = "format", value_delimiter = ',')]
    formats: Vec<OutputFormat>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for synthetic self-test data.
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonArgs {
    fn resolve(self) -> Result<RunConfig, Error> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if !self.kinds.is_empty() {
            config.kinds = self.kinds;
        }
        if let Some(ka) = self.ka {
            config.ka = Some(ka);
        }
        if !self.ka_list.is_empty() {
            config.ka_list = self.ka_list;
        }
        if let Some(v) = self.v {
            config.v = Some(v);
        }
        if let Some(c) = self.cells_per_ka {
            config.cells_per_ka = c;
        }
        if let Some(b) = self.basis_test {
            config.basis_test = Some(b);
        }
        if let Some(b) = self.basis_source {
            config.basis_source = Some(b);
        }
        if let Some(s) = self.s_max {
            config.s_max = Some(s);
        }
        if let Some(l) = self.l_cap {
            config.l_cap = Some(l);
        }
        if let Some(t) = self.tail_tol {
            config.tail_tol = Some(t);
        }
        if let Some(w) = self.transition_window {
            config.transition_window = w;
        }
        if let Some(t) = self.threshold {
            config.threshold = Some(t);
        }
        if self.all_blocks {
            config.all_blocks = true;
        }
        if self.quadrature {
            config.quadrature = true;
        }
        if self.corrupt_self_test {
            config.corrupt_self_test = true;
        }
        if self.dump_matrices {
            config.dump_matrices = true;
        }
        if !self.formats.is_empty() {
            config.formats = self.formats;
        }
        if let Some(out) = self.out {
            config.out = out;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }
}

type CommandFn = fn(&RunConfig) -> Result<CommandOutcome, Error>;

fn failure_exit_code(error: &Error) -> u8 {
    match error {
        Error::Config(_) | Error::Domain(_) | Error::Dimension(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (CommonArgs, CommandFn) = match cli.command {
        Command::GramConvergence(args) => (args, run_gram_convergence),
        Command::Spectrum(args) => (args, run_spectrum),
        Command::ErrorSweep(args) => (args, run_error_sweep),
        Command::OracleCheck(args) => (args, run_oracle_check),
    };
    let config = match args.resolve() {
        Ok(config) => config,
        Err(error) => {
            eprintln!("error: {error}");
            return ExitCode::from(2);
        }
    };
    match run(&config) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for file in &outcome.files {
                println!("wrote {}", file.display());
            }
            ExitCode::from(outcome.exit_code.clamp(0, 255) as u8)
        }
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(failure_exit_code(&error))
        }
    }
}
