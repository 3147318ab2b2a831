//! Command-line driver: configuration parsing, dispatch, machine-readable
//! output. Identical configuration and seed produce byte-identical output;
//! worker count comes from ASSOUAD_THREADS (0 or unset = automatic).

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "assouad", version, about = "Assouad-type dimensions of fractal measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the transition graph of a finite-type IFS and bracket its lower
    /// dimension by matrix-product extremization.
    IfsAnalyze {
        config: PathBuf,
        #[arg(long, default_value_t = 30)]
        max_level: u32,
        #[arg(long, default_value_t = 20_000)]
        max_cvs: usize,
        #[arg(long, default_value_t = 30)]
        path_len: u32,
        /// Also emit a DOT rendering of the graph to this path.
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        output: OutputFormat,
    },
    /// Bedford-McMullen carpet: closed-form value, empirical exponent, gap.
    Bm {
        config: PathBuf,
        #[arg(long, default_value_t = 12)]
        depth: u32,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        output: OutputFormat,
    },
    /// Closed-form lower bounds from Moran/uniform-perfectness constants, or
    /// a full Moran verification of an affine system.
    MoranBound {
        /// Diameter constant C1 as a rational or decimal.
        #[arg(long)]
        c1: Option<String>,
        /// Mass splitting constant C3.
        #[arg(long)]
        c3: Option<String>,
        /// Annulus ratio c of the uniform-perfectness bound.
        #[arg(long)]
        c: Option<String>,
        /// Annulus mass fraction gamma.
        #[arg(long)]
        gamma: Option<String>,
        /// Affine IFS config: embed as a Moran construction and verify.
        #[arg(long)]
        affine: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Empirical dimension function H(delta) over a measure oracle.
    Estimate {
        config: PathBuf,
        /// Comma-separated deltas.
        #[arg(long, default_value = "0.5,0.25,0.1,0.05")]
        deltas: String,
        #[arg(long, default_value = "lower")]
        mode: String,
        #[arg(long, default_value_t = 16)]
        points: usize,
        #[arg(long, default_value_t = 2)]
        min_level: u32,
        #[arg(long, default_value_t = 60)]
        max_level: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        output: OutputFormat,
    },
    /// Assouad spectrum values at fixed thetas, with the theta -> 1
    /// extrapolation sequence.
    Spectrum {
        config: PathBuf,
        #[arg(long, default_value = "0.5,0.75,0.9,0.95")]
        thetas: String,
        #[arg(long, default_value = "lower")]
        mode: String,
        #[arg(long, default_value_t = 16)]
        points: usize,
        #[arg(long, default_value_t = 2)]
        min_level: u32,
        #[arg(long, default_value_t = 60)]
        max_level: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        output: OutputFormat,
    },
    /// Lattice search for (m, n) with theta^n beta^m in the target window.
    Numtheo {
        #[arg(long, default_value = "1/2")]
        theta: String,
        #[arg(long, default_value = "1/3")]
        beta: String,
        #[arg(long, default_value_t = 0.05)]
        eta: f64,
        /// Range of scale indices i (theta_i = 2^-i), inclusive, as "lo:hi".
        #[arg(long, default_value = "15:25")]
        i_range: String,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        output: OutputFormat,
    },
    /// Run the built-in cross-checks and report pass/fail per check.
    Selfcheck,
}

fn main() -> ExitCode {
    assouad::parallel::init_thread_pool_from_env();
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<assouad::Error>()
                .map(|e| if e.is_precondition() { 2u8 } else { 1u8 })
                .unwrap_or(2); // config and argument problems are caller errors
            ExitCode::from(code)
        }
    }
}
