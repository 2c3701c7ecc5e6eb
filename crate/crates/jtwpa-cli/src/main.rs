//! `jtwpa`: analysis runs for traveling-wave parametric amplifiers on
//! left- and right-handed Josephson transmission lines.
//!
//! Every run takes a TOML config (`--config`), computes its curves, and
//! drops CSV files plus a `summary.json` into the output directory. Exit
//! codes: 0 success, 1 configuration or I/O problem, 2 numeric failure,
//! 3 operating point outside the propagating band.

mod config;
mod emit;
mod error;
mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "jtwpa",
    version,
    about = "Design and analysis runs for Josephson traveling-wave parametric amplifiers"
)]
pub struct Cli {
    /// TOML run configuration (schema: schema/config.schema.json)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory; defaults to [output].dir from the config, then "."
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Emit only the curve CSVs or only the structured summary
    #[arg(long, global = true, value_enum, value_name = "KIND")]
    pub format: Option<FormatArg>,

    /// Worker threads for sweeps; 0 or unset lets the pool use all cores.
    /// JTWPA_THREADS supplies the default.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Progress notes on stderr
    #[arg(long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Cold-line dispersion across the propagating band
    Dispersion,
    /// Single-pump gain against detuning
    Gain,
    /// Gain compression against signal drive level
    Compression,
    /// Two-pump gain profile against signal frequency
    DoublePump,
    /// Time-domain lattice cross-check of the dispersion relation
    Oracle,
    /// Bundled reference parameter sets
    Preset {
        #[arg(value_enum)]
        name: PresetName,
    },
    /// Sign structure of the linear and pump-induced mismatches
    Classify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetName {
    Fig2,
    Fig3a,
    Fig3b,
    Fig4,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are successes; any other parse problem is a
            // configuration-class failure
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run::execute(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
