//! Command-line front end: `qmirror run|validate|sweep <config>`.

pub mod config;
pub mod output;
pub mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use config::{LoadedConfig, ScenarioConfig};
pub use run::{execute, exit_code, Command, Options, Report};

#[derive(Debug, Parser)]
#[command(name = "qmirror", version, about = "Waveguide emitter next to switchable atomic mirrors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Run the scenario named in the config file.
    Run(CommonArgs),
    /// Cross-check the Markovian model against the oracles.
    Validate(CommonArgs),
    /// Sweep one parameter and record final-time amplitudes.
    Sweep(CommonArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
}

#[derive(Debug, clap::Args)]
pub struct CommonArgs {
    /// TOML scenario file.
    pub config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Assert that no random numbers are used. Always true; recorded in the manifest.
    #[arg(long)]
    pub seedless: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// Parse arguments, run, print a short summary, return the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (command, args) = match cli.command {
        CliCommand::Run(a) => (Command::Run, a),
        CliCommand::Validate(a) => (Command::Validate, a),
        CliCommand::Sweep(a) => (Command::Sweep, a),
    };
    let opts = Options {
        out: args.out,
        seedless: args.seedless,
    };
    match execute(command, &args.config, &opts) {
        Ok(report) => {
            for c in &report.checks {
                println!(
                    "{:<28} {} max_deviation={:.3e} tolerance={:.1e}",
                    c.check,
                    if c.pass { "PASS" } else { "FAIL" },
                    c.max_deviation,
                    c.tolerance
                );
            }
            for f in &report.files {
                println!("wrote {}", report.out_dir.join(f).display());
            }
            if report.all_passed() {
                0
            } else {
                3
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
