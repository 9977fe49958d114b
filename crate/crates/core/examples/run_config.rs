//! Run a TOML scenario file through the library front end.
//!
//! ```bash
//! cargo run --release --example run_config -- crates/core/configs/validate_mirror.toml out/
//! ```

use std::path::PathBuf;

use quantum_mirror::cli::{execute, Command, Options};

fn main() {
    let mut args = std::env::args().skip(1);
    let config = PathBuf::from(args.next().expect("usage: run_config <config.toml> [out_dir]"));
    let opts = Options {
        out: args.next().map(PathBuf::from),
        seedless: true,
    };
    match execute(Command::Run, &config, &opts) {
        Ok(report) => {
            for c in &report.checks {
                println!("{} {} {:.3e}", if c.pass { "PASS" } else { "FAIL" }, c.check, c.max_deviation);
            }
            for f in &report.files {
                println!("{}", report.out_dir.join(f).display());
            }
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(quantum_mirror::cli::exit_code(&e));
        }
    }
}
