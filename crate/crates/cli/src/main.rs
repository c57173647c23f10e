use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use marchaud_cli::config::keys_help;
use marchaud_cli::{exit, parse_config, run};

/// Fractional-time identity checks, solves and uniqueness experiments.
///
/// Exit status: 0 all assertions pass, 2 invalid configuration,
/// 3 tolerance failure, 4 I/O error.
#[derive(Parser)]
#[command(name = "marchaud", version, after_help = keys_help())]
struct Args {
    /// Configuration file (key = value lines)
    #[arg(long)]
    config: PathBuf,
    /// Directory for the CSV report
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Progress and failures on stderr
    #[arg(long)]
    verbose: bool,
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return code(exit::IO);
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return code(exit::CONFIG);
        }
    };
    let verbose = args.verbose;
    let mut log = |m: &str| {
        if verbose {
            eprintln!("{m}");
        }
    };
    match run(&cfg, &args.out, &mut log) {
        Ok(out) => {
            for f in &out.failures {
                eprintln!("FAIL {f}");
            }
            code(out.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            code(e.exit_code())
        }
    }
}
