use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use swapsim::config::{validate, RunConfig};
use swapsim::runner::{exit_code, run};
use swapsim::Error;

/// Environment variable that overrides the configured output directory.
const OUTPUT_ENV: &str = "SWAPSIM_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "swapsim", about = "Two-electron SAW exchange-gate simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run {
        config: PathBuf,
        /// Scale grids and times down for a smoke test.
        #[arg(long)]
        quick: bool,
        /// Output directory (overrides the config and $SWAPSIM_OUTPUT_DIR).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
    /// Print the version.
    Version,
}

fn load(path: &PathBuf) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(path)?;
    RunConfig::parse(&text)
}

fn fail(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    if let Error::Validation(items) = err {
        for i in items {
            eprintln!("  {i}");
        }
    }
    ExitCode::from(exit_code(err) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Version => {
            println!("swapsim {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
        Command::Validate { config } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let report = validate(&cfg);
            for w in &report.warnings {
                println!("warning: {w}");
            }
            for v in &report.violations {
                println!("violation: {v}");
            }
            if report.is_ok() {
                println!("ok");
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Command::Run { config, quick, output } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            if quick {
                cfg = cfg.quickened();
            }
            let dir = output.or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from));
            match run(&cfg, dir.as_deref()) {
                Ok(outcome) => {
                    for line in &outcome.summary {
                        println!("{line}");
                    }
                    println!("manifest: {}", outcome.directory.join(swapsim::output::MANIFEST_NAME).display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
    }
}
