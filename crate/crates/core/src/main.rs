use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cascade_rd::cli;

#[derive(Parser)]
#[command(
    name = "cascade-rd",
    version,
    about = "Rate-distortion-cost regions for cascade source coding with an action-controlled side-information channel"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the rate corner of an explicit decision from the config.
    Eval {
        #[arg(long)]
        config: PathBuf,
    },
    /// Trace the rate frontier (or surface) over the configured weights as CSV.
    Frontier {
        #[arg(long)]
        config: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a witness showing a rate point is achievable.
    Membership {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        r1: f64,
        #[arg(long)]
        r2: f64,
        /// Broadcast rate (broadcast models only).
        #[arg(long)]
        rb: Option<f64>,
    },
    /// Project the rate-splitting system and compare to the built-in region.
    Fm {
        /// Omit the nonnegativity of one or more split rates (e.g. r2d).
        #[arg(long = "drop-nonneg")]
        drop_nonneg: Vec<String>,
        /// Elimination order: normal or reversed.
        #[arg(long, default_value = "normal")]
        order: String,
    },
    /// Compare the optimizer against the brute-force lattice oracle.
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the degeneration + invariant battery.
    Suite {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

fn read_config(path: &PathBuf) -> Result<String, cli::CmdOutput> {
    std::fs::read_to_string(path).map_err(|e| cli::CmdOutput {
        text: format!("error: cannot read {}: {e}\n", path.display()),
        exit: cli::EXIT_CONFIG,
    })
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let out = match args.cmd {
        Command::Eval { config } => match read_config(&config) {
            Ok(text) => cli::cmd_eval(&text),
            Err(e) => e,
        },
        Command::Frontier { config, out } => {
            let result = match read_config(&config) {
                Ok(text) => cli::cmd_frontier(&text),
                Err(e) => e,
            };
            if let Some(path) = out {
                if result.exit != cli::EXIT_CONFIG {
                    if let Err(e) = std::fs::write(&path, &result.text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(cli::EXIT_CONFIG as u8);
                    }
                    return ExitCode::from(result.exit as u8);
                }
            }
            result
        }
        Command::Membership { config, r1, r2, rb } => match read_config(&config) {
            Ok(text) => cli::cmd_membership(&text, r1, r2, rb),
            Err(e) => e,
        },
        Command::Fm { drop_nonneg, order } => {
            let reversed = match order.as_str() {
                "normal" => false,
                "reversed" => true,
                other => {
                    eprintln!("error: unknown order {other:?} (normal|reversed)");
                    return ExitCode::from(cli::EXIT_CONFIG as u8);
                }
            };
            cli::cmd_fm(&drop_nonneg, reversed)
        }
        Command::Oracle { config } => match read_config(&config) {
            Ok(text) => cli::cmd_oracle(&text),
            Err(e) => e,
        },
        Command::Suite { seed } => cli::cmd_suite(seed),
    };
    print!("{}", out.text);
    ExitCode::from(out.exit as u8)
}
