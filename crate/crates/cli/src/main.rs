use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use exact_wins::DEFAULT_GUARD;
use exact_wins_cli::commands::{self, AnalyzeMethod, AnalyzeOptions, OracleMethod};
use exact_wins_cli::formats::write_text;
use exact_wins_cli::report::AnalysisReport;
use exact_wins_cli::Result;

/// Exact permutation and bootstrap moments of win counts.
#[derive(Debug, Parser)]
#[command(name = "exact-wins", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compare every pair of patients and write the outcome matrix.
    Compare {
        #[arg(long)]
        data: PathBuf,
        /// JSON array of measures in priority order.
        #[arg(long)]
        hierarchy: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the arm indicators from the data.
        #[arg(long)]
        arms_out: Option<PathBuf>,
    },
    /// Closed-form moments, FS test and win ratio.
    Analyze {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        arms: PathBuf,
        #[arg(long, value_enum)]
        method: AnalyzeMethod,
        /// Include exact rational values.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = 0.95)]
        ci: f64,
        /// Write the JSON report here and print a summary instead.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Moments by exhaustive enumeration, for small inputs.
    Oracle {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        arms: PathBuf,
        #[arg(long, value_enum)]
        method: OracleMethod,
        /// Largest enumeration size accepted.
        #[arg(long, default_value_t = DEFAULT_GUARD)]
        guard: u128,
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Closed-form time against seeded Monte Carlo time and error.
    Bench {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        arms: PathBuf,
        /// Comma-separated replicate counts; may be empty.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        reps: Vec<u64>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn emit(report: &AnalysisReport, json: Option<&Path>) -> Result<()> {
    let text = report.to_json()?;
    match json {
        Some(path) => {
            write_text(path, &(text + "\n"))?;
            print!("{}", report.to_text());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compare {
            data,
            hierarchy,
            out,
            arms_out,
        } => {
            let s = commands::cmd_compare(&data, &hierarchy, &out, arms_out.as_deref())?;
            println!("N={} E={}", s.n_patients, s.total_edges);
        }
        Command::Analyze {
            matrix,
            arms,
            method,
            exact,
            ci,
            json,
        } => {
            let opts = AnalyzeOptions { exact, ci_level: ci };
            let report = commands::cmd_analyze(&matrix, &arms, method, opts)?;
            emit(&report, json.as_deref())?;
        }
        Command::Oracle {
            matrix,
            arms,
            method,
            guard,
            exact,
            json,
        } => {
            let report = commands::cmd_oracle(&matrix, &arms, method, guard, exact)?;
            emit(&report, json.as_deref())?;
        }
        Command::Bench {
            matrix,
            arms,
            reps,
            seed,
            json,
        } => {
            let report = commands::cmd_bench(&matrix, &arms, &reps, seed)?;
            print!("{}", report.to_text());
            if let Some(path) = json {
                write_text(&path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
