use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

/// Describe, flatten, simulate and analyze value-chain system models.
#[derive(Parser, Debug)]
#[command(name = "vcsys", version)]
struct Cli {
    /// Write results here instead of standard output.
    #[arg(short, long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model; prints OK or diagnostics on standard error.
    Validate { file: PathBuf },
    /// Summarize the top-level tuple of a model.
    Inspect { file: PathBuf },
    /// Expand a model into a single-level graph.
    Flatten {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run the flow simulator and print the final state.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        steps: u64,
        /// Write the history log (JSON lines) to this file.
        #[arg(long, value_name = "PATH")]
        log: Option<PathBuf>,
        /// Exit 1 when the conservation check fails.
        #[arg(long)]
        strict: bool,
        /// Run one variant per listed rate of a source, e.g. `S=1,2,4`.
        #[arg(long, value_name = "SOURCE=R1,R2,..")]
        sweep: Option<String>,
    },
    /// Structural analyses of the flattened model.
    Analyze {
        file: PathBuf,
        #[arg(long, value_enum)]
        metric: Metric,
        /// Capacity threshold for `--metric weak`.
        #[arg(long)]
        threshold: Option<f64>,
        /// Exit 1 when the analysis reports findings.
        #[arg(long)]
        strict: bool,
    },
    /// Render a model as Graphviz DOT (flattened) or JSON (tuple form).
    Export {
        file: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Metric {
    Linkages,
    Governance,
    Reachability,
    Weak,
    ValueAdded,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Dot,
    Json,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = commands::Context::from_env().and_then(|ctx| ctx.dispatch(cli.command, cli.output));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("vcsys: {}", e.message);
            }
            ExitCode::from(e.code)
        }
    }
}
