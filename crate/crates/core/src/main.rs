use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use streampay::cli::{self, BenchOptions, RunOptions};

#[derive(Parser)]
#[command(
    name = "streampay",
    version,
    about = "Run token-stream payment pipelines"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a pipeline spec; prints one line per problem.
    Validate { spec: PathBuf },
    /// Execute a scenario script against a pipeline.
    Run {
        spec: PathBuf,
        scenario: PathBuf,
        #[arg(long, value_name = "OUT")]
        trace: Option<PathBuf>,
        #[arg(long = "gas-report", value_name = "OUT")]
        gas_report: Option<PathBuf>,
        #[arg(long = "cost-table", value_name = "PATH")]
        cost_table: Option<PathBuf>,
    },
    /// Compare the payroll pipeline with a single-contract implementation.
    Bench {
        #[arg(long, default_value_t = 3)]
        recipients: usize,
        #[arg(long, default_value_t = 3)]
        periods: u32,
        #[arg(long)]
        deposit: Option<u128>,
        #[arg(long = "cost-table", value_name = "PATH")]
        cost_table: Option<PathBuf>,
        /// Also write the report as JSON.
        #[arg(long, value_name = "OUT")]
        json: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let (mut out, mut err) = cli::stdio();
    let code = match Args::parse().command {
        Command::Validate { spec } => cli::cmd_validate(&spec, &mut out, &mut err),
        Command::Run {
            spec,
            scenario,
            trace,
            gas_report,
            cost_table,
        } => cli::cmd_run(
            &spec,
            &scenario,
            RunOptions {
                trace: trace.as_deref(),
                gas_report: gas_report.as_deref(),
                cost_table: cost_table.as_deref(),
            },
            &mut out,
            &mut err,
        ),
        Command::Bench {
            recipients,
            periods,
            deposit,
            cost_table,
            json,
        } => cli::cmd_bench(
            BenchOptions {
                recipients,
                periods,
                deposit,
                cost_table: cost_table.as_deref(),
                json: json.as_deref(),
            },
            &mut out,
            &mut err,
        ),
    };
    ExitCode::from(code as u8)
}
