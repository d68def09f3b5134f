use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use uvc_core::interpreter::{Entry, ExploreOptions};
use uvc_core::pipeline::{self, Command, InputKind, PipelineOptions, EXIT_INPUT};
use uvc_core::smt::SolverConfig;

/// Verifies C programs with unspecified evaluation order by extracting an
/// active-object model.
#[derive(Parser)]
#[command(name = "uvc", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the model extracted from a C file.
    Extract(Common),
    /// Discharge every proof obligation of the model.
    Verify(Common),
    /// Report methods not shown structurally deadlock-free.
    Deadlock(Common),
    /// Enumerate all schedules of an entry call.
    Explore {
        #[command(flatten)]
        common: Common,
        /// Entry call, e.g. `C_one_to_fib.call(4)`.
        #[arg(long)]
        entry: Entry,
        /// Longest schedule explored, in steps.
        #[arg(long, default_value_t = 10_000)]
        max_depth: usize,
        /// Write one event list per kept schedule into this directory.
        #[arg(long)]
        emit_traces: Option<PathBuf>,
    },
    /// Verify, then run the deadlock analysis.
    All(Common),
}

#[derive(Args)]
struct Common {
    /// A `.c` program or an `.abs` model.
    file: PathBuf,
    /// Emit the report as one JSON document.
    #[arg(long)]
    json: bool,
    /// SMT solver executable.
    #[arg(long, env = "UV_SOLVER", default_value = "z3")]
    solver: PathBuf,
    /// Per-goal solver timeout in seconds.
    #[arg(long, env = "UV_TIMEOUT", default_value_t = 20.0)]
    timeout: f64,
    /// Write every goal's SMT-LIB script into this directory.
    #[arg(long)]
    dump_smt: Option<PathBuf>,
    /// Maximum number of concurrent solver processes.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut opts = PipelineOptions::default();
    let (command, common) = match cli.command {
        Cmd::Extract(c) => (Command::Extract, c),
        Cmd::Verify(c) => (Command::Verify, c),
        Cmd::Deadlock(c) => (Command::Deadlock, c),
        Cmd::All(c) => (Command::All, c),
        Cmd::Explore {
            common,
            entry,
            max_depth,
            emit_traces,
        } => {
            opts.entry = Some(entry);
            opts.explore = ExploreOptions {
                max_depth,
                ..ExploreOptions::default()
            };
            opts.emit_traces = emit_traces;
            (Command::Explore, common)
        }
    };
    if !(common.timeout.is_finite() && common.timeout > 0.0) {
        eprintln!("uvc: timeout must be a positive number of seconds");
        return ExitCode::from(EXIT_INPUT as u8);
    }
    opts.solver = SolverConfig {
        path: common.solver,
        timeout: Duration::from_secs_f64(common.timeout),
        dump_dir: common.dump_smt,
        jobs: common.jobs.max(1),
        ..SolverConfig::default()
    };

    let source = match std::fs::read_to_string(&common.file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("uvc: {}: {e}", common.file.display());
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    let kind = InputKind::of_path(&common.file);
    let input = common.file.display().to_string();
    let report = pipeline::run(command, &input, &source, kind, &opts);
    if common.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.text());
    }
    ExitCode::from(report.exit_code as u8)
}
