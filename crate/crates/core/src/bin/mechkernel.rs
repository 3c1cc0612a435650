use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mechkernel::cli::{self, Command, Format, Options, RunManifest, EXIT_FALSE, EXIT_INPUT_ERROR, EXIT_PASS};
use mechkernel::rational::parse_rational;
use mechkernel::Result;

/// Exact checks for stochastic-kernel informativeness, revelation and
/// self-confirming mechanisms.
///
/// Exit codes: 0 pass, 1 verdict false, 2 inconclusive, 3 input error.
/// The LP solver's variable cap can be overridden with MECHKERNEL_SOLVER_CAP.
#[derive(Parser)]
#[command(name = "mechkernel", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Weak (and, when possible, strong) fictitious representation of a mechanism.
    Reveal(RunArgs),
    /// Kernel-order comparison of two kernels on the same inputs.
    KernelOrder(RunArgs),
    /// Blackwell comparison: search for a garbling `h = S·g`.
    Blackwell(RunArgs),
    /// Feasible-prior polytope: dimension, vertices, optional grain pins.
    Feasible(RunArgs),
    /// Robust self-confirmation over an epsilon schedule.
    Sc(RunArgs),
    /// Posted-price characterization and brute-force oracle.
    Monopoly(RunArgs),
    /// Run a corpus directory against its golden files.
    Suite {
        corpus: PathBuf,
        /// Rewrite golden files from current output.
        #[arg(long)]
        bless: bool,
    },
    /// Re-run a manifest and check that the output is byte-identical.
    Replay { manifest: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    input: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Enumeration or search budget for the command.
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long, value_enum, default_value_t = Emit::Json)]
    emit: Emit,
    /// Grain threshold (`p/q` or decimal); overrides the instance.
    #[arg(long)]
    epsilon: Option<String>,
    /// Renormalize kernel columns that do not sum to one.
    #[arg(long)]
    repair: bool,
    /// Write a run manifest to this path.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Json,
    Csv,
    Text,
}

fn run(cmd: Command, args: RunArgs) -> Result<i32> {
    let format = match args.emit {
        Emit::Json => Format::Json,
        Emit::Csv => Format::Csv,
        Emit::Text => Format::Text,
    };
    let opts = Options {
        seed: args.seed,
        cap: args.cap,
        epsilon: args.epsilon.as_deref().map(parse_rational).transpose()?,
        repair: args.repair,
        format,
    };
    let run = cli::execute(cmd, &args.input, &opts)?;
    std::io::stdout().write_all(&run.output).ok();
    if let Some(path) = args.manifest {
        let text = serde_json::to_string_pretty(&run.manifest)?;
        std::fs::write(&path, text + "\n").map_err(|source| mechkernel::Error::Io { path: path.display().to_string(), source })?;
    }
    Ok(run.report.status().exit_code())
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Sub::Reveal(a) => run(Command::Reveal, a),
        Sub::KernelOrder(a) => run(Command::KernelOrder, a),
        Sub::Blackwell(a) => run(Command::Blackwell, a),
        Sub::Feasible(a) => run(Command::Feasible, a),
        Sub::Sc(a) => run(Command::Sc, a),
        Sub::Monopoly(a) => run(Command::Monopoly, a),
        Sub::Suite { corpus, bless } => {
            let report = cli::run_suite_with(&corpus, bless)?;
            for line in &report.log {
                println!("{line}");
            }
            println!("{} passed, {} failed", report.passed, report.failed);
            Ok(report.exit_code())
        }
        Sub::Replay { manifest } => {
            let manifest: RunManifest = serde_json::from_str(&mechkernel::io::read_text(&manifest)?)?;
            let replay = cli::replay(&manifest)?;
            std::io::stdout().write_all(&replay.output).ok();
            if replay.identical {
                Ok(EXIT_PASS)
            } else {
                eprintln!("replayed output differs from the manifest digest");
                Ok(EXIT_FALSE)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT_ERROR } else { EXIT_PASS };
            e.print().ok();
            return ExitCode::from(code as u8);
        }
    };
    let code = dispatch(cli).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_INPUT_ERROR
    });
    ExitCode::from(code as u8)
}
