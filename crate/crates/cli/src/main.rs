use std::path::PathBuf;
use std::process::ExitCode;

use asai_cli::commands::{
    Decompose, EigenArgs, Euler, GenTower, Interp, LogMatrixCmd, Patch, RemoveC, RoundTrip, StabCheck, Synthesize,
};
use asai_cli::grid::{full_grid, parse_filter, run_invariants, run_pipeline, Fault, PipelineConfig};
use asai_cli::io::{render, write_json};
use asai_cli::{CliError, CliResult, Outcome, PRECISION_ENV};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "asai", version, about = "p-adic Asai distributions: patching, interpolation and signed decomposition")]
struct Cli {
    /// Digits of p-adic precision (default: the most p allows)
    #[arg(long, global = true, env = PRECISION_ENV)]
    prec: Option<u32>,
    /// Worker threads for parallel stages (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tower of a seeded random Dirac comb
    GenTower(GenTower),
    /// Patch a tower into a distribution
    Patch(Patch),
    /// Check the interpolation identity at one character
    Interp(Interp),
    /// Divide out the auxiliary c-factor
    RemoveC(RemoveC),
    /// Build and check the logarithmic matrix
    Logmatrix(LogMatrixCmd),
    /// Bounded pair to stabilized pair
    Synthesize(Synthesize),
    /// Stabilized pair to bounded pair
    Decompose(Decompose),
    /// Synthesize then decompose random bounded pairs
    Roundtrip(RoundTrip),
    /// Euler product against the coefficient table
    Euler(Euler),
    /// The p-stabilization identity on a two-prime model
    StabCheck(StabCheck),
    /// gen, norm, congruence, patch, assemble, oracle, interp
    Pipeline(PipelineArgs),
    /// The pipeline over the (p, k, R) grid, as TAP
    Invariants(InvariantArgs),
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[command(flatten)]
    eigen: EigenArgs,
    #[arg(long = "levels", short = 'R', default_value_t = 3)]
    levels: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    masses: usize,
    #[arg(long, value_enum)]
    fault: Option<Fault>,
    /// Valuation of the injected fault
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    fault_val: i32,
    /// Use the zero measure
    #[arg(long)]
    zero: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InvariantArgs {
    /// e.g. "p=5,k=2,R=3"
    #[arg(long)]
    filter: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn pipeline(args: &PipelineArgs, prec: Option<u32>) -> CliResult<Outcome> {
    let mut eigen = args.eigen.clone();
    if eigen.eigen.is_none() && eigen.p.is_none() {
        eigen.p = Some(5);
        eigen.k = eigen.k.or(Some(2));
    }
    let cfg = PipelineConfig {
        eigen: eigen.load(prec)?,
        levels: args.levels,
        seed: args.seed,
        masses: args.masses,
        fault: args.fault,
        fault_val: args.fault_val,
        zero: args.zero,
    };
    let rep = run_pipeline(&cfg)?;
    let value = serde_json::to_value(&rep).expect("serializable");
    if let Some(path) = &args.out {
        write_json(path, &value)?;
    }
    Ok(Outcome::new(value, rep.pass))
}

fn dispatch(cli: &Cli) -> CliResult<i32> {
    let prec = cli.prec;
    let outcome = match &cli.command {
        Command::GenTower(c) => c.run(prec)?,
        Command::Patch(c) => c.run(prec)?,
        Command::Interp(c) => c.run(prec)?,
        Command::RemoveC(c) => c.run(prec)?,
        Command::Logmatrix(c) => c.run(prec)?,
        Command::Synthesize(c) => c.run(prec)?,
        Command::Decompose(c) => c.run(prec)?,
        Command::Roundtrip(c) => c.run(prec)?,
        Command::Euler(c) => c.run()?,
        Command::StabCheck(c) => c.run()?,
        Command::Pipeline(c) => pipeline(c, prec)?,
        Command::Invariants(c) => {
            let mut cells = full_grid();
            if let Some(f) = &c.filter {
                let keep = parse_filter(f)?;
                cells.retain(|cell| keep(cell));
            }
            if cells.is_empty() {
                return Err(CliError::Usage("the filter selects no cell".into()));
            }
            let (tap, code) = run_invariants(&cells, prec, c.seed);
            print!("{tap}");
            return Ok(code);
        }
    };
    print!("{}", render(&outcome.report));
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
