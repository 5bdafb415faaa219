use std::path::PathBuf;

use catfair_cli::run::{run, Command, EpsilonChoice, RunConfig, ENUM_LIMIT_ENV};
use catfair_core::oracle::DEFAULT_ENUM_LIMIT;
use catfair_core::search::SearchMode;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Fair allocation of indivisible items under category constraints:
/// Pareto-optimal allocations, one per agent, each envy-free for its agent,
/// all agreeing outside at most n(n-1) items.
#[derive(Parser)]
#[command(name = "catfair", version, about)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
    /// Exhaustive-enumeration guard (also via CATFAIR_ENUM_LIMIT).
    #[arg(long, global = true)]
    limit: Option<u64>,
    /// Increase stderr verbosity.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Arrangement,
    Sweep2,
    Grid,
}

#[derive(Clone, Copy, ValueEnum)]
enum EpsilonArg {
    Lex,
    Explicit,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON.
    #[arg(short, long)]
    input: PathBuf,
    /// Result JSON destination (stdout if omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Witness search strategy.
    #[arg(long, value_enum, default_value = "arrangement")]
    mode: ModeArg,
    /// Perturbation representation.
    #[arg(long, value_enum, default_value = "lex")]
    epsilon: EpsilonArg,
    /// Explicit-mode ε scale as "p/q" (default 1/(K n² m + 1)).
    #[arg(long)]
    alpha: Option<String>,
    /// Cap on enumerated cycles.
    #[arg(long, default_value_t = 1_000_000)]
    max_cycles: usize,
    /// Dyadic refinement depth for --mode grid.
    #[arg(long, default_value_t = 6)]
    grid_depth: usize,
    /// Worker threads for the vertex scan.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// Instance JSON.
    #[arg(short, long)]
    input: PathBuf,
    /// Result bundle JSON to certify.
    #[arg(short, long)]
    result: PathBuf,
    /// Report destination (stdout if omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Instance JSON.
    #[arg(short, long)]
    input: PathBuf,
    /// Optional result bundle to check against ground truth.
    #[arg(long)]
    check: Option<PathBuf>,
    /// Report destination (stdout if omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Compute a witness weight point and per-agent envy-free optima.
    Solve(SolveArgs),
    /// Certify a result bundle against the exhaustive oracle.
    Verify(VerifyArgs),
    /// Ground truth: feasible count, Pareto frontier, optional bundle check.
    Oracle(OracleArgs),
}

fn main() {
    let cli = Cli::parse();
    let enum_limit = cli
        .limit
        .or_else(|| {
            std::env::var(ENUM_LIMIT_ENV)
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(DEFAULT_ENUM_LIMIT);
    let command = match cli.command {
        CliCommand::Solve(args) => Command::Solve {
            input: args.input,
            output: args.output,
            mode: match args.mode {
                ModeArg::Arrangement => SearchMode::Arrangement,
                ModeArg::Sweep2 => SearchMode::Sweep2,
                ModeArg::Grid => SearchMode::Grid,
            },
            epsilon: match args.epsilon {
                EpsilonArg::Lex => EpsilonChoice::Lex,
                EpsilonArg::Explicit => EpsilonChoice::Explicit,
            },
            alpha: args.alpha,
            max_cycles: args.max_cycles,
            grid_depth: args.grid_depth,
            threads: args.threads,
        },
        CliCommand::Verify(args) => Command::Verify {
            input: args.input,
            result: args.result,
            output: args.output,
        },
        CliCommand::Oracle(args) => Command::Oracle {
            input: args.input,
            check: args.check,
            output: args.output,
        },
    };
    let config = RunConfig {
        command,
        enum_limit,
        verbosity: cli.verbose,
    };
    std::process::exit(run(&config));
}
