//! `lpbound`: evaluate error bounds, plan sample sizes, reproduce the
//! published tables and validate bounds on simulated chains.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage error, 3 domain or
//! numerical error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{BurninArg, Format, RegimeArg, RunConfig, SuiteArg};

#[derive(Debug, Parser)]
#[command(
    name = "lpbound",
    version,
    about = "MCMC error bounds for functions with finite p-th moment"
)]
struct Cli {
    /// JSON file with defaults for any flag; unknown fields are rejected.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Master seed; defaults to $LPBOUND_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one bound and print its leading and higher-order terms.
    Bound(BoundArgs),
    /// Budget at a given delta, or at the heuristic delta when omitted.
    Plan(PlanArgs),
    /// Budget at the delta minimizing the total sample size.
    Optimize(PlanArgs),
    /// Recompute both published tables and compare every cell.
    Tables,
    /// Estimate e1 by replication, or emit one raw trajectory.
    Simulate(SimulateArgs),
    /// Run the bound-dominance and rate suites on a chain.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct FunctionArgs {
    /// Integrability exponent p in (1, 2].
    #[arg(long)]
    p: Option<f64>,
    /// ||f||_p (default 1).
    #[arg(long)]
    norm: Option<f64>,
}

#[derive(Debug, Args)]
struct ChainArgs {
    /// Spectral gap in (0, 1].
    #[arg(long)]
    gap: Option<f64>,
    /// Uniform ergodicity rate alpha in [0, 1).
    #[arg(long)]
    alpha: Option<f64>,
    /// Uniform ergodicity constant M (default 1).
    #[arg(long = "big-m")]
    big_m: Option<f64>,
    /// ||d nu / d pi - 1||_inf (default 0).
    #[arg(long)]
    dratio: Option<f64>,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
    /// Number of averaged steps.
    #[arg(long)]
    n: Option<f64>,
    /// Burn-in for eq9/eq10 (default: the theorem recipe).
    #[arg(long)]
    n0: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[command(flatten)]
    function: FunctionArgs,
    #[command(flatten)]
    chain: ChainArgs,
}

#[derive(Debug, Args)]
struct PlanArgs {
    /// theorem1 or theorem2 (default theorem2).
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
    /// Target absolute mean error.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Burn-in rule of the spectral gap regime.
    #[arg(long, value_enum)]
    burnin: Option<BurninArg>,
    #[command(flatten)]
    function: FunctionArgs,
    #[command(flatten)]
    chain: ChainArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Zoo name or JSON chain file.
    #[arg(long)]
    chain: Option<String>,
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    n0: Option<f64>,
    /// Replications (default 10000).
    #[arg(long)]
    reps: Option<usize>,
    /// Exponent of f(x) = x^-gamma on continuous chains.
    #[arg(long)]
    gamma: Option<f64>,
    /// Values of f on the states of a finite chain (default: indicator of the last state).
    #[arg(long, value_delimiter = ',')]
    f: Option<Vec<f64>>,
    /// Emit X_1..X_{n0+n} of one run instead of an estimate.
    #[arg(long)]
    trajectory: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Zoo name or JSON chain file.
    #[arg(long)]
    chain: Option<String>,
    /// Which checks to run (default all).
    #[arg(long, value_enum)]
    suite: Option<SuiteArg>,
    /// Exponent of f(x) = x^-gamma on continuous chains.
    #[arg(long)]
    gamma: Option<f64>,
    /// Exponent of the rate check (default 1.5; bounded f uses 2).
    #[arg(long)]
    p: Option<f64>,
    /// Replications per grid point (default 10000).
    #[arg(long)]
    reps: Option<usize>,
    /// n values of the bound-dominance grid.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// n values of the rate regression.
    #[arg(long = "rate-grid", value_delimiter = ',')]
    rate_grid: Option<Vec<usize>>,
}

impl FunctionArgs {
    fn into_config(self) -> RunConfig {
        RunConfig {
            p: self.p,
            norm: self.norm,
            ..RunConfig::default()
        }
    }
}

impl ChainArgs {
    fn into_config(self) -> RunConfig {
        RunConfig {
            gap: self.gap,
            alpha: self.alpha,
            big_m: self.big_m,
            dratio: self.dratio,
            ..RunConfig::default()
        }
    }
}

/// The flags of one invocation as a config layer.
fn flag_layer(cli: Cli) -> (commands::Kind, RunConfig, Option<PathBuf>) {
    let top = RunConfig {
        master_seed: cli.seed,
        output_format: cli.format,
        output_path: cli.output,
        ..RunConfig::default()
    };
    let (kind, layer) = match cli.command {
        Command::Bound(a) => (
            commands::Kind::Bound,
            RunConfig {
                regime: a.regime,
                n: a.n,
                n0: a.n0,
                delta: a.delta,
                ..RunConfig::default()
            }
            .over(a.function.into_config())
            .over(a.chain.into_config()),
        ),
        Command::Plan(a) => (commands::Kind::Plan, plan_layer(a)),
        Command::Optimize(a) => (commands::Kind::Optimize, plan_layer(a)),
        Command::Tables => (commands::Kind::Tables, RunConfig::default()),
        Command::Simulate(a) => (
            commands::Kind::Simulate,
            RunConfig {
                chain: a.chain,
                n: a.n,
                n0: a.n0,
                reps: a.reps,
                gamma: a.gamma,
                f: a.f,
                trajectory: a.trajectory.then_some(true),
                ..RunConfig::default()
            },
        ),
        Command::Validate(a) => (
            commands::Kind::Validate,
            RunConfig {
                chain: a.chain,
                suite: a.suite,
                gamma: a.gamma,
                p: a.p,
                reps: a.reps,
                grid: a.grid,
                rate_grid: a.rate_grid,
                ..RunConfig::default()
            },
        ),
    };
    (kind, top.over(layer), cli.config)
}

fn plan_layer(a: PlanArgs) -> RunConfig {
    RunConfig {
        regime: a.regime,
        eps: a.eps,
        delta: a.delta,
        burnin: a.burnin,
        ..RunConfig::default()
    }
    .over(a.function.into_config())
    .over(a.chain.into_config())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { commands::EXIT_USAGE } else { 0 });
        }
    };
    let (kind, flags, config_path) = flag_layer(cli);
    let file = match config_path.map(|p| RunConfig::load(&p)).transpose() {
        Ok(c) => c.unwrap_or_default(),
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(commands::EXIT_USAGE);
        }
    };
    let env = match RunConfig::from_env() {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(commands::EXIT_USAGE);
        }
    };
    let config = flags.over(file).over(env);
    match commands::dispatch(kind, &config) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
