//! `crn`: command-line front end for simulating, analyzing and compiling
//! chemical reaction networks.
//!
//! Every failure exits with status 1 and prints a JSON object describing the
//! error on standard error.

mod commands;
mod config;
mod source;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Discrete chemical reaction networks: simulation, reachability analysis,
/// runtime measurement and decider compilation.
#[derive(Parser, Debug)]
#[command(name = "crn", version, about, args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Subcommands.
#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one execution and write its trace as JSON lines.
    Simulate(SimulateArgs),
    /// Explore the configuration digraph and write it as JSON or DOT.
    Digraph(DigraphArgs),
    /// Check weak and strong fairness correctness with witnesses.
    Check(CheckArgs),
    /// Measure the policy-based runtime of one execution.
    Runtime(RuntimeArgs),
    /// List the s-pitfalls of the configuration digraph.
    Pitfalls(PitfallsArgs),
    /// Compile a predicate into a protocol file, or list built-in protocols.
    Compile(CompileArgs),
    /// Measure runtimes across a doubling range of molecular counts.
    Sweep(SweepArgs),
}

/// Exactly one protocol source.
#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct SourceArgs {
    /// Built-in protocol by registry name.
    #[arg(long)]
    pub protocol: Option<String>,
    /// Protocol file in the text format.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Predicate text, compiled into a decider.
    #[arg(long)]
    pub predicate: Option<String>,
}

/// Initial configuration selection.
#[derive(Args, Debug, Clone, Default)]
pub struct InitArgs {
    /// Initial configuration, e.g. `A + B + 3 X`.
    #[arg(long)]
    pub init: Option<String>,
    /// Input vector of a decider, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub input: Option<Vec<u32>>,
    /// Fuel molecules of a decider (with `--input`).
    #[arg(long, default_value_t = 1)]
    pub fuel: u32,
    /// Molecular count: selects a valid initial configuration of this size.
    #[arg(long)]
    pub n: Option<u64>,
    /// Which member of the initial family of size `n` to use.
    #[arg(long, value_enum, default_value_t = Pick::First)]
    pub pick: Pick,
}

/// Member of an initial family.
#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pick {
    /// The first generated configuration.
    #[default]
    First,
    /// The middle configuration.
    Middle,
    /// The last generated configuration.
    Last,
}

/// Output selection.
#[derive(Args, Debug, Clone, Default)]
pub struct OutArgs {
    /// Output file (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Scheduler choice.
#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulerKind {
    /// Stochastic (Gillespie jump chain with time spans).
    Stochastic,
    /// Uniform choice among applicable reactions.
    Random,
    /// Starves the policy's targets whenever possible.
    GreedyStarve,
    /// The protocol's scripted adversary named by `--adversary`.
    Scripted,
}

/// Execution options shared by commands that run a scheduler.
#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Scheduler.
    #[arg(long, value_enum, default_value_t = SchedulerKind::Stochastic)]
    pub scheduler: SchedulerKind,
    /// Scripted adversary name (with `--scheduler scripted`).
    #[arg(long)]
    pub adversary: Option<String>,
    /// Wrap adversarial schedulers in the weak-fairness enforcer.
    #[arg(long)]
    pub fair: bool,
    /// Fairness threshold (default `10 n^2`).
    #[arg(long)]
    pub t_fair: Option<usize>,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Step budget of one execution.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_steps: usize,
    /// Runtime policy name (default: the protocol's reference policy).
    #[arg(long)]
    pub policy: Option<String>,
}

/// Arguments of `simulate`.
#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub init: InitArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Stop condition.
    #[arg(long, value_enum, default_value_t = StopKind::Halt)]
    pub stop: StopKind,
    /// Write a configuration checkpoint every this many steps (0: never).
    #[arg(long, default_value_t = 0)]
    pub checkpoint: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

/// When a simulation stops.
#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopKind {
    /// At the first halting configuration.
    Halt,
    /// At the first configuration of the target set.
    Target,
    /// After exactly `--max-steps` steps.
    Steps,
}

/// Output format of `digraph`.
#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// JSON document.
    Json,
    /// CSV table.
    Csv,
    /// Graphviz DOT.
    Dot,
}

/// Arguments of `digraph`.
#[derive(Args, Debug)]
pub struct DigraphArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub init: InitArgs,
    /// Exploration budget.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_states: usize,
    /// Output format (`json` or `dot`).
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Arguments of `check`.
#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub init: InitArgs,
    /// Check every valid initial configuration of size at most this bound
    /// (instead of a single configuration).
    #[arg(long)]
    pub up_to: Option<u64>,
    /// Correctness mode (default: the protocol's).
    #[arg(long)]
    pub mode: Option<String>,
    /// Exploration budget per initial configuration.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_states: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

/// How round costs are obtained.
#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcKind {
    /// Monte-Carlo estimate.
    Mc,
    /// Analytic upper bound.
    Bound,
}

/// Arguments of `runtime`.
#[derive(Args, Debug)]
pub struct RuntimeArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub init: InitArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Skipping policy: `identity` or the scripted adversary's own.
    #[arg(long, default_value = "identity")]
    pub skipping: String,
    /// Correctness mode that defines `t*` (default: the protocol's).
    #[arg(long)]
    pub mode: Option<String>,
    /// Round cost source.
    #[arg(long, value_enum, default_value_t = TcKind::Mc)]
    pub tc: TcKind,
    /// Monte-Carlo trials per round cost.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Exploration budget (stabilization step and analytic bounds).
    #[arg(long, default_value_t = 200_000)]
    pub max_states: usize,
    /// Per-round CSV output (standard output when absent).
    #[arg(long)]
    pub rounds_csv: Option<PathBuf>,
    /// Summary JSON output (standard error when absent).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

/// Arguments of `pitfalls`.
#[derive(Args, Debug)]
pub struct PitfallsArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub init: InitArgs,
    /// Propensity threshold `s` (a rational such as `2` or `1/2`).
    #[arg(long, default_value = "2")]
    pub s: String,
    /// Correctness mode (default: the protocol's).
    #[arg(long)]
    pub mode: Option<String>,
    /// Exploration budget.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_states: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Arguments of `compile`.
#[derive(Args, Debug)]
pub struct CompileArgs {
    /// Predicate text, e.g. `thr(X < 1)`.
    #[arg(required_unless_present_any = ["list", "protocol"])]
    pub predicate: Option<String>,
    /// Write a built-in protocol instead.
    #[arg(long, conflicts_with = "predicate")]
    pub protocol: Option<String>,
    /// List built-in protocol names.
    #[arg(long)]
    pub list: bool,
    /// Apply vote amplification with this error fraction, e.g. `1/2`.
    #[arg(long)]
    pub amplify: Option<String>,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Arguments of `sweep`.
#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Smallest molecular count.
    #[arg(long, default_value_t = 16)]
    pub n_min: u64,
    /// Largest molecular count (doubling from `--n-min`).
    #[arg(long, default_value_t = 1024)]
    pub n_max: u64,
    /// Input weights of a decider: inputs are split in these proportions.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<u32>>,
    /// Which member of the initial family to use for non-deciders.
    #[arg(long, value_enum, default_value_t = Pick::First)]
    pub pick: Pick,
    /// Executions per point.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Monte-Carlo trials per round cost.
    #[arg(long, default_value_t = 200)]
    pub tc_trials: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

fn main() -> ExitCode {
    let argv = match config::expand_args(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => return report(&e),
    };
    let cli = Cli::parse_from(argv);
    if let Err(e) = configure_workers() {
        return report(&e);
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}

/// Worker count comes from `CRN_WORKERS` only.
fn configure_workers() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("CRN_WORKERS") {
        let n: usize = v.parse().map_err(|_| anyhow::anyhow!("CRN_WORKERS must be a positive integer"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn report(e: &anyhow::Error) -> ExitCode {
    let body = match e.downcast_ref::<crn_core::CrnError>() {
        Some(ce) => serde_json::json!({ "error": serde_json::to_value(ce).unwrap_or_default(), "message": ce.to_string() }),
        None => serde_json::json!({ "error": { "kind": "cli" }, "message": format!("{e:#}") }),
    };
    eprintln!("{body}");
    ExitCode::FAILURE
}
