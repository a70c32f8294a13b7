//! The `edgeplace` command line.
//!
//! Exit codes: 0 success, 1 no eligible placement or a failed management
//! query, 2 unreadable or invalid input, 3 internal invariant violation.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::engine::{enumerate_placements, place_app, EngineError, SearchConfig, StepCounter};
use crate::exec::Execution;
use crate::factfile::{
    parse_events, parse_problem, serialize_placement, serialize_problem, ParseError, ProblemFile, ScriptItem,
};
use crate::model::{Amount, AppSpec, Infrastructure, ModelError, Thresholds};
use crate::reasoner::{
    CapacityAwarePolicy, DefaultPolicy, ManagementOutcome, OutcomeKind, ProblemPolicy, ReasonerError,
};
use crate::scale::{bench, gen_infrastructure, BenchOptions, ScaleError, Scenario, DEFAULT_REPLICAS};
use crate::world::{World, WorldError};

pub const EXIT_OK: u8 = 0;
pub const EXIT_NO_PLACEMENT: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "edgeplace", version, about = "QoS-aware placement and repair of multi-service applications")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find the first eligible placement (or all of them).
    Place {
        app: PathBuf,
        infra: PathBuf,
        /// Print every eligible placement followed by `eligible: K`.
        #[arg(long)]
        enumerate: bool,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        /// Append `steps: N`.
        #[arg(long)]
        steps: bool,
    },
    /// Deploy, then replay an event script, managing the app at each `query.`.
    Manage {
        app: PathBuf,
        infra: PathBuf,
        events: PathBuf,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[arg(long, value_enum, default_value_t = PolicyArg::Default)]
        policy: PolicyArg,
    },
    /// Write a replicated copy of the example infrastructure.
    GenInfra {
        #[arg(long)]
        replicas: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the benchmark scenarios and write a CSV report.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_REPLICAS)]
        replicas: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = Scenario::ALL)]
        scenarios: Vec<Scenario>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Fill the wall_ms column (makes output differ between runs).
        #[arg(long)]
        wall_clock: bool,
        /// Run scenarios one after another instead of on the thread pool.
        #[arg(long)]
        sequential: bool,
    },
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Hardware headroom to keep free on every node; overrides `hwTh` facts.
    #[arg(long = "hw-th")]
    pub hw: Option<Amount>,
    /// Bandwidth headroom to keep free on every link; overrides `bwTh` facts.
    #[arg(long = "bw-th")]
    pub bw: Option<Amount>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Default,
    CapacityAware,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("writing output: {0}")]
    Output(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Input(_) => EXIT_INPUT,
            CliError::Internal(_) | CliError::Output(_) => EXIT_INTERNAL,
        }
    }
}

impl From<ScaleError> for CliError {
    fn from(e: ScaleError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<WorldError> for CliError {
    fn from(e: WorldError) -> Self {
        match e {
            WorldError::Reasoner(ReasonerError::Inconsistent(m)) => CliError::Internal(m.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn load_problem(path: &Path) -> Result<ProblemFile, CliError> {
    parse_problem(&read(path)?).map_err(|source| CliError::Parse { path: path.to_path_buf(), source })
}

/// The application from `app_path`, the infrastructure from `infra_path`, and
/// thresholds from flags, else from either file, else zero.
fn load_inputs(
    app_path: &Path,
    infra_path: &Path,
    flags: &ThresholdArgs,
) -> Result<(AppSpec, Infrastructure, Thresholds), CliError> {
    let app_file = load_problem(app_path)?;
    let infra_file = load_problem(infra_path)?;
    let app =
        app_file.app.ok_or_else(|| CliError::Input(format!("{}: no application declared", app_path.display())))?;
    let pick = |flag: Option<Amount>, a: Option<Amount>, b: Option<Amount>| flag.or(a).or(b).unwrap_or(Amount::ZERO);
    let thresholds = Thresholds {
        hw: pick(flags.hw, app_file.hw_threshold, infra_file.hw_threshold),
        bw: pick(flags.bw, app_file.bw_threshold, infra_file.bw_threshold),
    };
    Ok((app, infra_file.infra, thresholds))
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io { path: p.to_path_buf(), source }),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

/// Runs one command, writing its normal output to `out`.
///
/// Returns the exit code for outcomes that are not errors (0 or 1).
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<u8, CliError> {
    match cli.command {
        Command::Place { app, infra, enumerate, thresholds, steps } => {
            cmd_place(&app, &infra, enumerate, &thresholds, steps, out)
        }
        Command::Manage { app, infra, events, thresholds, policy } => {
            cmd_manage(&app, &infra, &events, &thresholds, policy, out)
        }
        Command::GenInfra { replicas, output } => {
            let infra = gen_infrastructure(replicas)?;
            let text = serialize_problem(&ProblemFile { infra, ..Default::default() });
            write_output(output.as_deref(), &text, out)?;
            Ok(EXIT_OK)
        }
        Command::Bench { replicas, scenarios, output, wall_clock, sequential } => {
            let execution = if sequential { Execution::Sequential } else { Execution::default() };
            let report = bench(&replicas, &scenarios, BenchOptions { wall_clock, execution })?;
            write_output(output.as_deref(), &report.to_csv(), out)?;
            Ok(EXIT_OK)
        }
    }
}

fn cmd_place(
    app_path: &Path,
    infra_path: &Path,
    enumerate: bool,
    flags: &ThresholdArgs,
    show_steps: bool,
    out: &mut dyn Write,
) -> Result<u8, CliError> {
    let (app, infra, thresholds) = load_inputs(app_path, infra_path, flags)?;
    let cfg = SearchConfig::new(thresholds);
    let mut counter = StepCounter::new();
    let code = if enumerate {
        let all = enumerate_placements(&app, &infra, &cfg, &mut counter);
        for (i, sol) in all.iter().enumerate() {
            if i > 0 {
                writeln!(out)?;
            }
            out.write_all(serialize_placement(&sol.placement, &sol.hw, &sol.bw).as_bytes())?;
        }
        writeln!(out, "eligible: {}", all.len())?;
        if all.is_empty() {
            EXIT_NO_PLACEMENT
        } else {
            EXIT_OK
        }
    } else {
        match place_app(&app, &infra, &cfg, &mut counter) {
            Ok(sol) => {
                out.write_all(serialize_placement(&sol.placement, &sol.hw, &sol.bw).as_bytes())?;
                EXIT_OK
            }
            Err(EngineError::NoEligiblePlacement) => {
                writeln!(out, "no eligible placement")?;
                EXIT_NO_PLACEMENT
            }
            Err(e) => return Err(CliError::Internal(e.to_string())),
        }
    };
    if show_steps {
        writeln!(out, "steps: {}", counter.steps())?;
    }
    Ok(code)
}

fn print_outcome(index: usize, o: &ManagementOutcome, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "query: {index}")?;
    writeln!(out, "outcome: {}", o.kind)?;
    if let OutcomeKind::PartialMigration(ids) = &o.kind {
        let names: Vec<&str> = ids.iter().map(|i| i.as_str()).collect();
        writeln!(out, "migrated: {}", names.join(", "))?;
    }
    if let Some(d) = &o.deployment {
        out.write_all(serialize_placement(&d.placement, &d.hw, &d.bw).as_bytes())?;
    }
    writeln!(out, "steps: {}", o.steps)
}

fn cmd_manage(
    app_path: &Path,
    infra_path: &Path,
    events_path: &Path,
    flags: &ThresholdArgs,
    policy: PolicyArg,
    out: &mut dyn Write,
) -> Result<u8, CliError> {
    let (app, infra, thresholds) = load_inputs(app_path, infra_path, flags)?;
    let script = parse_events(&read(events_path)?)
        .map_err(|source| CliError::Parse { path: events_path.to_path_buf(), source })?;
    let policy: Arc<dyn ProblemPolicy> = match policy {
        PolicyArg::Default => Arc::new(DefaultPolicy),
        PolicyArg::CapacityAware => Arc::new(CapacityAwarePolicy),
    };
    let app_id = app.id().clone();
    let mut world = World::new(infra, thresholds).with_policy(policy);
    world.add_app(app)?;

    let mut last = world.manage(&app_id)?;
    print_outcome(0, &last, out)?;
    let mut queries = 0;
    for item in &script.0 {
        match item {
            ScriptItem::Event(e) => world.apply_event(e).map_err(|err| match err {
                WorldError::Referential(ModelError::UnknownNode(n)) => {
                    CliError::Input(format!("{}: event refers to unknown node `{n}`", events_path.display()))
                }
                other => other.into(),
            })?,
            ScriptItem::Query => {
                queries += 1;
                last = world.manage(&app_id)?;
                writeln!(out)?;
                print_outcome(queries, &last, out)?;
            }
        }
    }
    Ok(if last.kind == OutcomeKind::Failed { EXIT_NO_PLACEMENT } else { EXIT_OK })
}
