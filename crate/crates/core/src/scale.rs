//! Replicated infrastructures and the four management scenarios run over them.
//!
//! `gen_infrastructure(r)` copies the five-node example infrastructure `r`
//! times (ids suffixed `_k`) and fully connects every ordered node pair.
//! Links between different base types reuse the example's QoS for that type
//! pair; links between two copies of the same base type get 150 ms / 2 Mbps,
//! which keeps the first deployment inside replica 0. Only replica 0's access
//! point and smartphone reach the VR viewer.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::engine::{place_app, SearchConfig, StepCounter};
use crate::exec::Execution;
use crate::factfile::parse_problem;
use crate::model::{
    validate_eligible, Amount, AppSpec, Capacity, ChangeEvent, Deployment, Id, Infrastructure, LinkSpec, Thresholds,
};
use crate::reasoner::OutcomeKind;
use crate::world::World;

pub const EXAMPLE_APP: &str = include_str!("../data/vr_app.pl");
pub const EXAMPLE_INFRA: &str = include_str!("../data/vr_infra.pl");

/// Replication factors of the default benchmark grid.
pub const DEFAULT_REPLICAS: [usize; 5] = [2, 10, 20, 100, 200];

const SAME_TYPE_LATENCY: u64 = 150;
const SAME_TYPE_BANDWIDTH: u64 = 2;

pub fn example_app() -> AppSpec {
    parse_problem(EXAMPLE_APP).expect("bundled app parses").app.expect("bundled app declared")
}

pub fn example_infrastructure() -> Infrastructure {
    parse_problem(EXAMPLE_INFRA).expect("bundled infrastructure parses").infra
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ScaleError {
    #[error("replication factor must be at least 1")]
    ZeroReplicas,
    #[error("unknown scenario `{0}` (expected first, nochange, nodefail or linkfail)")]
    UnknownScenario(String),
}

pub fn gen_infrastructure(replicas: usize) -> Result<Infrastructure, ScaleError> {
    if replicas == 0 {
        return Err(ScaleError::ZeroReplicas);
    }
    let base = example_infrastructure();
    let types = base.nodes();
    let mut infra = Infrastructure::new();
    let mut ids: Vec<(usize, Id)> = Vec::with_capacity(replicas * types.len());
    for k in 0..replicas {
        for (t, n) in types.iter().enumerate() {
            let mut copy = n.clone();
            copy.id = Id::from(format!("{}_{k}", n.id));
            if k > 0 {
                copy.thing_caps.clear();
            }
            ids.push((t, copy.id.clone()));
            infra.add_node(copy).expect("generated ids are unique");
        }
    }
    let same = crate::model::LinkQos {
        latency: Amount::from_units(SAME_TYPE_LATENCY),
        bandwidth: Amount::from_units(SAME_TYPE_BANDWIDTH),
    };
    for (ts, src) in &ids {
        for (td, dst) in &ids {
            if src == dst {
                continue;
            }
            let qos = if ts == td {
                same
            } else {
                match base.link(&types[*ts].id, &types[*td].id) {
                    Some(q) => *q,
                    None => continue,
                }
            };
            infra.insert_link(LinkSpec {
                src: src.clone(),
                dst: dst.clone(),
                latency: qos.latency,
                bandwidth: qos.bandwidth,
            });
        }
    }
    Ok(infra)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scenario {
    /// Find a first deployment.
    First,
    /// An infrastructure change that requires no migration.
    NoChange,
    /// The host of the storage service drops to zero hardware.
    NodeFail,
    /// The link from the storage host to the scene selector host becomes too slow.
    LinkFail,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::First, Scenario::NoChange, Scenario::NodeFail, Scenario::LinkFail];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::First => "first",
            Scenario::NoChange => "nochange",
            Scenario::NodeFail => "nodefail",
            Scenario::LinkFail => "linkfail",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = ScaleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL.into_iter().find(|sc| sc.name() == s).ok_or_else(|| ScaleError::UnknownScenario(s.to_string()))
    }
}

/// One benchmark run.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub replicas: usize,
    pub nodes: usize,
    pub scenario: Scenario,
    /// Steps of the measured management query.
    pub cr_steps: Option<u64>,
    /// Steps of a from-scratch placement on the same infrastructure.
    pub full_steps: Option<u64>,
    pub migrated: Option<usize>,
    pub wall_millis: Option<f64>,
    /// Set when the scenario could not be run.
    pub failure: Option<String>,
    /// The deployment held at the end, if any.
    pub final_deployment: Option<Deployment>,
    /// Whether that deployment validates against the final infrastructure.
    pub final_valid: Option<bool>,
}

impl BenchRow {
    pub fn speedup(&self) -> Option<f64> {
        match (self.cr_steps, self.full_steps) {
            (Some(cr), Some(full)) if cr > 0 => Some(full as f64 / cr as f64),
            _ => None,
        }
    }

    fn empty(replicas: usize, nodes: usize, scenario: Scenario) -> Self {
        BenchRow {
            replicas,
            nodes,
            scenario,
            cr_steps: None,
            full_steps: None,
            migrated: None,
            wall_millis: None,
            failure: None,
            final_deployment: None,
            final_valid: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct BenchOptions {
    /// Record wall-clock time. Off by default so reports are reproducible byte for byte.
    pub wall_clock: bool,
    pub execution: Execution,
}

fn migrated_count(kind: &OutcomeKind, services: usize) -> Option<usize> {
    match kind {
        OutcomeKind::Unchanged => Some(0),
        OutcomeKind::PartialMigration(ids) => Some(ids.len()),
        OutcomeKind::FullReplacement => Some(services),
        OutcomeKind::Failed => None,
    }
}

/// Runs one scenario on a freshly generated infrastructure of `replicas` copies.
pub fn run_scenario(scenario: Scenario, replicas: usize, opts: BenchOptions) -> Result<BenchRow, ScaleError> {
    let infra = gen_infrastructure(replicas)?;
    let app = example_app();
    let app_id = app.id().clone();
    let services = app.services().len();
    let mut row = BenchRow::empty(replicas, infra.node_count(), scenario);
    let mut world = World::new(infra, Thresholds::default());
    world.add_app(app.clone()).expect("fresh world");

    let timed = |world: &mut World| {
        let t = Instant::now();
        let outcome = world.manage(&app_id).expect("app loaded");
        (outcome, t.elapsed().as_secs_f64() * 1000.0)
    };

    let (first, first_ms) = timed(&mut world);
    if scenario == Scenario::First {
        row.cr_steps = Some(first.steps);
        row.wall_millis = opts.wall_clock.then_some(first_ms);
    }
    let Some(dep) = first.deployment else {
        row.failure = Some("no first deployment".into());
        return Ok(row);
    };

    let storage = &app.services()[0].id;
    let selector = &app.services()[1].id;
    let storage_host = dep.placement.node_of(storage).expect("complete placement").clone();
    let event = match scenario {
        Scenario::First => None,
        Scenario::NoChange | Scenario::NodeFail => {
            let mut n = world.infra().node(&storage_host).expect("host exists").clone();
            let hw = if scenario == Scenario::NoChange { 17 } else { 0 };
            n.hw_caps = Capacity::Finite(Amount::from_units(hw));
            Some(ChangeEvent::UpsertNode(n))
        }
        Scenario::LinkFail => {
            let selector_host = dep.placement.node_of(selector).expect("complete placement").clone();
            match world.infra().link(&storage_host, &selector_host) {
                Some(q) => Some(ChangeEvent::UpsertLink(LinkSpec {
                    src: storage_host.clone(),
                    dst: selector_host,
                    latency: Amount::from_units(1350),
                    bandwidth: q.bandwidth,
                })),
                None => {
                    row.failure = Some("storage and selector share a host".into());
                    return Ok(row);
                }
            }
        }
    };

    if let Some(e) = event {
        world.apply_event(&e).expect("event targets existing nodes");
        let (outcome, ms) = timed(&mut world);
        row.cr_steps = Some(outcome.steps);
        row.migrated = migrated_count(&outcome.kind, services);
        row.wall_millis = opts.wall_clock.then_some(ms);
        if matches!(scenario, Scenario::NodeFail | Scenario::LinkFail) {
            let mut counter = StepCounter::new();
            let _ = place_app(&app, world.infra(), &SearchConfig::new(world.thresholds()), &mut counter);
            row.full_steps = Some(counter.steps());
        }
    }

    row.final_deployment = world.deployment(&app_id).cloned();
    row.final_valid = row.final_deployment.as_ref().map(|d| {
        validate_eligible(&app, world.infra(), &world.thresholds(), &d.placement)
            .map(|v| v.is_eligible())
            .unwrap_or(false)
    });
    Ok(row)
}

/// Runs every (replicas, scenario) pair, each in its own world.
///
/// Rows come out in grid order (replicas outer, scenarios inner) whatever the
/// execution mode.
pub fn bench(replicas: &[usize], scenarios: &[Scenario], opts: BenchOptions) -> Result<BenchReport, ScaleError> {
    if replicas.contains(&0) {
        return Err(ScaleError::ZeroReplicas);
    }
    let jobs: Vec<(usize, Scenario)> = replicas.iter().flat_map(|&r| scenarios.iter().map(move |&s| (r, s))).collect();
    let rows = opts.execution.map(&jobs, |&(r, s)| run_scenario(s, r, opts));
    Ok(BenchReport { rows: rows.into_iter().collect::<Result<_, _>>()? })
}

pub const CSV_HEADER: [&str; 8] =
    ["R", "nodes", "scenario", "cr_steps", "full_steps", "speedup", "migrated", "wall_ms"];

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.replicas.to_string(),
                r.nodes.to_string(),
                r.scenario.to_string(),
                cell(r.cr_steps),
                cell(r.full_steps),
                cell(r.speedup().map(|s| format!("{s:.3}"))),
                cell(r.migrated),
                cell(r.wall_millis.map(|m| format!("{m:.3}"))),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}
