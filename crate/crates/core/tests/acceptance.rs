//! Acceptance checks. Runs as a plain binary so every line reaches the
//! terminal under `cargo test`; exits non-zero if any check fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{example, key, random_instance, repair_trials};
use edgeplace::engine::{
    enumerate_placements, oracle_enumerate, place_app, search_space_size, SearchConfig, StepCounter, ORACLE_BOUND,
};
use edgeplace::model::{
    labels, validate_eligible, Amount, Assignment, BwLedger, Capacity, ChangeEvent, HwLedger, Id, Placement, Thresholds,
};
use edgeplace::reasoner::{CapacityAwarePolicy, DefaultPolicy, OutcomeKind};
use edgeplace::scale::{bench, example_app, gen_infrastructure, BenchOptions, BenchReport, Scenario};
use edgeplace::world::World;
use edgeplace::Execution;

const BIN: &str = env!("CARGO_BIN_EXE_edgeplace");

type Check = Result<String, String>;
type Named<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, t: Instant) -> Result<Duration, String> {
    let e = t.elapsed();
    ensure(e < limit, || format!("took {e:?}, limit {limit:?}"))?;
    Ok(e)
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name).to_string_lossy().into_owned()
}

fn golden_first_placement() -> Check {
    let t = Instant::now();
    let out = Command::new(BIN).args(["place", &data("vr_app.pl"), &data("vr_infra.pl")]).output().unwrap();
    let e = within(Duration::from_secs(1), t)?;
    ensure(out.status.success(), || format!("exit {:?}", out.status))?;
    let text = String::from_utf8(out.stdout).unwrap();
    let on: Vec<&str> = text.lines().filter(|l| l.starts_with("on(")).collect();
    let want = ["on(vrDriver, accesspoint)", "on(sceneSelector, cabinetserver)", "on(videoStorage, cloud)"];
    ensure(on == want, || format!("got {on:?}"))?;
    Ok(format!("{} in {e:?}", on.join(", ")))
}

fn eligible_count() -> Check {
    let t = Instant::now();
    let (app, infra) = example();
    let th = Thresholds::default();
    let sols = enumerate_placements(&app, &infra, &SearchConfig::new(th), &mut StepCounter::new());
    let space = search_space_size(&app, &infra);
    for s in &sols {
        let v = validate_eligible(&app, &infra, &th, &s.placement).unwrap();
        ensure(v.is_eligible(), || format!("{} fails validation: {v:?}", s.placement))?;
    }
    let out =
        Command::new(BIN).args(["place", "--enumerate", &data("vr_app.pl"), &data("vr_infra.pl")]).output().unwrap();
    let e = within(Duration::from_secs(1), t)?;
    let text = String::from_utf8(out.stdout).unwrap();
    ensure(sols.len() == 12, || format!("{} eligible", sols.len()))?;
    ensure(space == Some(125), || format!("search space {space:?}"))?;
    ensure(text.ends_with("eligible: 12\n"), || "CLI count line missing".into())?;
    Ok(format!("12 of 125, all valid, in {e:?}"))
}

fn golden_migration() -> Check {
    let (app, infra) = example();
    let mut w = World::new(infra, Thresholds::default());
    w.add_app(app).unwrap();
    w.manage("vrApp").unwrap();
    let mut cloud = w.infra().node("cloud").unwrap().clone();
    cloud.sw_caps = labels(["centos", "gcc", "make"]);
    cloud.hw_caps = Capacity::Infinite;
    cloud.thing_caps = labels([]);
    w.apply_event(&ChangeEvent::UpsertNode(cloud)).unwrap();
    let out = w.manage("vrApp").unwrap();

    ensure(out.kind == OutcomeKind::PartialMigration(vec![Id::new("videoStorage")]), || {
        format!("kind {:?}", out.kind)
    })?;
    let d = out.deployment.as_ref().ok_or("no deployment")?;
    let want = Placement::from_assignments(vec![
        Assignment::new("videoStorage", "ispdatacentre"),
        Assignment::new("vrDriver", "accesspoint"),
        Assignment::new("sceneSelector", "cabinetserver"),
    ]);
    ensure(d.placement == want, || format!("placement {}", d.placement))?;

    let q = out.partial_query.as_ref().ok_or("no partial query")?;
    let pp = Placement::from_assignments(vec![
        Assignment::new("vrDriver", "accesspoint"),
        Assignment::new("sceneSelector", "cabinetserver"),
    ]);
    let hw: HwLedger =
        [("cabinetserver", Amount::from_units(2)), ("accesspoint", Amount::from_units(2))].into_iter().collect();
    let bw: BwLedger = [
        ("accesspoint", "cabinetserver", Amount::from_units(1)),
        ("cabinetserver", "accesspoint", Amount::from_units(8)),
    ]
    .into_iter()
    .collect();
    ensure(q.placement == pp, || format!("partial placement {}", q.placement))?;
    ensure(q.hw == hw, || format!("partial hw {:?}", q.hw))?;
    ensure(q.bw == bw, || format!("partial bw {:?}", q.bw))?;
    Ok(format!("{} with partial state matching", d.placement))
}

fn oracle_equivalence() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut checked, mut nonempty) = (0, 0);
    for _ in 0..250 {
        let i = random_instance(&mut rng);
        let engine: BTreeSet<_> =
            enumerate_placements(&i.app, &i.infra, &SearchConfig::new(i.th), &mut StepCounter::new())
                .iter()
                .map(|s| key(&i.app, &s.placement))
                .collect();
        let oracle: BTreeSet<_> = oracle_enumerate(&i.app, &i.infra, &i.th, ORACLE_BOUND, Execution::default())
            .map_err(|e| e.to_string())?
            .iter()
            .map(|p| key(&i.app, p))
            .collect();
        ensure(engine == oracle, || format!("instance {checked}: engine {engine:?} vs oracle {oracle:?}"))?;
        checked += 1;
        nonempty += usize::from(!engine.is_empty());
    }
    let e = within(Duration::from_secs(60), t)?;
    Ok(format!("{checked} instances ({nonempty} feasible), 0 mismatches, in {e:?}"))
}

fn repair_soundness() -> Check {
    let any = repair_trials(5, 250, Arc::new(CapacityAwarePolicy), false);
    let seen = repair_trials(6, 250, Arc::new(DefaultPolicy), true);
    let problems: Vec<&String> = any.violations.iter().chain(&seen.violations).collect();
    ensure(problems.is_empty(), || format!("{} violations, first: {}", problems.len(), problems[0]))?;
    Ok(format!(
        "capacity-aware, any event: {} pairs ({} partial, {} fallback, {} failed); default, observable events: {} pairs ({} partial, {} fallback, {} failed); 0 violations",
        any.checked, any.partial, any.fallback, any.failed, seen.checked, seen.partial, seen.fallback, seen.failed
    ))
}

fn rows(report: &BenchReport, s: Scenario) -> Vec<&edgeplace::scale::BenchRow> {
    report.rows.iter().filter(|r| r.scenario == s).collect()
}

fn constant_detection(report: &BenchReport) -> Check {
    let nochange: Vec<_> = rows(report, Scenario::NoChange).into_iter().filter(|r| r.replicas <= 100).collect();
    let steps: Vec<_> = nochange.iter().map(|r| (r.replicas, r.cr_steps)).collect();
    ensure(nochange.len() == 4, || format!("rows {steps:?}"))?;
    let distinct: BTreeSet<_> = nochange.iter().map(|r| r.cr_steps).collect();
    ensure(distinct.len() == 1 && nochange[0].cr_steps.is_some(), || format!("steps {steps:?}"))?;
    ensure(nochange.iter().all(|r| r.migrated == Some(0)), || "nochange migrated something".into())?;
    Ok(format!("crSteps = {} for R in 2, 10, 20, 100", nochange[0].cr_steps.unwrap()))
}

fn scaling_trend(report: &BenchReport) -> Check {
    let mut notes = Vec::new();
    for s in [Scenario::NodeFail, Scenario::LinkFail] {
        let rs = rows(report, s);
        let speedups: Vec<(usize, f64)> = rs.iter().map(|r| (r.replicas, r.speedup().unwrap_or(f64::NAN))).collect();
        ensure(speedups.iter().map(|p| p.0).eq([2, 10, 20, 100, 200]), || format!("{s} rows {speedups:?}"))?;
        ensure(speedups[1].1 >= 1.0, || format!("{s} speedup at R=10 is {}", speedups[1].1))?;
        ensure(speedups.windows(2).all(|w| w[1].1 >= w[0].1), || format!("{s} speedups {speedups:?}"))?;
        notes.push(format!(
            "{s} speedup {}",
            speedups.iter().map(|(r, x)| format!("R{r}={x:.2}")).collect::<Vec<_>>().join(" ")
        ));
    }
    let nf = rows(report, Scenario::NodeFail);
    let ratio = |r: &edgeplace::scale::BenchRow| r.cr_steps.unwrap() as f64 / r.nodes as f64;
    let base = ratio(nf[0]);
    for r in &nf {
        ensure(ratio(r) <= 2.0 * base, || {
            format!("nodefail crSteps/nodes {} at R={} vs {base} at R=2", ratio(r), r.replicas)
        })?;
    }
    Ok(notes.join("; ") + "; nodefail crSteps/nodes within 2x of R=2")
}

fn performance_sanity() -> Check {
    let t = Instant::now();
    let infra = gen_infrastructure(200).unwrap();
    let generated = t.elapsed();
    let app = example_app();
    let sol = place_app(&app, &infra, &SearchConfig::new(Thresholds::default()), &mut StepCounter::new())
        .map_err(|e| e.to_string())?;
    let e = within(Duration::from_secs(10), t)?;
    ensure(infra.node_count() == 1000 && infra.link_count() == 999_000, || "wrong size".into())?;
    Ok(format!(
        "{} nodes, {} links: generated in {generated:?}, placed {} in {e:?} total",
        infra.node_count(),
        infra.link_count(),
        sol.placement
    ))
}

fn determinism() -> Check {
    let dir = tempfile::TempDir::new().unwrap();
    let run = |name: &str| {
        let f = dir.path().join(name);
        let out = Command::new(BIN).args(["bench", "-o", f.to_str().unwrap()]).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(f).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    ensure(a == b, || "CSV files differ".into())?;
    Ok(format!("two default-grid runs, {} identical bytes", a.len()))
}

fn main() {
    let report = bench(
        &[2, 10, 20, 100, 200],
        &[Scenario::NoChange, Scenario::NodeFail, Scenario::LinkFail],
        BenchOptions::default(),
    )
    .expect("benchmark grid runs");

    let checks: Vec<Named<'_>> = vec![
        ("golden first placement", Box::new(golden_first_placement)),
        ("eligible count", Box::new(eligible_count)),
        ("golden migration", Box::new(golden_migration)),
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("repair soundness and stability", Box::new(repair_soundness)),
        ("constant-cost detection", Box::new(|| constant_detection(&report))),
        ("scaling trend", Box::new(|| scaling_trend(&report))),
        ("performance sanity", Box::new(performance_sanity)),
        ("determinism", Box::new(determinism)),
    ];

    let mut failed = 0;
    for (n, (name, check)) in checks.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match result {
            Ok(detail) => println!("PASS {} {name}: {detail}", n + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", n + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
