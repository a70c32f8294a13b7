#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use edgeplace::engine::{place_app, SearchConfig, StepCounter};
use edgeplace::model::{
    derive_ledgers, labels, validate_eligible, Amount, AppSpec, Capacity, ChangeEvent, Id, Infrastructure, Labels,
    LinkSpec, NodeSpec, Placement, S2SReq, ServiceSpec, Thresholds,
};
use edgeplace::reasoner::{OutcomeKind, ProblemPolicy};
use edgeplace::scale::{EXAMPLE_APP, EXAMPLE_INFRA};
use edgeplace::world::World;

pub const SOFTWARE: [&str; 3] = ["ubuntu", "gcc", "mySQL"];
pub const THINGS: [&str; 2] = ["camera", "viewer"];

pub fn example() -> (AppSpec, Infrastructure) {
    let app = edgeplace::factfile::parse_problem(EXAMPLE_APP).unwrap().app.unwrap();
    let infra = edgeplace::factfile::parse_problem(EXAMPLE_INFRA).unwrap().infra;
    (app, infra)
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub app: AppSpec,
    pub infra: Infrastructure,
    pub th: Thresholds,
}

fn subset(rng: &mut ChaCha8Rng, pool: &[&str], p: f64) -> Labels {
    labels(pool.iter().copied().filter(|_| rng.gen_bool(p)))
}

/// Half-unit granularity so fractional amounts get exercised.
fn amount(rng: &mut ChaCha8Rng, max_halves: u64) -> Amount {
    Amount::from_micros(rng.gen_range(0..=max_halves) * 500_000)
}

fn random_node(rng: &mut ChaCha8Rng, id: Id) -> NodeSpec {
    NodeSpec {
        id,
        sw_caps: subset(rng, &SOFTWARE, 0.7),
        hw_caps: if rng.gen_bool(0.15) { Capacity::Infinite } else { Capacity::Finite(amount(rng, 32)) },
        thing_caps: subset(rng, &THINGS, 0.3),
    }
}

fn random_link(rng: &mut ChaCha8Rng, src: Id, dst: Id) -> LinkSpec {
    LinkSpec { src, dst, latency: Amount::from_units(rng.gen_range(1..=50)), bandwidth: amount(rng, 60) }
}

/// At most 4 services and 6 nodes, every draw from `rng`.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let ns = rng.gen_range(1..=4);
    let nn = rng.gen_range(1..=6);
    let services: Vec<ServiceSpec> = (0..ns)
        .map(|i| ServiceSpec {
            id: Id::from(format!("s{i}")),
            sw_reqs: subset(rng, &SOFTWARE, 0.3),
            hw_reqs: amount(rng, 16),
            thing_reqs: subset(rng, &THINGS, 0.15),
        })
        .collect();
    let mut s2s = Vec::new();
    for a in &services {
        for b in &services {
            if a.id != b.id && rng.gen_bool(0.4) {
                s2s.push(S2SReq {
                    from: a.id.clone(),
                    to: b.id.clone(),
                    max_latency: Amount::from_units(rng.gen_range(5..=60)),
                    min_bandwidth: amount(rng, 20),
                });
            }
        }
    }
    let app = AppSpec::new("app".into(), services, s2s).unwrap();

    let mut infra = Infrastructure::new();
    for i in 0..nn {
        infra.add_node(random_node(rng, Id::from(format!("n{i}")))).unwrap();
    }
    let ids: Vec<Id> = infra.nodes().iter().map(|n| n.id.clone()).collect();
    for s in &ids {
        for d in &ids {
            if s != d && rng.gen_bool(0.85) {
                infra.add_link(random_link(rng, s.clone(), d.clone())).unwrap();
            }
        }
    }
    let th = Thresholds {
        hw: if rng.gen_bool(0.2) { Amount::from_units(1) } else { Amount::ZERO },
        bw: if rng.gen_bool(0.2) { Amount::from_units(1) } else { Amount::ZERO },
    };
    Instance { app, infra, th }
}

/// A random change against existing nodes. Prefers the nodes in `hot`
/// (typically the current hosts) so events hit the deployment often.
pub fn random_event(rng: &mut ChaCha8Rng, infra: &Infrastructure, hot: &[Id]) -> ChangeEvent {
    let ids: Vec<Id> = infra.nodes().iter().map(|n| n.id.clone()).collect();
    let pick = |rng: &mut ChaCha8Rng| -> Id {
        if !hot.is_empty() && rng.gen_bool(0.7) {
            hot.choose(rng).unwrap().clone()
        } else {
            ids.choose(rng).unwrap().clone()
        }
    };
    let pair = |rng: &mut ChaCha8Rng| -> Option<(Id, Id)> {
        if ids.len() < 2 {
            return None;
        }
        let s = pick(rng);
        let d = loop {
            let d = pick(rng);
            if d != s {
                break d;
            }
            if hot.len() < 2 {
                let others: Vec<&Id> = ids.iter().filter(|i| **i != s).collect();
                break (*others.choose(rng).unwrap()).clone();
            }
        };
        Some((s, d))
    };
    loop {
        match rng.gen_range(0..4) {
            0 => {
                let id = pick(rng);
                let mut n = random_node(rng, id.clone());
                if rng.gen_bool(0.5) {
                    n.hw_caps = infra.node(&id).unwrap().hw_caps;
                }
                return ChangeEvent::UpsertNode(n);
            }
            1 => return ChangeEvent::RemoveNode(pick(rng)),
            2 => {
                if let Some((s, d)) = pair(rng) {
                    return ChangeEvent::UpsertLink(random_link(rng, s, d));
                }
            }
            _ => {
                if let Some((s, d)) = pair(rng) {
                    return ChangeEvent::RemoveLink(s, d);
                }
            }
        }
    }
}

/// Placement as (service, node) pairs in service declaration order.
pub fn key(app: &AppSpec, p: &Placement) -> Vec<(String, String)> {
    app.services()
        .iter()
        .map(|s| (s.id.to_string(), p.node_of(&s.id).map(|n| n.to_string()).unwrap_or_default()))
        .collect()
}

/// Every mapping of services to nodes meeting all requirements, checked
/// directly against the raw instance data.
pub fn brute_force(app: &AppSpec, infra: &Infrastructure, th: &Thresholds) -> BTreeSet<Vec<(String, String)>> {
    let services = app.services();
    let nodes = infra.nodes();
    let mut out = BTreeSet::new();
    if nodes.is_empty() {
        return out;
    }
    let total = nodes.len().pow(services.len() as u32);
    'mapping: for code in 0..total {
        let mut c = code;
        let mut host = Vec::with_capacity(services.len());
        for _ in services {
            host.push(c % nodes.len());
            c /= nodes.len();
        }
        let mut load: BTreeMap<usize, u64> = BTreeMap::new();
        for (s, &h) in services.iter().zip(&host) {
            let n = &nodes[h];
            if !s.sw_reqs.iter().all(|x| n.sw_caps.contains(x))
                || !s.thing_reqs.iter().all(|x| n.thing_caps.contains(x))
            {
                continue 'mapping;
            }
            *load.entry(h).or_default() += s.hw_reqs.micros();
        }
        for (&h, &l) in &load {
            if let Capacity::Finite(cap) = nodes[h].hw_caps {
                if l + th.hw.micros() > cap.micros() {
                    continue 'mapping;
                }
            }
        }
        let pos = |id: &Id| services.iter().position(|s| &s.id == id).unwrap();
        let mut flows: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for r in app.s2s() {
            let (a, b) = (host[pos(&r.from)], host[pos(&r.to)]);
            if a == b {
                continue;
            }
            let Some(q) = infra.link(&nodes[a].id, &nodes[b].id) else {
                continue 'mapping;
            };
            if q.latency > r.max_latency {
                continue 'mapping;
            }
            *flows.entry((a, b)).or_default() += r.min_bandwidth.micros();
        }
        for (&(a, b), &f) in &flows {
            if f + th.bw.micros() > infra.link(&nodes[a].id, &nodes[b].id).unwrap().bandwidth.micros() {
                continue 'mapping;
            }
        }
        out.insert(services.iter().zip(&host).map(|(s, &h)| (s.id.to_string(), nodes[h].id.to_string())).collect());
    }
    out
}

#[derive(Debug, Default)]
pub struct Trial {
    pub checked: usize,
    pub partial: usize,
    pub fallback: usize,
    pub failed: usize,
    pub violations: Vec<String>,
}

/// Events whose effect the stock policy can observe: removals, node upserts
/// that keep hardware capacity, and link upserts that do not lower bandwidth.
pub fn default_policy_sees(e: &ChangeEvent, infra: &Infrastructure) -> bool {
    match e {
        ChangeEvent::RemoveNode(_) | ChangeEvent::RemoveLink(..) => true,
        ChangeEvent::UpsertNode(n) => infra.node(&n.id).is_some_and(|old| old.hw_caps == n.hw_caps),
        ChangeEvent::UpsertLink(l) => infra.link(&l.src, &l.dst).is_some_and(|old| l.bandwidth >= old.bandwidth),
    }
}

/// Random (instance, event) pairs that start from a deployment. Every
/// management outcome after the event is checked against the mutated
/// infrastructure; problems are collected rather than raised.
pub fn repair_trials(
    seed: u64,
    wanted: usize,
    policy: std::sync::Arc<dyn ProblemPolicy>,
    detectable_only: bool,
) -> Trial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Trial::default();
    while t.checked < wanted {
        let inst = random_instance(&mut rng);
        let mut w = World::new(inst.infra.clone(), inst.th).with_policy(policy.clone());
        w.add_app(inst.app.clone()).unwrap();
        let Some(before) = w.manage("app").unwrap().deployment else { continue };
        let hosts: Vec<Id> = before.placement.iter().map(|a| a.node.clone()).collect();
        let event = random_event(&mut rng, w.infra(), &hosts);
        if detectable_only && !default_policy_sees(&event, w.infra()) {
            continue;
        }
        w.apply_event(&event).unwrap();
        let out = w.manage("app").unwrap();
        t.checked += 1;
        let mut bad = |what: String| t.violations.push(format!("trial {}: {what} after {event:?}", t.checked));
        match &out.kind {
            OutcomeKind::Failed => {
                if w.deployment("app").is_some() {
                    bad("failed outcome left a deployment".into());
                }
                if !brute_force(&inst.app, w.infra(), &inst.th).is_empty() {
                    bad("failed although a placement exists".into());
                }
                t.failed += 1;
            }
            kind => {
                let Some(d) = out.deployment.as_ref() else {
                    bad(format!("{kind} without a deployment"));
                    continue;
                };
                let verdict = validate_eligible(&inst.app, w.infra(), &inst.th, &d.placement).unwrap();
                if !verdict.is_eligible() {
                    bad(format!("{kind} deployment invalid: {verdict:?}"));
                }
                if derive_ledgers(&inst.app, &d.placement).unwrap() != (d.hw.clone(), d.bw.clone()) {
                    bad(format!("{kind} ledgers disagree with placement"));
                }
                if w.deployment("app") != Some(d) {
                    bad("stored deployment differs from outcome".into());
                }
                match kind {
                    OutcomeKind::PartialMigration(moved) => {
                        for a in before.placement.iter().filter(|a| !moved.contains(&a.service)) {
                            if d.placement.node_of(&a.service) != Some(&a.node) {
                                bad(format!("{} moved without being flagged", a.service));
                            }
                        }
                        let q = out.partial_query.as_ref().unwrap();
                        if derive_ledgers(&inst.app, &q.placement).unwrap() != (q.hw.clone(), q.bw.clone()) {
                            bad("freed ledgers disagree with partial placement".into());
                        }
                        t.partial += 1;
                    }
                    OutcomeKind::FullReplacement => {
                        let full =
                            place_app(&inst.app, w.infra(), &SearchConfig::new(inst.th), &mut StepCounter::new());
                        if full.map(|s| s.placement).ok().as_ref() != Some(&d.placement) {
                            bad("fallback differs from a fresh placement".into());
                        }
                        t.fallback += 1;
                    }
                    _ => {}
                }
            }
        }
    }
    t
}
