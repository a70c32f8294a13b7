//! Standalone eligibility checker.
//!
//! This is the "test" half of generate-and-test restated as a total function:
//! it never searches, it only reports which constraints a given placement
//! breaks. The search engine and the reasoner are both checked against it.

use std::collections::{BTreeMap, BTreeSet};

use super::{Amount, AppSpec, Capacity, Id, Infrastructure, Labels, ModelError, Placement, Thresholds};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Unplaced { service: Id },
    PlacedTwice { service: Id },
    MissingSoftware { service: Id, node: Id, missing: Labels },
    MissingThings { service: Id, node: Id, missing: Labels },
    HardwareExceeded { node: Id, demand: Amount, capacity: Capacity, services: Vec<Id> },
    MissingLink { from: Id, to: Id, src: Id, dst: Id },
    LatencyExceeded { from: Id, to: Id, src: Id, dst: Id, latency: Amount, max_latency: Amount },
    BandwidthExceeded { src: Id, dst: Id, demand: Amount, capacity: Amount, services: Vec<Id> },
}

impl Violation {
    /// Services the violation is about.
    pub fn services(&self) -> Vec<&Id> {
        match self {
            Violation::Unplaced { service }
            | Violation::PlacedTwice { service }
            | Violation::MissingSoftware { service, .. }
            | Violation::MissingThings { service, .. } => vec![service],
            Violation::HardwareExceeded { services, .. } | Violation::BandwidthExceeded { services, .. } => {
                services.iter().collect()
            }
            Violation::MissingLink { from, to, .. } | Violation::LatencyExceeded { from, to, .. } => {
                vec![from, to]
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Eligible,
    Violations(Vec<Violation>),
}

impl Verdict {
    pub fn is_eligible(&self) -> bool {
        matches!(self, Verdict::Eligible)
    }

    pub fn violations(&self) -> &[Violation] {
        match self {
            Verdict::Eligible => &[],
            Verdict::Violations(v) => v,
        }
    }
}

/// Checks that `p` is a complete eligible placement of `app` on `infra`.
pub fn validate_eligible(
    app: &AppSpec,
    infra: &Infrastructure,
    th: &Thresholds,
    p: &Placement,
) -> Result<Verdict, ModelError> {
    validate(app, infra, th, p, true)
}

/// Like [`validate_eligible`] but services may be left unplaced.
pub fn validate_partial(
    app: &AppSpec,
    infra: &Infrastructure,
    th: &Thresholds,
    p: &Placement,
) -> Result<Verdict, ModelError> {
    validate(app, infra, th, p, false)
}

fn validate(
    app: &AppSpec,
    infra: &Infrastructure,
    th: &Thresholds,
    p: &Placement,
    require_complete: bool,
) -> Result<Verdict, ModelError> {
    for a in p.iter() {
        if app.service(&a.service).is_none() {
            return Err(ModelError::UnknownService(a.service.clone()));
        }
        if !infra.contains_node(&a.node) {
            return Err(ModelError::UnknownNode(a.node.clone()));
        }
    }

    let mut out = Vec::new();
    let mut count: BTreeMap<&Id, usize> = BTreeMap::new();
    for a in p.iter() {
        *count.entry(&a.service).or_default() += 1;
    }
    for s in app.services() {
        match count.get(&s.id).copied().unwrap_or(0) {
            0 if require_complete => out.push(Violation::Unplaced { service: s.id.clone() }),
            0 | 1 => {}
            _ => out.push(Violation::PlacedTwice { service: s.id.clone() }),
        }
    }

    // Per-service node requirements, plus cumulative hardware per node.
    let mut per_node: BTreeMap<&Id, (Amount, Vec<Id>)> = BTreeMap::new();
    for a in p.iter() {
        let s = app.service(&a.service).expect("checked above");
        let n = infra.node(&a.node).expect("checked above");
        let missing_sw: Labels = s.sw_reqs.difference(&n.sw_caps).cloned().collect();
        if !missing_sw.is_empty() {
            out.push(Violation::MissingSoftware { service: s.id.clone(), node: n.id.clone(), missing: missing_sw });
        }
        let missing_things: Labels = s.thing_reqs.difference(&n.thing_caps).cloned().collect();
        if !missing_things.is_empty() {
            out.push(Violation::MissingThings { service: s.id.clone(), node: n.id.clone(), missing: missing_things });
        }
        let entry = per_node.entry(&a.node).or_default();
        entry.0 = entry.0 + s.hw_reqs;
        entry.1.push(s.id.clone());
    }
    for (node, (load, services)) in per_node {
        let cap = infra.node(node).expect("checked above").hw_caps;
        let demand = load + th.hw;
        if !cap.covers(demand) {
            out.push(Violation::HardwareExceeded { node: node.clone(), demand, capacity: cap, services });
        }
    }

    // Network: existence and latency per interaction, cumulative bandwidth per link.
    let mut per_link: BTreeMap<(&Id, &Id), (Amount, BTreeSet<Id>)> = BTreeMap::new();
    for r in app.s2s() {
        let (Some(n1), Some(n2)) = (p.node_of(&r.from), p.node_of(&r.to)) else {
            continue;
        };
        if n1 == n2 {
            continue;
        }
        let Some(link) = infra.link(n1, n2) else {
            out.push(Violation::MissingLink {
                from: r.from.clone(),
                to: r.to.clone(),
                src: n1.clone(),
                dst: n2.clone(),
            });
            continue;
        };
        if link.latency > r.max_latency {
            out.push(Violation::LatencyExceeded {
                from: r.from.clone(),
                to: r.to.clone(),
                src: n1.clone(),
                dst: n2.clone(),
                latency: link.latency,
                max_latency: r.max_latency,
            });
        }
        let entry = per_link.entry((n1, n2)).or_default();
        entry.0 = entry.0 + r.min_bandwidth;
        entry.1.insert(r.from.clone());
        entry.1.insert(r.to.clone());
    }
    for ((src, dst), (load, services)) in per_link {
        let cap = infra.link(src, dst).expect("present above").bandwidth;
        let demand = load + th.bw;
        if demand > cap {
            out.push(Violation::BandwidthExceeded {
                src: src.clone(),
                dst: dst.clone(),
                demand,
                capacity: cap,
                services: services.into_iter().collect(),
            });
        }
    }

    Ok(if out.is_empty() { Verdict::Eligible } else { Verdict::Violations(out) })
}
