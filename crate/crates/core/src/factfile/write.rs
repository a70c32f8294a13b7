use std::fmt::Write;

use super::{parse_facts, ParseError, ParseErrorKind, Pos, ProblemFile};
use crate::model::{AppSpec, Assignment, BwLedger, HwLedger, Infrastructure, Labels, Placement};

fn list(items: &Labels) -> String {
    let parts: Vec<&str> = items.iter().map(|i| i.as_str()).collect();
    format!("[{}]", parts.join(", "))
}

/// Writes a placement as `on(Service, Node)` lines in placement order,
/// followed by `hw(Node, Amount)` and `bw(Src, Dst, Amount)` ledger lines.
pub fn serialize_placement(p: &Placement, hw: &HwLedger, bw: &BwLedger) -> String {
    let mut out = String::new();
    for a in p.iter() {
        let _ = writeln!(out, "{a}");
    }
    for (n, v) in hw.iter() {
        let _ = writeln!(out, "hw({n}, {v})");
    }
    for (s, d, v) in bw.iter() {
        let _ = writeln!(out, "bw({s}, {d}, {v})");
    }
    out
}

/// Reads back the output of [`serialize_placement`].
pub fn parse_placement(text: &str) -> Result<(Placement, HwLedger, BwLedger), ParseError> {
    let mut assignments = Vec::new();
    let mut hw = HwLedger::new();
    let mut bw = BwLedger::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let shift = |mut e: ParseError| {
            e.pos.line = i + 1;
            e
        };
        let facts = parse_facts(&format!("{line}.")).map_err(shift)?;
        let [f] = facts.as_slice() else {
            return Err(ParseError::new(
                ParseErrorKind::Syntax,
                Pos { line: i + 1, column: 1 },
                "expected exactly one term per line",
            ));
        };
        let arity = match f.functor.as_str() {
            "on" => 2,
            "hw" => 2,
            "bw" => 3,
            other => {
                return Err(ParseError::new(
                    ParseErrorKind::UnknownFunctor,
                    Pos { line: i + 1, column: 1 },
                    format!("unknown functor `{other}`"),
                ))
            }
        };
        super::check_arity(f, arity).map_err(shift)?;
        match f.functor.as_str() {
            "on" => {
                assignments.push(Assignment { service: f.atom(0).map_err(shift)?, node: f.atom(1).map_err(shift)? })
            }
            "hw" => hw.allocate(&f.atom(0).map_err(shift)?, f.amount(1).map_err(shift)?),
            _ => bw.allocate(&f.atom(0).map_err(shift)?, &f.atom(1).map_err(shift)?, f.amount(2).map_err(shift)?),
        }
    }
    Ok((Placement::from_assignments(assignments), hw, bw))
}

pub fn serialize_app(app: &AppSpec) -> String {
    let mut out = String::new();
    let ids: Vec<&str> = app.services().iter().map(|s| s.id.as_str()).collect();
    let _ = writeln!(out, "application({}, [{}]).", app.id(), ids.join(", "));
    for s in app.services() {
        let _ = writeln!(out, "service({}, {}, {}, {}).", s.id, list(&s.sw_reqs), s.hw_reqs, list(&s.thing_reqs));
    }
    for r in app.s2s() {
        let _ = writeln!(out, "s2s({}, {}, {}, {}).", r.from, r.to, r.max_latency, r.min_bandwidth);
    }
    out
}

pub fn serialize_infrastructure(infra: &Infrastructure) -> String {
    let mut out = String::with_capacity(64 * (infra.node_count() + infra.link_count()));
    for n in infra.nodes() {
        let _ = writeln!(out, "node({}, {}, {}, {}).", n.id, list(&n.sw_caps), n.hw_caps, list(&n.thing_caps));
    }
    for l in infra.links() {
        let _ = writeln!(out, "link({}, {}, {}, {}).", l.src, l.dst, l.latency, l.bandwidth);
    }
    out
}

pub fn serialize_problem(p: &ProblemFile) -> String {
    let mut out = String::new();
    if let Some(app) = &p.app {
        out.push_str(&serialize_app(app));
    }
    if let Some(v) = p.hw_threshold {
        let _ = writeln!(out, "hwTh({v}).");
    }
    if let Some(v) = p.bw_threshold {
        let _ = writeln!(out, "bwTh({v}).");
    }
    out.push_str(&serialize_infrastructure(&p.infra));
    out
}
