//! Depth-first backtracking placement search.
//!
//! Services are placed one at a time in the order given (application
//! declaration order for a fresh search), and for each service candidate
//! hosts are tried in infrastructure declaration order. A candidate is kept
//! only if it meets the service's software, thing and cumulative hardware
//! requirements and, immediately afterwards, every latency and cumulative
//! bandwidth requirement towards services placed so far. Any failure
//! backtracks to the next candidate. The fixed orders make the search fully
//! deterministic, including the step counts it reports.

use crate::exec::Execution;
use crate::model::{
    validate_eligible, Amount, AppSpec, Assignment, BwLedger, HwLedger, Id, Infrastructure, ModelError, NodeSpec,
    Placement, S2SReq, ServiceSpec, Thresholds,
};

/// Default cap on the number of mappings the brute-force oracle will visit.
pub const ORACLE_BOUND: u64 = 1_000_000;

/// Machine-independent work counter.
///
/// It advances once per (service, node) candidate trial, once per
/// interaction network check, and once per ledger update attempt.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct StepCounter(u64);

impl StepCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tick(&mut self) {
        self.0 += 1;
    }

    pub fn steps(&self) -> u64 {
        self.0
    }

    pub fn reset(&mut self) {
        self.0 = 0;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SearchMode {
    #[default]
    FirstSolution,
    EnumerateAll,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchConfig {
    pub thresholds: Thresholds,
    pub mode: SearchMode,
}

impl SearchConfig {
    pub fn new(thresholds: Thresholds) -> Self {
        SearchConfig { thresholds, mode: SearchMode::FirstSolution }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub placement: Placement,
    pub hw: HwLedger,
    pub bw: BwLedger,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("no eligible placement")]
    NoEligiblePlacement,
    #[error("search space of {size} mappings exceeds the oracle bound {bound}")]
    OracleBoundExceeded { size: String, bound: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Tries `s` on `n` given the hardware already allocated by the partial placement.
///
/// Returns the ledger with `n`'s entry increased by the service's demand, or
/// `None` when things, software or cumulative hardware do not fit.
pub fn try_service_on_node(
    s: &ServiceSpec,
    n: &NodeSpec,
    hw: &HwLedger,
    th: &Thresholds,
    counter: &mut StepCounter,
) -> Option<HwLedger> {
    counter.tick();
    if !s.thing_reqs.is_subset(&n.thing_caps) || !s.sw_reqs.is_subset(&n.sw_caps) {
        return None;
    }
    counter.tick();
    let load = hw.get(&n.id) + s.hw_reqs;
    if !n.hw_caps.covers(load + th.hw) {
        return None;
    }
    let mut next = hw.clone();
    next.allocate(&n.id, s.hw_reqs);
    Some(next)
}

/// Requirements between service `s` (on `n`) and services already in `partial`
/// that cross the network, outgoing ones first, as `(src, dst, req)`.
fn interested<'a>(s: &Id, n: &'a Id, partial: &'a Placement, app: &'a AppSpec) -> Vec<(&'a Id, &'a Id, &'a S2SReq)> {
    let mut out = Vec::new();
    for r in app.s2s().iter().filter(|r| &r.from == s) {
        if let Some(n2) = partial.node_of(&r.to) {
            if n2 != n {
                out.push((n, n2, r));
            }
        }
    }
    for r in app.s2s().iter().filter(|r| &r.to == s) {
        if let Some(n1) = partial.node_of(&r.from) {
            if n1 != n {
                out.push((n1, n, r));
            }
        }
    }
    out
}

/// Checks the network requirements between `s` placed on `n` and the services
/// already in `partial`, returning the bandwidth ledger extended with them.
#[allow(clippy::too_many_arguments)]
pub fn flow_ok(
    s: &Id,
    n: &Id,
    partial: &Placement,
    bw: &BwLedger,
    app: &AppSpec,
    infra: &Infrastructure,
    th: &Thresholds,
    counter: &mut StepCounter,
) -> Option<BwLedger> {
    let flows = interested(s, n, partial, app);
    if flows.is_empty() {
        return Some(bw.clone());
    }
    let mut next = bw.clone();
    for (src, dst, r) in flows {
        counter.tick();
        let link = infra.link(src, dst)?;
        if link.latency > r.max_latency {
            return None;
        }
        counter.tick();
        let load: Amount = next.get(src, dst) + r.min_bandwidth;
        if load + th.bw > link.bandwidth {
            return None;
        }
        next.allocate(src, dst, r.min_bandwidth);
    }
    Some(next)
}

struct Search<'a> {
    app: &'a AppSpec,
    infra: &'a Infrastructure,
    th: Thresholds,
    mode: SearchMode,
    counter: &'a mut StepCounter,
    found: Vec<Solution>,
}

impl Search<'_> {
    /// Returns true once the search should stop.
    fn extend(&mut self, pending: &[&ServiceSpec], hw: &HwLedger, bw: &BwLedger, placed: &Placement) -> bool {
        let Some((s, rest)) = pending.split_first() else {
            self.found.push(Solution { placement: placed.clone(), hw: hw.clone(), bw: bw.clone() });
            return self.mode == SearchMode::FirstSolution;
        };
        for n in self.infra.nodes() {
            let Some(hw2) = try_service_on_node(s, n, hw, &self.th, self.counter) else {
                continue;
            };
            let Some(bw2) = flow_ok(&s.id, &n.id, placed, bw, self.app, self.infra, &self.th, self.counter) else {
                continue;
            };
            let next = placed.prepended(Assignment { service: s.id.clone(), node: n.id.clone() });
            if self.extend(rest, &hw2, &bw2, &next) {
                return true;
            }
        }
        false
    }
}

#[allow(clippy::too_many_arguments)]
fn run(
    pending: &[Id],
    hw: &HwLedger,
    bw: &BwLedger,
    partial: &Placement,
    app: &AppSpec,
    infra: &Infrastructure,
    cfg: &SearchConfig,
    counter: &mut StepCounter,
) -> Result<Vec<Solution>, ModelError> {
    let services = pending
        .iter()
        .map(|id| app.service(id).ok_or_else(|| ModelError::UnknownService(id.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let mut search = Search { app, infra, th: cfg.thresholds, mode: cfg.mode, counter, found: Vec::new() };
    search.extend(&services, hw, bw, partial);
    Ok(search.found)
}

/// Extends `partial` with a placement for each of `pending`, in order.
///
/// The ledgers must already account for the services in `partial`. Only the
/// first solution is returned regardless of `cfg.mode`.
#[allow(clippy::too_many_arguments)]
pub fn place_services(
    pending: &[Id],
    hw: &HwLedger,
    bw: &BwLedger,
    partial: &Placement,
    app: &AppSpec,
    infra: &Infrastructure,
    cfg: &SearchConfig,
    counter: &mut StepCounter,
) -> Result<Solution, EngineError> {
    let cfg = SearchConfig { mode: SearchMode::FirstSolution, ..*cfg };
    run(pending, hw, bw, partial, app, infra, &cfg, counter)?.into_iter().next().ok_or(EngineError::NoEligiblePlacement)
}

/// First eligible placement of the whole application.
pub fn place_app(
    app: &AppSpec,
    infra: &Infrastructure,
    cfg: &SearchConfig,
    counter: &mut StepCounter,
) -> Result<Solution, EngineError> {
    place_services(&app.service_ids(), &HwLedger::new(), &BwLedger::new(), &Placement::new(), app, infra, cfg, counter)
}

/// Every eligible placement, in search order.
pub fn enumerate_placements(
    app: &AppSpec,
    infra: &Infrastructure,
    cfg: &SearchConfig,
    counter: &mut StepCounter,
) -> Vec<Solution> {
    let cfg = SearchConfig { mode: SearchMode::EnumerateAll, ..*cfg };
    run(&app.service_ids(), &HwLedger::new(), &BwLedger::new(), &Placement::new(), app, infra, &cfg, counter)
        .expect("application ids are its own")
}

/// Number of complete service-to-node mappings, if it fits in a u64.
pub fn search_space_size(app: &AppSpec, infra: &Infrastructure) -> Option<u64> {
    (infra.node_count() as u64).checked_pow(u32::try_from(app.services().len()).ok()?)
}

/// Brute force: every mapping of services to nodes, filtered by the validator.
///
/// Independent of the search above; used to check it. Placements come back in
/// lexicographic mapping order and, like the engine's, list the last declared
/// service first.
pub fn oracle_enumerate(
    app: &AppSpec,
    infra: &Infrastructure,
    th: &Thresholds,
    bound: u64,
    exec: Execution,
) -> Result<Vec<Placement>, EngineError> {
    let size = search_space_size(app, infra).filter(|&s| s <= bound).ok_or_else(|| {
        EngineError::OracleBoundExceeded { size: format!("{}^{}", infra.node_count(), app.services().len()), bound }
    })?;
    let nodes = infra.nodes();
    let services = app.services();
    let k = nodes.len() as u64;
    Ok(exec.filter_map_range(size, |mut code| {
        let mut chosen = vec![0usize; services.len()];
        for slot in chosen.iter_mut().rev() {
            *slot = (code % k) as usize;
            code /= k;
        }
        let assignments = services
            .iter()
            .zip(&chosen)
            .rev()
            .map(|(s, &i)| Assignment { service: s.id.clone(), node: nodes[i].id.clone() })
            .collect();
        let p = Placement::from_assignments(assignments);
        validate_eligible(app, infra, th, &p).expect("mapping built from known ids").is_eligible().then_some(p)
    }))
}
