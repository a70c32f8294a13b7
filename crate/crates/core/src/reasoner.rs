//! Continuous reasoning over a running deployment.
//!
//! After infrastructure changes, a reasoning step finds the services whose
//! host or supporting links no longer meet their requirements, frees their
//! hardware and bandwidth allocations, and asks the engine to place only those
//! services while every other assignment stays fixed. If that partial search
//! fails, a complete placement is computed from scratch.

use std::collections::BTreeSet;
use std::fmt;

use crate::engine::{place_app, place_services, EngineError, SearchConfig, StepCounter};
use crate::model::{
    Amount, AppSpec, BwLedger, Deployment, HwLedger, Id, Infrastructure, Labels, LinkQos, ModelError, NodeSpec,
    Placement, S2SReq, ServiceDescriptor, ServiceSpec, Thresholds,
};

/// What a node-problem check gets to look at.
#[derive(Clone, Copy, Debug)]
pub struct NodeCheck<'a> {
    /// The service's current host, or `None` if it was removed.
    pub node: Option<&'a NodeSpec>,
    pub service: &'a ServiceSpec,
    /// Hardware the deployment currently holds on that host.
    pub allocated: Amount,
}

/// What a communication-problem check gets to look at.
#[derive(Clone, Copy, Debug)]
pub struct LinkCheck<'a> {
    /// The directed link between the two hosts, or `None` if absent.
    pub link: Option<&'a LinkQos>,
    pub requirement: &'a S2SReq,
    /// Bandwidth the deployment currently holds on that link.
    pub allocated: Amount,
}

/// Decides which hosts and links are in trouble. Implementations must be pure.
pub trait ProblemPolicy: fmt::Debug + Send + Sync {
    fn node_problem(&self, check: &NodeCheck<'_>, th: &Thresholds) -> bool;
    fn communication_problem(&self, check: &LinkCheck<'_>, th: &Thresholds) -> bool;
}

/// A node is in trouble if it is gone, or if it no longer has hardware above
/// the threshold, the required things and the required software.
pub fn default_node_problem(node: Option<&NodeSpec>, sw_reqs: &Labels, thing_reqs: &Labels, th: &Thresholds) -> bool {
    match node {
        None => true,
        Some(n) => !(n.hw_caps.exceeds(th.hw) && thing_reqs.is_subset(&n.thing_caps) && sw_reqs.is_subset(&n.sw_caps)),
    }
}

/// A link is in trouble if it is gone, too slow for the requirement, or its
/// bandwidth fell below the threshold.
pub fn default_communication_problem(link: Option<&LinkQos>, max_latency: Amount, th: &Thresholds) -> bool {
    match link {
        None => true,
        Some(l) => l.latency > max_latency || l.bandwidth < th.bw,
    }
}

/// The stock policy. It ignores current allocations: a node whose hardware
/// drops below its hosted load but stays above the threshold is not flagged,
/// and neither is a link whose bandwidth drops below its allocation.
#[derive(Clone, Copy, Debug, Default)]
pub struct DefaultPolicy;

impl ProblemPolicy for DefaultPolicy {
    fn node_problem(&self, c: &NodeCheck<'_>, th: &Thresholds) -> bool {
        default_node_problem(c.node, &c.service.sw_reqs, &c.service.thing_reqs, th)
    }

    fn communication_problem(&self, c: &LinkCheck<'_>, th: &Thresholds) -> bool {
        default_communication_problem(c.link, c.requirement.max_latency, th)
    }
}

/// The stock checks plus capacity: a host must still fit everything it holds
/// plus the hardware threshold, and a link everything routed over it plus the
/// bandwidth threshold.
#[derive(Clone, Copy, Debug, Default)]
pub struct CapacityAwarePolicy;

impl ProblemPolicy for CapacityAwarePolicy {
    fn node_problem(&self, c: &NodeCheck<'_>, th: &Thresholds) -> bool {
        DefaultPolicy.node_problem(c, th) || c.node.is_some_and(|n| !n.hw_caps.covers(c.allocated + th.hw))
    }

    fn communication_problem(&self, c: &LinkCheck<'_>, th: &Thresholds) -> bool {
        DefaultPolicy.communication_problem(c, th) || c.link.is_some_and(|l| c.allocated + th.bw > l.bandwidth)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ReasonerError {
    #[error("deployment is inconsistent with its application: {0}")]
    Inconsistent(#[from] ModelError),
}

/// Services of `dep` that must move, in application declaration order.
///
/// A service is included if its host suffers, or if it takes part in a
/// requirement between two distinct hosts whose link suffers; in the latter
/// case both ends are included. Every policy evaluation advances `counter`.
pub fn to_migrate(
    dep: &Deployment,
    app: &AppSpec,
    infra: &Infrastructure,
    th: &Thresholds,
    policy: &dyn ProblemPolicy,
    counter: &mut StepCounter,
) -> Result<Vec<ServiceDescriptor>, ModelError> {
    let mut flagged: BTreeSet<(usize, Id, Id)> = BTreeSet::new();
    let mut flag = |sid: &Id, node: &Id| -> Result<(), ModelError> {
        let pos = app.position(sid).ok_or_else(|| ModelError::UnknownService(sid.clone()))?;
        flagged.insert((pos, sid.clone(), node.clone()));
        Ok(())
    };

    for r in app.s2s() {
        let (Some(n1), Some(n2)) = (dep.placement.node_of(&r.from), dep.placement.node_of(&r.to)) else {
            continue;
        };
        if n1 == n2 {
            continue;
        }
        counter.tick();
        let check = LinkCheck { link: infra.link(n1, n2), requirement: r, allocated: dep.bw.get(n1, n2) };
        if policy.communication_problem(&check, th) {
            flag(&r.from, n1)?;
            flag(&r.to, n2)?;
        }
    }

    for a in dep.placement.iter() {
        let service = app.service(&a.service).ok_or_else(|| ModelError::UnknownService(a.service.clone()))?;
        counter.tick();
        let check = NodeCheck { node: infra.node(&a.node), service, allocated: dep.hw.get(&a.node) };
        if policy.node_problem(&check, th) {
            flag(&a.service, &a.node)?;
        }
    }

    Ok(flagged
        .into_iter()
        .map(|(pos, service, node)| ServiceDescriptor { service, node, hw_reqs: app.services()[pos].hw_reqs })
        .collect())
}

/// Removes the hardware held by the migrating services from their hosts.
pub fn free_hw_allocation(hw: &HwLedger, migrating: &[ServiceDescriptor]) -> Result<HwLedger, ModelError> {
    let mut out = hw.clone();
    for d in migrating {
        out.release(&d.node, d.hw_reqs)?;
    }
    Ok(out)
}

/// Removes the bandwidth of every cross-node interaction with at least one
/// migrating endpoint. Interactions between staying services keep theirs,
/// even when they share a link with a freed one.
pub fn free_bw_allocation(
    bw: &BwLedger,
    migrating: &[ServiceDescriptor],
    placement: &Placement,
    app: &AppSpec,
) -> Result<BwLedger, ModelError> {
    let moving: BTreeSet<&Id> = migrating.iter().map(|d| &d.service).collect();
    let mut out = bw.clone();
    for r in app.s2s() {
        if !moving.contains(&r.from) && !moving.contains(&r.to) {
            continue;
        }
        if let (Some(n1), Some(n2)) = (placement.node_of(&r.from), placement.node_of(&r.to)) {
            if n1 != n2 {
                out.release(n1, n2, r.min_bandwidth)?;
            }
        }
    }
    Ok(out)
}

/// The partially ground search handed to the engine.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialQuery {
    /// Services to place, in application declaration order.
    pub pending: Vec<Id>,
    pub placement: Placement,
    pub hw: HwLedger,
    pub bw: BwLedger,
}

pub fn partial_query(
    app: &AppSpec,
    migrating: &[ServiceDescriptor],
    dep: &Deployment,
) -> Result<PartialQuery, ModelError> {
    let mut pending: Vec<Id> = migrating.iter().map(|d| d.service.clone()).collect();
    pending.sort_by_key(|s| app.position(s));
    pending.dedup();
    Ok(PartialQuery {
        placement: dep.placement.without(&pending),
        hw: free_hw_allocation(&dep.hw, migrating)?,
        bw: free_bw_allocation(&dep.bw, migrating, &dep.placement, app)?,
        pending,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ReplacementError {
    #[error("no eligible placement for the migrating services")]
    NoEligiblePartialPlacement,
    #[error(transparent)]
    Inconsistent(#[from] ModelError),
}

/// Re-places only the migrating services, keeping every other assignment.
pub fn replacement(
    app: &AppSpec,
    migrating: &[ServiceDescriptor],
    dep: &Deployment,
    infra: &Infrastructure,
    cfg: &SearchConfig,
    counter: &mut StepCounter,
) -> Result<Deployment, ReplacementError> {
    if migrating.is_empty() {
        return Ok(dep.clone());
    }
    let q = partial_query(app, migrating, dep)?;
    solve_partial(app, &q, infra, cfg, counter)
}

fn solve_partial(
    app: &AppSpec,
    q: &PartialQuery,
    infra: &Infrastructure,
    cfg: &SearchConfig,
    counter: &mut StepCounter,
) -> Result<Deployment, ReplacementError> {
    match place_services(&q.pending, &q.hw, &q.bw, &q.placement, app, infra, cfg, counter) {
        Ok(sol) => Ok(Deployment { app: app.id().clone(), placement: sol.placement, hw: sol.hw, bw: sol.bw }),
        Err(EngineError::NoEligiblePlacement) => Err(ReplacementError::NoEligiblePartialPlacement),
        Err(EngineError::Model(e)) => Err(e.into()),
        Err(e @ EngineError::OracleBoundExceeded { .. }) => unreachable!("{e}"),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutcomeKind {
    /// Nothing suffers; the deployment stands as it was.
    Unchanged,
    /// Only these services (declaration order) were re-placed.
    PartialMigration(Vec<Id>),
    /// A complete placement was computed: first deployment or fallback.
    FullReplacement,
    /// No eligible placement exists; no deployment is held any more.
    Failed,
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutcomeKind::Unchanged => "unchanged",
            OutcomeKind::PartialMigration(_) => "partial-migration",
            OutcomeKind::FullReplacement => "full-replacement",
            OutcomeKind::Failed => "failed",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManagementOutcome {
    pub kind: OutcomeKind,
    pub deployment: Option<Deployment>,
    /// Steps spent on this decision alone.
    pub steps: u64,
    /// The partial search that was attempted, if any.
    pub partial_query: Option<PartialQuery>,
}

/// Everything a decision reads besides the deployment itself.
#[derive(Clone, Copy, Debug)]
pub struct Context<'a> {
    pub app: &'a AppSpec,
    pub infra: &'a Infrastructure,
    pub thresholds: Thresholds,
    pub policy: &'a dyn ProblemPolicy,
}

/// Manages one application given its current deployment, if any.
///
/// The caller hands over the deployment record (it is no longer held while
/// the decision runs) and stores whatever the outcome carries. Without a
/// deployment a first placement is searched for; with one a reasoning step
/// runs and falls back to a complete placement if the partial one fails.
pub fn decide(
    ctx: &Context<'_>,
    current: Option<Deployment>,
    counter: &mut StepCounter,
) -> Result<ManagementOutcome, ReasonerError> {
    let start = counter.steps();
    let cfg = SearchConfig::new(ctx.thresholds);
    let Some(dep) = current else {
        return Ok(full_placement(ctx, &cfg, counter, start, None));
    };

    let migrating = to_migrate(&dep, ctx.app, ctx.infra, &ctx.thresholds, ctx.policy, counter)?;
    if migrating.is_empty() {
        return Ok(ManagementOutcome {
            kind: OutcomeKind::Unchanged,
            deployment: Some(dep),
            steps: counter.steps() - start,
            partial_query: None,
        });
    }

    let q = partial_query(ctx.app, &migrating, &dep)?;
    drop(dep);
    match solve_partial(ctx.app, &q, ctx.infra, &cfg, counter) {
        Ok(new_dep) => Ok(ManagementOutcome {
            kind: OutcomeKind::PartialMigration(q.pending.clone()),
            deployment: Some(new_dep),
            steps: counter.steps() - start,
            partial_query: Some(q),
        }),
        Err(ReplacementError::NoEligiblePartialPlacement) => Ok(full_placement(ctx, &cfg, counter, start, Some(q))),
        Err(ReplacementError::Inconsistent(e)) => Err(e.into()),
    }
}

fn full_placement(
    ctx: &Context<'_>,
    cfg: &SearchConfig,
    counter: &mut StepCounter,
    start: u64,
    partial_query: Option<PartialQuery>,
) -> ManagementOutcome {
    let (kind, deployment) = match place_app(ctx.app, ctx.infra, cfg, counter) {
        Ok(sol) => (
            OutcomeKind::FullReplacement,
            Some(Deployment { app: ctx.app.id().clone(), placement: sol.placement, hw: sol.hw, bw: sol.bw }),
        ),
        Err(_) => (OutcomeKind::Failed, None),
    };
    ManagementOutcome { kind, deployment, steps: counter.steps() - start, partial_query }
}
