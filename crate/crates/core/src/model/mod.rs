//! Domain types shared by the search engine, the reasoner and the world store.

mod amount;
mod infra;
mod ledger;
mod validate;

use std::borrow::Borrow;
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

pub use amount::{Amount, AmountParseError, Capacity, DECIMALS};
pub use infra::{Infrastructure, LinkQos};
pub use ledger::{derive_ledgers, BwLedger, HwLedger};
pub use validate::{validate_eligible, validate_partial, Verdict, Violation};

/// Interned identifier (service, node, software label, thing or application).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Id(Arc<str>);

impl Id {
    pub fn new(s: &str) -> Self {
        Id(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for Id {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl std::ops::Deref for Id {
    type Target = str;

    fn deref(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Id {
    fn from(s: &str) -> Self {
        Id::new(s)
    }
}

impl From<String> for Id {
    fn from(s: String) -> Self {
        Id(Arc::from(s))
    }
}

impl fmt::Debug for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&*self.0, f)
    }
}

impl fmt::Display for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub type Labels = BTreeSet<Id>;

/// Builds a label set from string slices.
pub fn labels<'a>(items: impl IntoIterator<Item = &'a str>) -> Labels {
    items.into_iter().map(Id::new).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("unknown service `{0}`")]
    UnknownService(Id),
    #[error("unknown node `{0}`")]
    UnknownNode(Id),
    #[error("duplicate service `{0}`")]
    DuplicateService(Id),
    #[error("duplicate node `{0}`")]
    DuplicateNode(Id),
    #[error("duplicate requirement {0} -> {1}")]
    DuplicateRequirement(Id, Id),
    #[error("duplicate link {0} -> {1}")]
    DuplicateLink(Id, Id),
    #[error("service `{0}` placed more than once")]
    DuplicateAssignment(Id),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("allocation ledger underflow on {0}")]
    LedgerUnderflow(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ServiceSpec {
    pub id: Id,
    pub sw_reqs: Labels,
    pub hw_reqs: Amount,
    pub thing_reqs: Labels,
}

/// Directed service-to-service QoS requirement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct S2SReq {
    pub from: Id,
    pub to: Id,
    pub max_latency: Amount,
    pub min_bandwidth: Amount,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AppSpec {
    id: Id,
    services: Vec<ServiceSpec>,
    s2s: Vec<S2SReq>,
}

impl AppSpec {
    pub fn new(id: Id, services: Vec<ServiceSpec>, s2s: Vec<S2SReq>) -> Result<Self, ModelError> {
        let mut seen = HashSet::new();
        for s in &services {
            if !seen.insert(s.id.clone()) {
                return Err(ModelError::DuplicateService(s.id.clone()));
            }
        }
        let mut pairs = HashSet::new();
        for r in &s2s {
            for end in [&r.from, &r.to] {
                if !seen.contains(end) {
                    return Err(ModelError::UnknownService(end.clone()));
                }
            }
            if r.from == r.to {
                return Err(ModelError::InvalidValue(format!("requirement from `{}` to itself", r.from)));
            }
            if r.max_latency.is_zero() {
                return Err(ModelError::InvalidValue(format!("zero latency bound on {} -> {}", r.from, r.to)));
            }
            if !pairs.insert((r.from.clone(), r.to.clone())) {
                return Err(ModelError::DuplicateRequirement(r.from.clone(), r.to.clone()));
            }
        }
        Ok(AppSpec { id, services, s2s })
    }

    pub fn id(&self) -> &Id {
        &self.id
    }

    /// Services in declaration order.
    pub fn services(&self) -> &[ServiceSpec] {
        &self.services
    }

    pub fn s2s(&self) -> &[S2SReq] {
        &self.s2s
    }

    pub fn service(&self, id: &str) -> Option<&ServiceSpec> {
        self.services.iter().find(|s| s.id.as_str() == id)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.services.iter().position(|s| s.id.as_str() == id)
    }

    pub fn service_ids(&self) -> Vec<Id> {
        self.services.iter().map(|s| s.id.clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeSpec {
    pub id: Id,
    pub sw_caps: Labels,
    pub hw_caps: Capacity,
    pub thing_caps: Labels,
}

/// One direction of an end-to-end link.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkSpec {
    pub src: Id,
    pub dst: Id,
    pub latency: Amount,
    pub bandwidth: Amount,
}

/// Hardware and bandwidth headroom that must stay unallocated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Thresholds {
    pub hw: Amount,
    pub bw: Amount,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment {
    pub service: Id,
    pub node: Id,
}

impl Assignment {
    pub fn new(service: impl Into<Id>, node: impl Into<Id>) -> Self {
        Assignment { service: service.into(), node: node.into() }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "on({}, {})", self.service, self.node)
    }
}

/// Service-to-node assignments, most recently placed first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Placement(Vec<Assignment>);

impl Placement {
    pub fn new() -> Self {
        Placement(Vec::new())
    }

    /// Builds a placement from assignments already in most-recent-first order.
    pub fn from_assignments(assignments: Vec<Assignment>) -> Self {
        Placement(assignments)
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Assignment> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn node_of(&self, service: &str) -> Option<&Id> {
        self.0.iter().find(|a| a.service.as_str() == service).map(|a| &a.node)
    }

    /// Returns a new placement with `a` as its most recent assignment.
    pub fn prepended(&self, a: Assignment) -> Placement {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(a);
        v.extend(self.0.iter().cloned());
        Placement(v)
    }

    /// Drops the assignments of `services`, keeping the relative order of the rest.
    pub fn without(&self, services: &[Id]) -> Placement {
        Placement(self.0.iter().filter(|a| !services.contains(&a.service)).cloned().collect())
    }

    /// Order-insensitive view, convenient for set comparisons.
    pub fn sorted(&self) -> Vec<Assignment> {
        let mut v = self.0.clone();
        v.sort();
        v
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("]")
    }
}

/// A recorded deployment: the placement and the allocations it holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Deployment {
    pub app: Id,
    pub placement: Placement,
    pub hw: HwLedger,
    pub bw: BwLedger,
}

/// A service marked for migration, with its current host and hardware demand.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ServiceDescriptor {
    pub service: Id,
    pub node: Id,
    pub hw_reqs: Amount,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChangeEvent {
    UpsertNode(NodeSpec),
    RemoveNode(Id),
    UpsertLink(LinkSpec),
    RemoveLink(Id, Id),
}
