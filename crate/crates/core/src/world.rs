//! The mutable knowledge base: application specs, the monitored
//! infrastructure, at most one deployment per application, and step counters.
//!
//! Infrastructure events never touch deployments. Stale deployments are
//! exactly what [`World::manage`] repairs.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::engine::StepCounter;
use crate::factfile::ProblemFile;
use crate::model::{AppSpec, ChangeEvent, Deployment, Id, Infrastructure, ModelError, Thresholds};
use crate::reasoner::{decide, Context, DefaultPolicy, ManagementOutcome, ProblemPolicy, ReasonerError};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum WorldError {
    #[error("unknown application `{0}`")]
    UnknownApp(Id),
    #[error("application `{0}` is already loaded")]
    DuplicateApp(Id),
    #[error(transparent)]
    Referential(#[from] ModelError),
    #[error(transparent)]
    Reasoner(#[from] ReasonerError),
}

#[derive(Clone, Debug)]
pub struct World {
    apps: BTreeMap<Id, AppSpec>,
    infra: Infrastructure,
    thresholds: Thresholds,
    deployments: BTreeMap<Id, Deployment>,
    counter: StepCounter,
    cumulative: u64,
    policy: Arc<dyn ProblemPolicy>,
}

impl World {
    pub fn new(infra: Infrastructure, thresholds: Thresholds) -> Self {
        World {
            apps: BTreeMap::new(),
            infra,
            thresholds,
            deployments: BTreeMap::new(),
            counter: StepCounter::new(),
            cumulative: 0,
            policy: Arc::new(DefaultPolicy),
        }
    }

    /// A world with the file's infrastructure, thresholds and application.
    pub fn load(problem: ProblemFile) -> Result<Self, WorldError> {
        let thresholds = problem.thresholds();
        let mut w = World::new(problem.infra, thresholds);
        if let Some(app) = problem.app {
            w.add_app(app)?;
        }
        Ok(w)
    }

    pub fn with_policy(mut self, policy: Arc<dyn ProblemPolicy>) -> Self {
        self.policy = policy;
        self
    }

    pub fn add_app(&mut self, app: AppSpec) -> Result<(), WorldError> {
        if self.apps.contains_key(app.id()) {
            return Err(WorldError::DuplicateApp(app.id().clone()));
        }
        self.apps.insert(app.id().clone(), app);
        Ok(())
    }

    pub fn app(&self, id: &str) -> Option<&AppSpec> {
        self.apps.get(id)
    }

    pub fn apps(&self) -> impl Iterator<Item = &AppSpec> {
        self.apps.values()
    }

    pub fn infra(&self) -> &Infrastructure {
        &self.infra
    }

    pub fn thresholds(&self) -> Thresholds {
        self.thresholds
    }

    pub fn set_thresholds(&mut self, th: Thresholds) {
        self.thresholds = th;
    }

    pub fn deployment(&self, app: &str) -> Option<&Deployment> {
        self.deployments.get(app)
    }

    /// Steps consumed by the most recent management query.
    pub fn last_steps(&self) -> u64 {
        self.counter.steps()
    }

    /// Steps consumed by all management queries so far.
    pub fn cumulative_steps(&self) -> u64 {
        self.cumulative
    }

    /// Applies one infrastructure change. Removing something absent is a no-op.
    pub fn apply_event(&mut self, event: &ChangeEvent) -> Result<(), WorldError> {
        match event {
            ChangeEvent::UpsertNode(n) => self.infra.upsert_node(n.clone()),
            ChangeEvent::RemoveNode(id) => {
                self.infra.remove_node(id);
            }
            ChangeEvent::UpsertLink(l) => self.infra.upsert_link(l.clone())?,
            ChangeEvent::RemoveLink(s, d) => {
                self.infra.remove_link(s, d);
            }
        }
        Ok(())
    }

    /// Runs one management query for `app_id` and records its outcome.
    pub fn manage(&mut self, app_id: &str) -> Result<ManagementOutcome, WorldError> {
        let app = self.apps.get(app_id).ok_or_else(|| WorldError::UnknownApp(app_id.into()))?;
        self.counter.reset();
        let current = self.deployments.remove(app_id);
        let ctx = Context { app, infra: &self.infra, thresholds: self.thresholds, policy: self.policy.as_ref() };
        let outcome = decide(&ctx, current, &mut self.counter);
        self.cumulative += self.counter.steps();
        let outcome = outcome?;
        if let Some(dep) = &outcome.deployment {
            self.deployments.insert(app.id().clone(), dep.clone());
        }
        Ok(outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factfile::parse_problem;
    use crate::model::{Amount, LinkSpec};
    use crate::reasoner::OutcomeKind;

    fn example() -> World {
        let mut p = parse_problem(include_str!("../data/vr_infra.pl")).unwrap();
        p.app = parse_problem(include_str!("../data/vr_app.pl")).unwrap().app;
        World::load(p).unwrap()
    }

    #[test]
    fn load_counts() {
        let w = example();
        assert_eq!(w.apps().count(), 1);
        assert_eq!(w.infra().node_count(), 5);
        assert_eq!(w.infra().link_count(), 20);
        assert_eq!(w.last_steps(), 0);
        assert!(w.deployment("vrApp").is_none());

        let empty = World::load(parse_problem("").unwrap()).unwrap();
        assert_eq!(empty.infra().node_count(), 0);
    }

    #[test]
    fn duplicate_app_rejected() {
        let mut w = example();
        let app = w.app("vrApp").unwrap().clone();
        assert_eq!(w.add_app(app), Err(WorldError::DuplicateApp("vrApp".into())));
    }

    #[test]
    fn unknown_app() {
        let mut w = example();
        assert_eq!(w.manage("nope").unwrap_err(), WorldError::UnknownApp("nope".into()));
    }

    #[test]
    fn remove_node_cascades_links() {
        let mut w = example();
        w.apply_event(&ChangeEvent::RemoveNode("cloud".into())).unwrap();
        assert_eq!(w.infra().node_count(), 4);
        assert_eq!(w.infra().link_count(), 12);
        w.apply_event(&ChangeEvent::RemoveNode("cloud".into())).unwrap();
        assert_eq!(w.infra().link_count(), 12);
    }

    #[test]
    fn remove_link_is_idempotent() {
        let mut w = example();
        let e = ChangeEvent::RemoveLink("cloud".into(), "cabinetserver".into());
        w.apply_event(&e).unwrap();
        w.apply_event(&e).unwrap();
        assert_eq!(w.infra().link_count(), 19);
    }

    #[test]
    fn link_to_unknown_node_is_referential_error() {
        let mut w = example();
        let e = ChangeEvent::UpsertLink(LinkSpec {
            src: "cloud".into(),
            dst: "mars".into(),
            latency: Amount::from_units(1),
            bandwidth: Amount::from_units(1),
        });
        assert_eq!(w.apply_event(&e), Err(WorldError::Referential(ModelError::UnknownNode("mars".into()))));
    }

    #[test]
    fn events_do_not_touch_deployments() {
        let mut w = example();
        w.manage("vrApp").unwrap();
        let before = w.deployment("vrApp").cloned();
        w.apply_event(&ChangeEvent::RemoveNode("cloud".into())).unwrap();
        assert_eq!(w.deployment("vrApp").cloned(), before);
    }

    #[test]
    fn second_query_without_events_is_unchanged() {
        let mut w = example();
        let first = w.manage("vrApp").unwrap();
        assert_eq!(first.kind, OutcomeKind::FullReplacement);
        let first_steps = w.last_steps();
        let second = w.manage("vrApp").unwrap();
        assert_eq!(second.kind, OutcomeKind::Unchanged);
        assert_eq!(second.deployment, first.deployment);
        assert_eq!(w.last_steps(), second.steps);
        assert_eq!(w.cumulative_steps(), first_steps + second.steps);
    }
}
