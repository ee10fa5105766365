use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::entity::EntityId;
use super::{load_scenario, step_world, Action, ScenarioConfig, SimError, StepRecord, World, WorldState};

/// Every snapshot since time 0, with the actions that produced each successor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    snapshots: Vec<WorldState>,
    actions: Vec<BTreeMap<EntityId, Action>>,
    records: Vec<StepRecord>,
    /// Step records cut off by rewinds, oldest fork first.
    archived: Vec<Vec<StepRecord>>,
}

impl History {
    pub fn new(initial: WorldState) -> Self {
        History {
            snapshots: vec![initial],
            actions: Vec::new(),
            records: Vec::new(),
            archived: Vec::new(),
        }
    }

    pub fn current(&self) -> &WorldState {
        self.snapshots.last().expect("history is never empty")
    }

    pub fn latest_time(&self) -> u64 {
        self.current().time
    }

    pub fn base_time(&self) -> u64 {
        self.snapshots[0].time
    }

    pub fn snapshot(&self, t: u64) -> Result<&WorldState, SimError> {
        let latest = self.latest_time();
        t.checked_sub(self.base_time())
            .and_then(|i| self.snapshots.get(i as usize))
            .ok_or(SimError::TimeOutOfRange { requested: t, latest })
    }

    /// Actions applied at step `t`.
    pub fn actions_at(&self, t: u64) -> Option<&BTreeMap<EntityId, Action>> {
        t.checked_sub(self.base_time())
            .and_then(|i| self.actions.get(i as usize))
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn archived(&self) -> &[Vec<StepRecord>] {
        &self.archived
    }

    pub fn push(&mut self, actions: BTreeMap<EntityId, Action>, record: StepRecord, next: WorldState) {
        self.actions.push(actions);
        self.records.push(record);
        self.snapshots.push(next);
    }

    /// Drops everything after `t`, archiving the cut step records.
    pub fn truncate(&mut self, t: u64) -> Result<(), SimError> {
        self.snapshot(t)?;
        let keep = (t - self.base_time()) as usize;
        self.snapshots.truncate(keep + 1);
        self.actions.truncate(keep);
        let cut = self.records.split_off(keep);
        if !cut.is_empty() {
            self.archived.push(cut);
        }
        Ok(())
    }
}

/// The recorded snapshot at `t`.
pub fn rewind(history: &History, t: u64) -> Result<WorldState, SimError> {
    history.snapshot(t).cloned()
}

/// A world plus its history.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub world: Arc<World>,
    pub history: History,
}

impl Simulation {
    pub fn new(config: ScenarioConfig, seed: u64) -> Result<Self, SimError> {
        let (world, state) = load_scenario(config, seed)?;
        Ok(Simulation {
            world,
            history: History::new(state),
        })
    }

    pub fn state(&self) -> &WorldState {
        self.history.current()
    }

    pub fn time(&self) -> u64 {
        self.history.latest_time()
    }

    pub fn step(&mut self, actions: BTreeMap<EntityId, Action>) -> &StepRecord {
        let (next, record) = step_world(&self.world, self.history.current(), &actions);
        self.history.push(actions, record, next);
        self.history.records.last().expect("just pushed")
    }

    /// Restores the snapshot at `t` and forks the timeline from there.
    pub fn rewind(&mut self, t: u64) -> Result<&WorldState, SimError> {
        self.history.truncate(t)?;
        Ok(self.history.current())
    }
}
