//! Training sessions.
//!
//! A [`Session`] binds a simulation, the command-centre belief, the goal
//! reasoner and the knowledge base. Every step runs the same cycle: simulate,
//! merge observations into the belief, then let the reasoner formulate,
//! order, select and advance goals. Each step's belief and reasoner state is
//! kept so the session can be queried at, or rewound to, any earlier step.
//! Rewinding forks the timeline: the cut step records are archived and
//! re-simulation runs under whatever rules are current.
//!
//! Rule changes use two phases. [`Session::begin_rule_update`] builds an
//! [`UpdateDraft`] from an entity's case at a chosen time without touching
//! any tree; [`Session::commit_rule_update`] applies the chosen conditions
//! and rolls back if any cornerstone or ordering check fails.

mod report;
mod update;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use report::{RunReport, TimingStats};
pub use update::{AuditRecord, CommitSummary, TreeRef, UpdateDraft, UpdateSubject};

use crate::atom::Atom;
use crate::frame_kb::{FrameSet, KbError};
use crate::goal_reasoner::{GoalId, GoalMode, GoalReasoner, GoalTransition, GoalType, ORDER_FRAME, ORDER_SLOT};
use crate::planner::{emit_pddl_problem, Plan, PlanError, RoadGraph};
use crate::rdr::{ordering_conflicts, ordering_cycle, UpdateError};
use crate::sim::{merge_belief, observe, Action, Belief, EntityId, ScenarioConfig, SimError, Simulation, StepRecord};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("`{0}` requires a paused session")]
    NotPaused(&'static str),
    #[error("time {requested} is outside the recorded range 0..={latest}")]
    TimeOutOfRange { requested: u64, latest: u64 },
    #[error("`{entity}` is not in the belief at time {time}")]
    UnknownEntity { entity: EntityId, time: u64 },
    #[error("unknown rule tree `{0}`")]
    UnknownTree(String),
    #[error("`{entity}` is not classified by `{tree}`")]
    WrongTree { entity: EntityId, tree: String },
    #[error("unknown goal type `{0}`")]
    UnknownGoalType(String),
    #[error("`{value}` is outside the range of `{tree}`")]
    OutOfRange { value: Atom, tree: String },
    #[error("no pending update {0}")]
    UnknownUpdate(u64),
    #[error("no condition selected")]
    EmptySelection,
    #[error("condition index {0} is out of range")]
    BadLiteralIndex(usize),
    #[error("rule update rejected: {0}")]
    Update(#[from] UpdateError),
    #[error("inconsistent rules: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Paused,
}

/// Timeline commands. Serialized as `{"command": "step", "arg": 5}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "command", content = "arg", rename_all = "snake_case")]
pub enum Command {
    Start,
    Pause,
    Resume,
    Step(u64),
    Rewind(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlOutcome {
    pub status: Status,
    pub time: u64,
}

/// Reasoner-side state recorded after the tick at `time`.
#[derive(Debug, Clone)]
struct StepFrame {
    belief: Belief,
    reasoner: GoalReasoner,
    /// Actions the tick chose for the step from `time` to `time + 1`.
    pending: BTreeMap<EntityId, Action>,
    reasoning: Duration,
    committed: Vec<Plan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    StepCompleted {
        time: u64,
        hash: String,
        executed: usize,
        rejected: usize,
    },
    GoalTransition(GoalTransition),
    RuleCommitted(AuditRecord),
    Rewound {
        time: u64,
    },
    StatusChanged {
        status: Status,
        time: u64,
    },
    RulesetLoaded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedEvent {
    pub seq: u64,
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalView {
    pub id: GoalId,
    pub goal_type: GoalType,
    pub target: EntityId,
    pub mode: GoalMode,
    pub assigned_agent: Option<EntityId>,
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeView {
    pub owner: String,
    pub slot: String,
    pub rules: usize,
    pub text: String,
}

/// Read-only view of a session at one step. The belief is the command
/// centre's, never ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: u64,
    pub latest: u64,
    pub status: Status,
    pub belief: Belief,
    pub goals: Vec<GoalView>,
    pub trees: Vec<TreeView>,
    pub timing: TimingStats,
}

/// Parses a ruleset and checks every tree against its cornerstones and the
/// ordering tree for antisymmetry and cycles.
pub fn validate_ruleset(text: &str) -> Result<FrameSet, ServiceError> {
    let kb = FrameSet::parse(text)?;
    for (owner, slot, tree) in kb.trees() {
        let violations = tree.verify_cornerstones();
        if let Some(v) = violations.first() {
            return Err(ServiceError::Inconsistent(format!(
                "{owner}.{slot}: cornerstone `{}` no longer concludes `{}`",
                v.cornerstone, v.expected
            )));
        }
    }
    if let Some(tree) = kb.tree(ORDER_FRAME, ORDER_SLOT) {
        check_ordering(tree)?;
    }
    Ok(kb)
}

fn check_ordering(tree: &crate::rdr::RdrTree) -> Result<(), ServiceError> {
    let vocab = GoalType::order_vocabulary();
    if let Some((a, b)) = ordering_conflicts(tree, &vocab).into_iter().next() {
        return Err(ServiceError::Inconsistent(format!(
            "ordering is not antisymmetric on ({a}, {b})"
        )));
    }
    if let Some(cycle) = ordering_cycle(tree, &vocab) {
        let names: Vec<&str> = cycle.iter().map(Atom::as_str).collect();
        return Err(ServiceError::Inconsistent(format!(
            "ordering cycle {}",
            names.join(" < ")
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    sim: Simulation,
    kb: FrameSet,
    frames: Vec<StepFrame>,
    status: Status,
    drafts: BTreeMap<u64, UpdateDraft>,
    next_update: u64,
    audit: Vec<AuditRecord>,
    events: Vec<LoggedEvent>,
}

impl Session {
    /// Loads the scenario and ruleset and runs the reasoner once at time 0.
    pub fn new(
        id: impl Into<String>,
        scenario: ScenarioConfig,
        ruleset: &str,
        seed: u64,
    ) -> Result<Self, ServiceError> {
        let kb = validate_ruleset(ruleset)?;
        let sim = Simulation::new(scenario, seed)?;
        let mut session = Session {
            id: id.into(),
            sim,
            kb,
            frames: Vec::new(),
            status: Status::Paused,
            drafts: BTreeMap::new(),
            next_update: 0,
            audit: Vec::new(),
            events: Vec::new(),
        };
        let belief = session.sense(&Belief::default());
        let frame = session.tick(belief, GoalReasoner::new());
        session.frames.push(frame);
        Ok(session)
    }

    pub fn time(&self) -> u64 {
        self.sim.time()
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn kb(&self) -> &FrameSet {
        &self.kb
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn reasoner(&self) -> &GoalReasoner {
        &self.current().reasoner
    }

    pub fn belief(&self) -> &Belief {
        &self.current().belief
    }

    /// Actions chosen for the next step.
    pub fn pending_actions(&self) -> &BTreeMap<EntityId, Action> {
        &self.current().pending
    }

    pub fn audit_log(&self) -> &[AuditRecord] {
        &self.audit
    }

    pub fn drafts(&self) -> impl Iterator<Item = &UpdateDraft> {
        self.drafts.values()
    }

    pub fn events(&self) -> &[LoggedEvent] {
        &self.events
    }

    /// Events with `seq >= from`.
    pub fn events_since(&self, from: u64) -> &[LoggedEvent] {
        let i = self.events.partition_point(|e| e.seq < from);
        &self.events[i..]
    }

    /// Formulate, order and select time of every step on the current timeline.
    pub fn reasoning_times(&self) -> Vec<Duration> {
        self.frames.iter().map(|f| f.reasoning).collect()
    }

    fn current(&self) -> &StepFrame {
        self.frames.last().expect("a session always has its initial step")
    }

    fn frame_at(&self, t: u64) -> Result<&StepFrame, ServiceError> {
        self.frames.get(t as usize).ok_or(ServiceError::TimeOutOfRange {
            requested: t,
            latest: self.time(),
        })
    }

    fn log(&mut self, event: Event) {
        let seq = self.events.last().map_or(0, |e| e.seq + 1);
        self.events.push(LoggedEvent { seq, event });
    }

    /// Merges what every living agent currently observes into `prior`.
    fn sense(&self, prior: &Belief) -> Belief {
        let state = self.sim.state();
        let observations: Vec<_> = state
            .agents()
            .filter(|(_, a)| !a.vitals.is_dead())
            .map(|(id, _)| observe(&self.sim.world, state, id).expect("agents are in the state"))
            .collect();
        merge_belief(prior, &observations, state.time)
    }

    fn tick(&mut self, mut belief: Belief, mut reasoner: GoalReasoner) -> StepFrame {
        let now = self.sim.time();
        let seen = reasoner.ledger.transitions().len();
        let speed = self.sim.world.dynamics().agent_speed;
        let report = reasoner.tick(now, &mut belief, &self.kb, &self.sim.world.map, speed);
        for t in reasoner.ledger.transitions()[seen..].iter().cloned() {
            self.log(Event::GoalTransition(t));
        }
        StepFrame {
            belief,
            reasoner,
            pending: report.actions,
            reasoning: report.reasoning,
            committed: report.committed,
        }
    }

    /// Advances the world one step and runs the reasoner at the new time.
    fn step_once(&mut self) -> StepRecord {
        let (pending, prior, reasoner) = {
            let f = self.current();
            (f.pending.clone(), f.belief.clone(), f.reasoner.clone())
        };
        let record = self.sim.step(pending).clone();
        self.log(Event::StepCompleted {
            time: record.time + 1,
            hash: record.hash.clone(),
            executed: record.executed.len(),
            rejected: record.rejected.len(),
        });
        let belief = self.sense(&prior);
        let frame = self.tick(belief, reasoner);
        self.frames.push(frame);
        record
    }

    /// While running, takes one step; pauses on reaching the scenario's step limit.
    pub fn run_tick(&mut self) -> Option<StepRecord> {
        if self.status != Status::Running {
            return None;
        }
        if self.time() >= self.sim.world.config.limits.steps {
            self.set_status(Status::Paused);
            return None;
        }
        Some(self.step_once())
    }

    fn set_status(&mut self, status: Status) {
        if self.status != status {
            self.status = status;
            let time = self.time();
            self.log(Event::StatusChanged { status, time });
        }
    }

    pub fn control(&mut self, command: Command) -> Result<ControlOutcome, ServiceError> {
        match command {
            Command::Start | Command::Resume => self.set_status(Status::Running),
            Command::Pause => self.set_status(Status::Paused),
            Command::Step(n) => {
                if self.status == Status::Running {
                    return Err(ServiceError::NotPaused("step"));
                }
                for _ in 0..n {
                    self.step_once();
                }
            }
            Command::Rewind(t) => {
                if self.status == Status::Running {
                    return Err(ServiceError::NotPaused("rewind"));
                }
                self.frame_at(t)?;
                self.sim.rewind(t)?;
                self.frames.truncate(t as usize + 1);
                self.drafts.retain(|_, d| d.time <= t);
                self.log(Event::Rewound { time: t });
            }
        }
        Ok(ControlOutcome {
            status: self.status,
            time: self.time(),
        })
    }

    /// State at `t`, or at the current time.
    pub fn query_state(&self, t: Option<u64>) -> Result<Snapshot, ServiceError> {
        let time = t.unwrap_or_else(|| self.time());
        let frame = self.frame_at(time)?;
        Ok(Snapshot {
            time,
            latest: self.time(),
            status: self.status,
            belief: frame.belief.clone(),
            goals: goal_views(&frame.reasoner),
            trees: self.tree_views(),
            timing: TimingStats::from_durations(&self.reasoning_times()),
        })
    }

    /// Goals at `t`, or at the current time.
    pub fn goals(&self, t: Option<u64>) -> Result<Vec<GoalView>, ServiceError> {
        let frame = self.frame_at(t.unwrap_or_else(|| self.time()))?;
        Ok(goal_views(&frame.reasoner))
    }

    pub fn tree_views(&self) -> Vec<TreeView> {
        self.kb
            .trees()
            .map(|(owner, slot, tree)| TreeView {
                owner: owner.to_string(),
                slot: slot.to_string(),
                rules: tree.len(),
                text: tree.render(0),
            })
            .collect()
    }

    pub fn tree_view(&self, tree: &str) -> Result<TreeView, ServiceError> {
        let r = TreeRef::parse(tree);
        let t = self
            .kb
            .tree(&r.owner, &r.slot)
            .ok_or_else(|| ServiceError::UnknownTree(tree.to_string()))?;
        Ok(TreeView {
            owner: r.owner,
            slot: r.slot,
            rules: t.len(),
            text: t.render(0),
        })
    }

    /// Writes the knowledge base in canonical form.
    pub fn save_ruleset(&self, path: impl AsRef<Path>) -> Result<(), ServiceError> {
        std::fs::write(path, self.kb.serialize())?;
        Ok(())
    }

    /// Replaces the knowledge base if the file parses and passes every consistency check.
    pub fn load_ruleset(&mut self, path: impl AsRef<Path>) -> Result<(), ServiceError> {
        let text = std::fs::read_to_string(path)?;
        self.load_ruleset_text(&text)
    }

    pub fn load_ruleset_text(&mut self, text: &str) -> Result<(), ServiceError> {
        self.kb = validate_ruleset(text)?;
        self.drafts.clear();
        self.log(Event::RulesetLoaded);
        Ok(())
    }

    /// PDDL problems for the plans committed at `t`, named `t<time>_<goal>_<agent>.pddl`.
    pub fn pddl_problems(&self, t: u64) -> Result<Vec<(String, String)>, ServiceError> {
        let frame = self.frame_at(t)?;
        let graph = RoadGraph::project(&self.sim.world.map, &frame.belief);
        frame
            .committed
            .iter()
            .map(|plan| {
                let goal = frame
                    .reasoner
                    .ledger
                    .goal(plan.goal)
                    .expect("committed goals are in the ledger");
                let text = emit_pddl_problem(
                    plan.goal,
                    goal.goal_type,
                    &goal.target,
                    &plan.agent,
                    &frame.belief,
                    &graph,
                )?;
                Ok((format!("t{t}_{}_{}.pddl", plan.goal, plan.agent), text))
            })
            .collect()
    }

    /// Counts over the current timeline.
    pub fn report(&self) -> RunReport {
        RunReport::new(self)
    }
}

fn goal_views(reasoner: &GoalReasoner) -> Vec<GoalView> {
    reasoner
        .ledger
        .goals()
        .map(|g| GoalView {
            id: g.id,
            goal_type: g.goal_type,
            target: g.target.clone(),
            mode: g.mode,
            assigned_agent: g.assigned_agent.clone(),
            created_at: g.created_at,
        })
        .collect()
}
