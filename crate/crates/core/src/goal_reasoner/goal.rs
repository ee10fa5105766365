use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::atom::Atom;
use crate::planner::Plan;
use crate::sim::{AgentKind, Entity, EntityId, Fieryness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalType {
    Unbury,
    Douse,
    Unblock,
    Scout,
}

impl GoalType {
    pub const ALL: [GoalType; 4] = [GoalType::Unbury, GoalType::Douse, GoalType::Unblock, GoalType::Scout];

    /// Conclusion atom produced by the goal-slot rule trees.
    pub fn as_str(self) -> &'static str {
        match self {
            GoalType::Unbury => "unbury",
            GoalType::Douse => "douse",
            GoalType::Unblock => "unblock",
            GoalType::Scout => "scout",
        }
    }

    pub fn from_atom(atom: &str) -> Option<GoalType> {
        GoalType::ALL.into_iter().find(|g| g.as_str() == atom)
    }

    /// Name used by the ordering tree.
    pub fn order_name(self) -> &'static str {
        match self {
            GoalType::Unbury => "rescueGoal",
            GoalType::Douse => "douseGoal",
            GoalType::Unblock => "clearGoal",
            GoalType::Scout => "scoutGoal",
        }
    }

    /// The ordering-tree vocabulary.
    pub fn order_vocabulary() -> Vec<Atom> {
        GoalType::ALL.iter().map(|g| Atom::from(g.order_name())).collect()
    }

    /// Whether `target` already satisfies the goal.
    pub fn achieved(self, target: &Entity) -> bool {
        match (self, target) {
            (GoalType::Unbury, e) => e.vitals().is_some_and(|v| !v.is_buried()),
            (GoalType::Douse, Entity::Building(b)) => b.fieryness == Fieryness::None,
            (GoalType::Unblock, Entity::Road(r)) => !r.blocked,
            (GoalType::Scout, Entity::Building(b)) => b.scouted,
            _ => false,
        }
    }

    /// Whether `target` can never satisfy the goal: a dead victim or a destroyed building.
    pub fn lost(self, target: &Entity) -> bool {
        match (self, target) {
            (GoalType::Unbury, e) => e.vitals().is_none_or(|v| v.is_dead()),
            (GoalType::Douse, Entity::Building(b)) => b.fieryness == Fieryness::Destroyed,
            (GoalType::Douse, _) => true,
            (GoalType::Unblock, e) => e.as_road().is_none(),
            (GoalType::Scout, e) => e.as_building().is_none(),
        }
    }
}

impl fmt::Display for GoalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which agent kinds may pursue each goal type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapabilityMap(BTreeMap<GoalType, BTreeSet<AgentKind>>);

impl Default for CapabilityMap {
    fn default() -> Self {
        use AgentKind::*;
        CapabilityMap(BTreeMap::from([
            (GoalType::Unbury, BTreeSet::from([Ambulance])),
            (GoalType::Unblock, BTreeSet::from([Police])),
            (GoalType::Douse, BTreeSet::from([FireBrigade])),
            (GoalType::Scout, BTreeSet::from([Ambulance, Police, FireBrigade])),
        ]))
    }
}

impl CapabilityMap {
    pub fn allows(&self, goal: GoalType, kind: AgentKind) -> bool {
        self.0.get(&goal).is_some_and(|k| k.contains(&kind))
    }

    pub fn kinds(&self, goal: GoalType) -> impl Iterator<Item = AgentKind> + '_ {
        self.0.get(&goal).into_iter().flatten().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoalId(pub u64);

impl fmt::Display for GoalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GoalMode {
    Formulated,
    Selected,
    Expanded,
    Committed,
    Dispatched,
    Finished,
    Dropped,
    Deferred,
}

impl GoalMode {
    pub const ALL: [GoalMode; 8] = [
        GoalMode::Formulated,
        GoalMode::Selected,
        GoalMode::Expanded,
        GoalMode::Committed,
        GoalMode::Dispatched,
        GoalMode::Finished,
        GoalMode::Dropped,
        GoalMode::Deferred,
    ];

    /// Neither finished nor dropped.
    pub fn is_active(self) -> bool {
        !matches!(self, GoalMode::Finished | GoalMode::Dropped)
    }

    /// Holds an agent.
    pub fn is_assigned(self) -> bool {
        matches!(
            self,
            GoalMode::Selected | GoalMode::Expanded | GoalMode::Committed | GoalMode::Dispatched
        )
    }
}

/// The lifecycle graph: the forward chain, the failure loop back to
/// expansion, preemption back to formulation, deferral and its return, and
/// dropping from any unfinished mode.
pub fn transition_allowed(from: GoalMode, to: GoalMode) -> bool {
    use GoalMode::*;
    matches!(
        (from, to),
        (Formulated, Selected)
            | (Selected, Expanded)
            | (Expanded, Committed)
            | (Committed, Dispatched)
            | (Dispatched, Finished)
            | (Dispatched, Expanded)
            | (Selected | Expanded | Committed | Dispatched, Formulated)
            | (Formulated | Selected | Expanded | Committed | Dispatched, Deferred)
            | (Deferred, Formulated)
    ) || (to == Dropped && from.is_active())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub id: GoalId,
    pub goal_type: GoalType,
    pub target: EntityId,
    pub mode: GoalMode,
    pub assigned_agent: Option<EntityId>,
    /// Candidate plans, cheapest first, while expanded.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expansions: Vec<Plan>,
    pub plan: Option<Plan>,
    /// Index of the next plan action to dispatch.
    #[serde(default)]
    pub cursor: usize,
    pub created_at: u64,
}

impl Goal {
    pub fn new(id: GoalId, goal_type: GoalType, target: EntityId, created_at: u64) -> Self {
        Goal {
            id,
            goal_type,
            target,
            mode: GoalMode::Formulated,
            assigned_agent: None,
            expansions: Vec::new(),
            plan: None,
            cursor: 0,
            created_at,
        }
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.goal_type, self.target)
    }
}

/// One logged mode change. `from` is `None` when the goal is created.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalTransition {
    pub time: u64,
    pub goal: GoalId,
    pub from: Option<GoalMode>,
    pub to: GoalMode,
    pub reason: String,
}
