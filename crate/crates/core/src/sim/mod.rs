//! Deterministic discrete-time disaster simulator.
//!
//! One step applies, in this order: agent movement, terminal actions
//! (douse, unbury, clear, scout), fire escalation and seeded spread, burial
//! hit-point decay, and finally advances the clock. The same state and
//! action map always produce the same successor, bit for bit.

mod belief;
mod entity;
pub mod generate;
mod history;
mod map;
mod scenario;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use belief::{merge_belief, observe, Belief, BeliefEntry, Observation};
pub use entity::{
    AgentKind, Building, Entity, EntityId, Fieryness, Health, Human, MapNode, PlatoonAgent, Road, Vitals,
};
pub use history::{rewind, History, Simulation};
pub use map::{MapEdge, MapTopology};
pub use scenario::{
    AgentSpec, BuildingSpec, Dynamics, EntityCounts, EntitySpec, HumanSpec, Limits, MapSpec, NodeSpec, RoadSpec,
    ScenarioConfig,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("`{entity}` references missing node {node}")]
    DanglingNode { entity: String, node: u32 },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("`{0}` is not a valid entity id")]
    BadId(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("malformed scenario: {0}")]
    Format(String),
    #[error("{0}")]
    Io(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("time {requested} is outside the recorded range 0..={latest}")]
    TimeOutOfRange { requested: u64, latest: u64 },
}

/// One agent command for one step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    /// Traverse the listed nodes in order, at most `agent_speed` hops.
    Move {
        path: Vec<MapNode>,
    },
    Douse {
        target: EntityId,
    },
    Unbury {
        target: EntityId,
    },
    Clear {
        target: EntityId,
    },
    Scout {
        target: EntityId,
    },
    Rest,
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::Move { .. } => "move",
            Action::Douse { .. } => "douse",
            Action::Unbury { .. } => "unbury",
            Action::Clear { .. } => "clear",
            Action::Scout { .. } => "scout",
            Action::Rest => "rest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutedAction {
    pub agent: EntityId,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedAction {
    pub agent: EntityId,
    pub action: Action,
    pub reason: String,
}

/// What happened during the step that started at `time`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub time: u64,
    pub executed: Vec<ExecutedAction>,
    pub rejected: Vec<RejectedAction>,
    /// Hash of the resulting state at `time + 1`.
    pub hash: String,
}

/// Static part of a loaded scenario.
#[derive(Debug, Clone)]
pub struct World {
    pub config: ScenarioConfig,
    pub map: MapTopology,
    spread_targets: BTreeMap<EntityId, Vec<EntityId>>,
}

impl World {
    pub fn dynamics(&self) -> &Dynamics {
        &self.config.dynamics
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub time: u64,
    pub entities: BTreeMap<EntityId, Entity>,
    pub rng: ChaCha8Rng,
}

impl WorldState {
    /// SHA-256 over the canonical JSON encoding, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("state serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn entity(&self, id: &EntityId) -> Option<&Entity> {
        self.entities.get(id)
    }

    pub fn agents(&self) -> impl Iterator<Item = (&EntityId, &PlatoonAgent)> {
        self.entities.iter().filter_map(|(id, e)| e.as_agent().map(|a| (id, a)))
    }

    pub fn counts(&self) -> EntityCounts {
        let mut c = EntityCounts {
            civilians: 0,
            agents: 0,
            buildings: 0,
            roads: 0,
        };
        for e in self.entities.values() {
            match e {
                Entity::Building(_) => c.buildings += 1,
                Entity::Road(_) => c.roads += 1,
                Entity::Human(_) => c.civilians += 1,
                Entity::Agent(_) => c.agents += 1,
            }
        }
        c
    }
}

/// Validates `config` and builds the world and its state at time 0.
pub fn load_scenario(config: ScenarioConfig, seed: u64) -> Result<(Arc<World>, WorldState), SimError> {
    config.validate()?;
    let map = MapTopology::new(&config.map);
    let entities = config.initial_entities();

    let mut by_node: BTreeMap<MapNode, Vec<EntityId>> = BTreeMap::new();
    for (id, e) in &entities {
        if let Entity::Building(b) = e {
            by_node.entry(b.node).or_default().push(id.clone());
        }
    }
    let mut spread_targets = BTreeMap::new();
    for (id, e) in &entities {
        if let Entity::Building(b) = e {
            let mut near: Vec<EntityId> = map
                .hops_within(b.node, config.dynamics.spread_radius)
                .keys()
                .flat_map(|n| by_node.get(n).into_iter().flatten())
                .filter(|other| *other != id)
                .cloned()
                .collect();
            near.sort();
            spread_targets.insert(id.clone(), near);
        }
    }

    let state = WorldState {
        time: 0,
        entities,
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    Ok((
        Arc::new(World {
            config,
            map,
            spread_targets,
        }),
        state,
    ))
}

/// Advances `state` by one step under `actions`.
///
/// Illegal actions are skipped and reported in the record's `rejected` list.
pub fn step_world(world: &World, state: &WorldState, actions: &BTreeMap<EntityId, Action>) -> (WorldState, StepRecord) {
    let mut next = state.clone();
    let mut executed = Vec::new();
    let mut rejected = Vec::new();
    for e in next.entities.values_mut() {
        if let Entity::Agent(a) = e {
            a.current_action = None;
        }
    }

    let moves = actions.iter().filter(|(_, a)| matches!(a, Action::Move { .. }));
    let others = actions.iter().filter(|(_, a)| !matches!(a, Action::Move { .. }));
    let mut doused = BTreeSet::new();
    for (agent, action) in moves.chain(others) {
        match apply_action(world, &mut next, agent, action, &mut doused) {
            Ok(()) => {
                if let Some(Entity::Agent(a)) = next.entities.get_mut(agent) {
                    a.current_action = Some(action.clone());
                }
                executed.push(ExecutedAction {
                    agent: agent.clone(),
                    action: action.clone(),
                });
            }
            Err(reason) => rejected.push(RejectedAction {
                agent: agent.clone(),
                action: action.clone(),
                reason,
            }),
        }
    }

    advance_fires(world, &mut next, &doused);
    let decay = world.dynamics().burial_decay;
    for e in next.entities.values_mut() {
        let vitals = match e {
            Entity::Human(h) => &mut h.vitals,
            Entity::Agent(a) => &mut a.vitals,
            _ => continue,
        };
        if vitals.is_buried() && !vitals.is_dead() {
            vitals.hp = vitals.hp.saturating_sub(decay);
        }
    }
    next.time += 1;

    let record = StepRecord {
        time: state.time,
        executed,
        rejected,
        hash: next.hash(),
    };
    (next, record)
}

fn apply_action(
    world: &World,
    state: &mut WorldState,
    agent_id: &EntityId,
    action: &Action,
    doused: &mut BTreeSet<EntityId>,
) -> Result<(), String> {
    let agent = match state.entities.get(agent_id) {
        Some(Entity::Agent(a)) => a.clone(),
        Some(_) => return Err("not a platoon agent".into()),
        None => return Err("unknown agent".into()),
    };
    if matches!(action, Action::Rest) {
        return Ok(());
    }
    if agent.vitals.is_dead() {
        return Err("agent is dead".into());
    }
    if agent.vitals.is_buried() {
        return Err("agent is buried".into());
    }
    let require_kind = |kind: AgentKind| {
        if agent.kind == kind {
            Ok(())
        } else {
            Err(format!("{} cannot {}", agent.kind.as_str(), action.name()))
        }
    };

    match action {
        Action::Rest => Ok(()),
        Action::Move { path } => {
            if path.is_empty() {
                return Err("empty path".into());
            }
            if path.len() > world.dynamics().agent_speed as usize {
                return Err("path exceeds agent speed".into());
            }
            let mut at = agent.node;
            for &hop in path {
                let open = world.map.neighbours(at).iter().any(|(m, road)| {
                    *m == hop && matches!(state.entities.get(road), Some(Entity::Road(r)) if !r.blocked)
                });
                if !open {
                    return Err(format!("no open road {at} -> {hop}"));
                }
                at = hop;
            }
            if let Some(Entity::Agent(a)) = state.entities.get_mut(agent_id) {
                a.node = at;
            }
            Ok(())
        }
        Action::Douse { target } => {
            require_kind(AgentKind::FireBrigade)?;
            match state.entities.get_mut(target) {
                Some(Entity::Building(b)) if b.node == agent.node => {
                    if !b.fieryness.is_on_fire() {
                        return Err("building is not on fire".into());
                    }
                    if doused.insert(target.clone()) {
                        b.fieryness = b.fieryness.doused();
                        b.fire_timer = 0;
                    }
                    Ok(())
                }
                Some(Entity::Building(_)) => Err("building is not at the agent's node".into()),
                _ => Err("target is not a building".into()),
            }
        }
        Action::Unbury { target } => {
            require_kind(AgentKind::Ambulance)?;
            let vitals = match state.entities.get_mut(target) {
                Some(Entity::Human(h)) if h.node == agent.node => &mut h.vitals,
                Some(Entity::Agent(a)) if a.node == agent.node && target != agent_id => &mut a.vitals,
                Some(Entity::Human(_)) | Some(Entity::Agent(_)) => {
                    return Err("victim is not at the agent's node".into())
                }
                _ => return Err("target is not a human".into()),
            };
            if vitals.is_dead() {
                return Err("victim is dead".into());
            }
            if !vitals.is_buried() {
                return Err("victim is not buried".into());
            }
            vitals.burial_depth -= 1;
            Ok(())
        }
        Action::Clear { target } => {
            require_kind(AgentKind::Police)?;
            match state.entities.get_mut(target) {
                Some(Entity::Road(r)) if r.touches(agent.node) => {
                    if !r.blocked {
                        return Err("road is not blocked".into());
                    }
                    r.blocked = false;
                    Ok(())
                }
                Some(Entity::Road(_)) => Err("road does not touch the agent's node".into()),
                _ => Err("target is not a road".into()),
            }
        }
        Action::Scout { target } => match state.entities.get_mut(target) {
            Some(Entity::Building(b)) if b.node == agent.node => {
                b.scouted = true;
                Ok(())
            }
            Some(Entity::Building(_)) => Err("building is not at the agent's node".into()),
            _ => Err("target is not a building".into()),
        },
    }
}

fn advance_fires(world: &World, state: &mut WorldState, doused: &BTreeSet<EntityId>) {
    let dynamics = world.dynamics();
    let sources: Vec<EntityId> = state
        .entities
        .iter()
        .filter(
            |(_, e)| matches!(e, Entity::Building(b) if matches!(b.fieryness, Fieryness::Burning | Fieryness::Inferno)),
        )
        .map(|(id, _)| id.clone())
        .collect();

    for (id, e) in state.entities.iter_mut() {
        if let Entity::Building(b) = e {
            if b.fieryness.is_on_fire() && !doused.contains(id) {
                b.fire_timer += 1;
                if b.fire_timer >= dynamics.escalation_interval {
                    b.fieryness = b.fieryness.escalated();
                    b.fire_timer = 0;
                }
            }
        }
    }

    if dynamics.spread_probability <= 0.0 {
        return;
    }
    let mut ignited = BTreeSet::new();
    for src in &sources {
        for target in world.spread_targets.get(src).into_iter().flatten() {
            if doused.contains(target) || ignited.contains(target) {
                continue;
            }
            let unburnt =
                matches!(state.entities.get(target), Some(Entity::Building(b)) if b.fieryness == Fieryness::None);
            if !unburnt {
                continue;
            }
            if state.rng.random::<f64>() < dynamics.spread_probability {
                if let Some(Entity::Building(b)) = state.entities.get_mut(target) {
                    b.fieryness = Fieryness::Heating;
                    b.fire_timer = 0;
                }
                ignited.insert(target.clone());
            }
        }
    }
}
