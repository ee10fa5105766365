//! Limited-range sensing and the pooled command-centre belief.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::entity::{Entity, EntityId};
use super::{SimError, World, WorldState};

/// What one agent sees at one step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub agent: EntityId,
    pub time: u64,
    pub entities: BTreeMap<EntityId, Entity>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeliefEntry {
    pub entity: Entity,
    pub seen_at: u64,
}

/// Last known value of every entity any agent has seen.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Belief {
    pub time: u64,
    pub entries: BTreeMap<EntityId, BeliefEntry>,
}

impl Belief {
    pub fn get(&self, id: &EntityId) -> Option<&Entity> {
        self.entries.get(id).map(|e| &e.entity)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entities(&self) -> impl Iterator<Item = (&EntityId, &Entity)> {
        self.entries.iter().map(|(id, e)| (id, &e.entity))
    }

    /// Sets `requested` on a believed road. Returns false if the road is unknown.
    pub fn mark_requested(&mut self, road: &EntityId) -> bool {
        match self.entries.get_mut(road) {
            Some(BeliefEntry {
                entity: Entity::Road(r),
                ..
            }) => {
                r.requested = true;
                true
            }
            _ => false,
        }
    }
}

/// Entities within `sensor_radius` hops of the agent. Roads count when either end is in range.
pub fn observe(world: &World, state: &WorldState, agent: &EntityId) -> Result<Observation, SimError> {
    let at = match state.entities.get(agent) {
        Some(Entity::Agent(a)) => a.node,
        _ => return Err(SimError::UnknownAgent(agent.to_string())),
    };
    let near = world.map.hops_within(at, world.dynamics().sensor_radius);
    let entities = state
        .entities
        .iter()
        .filter(|(_, e)| {
            let (a, b) = e.nodes();
            near.contains_key(&a) || b.is_some_and(|b| near.contains_key(&b))
        })
        .map(|(id, e)| (id.clone(), e.clone()))
        .collect();
    Ok(Observation {
        agent: agent.clone(),
        time: state.time,
        entities,
    })
}

/// Folds observations into `prior`, last writer wins by timestamp.
///
/// A road's `requested` flag belongs to the command centre, not the sensors,
/// so it survives fresh observations while the road stays blocked.
pub fn merge_belief(prior: &Belief, observations: &[Observation], t: u64) -> Belief {
    let mut next = prior.clone();
    next.time = next.time.max(t);
    for obs in observations {
        for (id, seen) in &obs.entities {
            let mut entity = seen.clone();
            match next.entries.get(id) {
                Some(old) if old.seen_at > obs.time => continue,
                Some(old) => {
                    if let (Entity::Road(old_road), Entity::Road(new_road)) = (&old.entity, &mut entity) {
                        new_road.requested |= old_road.requested && new_road.blocked;
                    }
                }
                None => {}
            }
            next.entries.insert(
                id.clone(),
                BeliefEntry {
                    entity,
                    seen_at: obs.time,
                },
            );
        }
    }
    next
}
