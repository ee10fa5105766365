//! Scenario files.
//!
//! A scenario is a JSON document with four sections:
//!
//! ```json
//! {
//!   "name": "test-city",
//!   "map": {
//!     "nodes": [{ "id": 0, "x": 0.0, "y": 0.0 }],
//!     "roads": [{ "id": "road_0", "from": 0, "to": 1, "length": 3,
//!                 "blocked": false, "has_civilians": false, "requested": false }]
//!   },
//!   "entities": {
//!     "buildings": [{ "id": "building_0", "node": 0, "fieryness": "none", "scouted": false }],
//!     "civilians": [{ "id": "civilian_0", "node": 0, "hp": 80, "burial_depth": 12 }],
//!     "agents":    [{ "id": "ambulance_0", "kind": "ambulance", "node": 1, "hp": 100, "burial_depth": 0 }]
//!   },
//!   "dynamics": { "escalation_interval": 20, "spread_probability": 0.05, "spread_radius": 1,
//!                 "burial_decay": 1, "sensor_radius": 2, "agent_speed": 1 },
//!   "limits": { "steps": 300 }
//! }
//! ```
//!
//! Every `dynamics` field and the `limits` section are optional and default
//! to the values shown.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::entity::{AgentKind, Building, Entity, EntityId, Fieryness, Human, MapNode, PlatoonAgent, Road, Vitals};
use super::SimError;
use crate::atom::is_identifier;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub map: MapSpec,
    #[serde(default)]
    pub entities: EntitySpec,
    #[serde(default)]
    pub dynamics: Dynamics,
    #[serde(default)]
    pub limits: Limits,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub nodes: Vec<NodeSpec>,
    pub roads: Vec<RoadSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: u32,
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadSpec {
    pub id: String,
    pub from: u32,
    pub to: u32,
    pub length: u32,
    #[serde(default)]
    pub blocked: bool,
    #[serde(default)]
    pub has_civilians: bool,
    #[serde(default)]
    pub requested: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EntitySpec {
    #[serde(default)]
    pub buildings: Vec<BuildingSpec>,
    #[serde(default)]
    pub civilians: Vec<HumanSpec>,
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingSpec {
    pub id: String,
    pub node: u32,
    #[serde(default = "no_fire")]
    pub fieryness: Fieryness,
    #[serde(default)]
    pub scouted: bool,
}

fn no_fire() -> Fieryness {
    Fieryness::None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanSpec {
    pub id: String,
    pub node: u32,
    #[serde(default = "full_hp")]
    pub hp: u32,
    #[serde(default)]
    pub burial_depth: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: String,
    pub kind: AgentKind,
    pub node: u32,
    #[serde(default = "full_hp")]
    pub hp: u32,
    #[serde(default)]
    pub burial_depth: u32,
}

fn full_hp() -> u32 {
    100
}

/// Numeric dynamics. The defaults give several concurrent goals within a
/// few hundred steps on a test-city sized map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Dynamics {
    /// Undoused steps before a fire climbs one ladder level.
    pub escalation_interval: u32,
    /// Per-step ignition chance for each unburnt building near a burning one.
    pub spread_probability: f64,
    /// Hop radius of fire spread.
    pub spread_radius: u32,
    /// Hit points lost per step while buried.
    pub burial_decay: u32,
    /// Sensor range in road hops.
    pub sensor_radius: u32,
    /// Road edges an agent may traverse per step.
    pub agent_speed: u32,
}

impl Default for Dynamics {
    fn default() -> Self {
        Dynamics {
            escalation_interval: 20,
            spread_probability: 0.05,
            spread_radius: 1,
            burial_decay: 1,
            sensor_radius: 2,
            agent_speed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    pub steps: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { steps: 300 }
    }
}

/// Per-category entity counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityCounts {
    pub civilians: usize,
    pub agents: usize,
    pub buildings: usize,
    pub roads: usize,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Format(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn counts(&self) -> EntityCounts {
        EntityCounts {
            civilians: self.entities.civilians.len(),
            agents: self.entities.agents.len(),
            buildings: self.entities.buildings.len(),
            roads: self.map.roads.len(),
        }
    }

    /// Checks references, ids and parameter ranges.
    pub fn validate(&self) -> Result<(), SimError> {
        let nodes: BTreeSet<u32> = self.map.nodes.iter().map(|n| n.id).collect();
        if nodes.len() != self.map.nodes.len() {
            let mut seen = BTreeSet::new();
            let dup = self
                .map
                .nodes
                .iter()
                .find(|n| !seen.insert(n.id))
                .expect("a duplicate exists");
            return Err(SimError::DuplicateId(format!("node {}", dup.id)));
        }
        let mut ids = BTreeSet::new();
        let mut claim = |id: &str| -> Result<(), SimError> {
            if !is_identifier(id) {
                return Err(SimError::BadId(id.to_string()));
            }
            if !ids.insert(id.to_string()) {
                return Err(SimError::DuplicateId(id.to_string()));
            }
            Ok(())
        };
        let node_ok = |entity: &str, node: u32| {
            if nodes.contains(&node) {
                Ok(())
            } else {
                Err(SimError::DanglingNode {
                    entity: entity.to_string(),
                    node,
                })
            }
        };
        for r in &self.map.roads {
            claim(&r.id)?;
            node_ok(&r.id, r.from)?;
            node_ok(&r.id, r.to)?;
            if r.from == r.to {
                return Err(SimError::OutOfRange(format!("road {} is a self-loop", r.id)));
            }
            if r.length == 0 {
                return Err(SimError::OutOfRange(format!("road {} has zero length", r.id)));
            }
        }
        for b in &self.entities.buildings {
            claim(&b.id)?;
            node_ok(&b.id, b.node)?;
        }
        for h in &self.entities.civilians {
            claim(&h.id)?;
            node_ok(&h.id, h.node)?;
            if h.hp > 100 {
                return Err(SimError::OutOfRange(format!("{} hp {}", h.id, h.hp)));
            }
        }
        for a in &self.entities.agents {
            claim(&a.id)?;
            node_ok(&a.id, a.node)?;
            if a.hp > 100 {
                return Err(SimError::OutOfRange(format!("{} hp {}", a.id, a.hp)));
            }
        }
        let d = &self.dynamics;
        if d.escalation_interval == 0 {
            return Err(SimError::OutOfRange("escalation_interval must be positive".into()));
        }
        if !(0.0..=1.0).contains(&d.spread_probability) {
            return Err(SimError::OutOfRange("spread_probability must lie in [0, 1]".into()));
        }
        if d.agent_speed == 0 {
            return Err(SimError::OutOfRange("agent_speed must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn initial_entities(&self) -> BTreeMap<EntityId, Entity> {
        let mut out = BTreeMap::new();
        for r in &self.map.roads {
            out.insert(
                EntityId::new(r.id.clone()),
                Entity::Road(Road {
                    ends: (MapNode(r.from), MapNode(r.to)),
                    length: r.length,
                    blocked: r.blocked,
                    requested: r.requested,
                    has_civilians: r.has_civilians,
                }),
            );
        }
        for b in &self.entities.buildings {
            out.insert(
                EntityId::new(b.id.clone()),
                Entity::Building(Building {
                    node: MapNode(b.node),
                    fieryness: b.fieryness,
                    scouted: b.scouted,
                    fire_timer: 0,
                }),
            );
        }
        for h in &self.entities.civilians {
            out.insert(
                EntityId::new(h.id.clone()),
                Entity::Human(Human {
                    node: MapNode(h.node),
                    vitals: Vitals {
                        hp: h.hp,
                        burial_depth: h.burial_depth,
                    },
                }),
            );
        }
        for a in &self.entities.agents {
            out.insert(
                EntityId::new(a.id.clone()),
                Entity::Agent(PlatoonAgent {
                    kind: a.kind,
                    node: MapNode(a.node),
                    vitals: Vitals {
                        hp: a.hp,
                        burial_depth: a.burial_depth,
                    },
                    current_action: None,
                }),
            );
        }
        out
    }
}
