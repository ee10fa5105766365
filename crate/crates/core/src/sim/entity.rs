use std::fmt;

use serde::{Deserialize, Serialize};

/// Stable identifier of a simulated entity. Also used as its frame id.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub String);

impl EntityId {
    pub fn new(s: impl Into<String>) -> Self {
        EntityId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId(s.to_string())
    }
}

/// A node of the road map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MapNode(pub u32);

impl fmt::Display for MapNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Fire ladder of a building. `Destroyed` is absorbing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fieryness {
    None,
    Heating,
    Burning,
    Inferno,
    Destroyed,
}

impl Fieryness {
    pub const LADDER: [Fieryness; 5] = [
        Fieryness::None,
        Fieryness::Heating,
        Fieryness::Burning,
        Fieryness::Inferno,
        Fieryness::Destroyed,
    ];

    pub fn level(self) -> usize {
        self as usize
    }

    pub fn is_on_fire(self) -> bool {
        matches!(self, Fieryness::Heating | Fieryness::Burning | Fieryness::Inferno)
    }

    pub fn escalated(self) -> Fieryness {
        match self {
            Fieryness::None => Fieryness::None,
            other => Self::LADDER[(other.level() + 1).min(4)],
        }
    }

    pub fn doused(self) -> Fieryness {
        match self {
            Fieryness::None | Fieryness::Destroyed => self,
            other => Self::LADDER[other.level() - 1],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Fieryness::None => "none",
            Fieryness::Heating => "heating",
            Fieryness::Burning => "burning",
            Fieryness::Inferno => "inferno",
            Fieryness::Destroyed => "destroyed",
        }
    }
}

/// Health category derived from hit points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Health {
    Dead,
    Critical,
    Injured,
    Healthy,
}

impl Health {
    pub fn from_hp(hp: u32) -> Health {
        match hp {
            0 => Health::Dead,
            1..=30 => Health::Critical,
            31..=70 => Health::Injured,
            _ => Health::Healthy,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Health::Dead => "dead",
            Health::Critical => "critical",
            Health::Injured => "injured",
            Health::Healthy => "healthy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    FireBrigade,
    Ambulance,
    Police,
}

impl AgentKind {
    pub const ALL: [AgentKind; 3] = [AgentKind::FireBrigade, AgentKind::Ambulance, AgentKind::Police];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::FireBrigade => "fire_brigade",
            AgentKind::Ambulance => "ambulance",
            AgentKind::Police => "police",
        }
    }
}

/// Physical condition shared by civilians and platoon agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vitals {
    pub hp: u32,
    pub burial_depth: u32,
}

impl Vitals {
    pub fn health(&self) -> Health {
        Health::from_hp(self.hp)
    }

    pub fn is_buried(&self) -> bool {
        self.burial_depth > 0
    }

    pub fn is_dead(&self) -> bool {
        self.hp == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Building {
    pub node: MapNode,
    pub fieryness: Fieryness,
    pub scouted: bool,
    /// Steps spent on fire at the current level without being doused.
    #[serde(default)]
    pub fire_timer: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Road {
    pub ends: (MapNode, MapNode),
    pub length: u32,
    pub blocked: bool,
    #[serde(default)]
    pub requested: bool,
    #[serde(default)]
    pub has_civilians: bool,
}

impl Road {
    pub fn touches(&self, node: MapNode) -> bool {
        self.ends.0 == node || self.ends.1 == node
    }
}

/// A civilian.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Human {
    pub node: MapNode,
    #[serde(flatten)]
    pub vitals: Vitals,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlatoonAgent {
    pub kind: AgentKind,
    pub node: MapNode,
    #[serde(flatten)]
    pub vitals: Vitals,
    #[serde(default)]
    pub current_action: Option<super::Action>,
}

impl PlatoonAgent {
    /// Alive and not buried.
    pub fn can_act(&self) -> bool {
        !self.vitals.is_dead() && !self.vitals.is_buried()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Entity {
    Building(Building),
    Road(Road),
    Human(Human),
    Agent(PlatoonAgent),
}

impl Entity {
    /// Nodes the entity occupies; roads occupy both endpoints.
    pub fn nodes(&self) -> (MapNode, Option<MapNode>) {
        match self {
            Entity::Building(b) => (b.node, None),
            Entity::Road(r) => (r.ends.0, Some(r.ends.1)),
            Entity::Human(h) => (h.node, None),
            Entity::Agent(a) => (a.node, None),
        }
    }

    pub fn vitals(&self) -> Option<&Vitals> {
        match self {
            Entity::Human(h) => Some(&h.vitals),
            Entity::Agent(a) => Some(&a.vitals),
            _ => None,
        }
    }

    pub fn as_building(&self) -> Option<&Building> {
        match self {
            Entity::Building(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_road(&self) -> Option<&Road> {
        match self {
            Entity::Road(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_agent(&self) -> Option<&PlatoonAgent> {
        match self {
            Entity::Agent(a) => Some(a),
            _ => None,
        }
    }

    /// Generic frame this entity is mirrored under in the knowledge base.
    pub fn frame_class(&self) -> &'static str {
        match self {
            Entity::Building(_) => "building",
            Entity::Road(_) => "road",
            Entity::Human(_) | Entity::Agent(_) => "human",
        }
    }

    /// Slot bindings of the entity's instance frame.
    pub fn slot_values(&self) -> Vec<(&'static str, &'static str)> {
        let yes_no = |b: bool| if b { "yes" } else { "no" };
        let vitals = |v: &Vitals| {
            [
                ("buriedness", if v.is_buried() { "buried" } else { "non_buried" }),
                ("health", v.health().as_str()),
            ]
        };
        match self {
            Entity::Building(b) => vec![("fieryness", b.fieryness.as_str()), ("scouted", yes_no(b.scouted))],
            Entity::Road(r) => vec![
                ("blocked", yes_no(r.blocked)),
                ("requested", yes_no(r.requested)),
                ("has_civilians", yes_no(r.has_civilians)),
            ],
            Entity::Human(h) => {
                let [a, b] = vitals(&h.vitals);
                vec![("type", "civilian"), a, b]
            }
            Entity::Agent(ag) => {
                let [a, b] = vitals(&ag.vitals);
                vec![("type", "agent"), a, b]
            }
        }
    }

    /// Label used when naming cornerstone cases taken from this entity.
    pub fn case_label(&self) -> &'static str {
        match self {
            Entity::Building(_) => "building",
            Entity::Road(_) => "road",
            Entity::Human(_) => "civilian",
            Entity::Agent(a) => match a.kind {
                AgentKind::FireBrigade => "brigade",
                AgentKind::Ambulance => "ambulance",
                AgentKind::Police => "police",
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn health_bands() {
        assert_eq!(Health::from_hp(0), Health::Dead);
        assert_eq!(Health::from_hp(1), Health::Critical);
        assert_eq!(Health::from_hp(30), Health::Critical);
        assert_eq!(Health::from_hp(31), Health::Injured);
        assert_eq!(Health::from_hp(70), Health::Injured);
        assert_eq!(Health::from_hp(71), Health::Healthy);
        assert_eq!(Health::from_hp(100), Health::Healthy);
    }

    #[test]
    fn fire_ladder() {
        assert_eq!(Fieryness::Inferno.escalated(), Fieryness::Destroyed);
        assert_eq!(Fieryness::Destroyed.escalated(), Fieryness::Destroyed);
        assert_eq!(Fieryness::None.escalated(), Fieryness::None);
        assert_eq!(Fieryness::Heating.doused(), Fieryness::None);
        assert_eq!(Fieryness::Destroyed.doused(), Fieryness::Destroyed);
    }
}
