//! Route planning on the believed road graph and per-goal plan assembly.
//!
//! Routes are minimum-cost paths with ties broken by the lexicographically
//! smallest node sequence, so plans are reproducible. Each expansion can
//! also be written out as a typed STRIPS problem against one of four fixed
//! domains.

mod pddl;
pub mod strips;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::goal_reasoner::{GoalId, GoalType};
use crate::sim::{Action, Belief, Entity, EntityId, MapNode, MapTopology};

pub use pddl::{domain_text, emit_pddl_problem, DOMAINS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("no route from {from} to {to}")]
    NoRoute { from: MapNode, to: MapNode },
    #[error("unknown node {0}")]
    UnknownNode(MapNode),
    #[error("`{0}` is not in the belief")]
    UnknownEntity(EntityId),
    #[error("{target} is not a valid {goal} target")]
    BadTarget { target: EntityId, goal: GoalType },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub to: MapNode,
    pub road: EntityId,
    pub length: u32,
    pub blocked: bool,
}

/// Undirected weighted graph of believed roads.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoadGraph {
    adjacency: BTreeMap<MapNode, Vec<Edge>>,
    positions: BTreeMap<MapNode, (f64, f64)>,
}

impl RoadGraph {
    pub fn new() -> Self {
        RoadGraph::default()
    }

    pub fn add_node(&mut self, node: MapNode) {
        self.adjacency.entry(node).or_default();
    }

    pub fn add_edge(&mut self, road: impl Into<EntityId>, a: MapNode, b: MapNode, length: u32, blocked: bool) {
        assert!(length > 0, "road lengths are positive");
        let road = road.into();
        for (from, to) in [(a, b), (b, a)] {
            let list = self.adjacency.entry(from).or_default();
            list.push(Edge {
                to,
                road: road.clone(),
                length,
                blocked,
            });
            list.sort_by(|x, y| (x.to, &x.road).cmp(&(y.to, &y.road)));
        }
    }

    /// The static map with blockages taken from the belief. Roads the
    /// command centre has never seen are assumed open.
    pub fn project(map: &MapTopology, belief: &Belief) -> Self {
        let mut g = RoadGraph::new();
        for n in map.nodes() {
            g.add_node(n);
            if let Some(p) = map.position(n) {
                g.positions.insert(n, p);
            }
        }
        for e in map.edges() {
            let blocked = belief.get(&e.road).and_then(Entity::as_road).is_some_and(|r| r.blocked);
            let adj = &mut g.adjacency;
            adj.get_mut(&e.ends.0).expect("node exists").push(Edge {
                to: e.ends.1,
                road: e.road.clone(),
                length: e.length,
                blocked,
            });
            adj.get_mut(&e.ends.1).expect("node exists").push(Edge {
                to: e.ends.0,
                road: e.road.clone(),
                length: e.length,
                blocked,
            });
        }
        for list in g.adjacency.values_mut() {
            list.sort_by(|x, y| (x.to, &x.road).cmp(&(y.to, &y.road)));
        }
        g
    }

    pub fn nodes(&self) -> impl Iterator<Item = MapNode> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn contains(&self, node: MapNode) -> bool {
        self.adjacency.contains_key(&node)
    }

    pub fn edges_from(&self, node: MapNode) -> &[Edge] {
        self.adjacency.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Each undirected edge once, as `(road, a, b, length, blocked)` with `a <= b`.
    pub fn edges(&self) -> impl Iterator<Item = (&EntityId, MapNode, MapNode, u32, bool)> {
        self.adjacency.iter().flat_map(|(&a, list)| {
            list.iter()
                .filter(move |e| a < e.to)
                .map(move |e| (&e.road, a, e.to, e.length, e.blocked))
        })
    }

    pub fn position(&self, node: MapNode) -> Option<(f64, f64)> {
        self.positions.get(&node).copied()
    }

    pub fn set_position(&mut self, node: MapNode, at: (f64, f64)) {
        self.positions.insert(node, at);
    }

    pub fn set_blocked(&mut self, road: &EntityId, blocked: bool) {
        for list in self.adjacency.values_mut() {
            for e in list.iter_mut().filter(|e| &e.road == road) {
                e.blocked = blocked;
            }
        }
    }
}

/// A path through the graph. `nodes` starts at the origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub nodes: Vec<MapNode>,
    pub roads: Vec<EntityId>,
    pub cost: u64,
}

impl Route {
    pub fn hops(&self) -> usize {
        self.roads.len()
    }
}

/// Minimum-cost path from `from` to `to`; ties go to the lexicographically
/// smallest node sequence. Blocked edges are usable only with `traverse_blocked`.
pub fn plan_route(graph: &RoadGraph, from: MapNode, to: MapNode, traverse_blocked: bool) -> Result<Route, PlanError> {
    for n in [from, to] {
        if !graph.contains(n) {
            return Err(PlanError::UnknownNode(n));
        }
    }
    let mut best: BTreeMap<MapNode, (u64, Vec<MapNode>)> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u64, vec![from])));
    while let Some(Reverse((cost, path))) = heap.pop() {
        let at = *path.last().expect("paths are non-empty");
        if best.contains_key(&at) {
            continue;
        }
        best.insert(at, (cost, path.clone()));
        if at == to {
            break;
        }
        for e in graph.edges_from(at) {
            if (e.blocked && !traverse_blocked) || best.contains_key(&e.to) {
                continue;
            }
            let mut next = path.clone();
            next.push(e.to);
            heap.push(Reverse((cost + u64::from(e.length), next)));
        }
    }
    let (cost, nodes) = best.remove(&to).ok_or(PlanError::NoRoute { from, to })?;
    let roads = nodes
        .windows(2)
        .map(|w| {
            graph
                .edges_from(w[0])
                .iter()
                .filter(|e| e.to == w[1] && (traverse_blocked || !e.blocked))
                .min_by_key(|e| (e.length, &e.road))
                .expect("route follows edges")
                .road
                .clone()
        })
        .collect();
    Ok(Route { nodes, roads, cost })
}

/// Moves along a route followed by a repeated terminal action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub goal: GoalId,
    pub agent: EntityId,
    pub route: Route,
    /// One single-hop move per road, then the terminal action repeated.
    pub actions: Vec<Action>,
    pub cost: u64,
}

impl Plan {
    pub fn start(&self) -> MapNode {
        self.route.nodes[0]
    }

    pub fn end(&self) -> MapNode {
        *self.route.nodes.last().expect("routes are non-empty")
    }
}

/// Node of a believed entity; roads report both endpoints.
fn entity_nodes(e: &Entity) -> Vec<MapNode> {
    match e.nodes() {
        (a, Some(b)) => vec![a, b],
        (a, None) => vec![a],
    }
}

/// How often the terminal action must be applied to reach the goal condition.
pub fn terminal_repetitions(goal: GoalType, target: &Entity) -> usize {
    match (goal, target) {
        (GoalType::Douse, Entity::Building(b)) if b.fieryness.is_on_fire() => b.fieryness.level(),
        (GoalType::Unbury, e) => e.vitals().map_or(0, |v| v.burial_depth as usize),
        (GoalType::Unblock, Entity::Road(r)) => usize::from(r.blocked),
        (GoalType::Scout, Entity::Building(b)) => usize::from(!b.scouted),
        _ => 0,
    }
}

fn terminal_action(goal: GoalType, target: &EntityId) -> Action {
    let target = target.clone();
    match goal {
        GoalType::Unbury => Action::Unbury { target },
        GoalType::Douse => Action::Douse { target },
        GoalType::Unblock => Action::Clear { target },
        GoalType::Scout => Action::Scout { target },
    }
}

/// Plans `agent`'s route to the goal's target and the terminal actions there.
///
/// Unblock goals route to the cheaper endpoint of the blocked road.
pub fn build_plan(
    goal: GoalId,
    goal_type: GoalType,
    target: &EntityId,
    agent: &EntityId,
    belief: &Belief,
    graph: &RoadGraph,
) -> Result<Plan, PlanError> {
    let agent_node = match belief.get(agent) {
        Some(Entity::Agent(a)) => a.node,
        _ => return Err(PlanError::UnknownEntity(agent.clone())),
    };
    let target_entity = belief
        .get(target)
        .ok_or_else(|| PlanError::UnknownEntity(target.clone()))?;
    let valid = match goal_type {
        GoalType::Unbury => target_entity.vitals().is_some() && target != agent,
        GoalType::Douse | GoalType::Scout => target_entity.as_building().is_some(),
        GoalType::Unblock => target_entity.as_road().is_some(),
    };
    if !valid {
        return Err(PlanError::BadTarget {
            target: target.clone(),
            goal: goal_type,
        });
    }

    let mut best: Option<Route> = None;
    let mut last_err = None;
    for node in entity_nodes(target_entity) {
        match plan_route(graph, agent_node, node, false) {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| (r.cost, &r.nodes) < (b.cost, &b.nodes)) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let route = best.ok_or_else(|| last_err.expect("at least one endpoint"))?;

    let mut actions: Vec<Action> = route.nodes[1..]
        .iter()
        .map(|&n| Action::Move { path: vec![n] })
        .collect();
    let k = terminal_repetitions(goal_type, target_entity);
    actions.extend(std::iter::repeat_n(terminal_action(goal_type, target), k));
    Ok(Plan {
        goal,
        agent: agent.clone(),
        cost: route.cost,
        route,
        actions,
    })
}

#[cfg(test)]
mod tests;
