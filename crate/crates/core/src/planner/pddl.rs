//! PDDL problem emission. Fire levels and burial depth are abstracted to a
//! single boolean fact; the internal plan carries the repetition count.

use std::fmt::Write;

use super::{PlanError, RoadGraph};
use crate::goal_reasoner::{GoalId, GoalType};
use crate::sim::{Belief, Entity, EntityId, MapNode};

/// Domain files, one per goal type.
pub const DOMAINS: [(GoalType, &str); 4] = [
    (GoalType::Unbury, include_str!("../../pddl/unbury.pddl")),
    (GoalType::Douse, include_str!("../../pddl/douse.pddl")),
    (GoalType::Unblock, include_str!("../../pddl/unblock.pddl")),
    (GoalType::Scout, include_str!("../../pddl/scout.pddl")),
];

pub fn domain_text(goal: GoalType) -> &'static str {
    DOMAINS
        .iter()
        .find(|(g, _)| *g == goal)
        .expect("every goal type has a domain")
        .1
}

struct Vocabulary {
    target_type: &'static str,
    location: &'static str,
    state: Option<&'static str>,
    goal: &'static str,
}

fn vocabulary(goal: GoalType) -> Vocabulary {
    match goal {
        GoalType::Unbury => Vocabulary {
            target_type: "victim",
            location: "victim-at",
            state: Some("buried"),
            goal: "unburied",
        },
        GoalType::Douse => Vocabulary {
            target_type: "building",
            location: "building-at",
            state: Some("on-fire"),
            goal: "extinguished",
        },
        GoalType::Unblock => Vocabulary {
            target_type: "road",
            location: "road-end",
            state: Some("blocked"),
            goal: "cleared",
        },
        GoalType::Scout => Vocabulary {
            target_type: "building",
            location: "building-at",
            state: None,
            goal: "scouted",
        },
    }
}

fn node_name(n: MapNode) -> String {
    format!("node-{}", n.0)
}

/// A typed STRIPS problem for `agent` pursuing the goal against its domain file.
pub fn emit_pddl_problem(
    goal: GoalId,
    goal_type: GoalType,
    target: &EntityId,
    agent: &EntityId,
    belief: &Belief,
    graph: &RoadGraph,
) -> Result<String, PlanError> {
    let agent_node = match belief.get(agent) {
        Some(Entity::Agent(a)) => a.node,
        _ => return Err(PlanError::UnknownEntity(agent.clone())),
    };
    let target_entity = belief
        .get(target)
        .ok_or_else(|| PlanError::UnknownEntity(target.clone()))?;
    let v = vocabulary(goal_type);
    let in_state = match goal_type {
        GoalType::Unbury => target_entity.vitals().is_some_and(|x| x.is_buried()),
        GoalType::Douse => target_entity.as_building().is_some_and(|b| b.fieryness.is_on_fire()),
        GoalType::Unblock => target_entity.as_road().is_some_and(|r| r.blocked),
        GoalType::Scout => false,
    };
    let locations: Vec<MapNode> = match target_entity.nodes() {
        (a, Some(b)) => vec![a, b],
        (a, None) => vec![a],
    };

    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "(define (problem {}-{goal})", goal_type.as_str());
    let _ = writeln!(w, "  (:domain rescue-{})", goal_type.as_str());
    let _ = write!(w, "  (:objects");
    for n in graph.nodes() {
        let _ = write!(w, " {}", node_name(n));
    }
    let _ = writeln!(w, " - node {agent} - agent {target} - {})", v.target_type);
    let _ = writeln!(w, "  (:init");
    for (_, a, b, _, blocked) in graph.edges() {
        if !blocked {
            let _ = writeln!(w, "    (connected {} {})", node_name(a), node_name(b));
        }
    }
    let _ = writeln!(w, "    (at {agent} {})", node_name(agent_node));
    for n in locations {
        let _ = writeln!(w, "    ({} {target} {})", v.location, node_name(n));
    }
    if let (Some(state), true) = (v.state, in_state) {
        let _ = writeln!(w, "    ({state} {target})");
    }
    let _ = writeln!(w, "  )");
    let _ = writeln!(w, "  (:goal (and ({} {target}))))", v.goal);
    Ok(out)
}
