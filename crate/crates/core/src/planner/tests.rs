use ::pddl::{Domain, Parser, Problem};

use super::*;
use crate::sim::{AgentKind, BeliefEntry, Building, Fieryness, Human, PlatoonAgent, Road, Vitals};

fn n(i: u32) -> MapNode {
    MapNode(i)
}

/// Two routes from 0 to 4: 0-1-2-4 costs 2+2+3=7, 0-3-4 costs 4+5=9.
fn five_node() -> RoadGraph {
    let mut g = RoadGraph::new();
    g.add_edge("r01", n(0), n(1), 2, false);
    g.add_edge("r12", n(1), n(2), 2, false);
    g.add_edge("r24", n(2), n(4), 3, false);
    g.add_edge("r03", n(0), n(3), 4, false);
    g.add_edge("r34", n(3), n(4), 5, false);
    g
}

/// Every simple path cost from `from` to `to`, by exhaustive enumeration.
fn all_path_costs(g: &RoadGraph, from: MapNode, to: MapNode) -> Vec<(u64, Vec<MapNode>)> {
    fn walk(g: &RoadGraph, path: &mut Vec<MapNode>, cost: u64, to: MapNode, out: &mut Vec<(u64, Vec<MapNode>)>) {
        let at = *path.last().unwrap();
        if at == to {
            out.push((cost, path.clone()));
            return;
        }
        for e in g.edges_from(at) {
            if !e.blocked && !path.contains(&e.to) {
                path.push(e.to);
                walk(g, path, cost + e.length as u64, to, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(g, &mut vec![from], 0, to, &mut out);
    out
}

#[test]
fn same_node_is_an_empty_route() {
    let r = plan_route(&five_node(), n(2), n(2), false).unwrap();
    assert_eq!(r.nodes, vec![n(2)]);
    assert_eq!(r.cost, 0);
    assert!(r.roads.is_empty());
}

#[test]
fn cheaper_of_two_routes() {
    let g = five_node();
    let r = plan_route(&g, n(0), n(4), false).unwrap();
    let oracle = all_path_costs(&g, n(0), n(4));
    assert_eq!(oracle.iter().map(|p| p.0).min(), Some(7));
    assert_eq!(r.cost, 7);
    assert_eq!(r.nodes, vec![n(0), n(1), n(2), n(4)]);
    assert_eq!(r.roads, vec![EntityId::from("r01"), "r12".into(), "r24".into()]);
}

#[test]
fn ties_break_lexicographically() {
    let mut g = RoadGraph::new();
    g.add_edge("a", n(0), n(2), 1, false);
    g.add_edge("b", n(2), n(3), 1, false);
    g.add_edge("c", n(0), n(1), 1, false);
    g.add_edge("d", n(1), n(3), 1, false);
    let r = plan_route(&g, n(0), n(3), false).unwrap();
    assert_eq!(r.nodes, vec![n(0), n(1), n(3)]);
}

#[test]
fn blocked_isolation() {
    let mut g = five_node();
    g.set_blocked(&"r24".into(), true);
    g.set_blocked(&"r34".into(), true);
    assert_eq!(
        plan_route(&g, n(0), n(4), false).unwrap_err(),
        PlanError::NoRoute { from: n(0), to: n(4) }
    );
    assert_eq!(plan_route(&g, n(0), n(4), true).unwrap().cost, 7);
    assert_eq!(
        plan_route(&g, n(0), n(9), false).unwrap_err(),
        PlanError::UnknownNode(n(9))
    );
}

fn belief_of(entities: Vec<(&str, Entity)>) -> Belief {
    Belief {
        time: 0,
        entries: entities
            .into_iter()
            .map(|(id, entity)| (EntityId::from(id), BeliefEntry { entity, seen_at: 0 }))
            .collect(),
    }
}

fn agent(kind: AgentKind, node: u32) -> Entity {
    Entity::Agent(PlatoonAgent {
        kind,
        node: n(node),
        vitals: Vitals {
            hp: 100,
            burial_depth: 0,
        },
        current_action: None,
    })
}

fn building(node: u32, fieryness: Fieryness) -> Entity {
    Entity::Building(Building {
        node: n(node),
        fieryness,
        scouted: true,
        fire_timer: 0,
    })
}

#[test]
fn douse_plan_moves_then_douses_per_level() {
    let g = five_node();
    let belief = belief_of(vec![
        ("fire_1", agent(AgentKind::FireBrigade, 0)),
        ("b1", building(2, Fieryness::Burning)),
    ]);
    let plan = build_plan(GoalId(0), GoalType::Douse, &"b1".into(), &"fire_1".into(), &belief, &g).unwrap();
    let douse = Action::Douse { target: "b1".into() };
    assert_eq!(
        plan.actions,
        vec![
            Action::Move { path: vec![n(1)] },
            Action::Move { path: vec![n(2)] },
            douse.clone(),
            douse,
        ]
    );
    assert_eq!(plan.cost, 4);
}

#[test]
fn colocated_unbury_has_no_moves() {
    let victim = Entity::Human(Human {
        node: n(3),
        vitals: Vitals {
            hp: 60,
            burial_depth: 3,
        },
    });
    let belief = belief_of(vec![("amb", agent(AgentKind::Ambulance, 3)), ("c1", victim)]);
    let plan = build_plan(
        GoalId(1),
        GoalType::Unbury,
        &"c1".into(),
        &"amb".into(),
        &belief,
        &five_node(),
    )
    .unwrap();
    assert_eq!(plan.actions, vec![Action::Unbury { target: "c1".into() }; 3]);
    assert_eq!(plan.cost, 0);
}

#[test]
fn unreachable_is_infeasible() {
    let mut g = five_node();
    g.add_node(n(7));
    let belief = belief_of(vec![
        ("pol", agent(AgentKind::Police, 0)),
        ("b9", building(7, Fieryness::None)),
    ]);
    let err = build_plan(GoalId(2), GoalType::Scout, &"b9".into(), &"pol".into(), &belief, &g).unwrap_err();
    assert!(matches!(err, PlanError::NoRoute { .. }));
}

#[test]
fn unblock_routes_to_nearer_endpoint() {
    let mut g = five_node();
    g.set_blocked(&"r34".into(), true);
    let road = Entity::Road(Road {
        ends: (n(3), n(4)),
        length: 5,
        blocked: true,
        requested: true,
        has_civilians: false,
    });
    let belief = belief_of(vec![("pol", agent(AgentKind::Police, 1)), ("r34", road)]);
    let plan = build_plan(GoalId(3), GoalType::Unblock, &"r34".into(), &"pol".into(), &belief, &g).unwrap();
    assert_eq!(plan.route.nodes, vec![n(1), n(2), n(4)]);
    assert_eq!(plan.cost, 5);
    assert_eq!(plan.actions.last(), Some(&Action::Clear { target: "r34".into() }));
}

fn parses(domain: &str, problem: &str) {
    let (rest, _) = Domain::parse(domain).expect("domain parses");
    assert!(rest.trim().is_empty(), "unparsed domain tail: {rest}");
    let (rest, p) = Problem::parse(problem).expect("problem parses");
    assert!(rest.trim().is_empty(), "unparsed problem tail: {rest}");
    assert!(!p.goals().is_empty());
}

#[test]
fn douse_problem_facts_match_graph() {
    let mut g = five_node();
    g.set_blocked(&"r03".into(), true);
    let belief = belief_of(vec![
        ("fire_1", agent(AgentKind::FireBrigade, 0)),
        ("b1", building(4, Fieryness::Heating)),
    ]);
    let text = emit_pddl_problem(GoalId(5), GoalType::Douse, &"b1".into(), &"fire_1".into(), &belief, &g).unwrap();
    let open_edges = g.edges().filter(|e| !e.4).count();
    assert_eq!(text.matches("(connected ").count(), open_edges);
    assert_eq!(open_edges, 4);
    assert!(text.contains("(:goal (and (extinguished b1)))"));
    assert!(text.contains("(on-fire b1)"));
    parses(domain_text(GoalType::Douse), &text);
    let steps = strips::solve(domain_text(GoalType::Douse), &text, 10_000)
        .unwrap()
        .unwrap();
    assert_eq!(steps.len(), 4);
    assert_eq!(steps.last().unwrap(), "(douse fire_1 b1 node-4)");
}

#[test]
fn degenerate_problem_is_terminal_only() {
    let mut g = RoadGraph::new();
    g.add_node(n(0));
    let belief = belief_of(vec![
        ("amb", agent(AgentKind::Ambulance, 0)),
        ("b1", building(0, Fieryness::None)),
    ]);
    let text = emit_pddl_problem(GoalId(6), GoalType::Scout, &"b1".into(), &"amb".into(), &belief, &g).unwrap();
    assert!(!text.contains("connected"));
    parses(domain_text(GoalType::Scout), &text);
    let steps = strips::solve(domain_text(GoalType::Scout), &text, 100)
        .unwrap()
        .unwrap();
    assert_eq!(steps, vec!["(scout amb b1 node-0)".to_string()]);
    let plan = build_plan(GoalId(6), GoalType::Scout, &"b1".into(), &"amb".into(), &belief, &g).unwrap();
    assert_eq!(plan.actions.len(), 0);
}

#[test]
fn domains_parse() {
    for (goal, text) in DOMAINS {
        let (rest, d) = Domain::parse(text).unwrap_or_else(|e| panic!("{goal}: {e:?}"));
        assert!(rest.trim().is_empty());
        assert_eq!(d.name().to_string(), format!("rescue-{goal}"));
    }
}

#[test]
fn strips_detects_unsolvable() {
    let mut g = five_node();
    g.set_blocked(&"r24".into(), true);
    g.set_blocked(&"r34".into(), true);
    let belief = belief_of(vec![
        ("fire_1", agent(AgentKind::FireBrigade, 0)),
        ("b1", building(4, Fieryness::Burning)),
    ]);
    let text = emit_pddl_problem(GoalId(7), GoalType::Douse, &"b1".into(), &"fire_1".into(), &belief, &g).unwrap();
    assert_eq!(
        strips::solve(domain_text(GoalType::Douse), &text, 10_000).unwrap(),
        None
    );
}
