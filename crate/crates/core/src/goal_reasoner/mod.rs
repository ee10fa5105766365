//! Goal lifecycle over the command-centre belief.
//!
//! Each tick evaluates live goals against the belief, formulates new goals by
//! querying the `goal` slot of every believed entity, orders them with the
//! pairwise ordering tree, assigns agents (preempting strictly lower-ordered
//! work when needed), and carries selected goals through expansion,
//! commitment and dispatch. Dispatched goals emit one action per tick.

mod goal;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use goal::{transition_allowed, CapabilityMap, Goal, GoalId, GoalMode, GoalTransition, GoalType};

use crate::frame_kb::{Frame, FrameSet};
use crate::planner::{build_plan, Plan, RoadGraph};
use crate::rdr::{evaluate_order, RdrTree};
use crate::sim::{Action, AgentKind, Belief, Entity, EntityId, MapNode, MapTopology};

/// Slot queried on every entity frame.
pub const GOAL_SLOT: &str = "goal";
/// Frame and slot holding the goal-ordering tree.
pub const ORDER_FRAME: &str = "goal_order";
pub const ORDER_SLOT: &str = "before";

/// Goal-type precedence precomputed from an ordering tree.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Precedence([[bool; 4]; 4]);

impl Precedence {
    pub fn from_tree(tree: Option<&RdrTree>) -> Self {
        let mut m = [[false; 4]; 4];
        if let Some(tree) = tree {
            for (i, a) in GoalType::ALL.iter().enumerate() {
                for (j, b) in GoalType::ALL.iter().enumerate() {
                    m[i][j] = evaluate_order(tree, a.order_name(), b.order_name());
                }
            }
        }
        Precedence(m)
    }

    pub fn from_kb(kb: &FrameSet) -> Self {
        Self::from_tree(kb.tree(ORDER_FRAME, ORDER_SLOT))
    }

    fn index(g: GoalType) -> usize {
        GoalType::ALL.iter().position(|x| *x == g).expect("listed")
    }

    /// Whether goals of type `a` go before goals of type `b`.
    pub fn before(&self, a: GoalType, b: GoalType) -> bool {
        self.0[Self::index(a)][Self::index(b)]
    }
}

/// Transient instance frame mirroring a believed entity.
pub fn entity_frame(id: &EntityId, entity: &Entity) -> Frame {
    entity
        .slot_values()
        .into_iter()
        .fold(Frame::instance(id.as_str(), &[entity.frame_class()]), |f, (k, v)| {
            f.value(k, v)
        })
}

/// New `(type, target)` pairs: every believed entity whose goal slot names a
/// goal type, minus pairs already active and targets where the goal is
/// already met or can no longer be met.
pub fn formulate_goals<'a>(
    belief: &Belief,
    kb: &FrameSet,
    active: impl IntoIterator<Item = &'a Goal>,
    now: u64,
) -> Vec<(GoalType, EntityId)> {
    let live: BTreeSet<(GoalType, &EntityId)> = active
        .into_iter()
        .filter(|g| g.mode.is_active())
        .map(|g| (g.goal_type, &g.target))
        .collect();
    let mut out = Vec::new();
    for (id, entity) in belief.entities() {
        let frame = entity_frame(id, entity);
        let Ok((atom, _)) = kb.evaluate_in(&frame, GOAL_SLOT, now) else {
            continue;
        };
        let Some(goal_type) = GoalType::from_atom(atom.as_str()) else {
            continue;
        };
        if live.contains(&(goal_type, id)) || goal_type.achieved(entity) || goal_type.lost(entity) {
            continue;
        }
        out.push((goal_type, id.clone()));
    }
    out
}

/// Stable topological order: a goal goes first when no remaining goal's type
/// must precede its type; among those, input order wins.
pub fn order_goals<'a>(goals: &[&'a Goal], precedence: &Precedence) -> Vec<&'a Goal> {
    let mut queues: BTreeMap<GoalType, VecDeque<(usize, &Goal)>> = BTreeMap::new();
    for (i, g) in goals.iter().enumerate() {
        queues.entry(g.goal_type).or_default().push_back((i, *g));
    }
    let mut out = Vec::with_capacity(goals.len());
    while !queues.is_empty() {
        let ready = |t: GoalType| queues.keys().all(|&u| u == t || !precedence.before(u, t));
        let pick = queues
            .iter()
            .filter(|(t, _)| ready(**t))
            .min_by_key(|(_, q)| q.front().expect("queues are non-empty").0)
            .or_else(|| queues.iter().min_by_key(|(_, q)| q.front().expect("non-empty").0))
            .map(|(t, _)| *t)
            .expect("some queue");
        let q = queues.get_mut(&pick).expect("picked");
        out.push(q.pop_front().expect("non-empty").1);
        if q.is_empty() {
            queues.remove(&pick);
        }
    }
    out
}

/// An agent available to the reasoner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RosterEntry {
    pub id: EntityId,
    pub kind: AgentKind,
    pub node: MapNode,
    pub can_act: bool,
}

/// Acting agents and their believed positions.
pub fn roster(belief: &Belief) -> Vec<RosterEntry> {
    belief
        .entities()
        .filter_map(|(id, e)| {
            e.as_agent().map(|a| RosterEntry {
                id: id.clone(),
                kind: a.kind,
                node: a.node,
                can_act: a.can_act(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub assignments: Vec<(GoalId, EntityId)>,
    /// `(victim goal, agent, preempting goal)`.
    pub preemptions: Vec<(GoalId, EntityId, GoalId)>,
    /// Goals no capable agent can reach.
    pub unreachable: Vec<GoalId>,
}

/// Connected components of the open road graph.
pub fn components(graph: &RoadGraph) -> BTreeMap<MapNode, usize> {
    let mut label = BTreeMap::new();
    let mut next = 0;
    for start in graph.nodes() {
        if label.contains_key(&start) {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        label.insert(start, next);
        while let Some(n) = queue.pop_front() {
            for e in graph.edges_from(n) {
                if !e.blocked && !label.contains_key(&e.to) {
                    label.insert(e.to, next);
                    queue.push_back(e.to);
                }
            }
        }
        next += 1;
    }
    label
}

/// Everything [`select_and_assign`] needs to know about the world.
pub struct SelectionContext<'a> {
    pub belief: &'a Belief,
    pub graph: &'a RoadGraph,
    pub components: &'a BTreeMap<MapNode, usize>,
    pub capabilities: &'a CapabilityMap,
    pub precedence: &'a Precedence,
}

impl SelectionContext<'_> {
    fn target_nodes(&self, target: &EntityId) -> Vec<MapNode> {
        match self.belief.get(target).map(Entity::nodes) {
            Some((a, Some(b))) => vec![a, b],
            Some((a, None)) => vec![a],
            None => vec![],
        }
    }

    fn reaches(&self, from: MapNode, targets: &[MapNode]) -> bool {
        let c = self.components.get(&from);
        c.is_some() && targets.iter().any(|t| self.components.get(t) == c)
    }

    fn distance(&self, from: MapNode, targets: &[MapNode]) -> f64 {
        let p = self.graph.position(from).unwrap_or_default();
        targets
            .iter()
            .map(|t| {
                let q = self.graph.position(*t).unwrap_or_default();
                (p.0 - q.0).hypot(p.1 - q.1)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Greedy assignment in priority order. A formulated goal takes the nearest
/// free capable agent that can reach it; failing that, it preempts the
/// capable agent whose current goal is strictly lower-ordered and latest in
/// `ordered`, ties by agent id.
pub fn select_and_assign(ordered: &[&Goal], agents: &[RosterEntry], ctx: &SelectionContext<'_>) -> Selection {
    let rank: BTreeMap<GoalId, usize> = ordered.iter().enumerate().map(|(i, g)| (g.id, i)).collect();
    let types: BTreeMap<GoalId, GoalType> = ordered.iter().map(|g| (g.id, g.goal_type)).collect();
    let mut busy: BTreeMap<EntityId, GoalId> = ordered
        .iter()
        .filter(|g| g.mode.is_assigned())
        .filter_map(|g| g.assigned_agent.clone().map(|a| (a, g.id)))
        .collect();
    let mut requeued = BTreeSet::new();
    let mut out = Selection::default();

    for g in ordered {
        if g.mode != GoalMode::Formulated && !requeued.contains(&g.id) {
            continue;
        }
        let targets = ctx.target_nodes(&g.target);
        let capable: Vec<&RosterEntry> = agents
            .iter()
            .filter(|a| a.can_act && ctx.capabilities.allows(g.goal_type, a.kind) && ctx.reaches(a.node, &targets))
            .collect();
        if capable.is_empty() {
            out.unreachable.push(g.id);
            continue;
        }
        let free = capable.iter().filter(|a| !busy.contains_key(&a.id)).min_by(|a, b| {
            ctx.distance(a.node, &targets)
                .total_cmp(&ctx.distance(b.node, &targets))
                .then_with(|| a.id.cmp(&b.id))
        });
        if let Some(agent) = free {
            busy.insert(agent.id.clone(), g.id);
            out.assignments.push((g.id, agent.id.clone()));
            continue;
        }
        let victim = capable
            .iter()
            .filter_map(|a| {
                let current = busy[&a.id];
                ctx.precedence
                    .before(g.goal_type, types[&current])
                    .then(|| (rank[&current], a.id.clone(), current))
            })
            .max_by(|x, y| x.0.cmp(&y.0).then_with(|| y.1.cmp(&x.1)));
        if let Some((_, agent, current)) = victim {
            busy.insert(agent.clone(), g.id);
            let fresh = out.assignments.iter().any(|(goal, _)| *goal == current);
            out.assignments.retain(|(goal, _)| *goal != current);
            if !fresh {
                out.preemptions.push((current, agent.clone(), g.id));
            }
            out.assignments.push((g.id, agent));
            requeued.insert(current);
        }
    }
    out
}

/// All goals ever created, with their logged mode changes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalLedger {
    goals: BTreeMap<GoalId, Goal>,
    next_id: u64,
    transitions: Vec<GoalTransition>,
}

impl GoalLedger {
    pub fn new() -> Self {
        GoalLedger::default()
    }

    pub fn goals(&self) -> impl Iterator<Item = &Goal> {
        self.goals.values()
    }

    pub fn goal(&self, id: GoalId) -> Option<&Goal> {
        self.goals.get(&id)
    }

    pub fn active(&self) -> impl Iterator<Item = &Goal> {
        self.goals.values().filter(|g| g.mode.is_active())
    }

    pub fn transitions(&self) -> &[GoalTransition] {
        &self.transitions
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn create(&mut self, goal_type: GoalType, target: EntityId, now: u64) -> GoalId {
        let id = GoalId(self.next_id);
        self.next_id += 1;
        self.goals.insert(id, Goal::new(id, goal_type, target, now));
        self.transitions.push(GoalTransition {
            time: now,
            goal: id,
            from: None,
            to: GoalMode::Formulated,
            reason: "formulated".into(),
        });
        id
    }

    /// Moves a goal along a lifecycle edge. Leaving the assigned modes
    /// releases the agent and discards plans.
    ///
    /// # Panics
    /// If the edge is not in the lifecycle graph.
    pub fn transition(&mut self, id: GoalId, to: GoalMode, now: u64, reason: impl Into<String>) {
        let goal = self.goals.get_mut(&id).expect("known goal");
        let from = goal.mode;
        assert!(
            transition_allowed(from, to),
            "illegal transition {from:?} -> {to:?} for {id}"
        );
        goal.mode = to;
        if !to.is_assigned() {
            goal.assigned_agent = None;
            goal.plan = None;
            goal.expansions.clear();
            goal.cursor = 0;
        }
        self.transitions.push(GoalTransition {
            time: now,
            goal: id,
            from: Some(from),
            to,
            reason: reason.into(),
        });
    }

    fn goal_mut(&mut self, id: GoalId) -> &mut Goal {
        self.goals.get_mut(&id).expect("known goal")
    }
}

/// Result of one reasoning tick.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickReport {
    /// Actions to submit for the next simulation step.
    pub actions: BTreeMap<EntityId, Action>,
    pub formulated: Vec<GoalId>,
    pub selection: Selection,
    /// Time spent formulating, ordering and selecting.
    pub reasoning: Duration,
    /// Plans committed this tick.
    pub committed: Vec<Plan>,
}

/// The lifecycle manager.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalReasoner {
    pub ledger: GoalLedger,
    pub capabilities: CapabilityMap,
}

impl GoalReasoner {
    pub fn new() -> Self {
        GoalReasoner::default()
    }

    /// Runs evaluation, formulation, ordering, selection and dispatch for time `now`.
    pub fn tick(&mut self, now: u64, belief: &mut Belief, kb: &FrameSet, map: &MapTopology, speed: u32) -> TickReport {
        let mut report = TickReport::default();
        let graph = RoadGraph::project(map, belief);
        let comps = components(&graph);
        let agents = roster(belief);
        let agent_ok: BTreeMap<&EntityId, &RosterEntry> = agents.iter().map(|a| (&a.id, a)).collect();

        self.evaluate(now, belief, &agent_ok, &comps);

        let started = Instant::now();
        for (goal_type, target) in formulate_goals(belief, kb, self.ledger.active(), now) {
            report.formulated.push(self.ledger.create(goal_type, target, now));
        }
        let precedence = Precedence::from_kb(kb);
        let pending: Vec<&Goal> = self.ledger.active().filter(|g| g.mode != GoalMode::Deferred).collect();
        let ordered = order_goals(&pending, &precedence);
        let ctx = SelectionContext {
            belief,
            graph: &graph,
            components: &comps,
            capabilities: &self.capabilities,
            precedence: &precedence,
        };
        let selection = select_and_assign(&ordered, &agents, &ctx);
        let order: Vec<GoalId> = ordered.iter().map(|g| g.id).collect();
        report.reasoning = started.elapsed();

        for (victim, agent, by) in &selection.preemptions {
            self.ledger.transition(
                *victim,
                GoalMode::Formulated,
                now,
                format!("preempted: {agent} taken by {by}"),
            );
        }
        for (goal, agent) in &selection.assignments {
            self.ledger
                .transition(*goal, GoalMode::Selected, now, format!("assigned to {agent}"));
            self.ledger.goal_mut(*goal).assigned_agent = Some(agent.clone());
        }
        for goal in &selection.unreachable {
            if self.ledger.goals[goal].mode == GoalMode::Formulated {
                self.ledger
                    .transition(*goal, GoalMode::Deferred, now, "no capable agent can reach the target");
            }
        }
        report.selection = selection;

        let mut graph = graph;
        for id in order {
            if self.ledger.goals[&id].mode.is_assigned() {
                if let Some(action) = self.advance(id, now, belief, &mut graph, speed, &mut report.committed) {
                    let agent = self.ledger.goals[&id].assigned_agent.clone().expect("assigned");
                    report.actions.insert(agent, action);
                }
            }
        }
        report
    }

    /// Finishes, drops, releases and revives goals according to the belief.
    fn evaluate(
        &mut self,
        now: u64,
        belief: &Belief,
        agents: &BTreeMap<&EntityId, &RosterEntry>,
        comps: &BTreeMap<MapNode, usize>,
    ) {
        let ids: Vec<GoalId> = self.ledger.active().map(|g| g.id).collect();
        for id in ids {
            let g = &self.ledger.goals[&id];
            let Some(target) = belief.get(&g.target) else {
                continue;
            };
            if g.goal_type.lost(target) {
                self.ledger.transition(id, GoalMode::Dropped, now, "target lost");
            } else if g.goal_type.achieved(target) {
                if g.mode == GoalMode::Dispatched {
                    self.ledger
                        .transition(id, GoalMode::Finished, now, "goal condition holds");
                } else {
                    self.ledger
                        .transition(id, GoalMode::Dropped, now, "goal condition already holds");
                }
            } else if g.mode.is_assigned() {
                let agent = g.assigned_agent.clone().expect("assigned goals have agents");
                if !agents.get(&agent).is_some_and(|a| a.can_act) {
                    self.ledger
                        .transition(id, GoalMode::Formulated, now, format!("{agent} cannot act"));
                }
            } else if g.mode == GoalMode::Deferred {
                let targets: Vec<MapNode> = match target.nodes() {
                    (a, Some(b)) => vec![a, b],
                    (a, None) => vec![a],
                };
                let reachable = agents.values().any(|a| {
                    a.can_act
                        && self.capabilities.allows(g.goal_type, a.kind)
                        && targets
                            .iter()
                            .any(|t| comps.get(t).is_some() && comps.get(t) == comps.get(&a.node))
                });
                if reachable {
                    self.ledger
                        .transition(id, GoalMode::Formulated, now, "target reachable again");
                }
            }
        }
    }

    /// Expands, commits and dispatches; returns this tick's action for the goal's agent.
    fn advance(
        &mut self,
        id: GoalId,
        now: u64,
        belief: &mut Belief,
        graph: &mut RoadGraph,
        speed: u32,
        committed: &mut Vec<Plan>,
    ) -> Option<Action> {
        loop {
            let g = &self.ledger.goals[&id];
            let agent = g.assigned_agent.clone().expect("assigned");
            match g.mode {
                GoalMode::Selected => match build_plan(id, g.goal_type, &g.target, &agent, belief, graph) {
                    Ok(plan) => {
                        self.ledger.transition(id, GoalMode::Expanded, now, "1 expansion");
                        self.ledger.goal_mut(id).expansions = vec![plan];
                    }
                    Err(e) => {
                        self.ledger.transition(id, GoalMode::Deferred, now, e.to_string());
                        return None;
                    }
                },
                GoalMode::Expanded => {
                    if g.expansions.is_empty() {
                        match build_plan(id, g.goal_type, &g.target, &agent, belief, graph) {
                            Ok(plan) => self.ledger.goal_mut(id).expansions = vec![plan],
                            Err(e) => {
                                self.ledger.transition(id, GoalMode::Deferred, now, e.to_string());
                                return None;
                            }
                        }
                    }
                    let goal = self.ledger.goal_mut(id);
                    let plan = goal.expansions.remove(0);
                    goal.expansions.clear();
                    goal.plan = Some(plan.clone());
                    goal.cursor = 0;
                    committed.push(plan);
                    self.ledger
                        .transition(id, GoalMode::Committed, now, "cheapest expansion");
                }
                GoalMode::Committed => {
                    self.ledger
                        .transition(id, GoalMode::Dispatched, now, format!("dispatched to {agent}"));
                }
                GoalMode::Dispatched => {
                    let plan = g.plan.as_ref().expect("dispatched goals carry a plan");
                    let at = belief.get(&agent).and_then(Entity::as_agent).map(|a| a.node);
                    let Some(i) = at.and_then(|n| plan.route.nodes.iter().position(|m| *m == n)) else {
                        self.ledger
                            .transition(id, GoalMode::Expanded, now, "agent left the planned route");
                        continue;
                    };
                    let hops = plan.route.roads.len();
                    if i < hops {
                        let blocked = plan.route.roads[i..]
                            .iter()
                            .find(|r| belief.get(r).and_then(Entity::as_road).is_some_and(|r| r.blocked));
                        if let Some(road) = blocked.cloned() {
                            belief.mark_requested(&road);
                            graph.set_blocked(&road, true);
                            self.ledger
                                .transition(id, GoalMode::Expanded, now, format!("{road} blocks the plan"));
                            continue;
                        }
                        let end = (i + speed as usize).min(hops);
                        let path = plan.route.nodes[i + 1..=end].to_vec();
                        self.ledger.goal_mut(id).cursor += 1;
                        return Some(Action::Move { path });
                    }
                    let terminal = plan
                        .actions
                        .last()
                        .cloned()
                        .filter(|a| !matches!(a, Action::Move { .. }))
                        .unwrap_or(Action::Rest);
                    self.ledger.goal_mut(id).cursor += 1;
                    return Some(terminal);
                }
                _ => return None,
            }
        }
    }
}
