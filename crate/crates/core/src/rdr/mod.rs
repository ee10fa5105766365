//! Ripple-down rule trees.
//!
//! A tree is a root rule `if true then <default>` whose wrong conclusions are
//! patched by exception rules. Every non-root rule carries the id of the
//! cornerstone case that caused its creation, and the frozen case itself is
//! kept in the tree's cornerstone store so later patches can be justified by
//! comparing the new case against it.
//!
//! Nodes live in an arena kept in preorder (node, exception subtree, else
//! subtree). Two trees with the same shape therefore compare equal no matter
//! in which order their rules were added.

mod order;
mod update;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::atom::Atom;

pub use order::{evaluate_order, ordering_case, ordering_conflicts, ordering_cycle, ORDER_FALSE, ORDER_TRUE};
pub use update::{candidate_differences, UpdateError};

/// Frozen slot-value snapshot used as a rule's justification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Case {
    pub id: String,
    pub bindings: BTreeMap<String, Atom>,
    pub created_at: u64,
}

impl Case {
    pub fn new(id: impl Into<String>, created_at: u64) -> Self {
        Case {
            id: id.into(),
            bindings: BTreeMap::new(),
            created_at,
        }
    }

    pub fn with(mut self, key: &str, value: &str) -> Self {
        self.bindings.insert(key.to_string(), Atom::from(value));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Atom> {
        self.bindings.get(key)
    }
}

/// Left-hand side of an equality literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Operand {
    /// `this <slot>`: a slot of the frame being classified.
    This(String),
    /// A bound variable such as `GoalA` in ordering rules.
    Var(String),
}

impl Operand {
    /// Variables are capitalised; everything else is a slot of `this`.
    pub fn for_key(key: &str) -> Self {
        if key.starts_with(|c: char| c.is_ascii_uppercase()) {
            Operand::Var(key.to_string())
        } else {
            Operand::This(key.to_string())
        }
    }

    pub fn key(&self) -> &str {
        match self {
            Operand::This(s) | Operand::Var(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub operand: Operand,
    pub value: Atom,
}

impl Literal {
    pub fn new(key: &str, value: &str) -> Self {
        Literal {
            operand: Operand::for_key(key),
            value: Atom::from(value),
        }
    }

    /// A missing binding makes the literal false.
    pub fn holds(&self, case: &Case) -> bool {
        case.get(self.operand.key()) == Some(&self.value)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.operand {
            Operand::This(slot) => write!(f, "this {slot} == {}", self.value),
            Operand::Var(var) => write!(f, "{var} == {}", self.value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    True,
    /// Non-empty conjunction of equality literals.
    All(Vec<Literal>),
}

impl Condition {
    pub fn holds(&self, case: &Case) -> bool {
        match self {
            Condition::True => true,
            Condition::All(lits) => lits.iter().all(|l| l.holds(case)),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::True => f.write_str("true"),
            Condition::All(lits) => {
                for (i, lit) in lits.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" and ")?;
                    }
                    write!(f, "{lit}")?;
                }
                Ok(())
            }
        }
    }
}

/// Index of a node in its tree's arena. The root is always `NodeId(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RdrNode {
    pub condition: Condition,
    pub conclusion: Atom,
    /// Id of the justifying case. Only the root may omit it.
    pub cornerstone: Option<String>,
    pub except: Option<NodeId>,
    pub alternative: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evaluation {
    pub conclusion: Atom,
    pub fired: NodeId,
}

/// A cornerstone that no longer reproduces its rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub node: NodeId,
    pub cornerstone: String,
    pub expected: Atom,
    /// `None` when the cornerstone case is missing from the store.
    pub actual: Option<Evaluation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RdrTree {
    nodes: Vec<RdrNode>,
    cornerstones: BTreeMap<String, Case>,
}

impl RdrTree {
    /// The single default rule `if true then <conclusion> [because <case>]`.
    /// A named root cornerstone is stored as an empty case at time 0.
    pub fn with_default(conclusion: impl Into<Atom>, root_case: Option<&str>) -> Self {
        let mut cornerstones = BTreeMap::new();
        if let Some(id) = root_case {
            cornerstones.insert(id.to_string(), Case::new(id, 0));
        }
        RdrTree {
            nodes: vec![RdrNode {
                condition: Condition::True,
                conclusion: conclusion.into(),
                cornerstone: root_case.map(str::to_string),
                except: None,
                alternative: None,
            }],
            cornerstones,
        }
    }

    /// Builds a tree from raw parts, re-laying the arena out in preorder.
    /// `root` must have condition `true`.
    pub(crate) fn from_parts(nodes: Vec<RdrNode>, root: NodeId, cornerstones: BTreeMap<String, Case>) -> Self {
        let mut tree = RdrTree { nodes, cornerstones };
        tree.reorder_from(root);
        tree
    }

    pub fn root(&self) -> &RdrNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &RdrNode {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &RdrNode)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i), n))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cornerstones(&self) -> &BTreeMap<String, Case> {
        &self.cornerstones
    }

    pub fn cornerstone(&self, id: &str) -> Option<&Case> {
        self.cornerstones.get(id)
    }

    pub(crate) fn insert_cornerstone(&mut self, case: Case) {
        self.cornerstones.insert(case.id.clone(), case);
    }

    /// The case behind a node. A root without a stored case uses the empty case.
    pub fn node_case(&self, id: NodeId) -> Option<Case> {
        let node = self.node(id);
        match &node.cornerstone {
            Some(cid) => self.cornerstones.get(cid).cloned(),
            None if id == NodeId::ROOT => Some(Case::new("", 0)),
            None => None,
        }
    }

    /// Locates the node created for `case_id`.
    pub fn node_for_case(&self, case_id: &str) -> Option<NodeId> {
        self.nodes()
            .find(|(_, n)| n.cornerstone.as_deref() == Some(case_id))
            .map(|(id, _)| id)
    }

    /// Every conclusion any rule can produce.
    pub fn conclusions(&self) -> impl Iterator<Item = &Atom> {
        self.nodes.iter().map(|n| &n.conclusion)
    }

    /// Classifies `case`: the deepest satisfied rule wins.
    pub fn evaluate(&self, case: &Case) -> Evaluation {
        let fired = self.fire(NodeId::ROOT, case).unwrap_or(NodeId::ROOT);
        Evaluation {
            conclusion: self.node(fired).conclusion.clone(),
            fired,
        }
    }

    fn fire(&self, start: NodeId, case: &Case) -> Option<NodeId> {
        let mut cursor = Some(start);
        while let Some(id) = cursor {
            let node = self.node(id);
            if node.condition.holds(case) {
                let deeper = node.except.and_then(|ex| self.fire(ex, case));
                return Some(deeper.unwrap_or(id));
            }
            cursor = node.alternative;
        }
        None
    }

    /// Replays every cornerstone; each must fire exactly its own rule.
    pub fn verify_cornerstones(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (id, node) in self.nodes() {
            let label = node.cornerstone.clone().unwrap_or_default();
            match self.node_case(id) {
                None => out.push(Violation {
                    node: id,
                    cornerstone: label,
                    expected: node.conclusion.clone(),
                    actual: None,
                }),
                Some(case) => {
                    let eval = self.evaluate(&case);
                    if eval.fired != id || eval.conclusion != node.conclusion {
                        out.push(Violation {
                            node: id,
                            cornerstone: label,
                            expected: node.conclusion.clone(),
                            actual: Some(eval),
                        });
                    }
                }
            }
        }
        out
    }

    /// Canonical text with the root `if` at column `indent`.
    pub fn render(&self, indent: usize) -> String {
        let mut out = String::new();
        self.render_node(NodeId::ROOT, indent, &mut out);
        out
    }

    fn render_node(&self, id: NodeId, indent: usize, out: &mut String) {
        let pad = " ".repeat(indent);
        let node = self.node(id);
        let because = node
            .cornerstone
            .as_ref()
            .map(|c| format!(" because {c}"))
            .unwrap_or_default();
        if id == NodeId::ROOT {
            out.push_str(&format!(
                "{pad}if {} then {}{because}\n",
                node.condition, node.conclusion
            ));
        } else {
            out.push_str(&format!("{pad}if {}\n", node.condition));
            out.push_str(&format!("{pad}    then {}{because}\n", node.conclusion));
        }
        if let Some(ex) = node.except {
            out.push_str(&format!("{pad}    except\n"));
            self.render_node(ex, indent + 4, out);
        }
        if let Some(alt) = node.alternative {
            out.push_str(&format!("{pad}else\n"));
            self.render_node(alt, indent, out);
        }
    }

    /// Rebuilds the arena in preorder starting from `root`.
    fn reorder_from(&mut self, root: NodeId) {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            order.push(id);
            let node = &self.nodes[id.0];
            if let Some(alt) = node.alternative {
                stack.push(alt);
            }
            if let Some(ex) = node.except {
                stack.push(ex);
            }
        }
        let mut remap = vec![usize::MAX; self.nodes.len()];
        for (new, old) in order.iter().enumerate() {
            remap[old.0] = new;
        }
        let nodes = order
            .iter()
            .map(|old| {
                let mut n = self.nodes[old.0].clone();
                n.except = n.except.map(|e| NodeId(remap[e.0]));
                n.alternative = n.alternative.map(|a| NodeId(remap[a.0]));
                n
            })
            .collect();
        self.nodes = nodes;
    }
}

impl fmt::Display for RdrTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(0))
    }
}
