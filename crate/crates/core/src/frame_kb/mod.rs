//! Frame knowledge base.
//!
//! Generic frames describe classes (`human ako object with ...`), instance
//! frames describe individuals (`frame(human_1, [human], [...]);`). Slots
//! carry a value, a `range` facet, an `if_needed` daemon holding a
//! ripple-down rule tree, and an `if_replaced` daemon naming the slots the
//! trainer is shown first when overriding the tree's answer.

mod lexer;
mod parser;
mod serialize;

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atom::{is_identifier, Atom};
use crate::rdr::{candidate_differences, Case, Evaluation, Literal, RdrTree};

/// Implicit root of every inheritance chain.
pub const OBJECT: &str = "object";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KbError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("frame `{frame}` names unknown parent `{parent}`")]
    UnknownParent { frame: String, parent: String },
    #[error("frame `{frame}` cannot inherit from instance frame `{parent}`")]
    InstanceParent { frame: String, parent: String },
    #[error("frame `{0}` is declared twice")]
    DuplicateFrame(String),
    #[error("unknown frame `{0}`")]
    UnknownFrame(String),
    #[error("slot `{slot}` is not declared for frame `{frame}`")]
    UndeclaredSlot { frame: String, slot: String },
    #[error("value `{value}` is outside the range of `{frame}.{slot}`")]
    RangeViolation { frame: String, slot: String, value: Atom },
    #[error("`{frame}.{slot}` has no value and no if_needed daemon")]
    ValueUnavailable { frame: String, slot: String },
    #[error("`{frame}.{slot}` if_replaced names undeclared slot `{target}`")]
    BadIfReplaced {
        frame: String,
        slot: String,
        target: String,
    },
    #[error("`{frame}.{slot}` has no if_needed rule tree")]
    NoTree { frame: String, slot: String },
    #[error("rule in `{frame}.{slot}` cites cornerstone `{case}` which is not declared")]
    UnresolvedCornerstone { frame: String, slot: String, case: String },
    #[error("cornerstone `{case}` (line {line}) is not cited by any rule of `{frame}.{slot}`")]
    OrphanCornerstone {
        frame: String,
        slot: String,
        case: String,
        line: usize,
    },
    #[error("cornerstone `{case}` is declared twice for `{frame}.{slot}`")]
    DuplicateCornerstone { frame: String, slot: String, case: String },
    #[error("`{0}` is not a valid identifier")]
    BadIdentifier(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    Generic,
    Instance,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub range: Option<Vec<Atom>>,
    pub value: Option<Atom>,
    pub if_needed: Option<RdrTree>,
    pub if_replaced: Option<Vec<String>>,
}

impl Slot {
    pub fn with_range<const N: usize>(atoms: [&str; N]) -> Self {
        Slot {
            range: Some(atoms.iter().map(|a| Atom::from(*a)).collect()),
            ..Slot::default()
        }
    }

    pub fn valued(value: impl Into<Atom>) -> Self {
        Slot {
            value: Some(value.into()),
            ..Slot::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub id: String,
    pub kind: FrameKind,
    pub parents: Vec<String>,
    pub slots: IndexMap<String, Slot>,
}

impl Frame {
    pub fn generic(id: &str, parents: &[&str]) -> Self {
        Frame {
            id: id.to_string(),
            kind: FrameKind::Generic,
            parents: parents.iter().map(|p| p.to_string()).collect(),
            slots: IndexMap::new(),
        }
    }

    pub fn instance(id: &str, parents: &[&str]) -> Self {
        Frame {
            kind: FrameKind::Instance,
            ..Frame::generic(id, parents)
        }
    }

    pub fn slot(mut self, name: &str, slot: Slot) -> Self {
        self.slots.insert(name.to_string(), slot);
        self
    }

    pub fn value(self, name: &str, value: &str) -> Self {
        self.slot(name, Slot::valued(value))
    }
}

/// Outcome of assigning a slot value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlotAssignment {
    /// The value was stored on the frame.
    Stored,
    /// The slot's rule tree already produces this value; nothing changed.
    Confirmed,
    /// The value overrides the slot's rule tree; the tree must be patched.
    UpdateRequest(Box<UpdateRequest>),
}

/// Everything the trainer needs to patch a rule tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UpdateRequest {
    pub frame: String,
    pub slot: String,
    /// Generic frame holding the `if_needed` tree.
    pub tree_owner: String,
    pub case: Case,
    pub current: Evaluation,
    pub cornerstone: Case,
    pub proposed: Atom,
    pub candidates: Vec<Literal>,
}

/// Facets of a slot as seen from one frame, each taken from the nearest
/// frame in the inheritance chain that defines it.
#[derive(Debug, Clone, Copy)]
pub struct EffectiveSlot<'a> {
    pub range: Option<&'a [Atom]>,
    pub value: Option<&'a Atom>,
    pub if_needed: Option<(&'a str, &'a RdrTree)>,
    pub if_replaced: Option<&'a [String]>,
}

impl EffectiveSlot<'_> {
    pub fn admits(&self, value: &Atom) -> bool {
        self.range.is_none_or(|r| r.contains(value))
    }
}

/// An ordered set of frames. Declaration order is preserved for serialization.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSet {
    frames: IndexMap<String, Frame>,
}

impl FromStr for FrameSet {
    type Err = KbError;

    fn from_str(text: &str) -> Result<Self, KbError> {
        FrameSet::parse(text)
    }
}

impl FrameSet {
    pub fn new() -> Self {
        FrameSet::default()
    }

    /// Parses rule-DSL source into a validated frame set.
    pub fn parse(text: &str) -> Result<FrameSet, KbError> {
        let parsed = parser::Parser::new(text)?.parse_source()?;
        let mut frames = parsed.frames;

        let mut by_owner: BTreeMap<(String, String), Vec<parser::CornerstoneDecl>> = BTreeMap::new();
        for decl in parsed.cornerstones {
            by_owner
                .entry((decl.owner.clone(), decl.slot.clone()))
                .or_default()
                .push(decl);
        }
        for frame in &mut frames {
            for (name, slot) in frame.slots.iter_mut() {
                let Some(tree) = slot.if_needed.as_mut() else { continue };
                let decls = by_owner.remove(&(frame.id.clone(), name.clone())).unwrap_or_default();
                attach_cornerstones(&frame.id, name, tree, decls)?;
            }
        }
        if let Some(((owner, slot), decls)) = by_owner.into_iter().next() {
            return Err(KbError::OrphanCornerstone {
                frame: owner,
                slot,
                case: decls[0].case.id.clone(),
                line: decls[0].line,
            });
        }

        let mut kb = FrameSet::new();
        for frame in frames {
            kb.insert(frame)?;
        }
        Ok(kb)
    }

    /// Parses a standalone rule tree such as `if true then none because case0`.
    /// Cornerstones other than the root's are left unresolved.
    pub fn parse_tree(text: &str) -> Result<RdrTree, KbError> {
        parser::Parser::new(text)?.parse_tree()
    }

    /// Canonical DSL text. Parsing it back yields an equal frame set.
    pub fn serialize(&self) -> String {
        serialize::write_frame_set(self)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> impl Iterator<Item = &Frame> {
        self.frames.values()
    }

    pub fn frame(&self, id: &str) -> Option<&Frame> {
        self.frames.get(id)
    }

    /// Adds a frame after checking parents, ranges, daemons and cornerstones.
    pub fn insert(&mut self, frame: Frame) -> Result<(), KbError> {
        if !is_identifier(&frame.id) {
            return Err(KbError::BadIdentifier(frame.id));
        }
        if frame.id == OBJECT || self.frames.contains_key(&frame.id) {
            return Err(KbError::DuplicateFrame(frame.id));
        }
        for parent in &frame.parents {
            if parent == OBJECT {
                continue;
            }
            match self.frames.get(parent) {
                None => {
                    return Err(KbError::UnknownParent {
                        frame: frame.id.clone(),
                        parent: parent.clone(),
                    })
                }
                Some(p) if p.kind == FrameKind::Instance => {
                    return Err(KbError::InstanceParent {
                        frame: frame.id.clone(),
                        parent: parent.clone(),
                    })
                }
                Some(_) => {}
            }
        }
        self.validate_slots(&frame)?;
        self.frames.insert(frame.id.clone(), frame);
        Ok(())
    }

    fn validate_slots(&self, frame: &Frame) -> Result<(), KbError> {
        let declared = self.declared_slots(frame);
        for (name, slot) in &frame.slots {
            if !is_identifier(name) {
                return Err(KbError::BadIdentifier(name.clone()));
            }
            // instances only fill slots their ancestors declare
            let inherited = self.lineage(frame).iter().skip(1).any(|f| f.slots.contains_key(name));
            if frame.kind == FrameKind::Instance && !inherited {
                return Err(KbError::UndeclaredSlot {
                    frame: frame.id.clone(),
                    slot: name.clone(),
                });
            }
            let eff = self
                .effective_slot(frame, name)
                .ok_or_else(|| KbError::UndeclaredSlot {
                    frame: frame.id.clone(),
                    slot: name.clone(),
                })?;
            let range_violation = |value: &Atom| KbError::RangeViolation {
                frame: frame.id.clone(),
                slot: name.clone(),
                value: value.clone(),
            };
            if let Some(v) = &slot.value {
                if !eff.admits(v) {
                    return Err(range_violation(v));
                }
            }
            if let Some(targets) = &slot.if_replaced {
                if let Some(bad) = targets.iter().find(|t| !declared.contains(t.as_str())) {
                    return Err(KbError::BadIfReplaced {
                        frame: frame.id.clone(),
                        slot: name.clone(),
                        target: bad.clone(),
                    });
                }
            }
            if let Some(tree) = &slot.if_needed {
                if let Some(bad) = tree.conclusions().find(|c| !eff.admits(c)) {
                    return Err(range_violation(bad));
                }
                check_cornerstones(&frame.id, name, tree)?;
            }
        }
        Ok(())
    }

    /// `frame` followed by its ancestors, depth-first with the first parent
    /// explored first; each ancestor appears once.
    pub fn lineage<'a>(&'a self, frame: &'a Frame) -> Vec<&'a Frame> {
        let mut out = vec![frame];
        let mut seen = BTreeSet::new();
        fn walk<'a>(kb: &'a FrameSet, f: &'a Frame, seen: &mut BTreeSet<&'a str>, out: &mut Vec<&'a Frame>) {
            for p in &f.parents {
                if let Some(pf) = kb.frames.get(p) {
                    if seen.insert(pf.id.as_str()) {
                        out.push(pf);
                        walk(kb, pf, seen, out);
                    }
                }
            }
        }
        walk(self, frame, &mut seen, &mut out);
        out
    }

    /// Slot names visible from `frame`, nearest declarations first.
    pub fn declared_slots<'a>(&'a self, frame: &'a Frame) -> IndexSet<&'a str> {
        self.lineage(frame)
            .into_iter()
            .flat_map(|f| f.slots.keys().map(String::as_str))
            .collect()
    }

    pub fn effective_slot<'a>(&'a self, frame: &'a Frame, slot: &str) -> Option<EffectiveSlot<'a>> {
        let mut eff = EffectiveSlot {
            range: None,
            value: None,
            if_needed: None,
            if_replaced: None,
        };
        let mut found = false;
        for f in self.lineage(frame) {
            let Some(s) = f.slots.get(slot) else { continue };
            found = true;
            if eff.range.is_none() {
                eff.range = s.range.as_deref();
            }
            if eff.value.is_none() {
                eff.value = s.value.as_ref();
            }
            if eff.if_needed.is_none() {
                eff.if_needed = s.if_needed.as_ref().map(|t| (f.id.as_str(), t));
            }
            if eff.if_replaced.is_none() {
                eff.if_replaced = s.if_replaced.as_deref();
            }
        }
        found.then_some(eff)
    }

    fn require(&self, id: &str) -> Result<&Frame, KbError> {
        self.frames.get(id).ok_or_else(|| KbError::UnknownFrame(id.to_string()))
    }

    /// Value of `slot` for frame `id`: local, then inherited, then computed by
    /// the nearest `if_needed` rule tree.
    pub fn resolve_slot(&self, id: &str, slot: &str) -> Result<Atom, KbError> {
        self.resolve_in(self.require(id)?, slot)
    }

    /// [`FrameSet::resolve_slot`] for a frame that need not be stored in the
    /// set, such as a transient mirror of a simulated entity.
    pub fn resolve_in(&self, frame: &Frame, slot: &str) -> Result<Atom, KbError> {
        Ok(self.evaluate_in(frame, slot, 0)?.0)
    }

    /// Resolves `slot` and also reports the rule that fired, if a tree was used.
    pub fn evaluate_in(&self, frame: &Frame, slot: &str, now: u64) -> Result<(Atom, Option<Evaluation>), KbError> {
        let eff = self
            .effective_slot(frame, slot)
            .ok_or_else(|| KbError::UndeclaredSlot {
                frame: frame.id.clone(),
                slot: slot.to_string(),
            })?;
        if let Some(v) = eff.value {
            return Ok((v.clone(), None));
        }
        match eff.if_needed {
            Some((_, tree)) => {
                let eval = tree.evaluate(&self.case_projection(frame, now));
                Ok((eval.conclusion.clone(), Some(eval)))
            }
            None => Err(KbError::ValueUnavailable {
                frame: frame.id.clone(),
                slot: slot.to_string(),
            }),
        }
    }

    /// Every slot value resolvable from `frame` without running a daemon.
    pub fn case_projection(&self, frame: &Frame, now: u64) -> Case {
        let mut case = Case::new(frame.id.clone(), now);
        let lineage = self.lineage(frame);
        for f in &lineage {
            for (name, s) in &f.slots {
                if let Some(v) = &s.value {
                    case.bindings.entry(name.clone()).or_insert_with(|| v.clone());
                }
            }
        }
        case
    }

    /// Assigns `value` to `slot` on frame `id`.
    ///
    /// When the slot has an `if_replaced` daemon and its rule tree concludes
    /// something else, nothing is stored; the returned request carries the
    /// case, the fired rule, its cornerstone and the candidate conditions.
    pub fn set_slot_value(&mut self, id: &str, slot: &str, value: Atom) -> Result<SlotAssignment, KbError> {
        let frame = self.require(id)?;
        let eff = self
            .effective_slot(frame, slot)
            .ok_or_else(|| KbError::UndeclaredSlot {
                frame: id.to_string(),
                slot: slot.to_string(),
            })?;
        if !eff.admits(&value) {
            return Err(KbError::RangeViolation {
                frame: id.to_string(),
                slot: slot.to_string(),
                value,
            });
        }
        if let (Some(hints), Some((owner, tree))) = (eff.if_replaced, eff.if_needed) {
            let case = self.case_projection(frame, 0);
            let current = tree.evaluate(&case);
            if current.conclusion == value {
                return Ok(SlotAssignment::Confirmed);
            }
            let cornerstone = tree.node_case(current.fired).unwrap_or_else(|| Case::new("", 0));
            let candidates = candidate_differences(&cornerstone, &case, hints);
            return Ok(SlotAssignment::UpdateRequest(Box::new(UpdateRequest {
                frame: id.to_string(),
                slot: slot.to_string(),
                tree_owner: owner.to_string(),
                case,
                current,
                cornerstone,
                proposed: value,
                candidates,
            })));
        }
        let frame = self.frames.get_mut(id).expect("checked above");
        frame.slots.entry(slot.to_string()).or_default().value = Some(value);
        Ok(SlotAssignment::Stored)
    }

    pub fn tree(&self, owner: &str, slot: &str) -> Option<&RdrTree> {
        self.frames.get(owner)?.slots.get(slot)?.if_needed.as_ref()
    }

    /// Installs `tree` as the `if_needed` daemon of `owner.slot`.
    pub fn replace_tree(&mut self, owner: &str, slot: &str, tree: RdrTree) -> Result<(), KbError> {
        let frame = self.require(owner)?;
        let eff = self
            .effective_slot(frame, slot)
            .ok_or_else(|| KbError::UndeclaredSlot {
                frame: owner.to_string(),
                slot: slot.to_string(),
            })?;
        if let Some(bad) = tree.conclusions().find(|c| !eff.admits(c)) {
            return Err(KbError::RangeViolation {
                frame: owner.to_string(),
                slot: slot.to_string(),
                value: bad.clone(),
            });
        }
        check_cornerstones(owner, slot, &tree)?;
        let frame = self.frames.get_mut(owner).expect("checked above");
        frame.slots.entry(slot.to_string()).or_default().if_needed = Some(tree);
        Ok(())
    }

    /// All `(owner, slot)` pairs carrying a rule tree, in declaration order.
    pub fn trees(&self) -> impl Iterator<Item = (&str, &str, &RdrTree)> {
        self.frames.values().flat_map(|f| {
            f.slots
                .iter()
                .filter_map(move |(name, s)| s.if_needed.as_ref().map(|t| (f.id.as_str(), name.as_str(), t)))
        })
    }
}

fn check_cornerstones(frame: &str, slot: &str, tree: &RdrTree) -> Result<(), KbError> {
    for (_, node) in tree.nodes() {
        if let Some(case) = &node.cornerstone {
            if tree.cornerstone(case).is_none() {
                return Err(KbError::UnresolvedCornerstone {
                    frame: frame.to_string(),
                    slot: slot.to_string(),
                    case: case.clone(),
                });
            }
        }
    }
    Ok(())
}

fn attach_cornerstones(
    frame: &str,
    slot: &str,
    tree: &mut RdrTree,
    decls: Vec<parser::CornerstoneDecl>,
) -> Result<(), KbError> {
    let cited: BTreeSet<String> = tree.nodes().filter_map(|(_, n)| n.cornerstone.clone()).collect();
    let mut seen = BTreeSet::new();
    for decl in decls {
        if !cited.contains(&decl.case.id) {
            return Err(KbError::OrphanCornerstone {
                frame: frame.to_string(),
                slot: slot.to_string(),
                case: decl.case.id,
                line: decl.line,
            });
        }
        if !seen.insert(decl.case.id.clone()) {
            return Err(KbError::DuplicateCornerstone {
                frame: frame.to_string(),
                slot: slot.to_string(),
                case: decl.case.id,
            });
        }
        tree.insert_cornerstone(decl.case);
    }
    Ok(())
}

#[cfg(test)]
mod tests;
