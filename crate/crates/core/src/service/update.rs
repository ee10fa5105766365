use serde::{Deserialize, Serialize};

use super::{check_ordering, Event, ServiceError, Session, Status};
use crate::atom::Atom;
use crate::goal_reasoner::{entity_frame, GoalType, GOAL_SLOT, ORDER_FRAME, ORDER_SLOT};
use crate::rdr::{candidate_differences, ordering_case, Case, Evaluation, Literal, NodeId};
use crate::sim::EntityId;

/// A rule tree named by its owning frame and slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeRef {
    pub owner: String,
    pub slot: String,
}

impl TreeRef {
    /// `owner.slot`, or a bare owner: `goal_order` (and `order`) name the
    /// ordering tree, anything else its `goal` slot.
    pub fn parse(s: &str) -> TreeRef {
        match s.split_once('.') {
            Some((owner, slot)) => TreeRef {
                owner: owner.to_string(),
                slot: slot.to_string(),
            },
            None if s == ORDER_FRAME || s == "order" => TreeRef {
                owner: ORDER_FRAME.to_string(),
                slot: ORDER_SLOT.to_string(),
            },
            None => TreeRef {
                owner: s.to_string(),
                slot: GOAL_SLOT.to_string(),
            },
        }
    }
}

impl std::fmt::Display for TreeRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.owner, self.slot)
    }
}

/// What a rule update is about: a believed entity, or a pair of goal types
/// for the ordering tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UpdateSubject {
    Entity { entity: EntityId },
    Goals { goal_a: String, goal_b: String },
}

/// A proposed correction, frozen until committed or discarded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateDraft {
    pub id: u64,
    pub tree: TreeRef,
    pub subject: UpdateSubject,
    pub time: u64,
    /// The new cornerstone if committed.
    pub case: Case,
    pub current: Evaluation,
    pub proposed: Atom,
    /// Cornerstone of the rule that fired, shown next to `case`.
    pub cornerstone: Case,
    /// Conditions that tell `case` apart from `cornerstone`, hinted slots first.
    pub candidates: Vec<Literal>,
}

/// One committed rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub update: u64,
    pub tree: TreeRef,
    pub node: NodeId,
    pub case_id: String,
    pub conclusion: Atom,
    pub literals: Vec<String>,
    /// Time of the case.
    pub case_time: u64,
    /// Session time of the commit.
    pub committed_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitSummary {
    pub audit: AuditRecord,
    pub rules: usize,
    pub text: String,
}

impl Session {
    /// Builds a draft correcting `tree`'s conclusion for `subject` at `time`.
    pub fn begin_rule_update(
        &mut self,
        time: u64,
        subject: UpdateSubject,
        tree: &str,
        proposed: &str,
    ) -> Result<UpdateDraft, ServiceError> {
        if self.status != Status::Paused {
            return Err(ServiceError::NotPaused("rule update"));
        }
        let tref = TreeRef::parse(tree);
        let rdr = self
            .kb
            .tree(&tref.owner, &tref.slot)
            .ok_or_else(|| ServiceError::UnknownTree(tree.to_string()))?;
        let owner_frame = self.kb.frame(&tref.owner).expect("trees live on frames");
        let eff = self
            .kb
            .effective_slot(owner_frame, &tref.slot)
            .expect("tree slot is declared");
        let proposed = Atom::from(proposed);
        if !eff.admits(&proposed) {
            return Err(ServiceError::OutOfRange {
                value: proposed,
                tree: tref.to_string(),
            });
        }
        let hints: Vec<String> = eff.if_replaced.map(<[String]>::to_vec).unwrap_or_default();

        let (mut case, id) = match &subject {
            UpdateSubject::Entity { entity } => {
                let frame = self.frame_at(time)?;
                let believed = frame.belief.get(entity).ok_or_else(|| ServiceError::UnknownEntity {
                    entity: entity.clone(),
                    time,
                })?;
                let inst = entity_frame(entity, believed);
                let uses_tree = self
                    .kb
                    .effective_slot(&inst, &tref.slot)
                    .and_then(|e| e.if_needed)
                    .is_some_and(|(owner, _)| owner == tref.owner);
                if !uses_tree {
                    return Err(ServiceError::WrongTree {
                        entity: entity.clone(),
                        tree: tref.to_string(),
                    });
                }
                let label = believed.case_label();
                let id = fresh_id(|n| format!("case_{label}_{n}"), |id| rdr.cornerstone(id).is_some());
                (self.kb.case_projection(&inst, time), id)
            }
            UpdateSubject::Goals { goal_a, goal_b } => {
                for g in [goal_a, goal_b] {
                    if !GoalType::ALL.iter().any(|t| t.order_name() == g) {
                        return Err(ServiceError::UnknownGoalType(g.clone()));
                    }
                }
                let base = if proposed.as_str() == crate::rdr::ORDER_TRUE {
                    "before"
                } else {
                    "not_before"
                };
                let id = fresh_id(
                    |n| match n {
                        1 => format!("{base}({goal_a}, {goal_b})"),
                        n => format!("{base}_{n}({goal_a}, {goal_b})"),
                    },
                    |id| rdr.cornerstone(id).is_some(),
                );
                (ordering_case("", goal_a, goal_b), id)
            }
        };
        case.id = id;
        case.created_at = time;

        let current = rdr.evaluate(&case);
        if current.conclusion == proposed {
            return Err(ServiceError::Update(crate::rdr::UpdateError::NoChange(proposed)));
        }
        let cornerstone = rdr.node_case(current.fired).unwrap_or_else(|| Case::new("", 0));
        let candidates = candidate_differences(&cornerstone, &case, &hints);
        let draft = UpdateDraft {
            id: self.next_update,
            tree: tref,
            subject,
            time,
            case,
            current,
            proposed,
            cornerstone,
            candidates,
        };
        self.next_update += 1;
        self.drafts.insert(draft.id, draft.clone());
        Ok(draft)
    }

    /// Adds the rule built from the chosen candidate conditions. On any
    /// failure the tree is left unchanged and the draft stays pending.
    pub fn commit_rule_update(&mut self, update: u64, chosen: &[usize]) -> Result<CommitSummary, ServiceError> {
        let draft = self.drafts.get(&update).ok_or(ServiceError::UnknownUpdate(update))?;
        if chosen.is_empty() {
            return Err(ServiceError::EmptySelection);
        }
        let literals = chosen
            .iter()
            .map(|&i| draft.candidates.get(i).cloned().ok_or(ServiceError::BadLiteralIndex(i)))
            .collect::<Result<Vec<_>, _>>()?;
        let tref = draft.tree.clone();
        let tree = self
            .kb
            .tree(&tref.owner, &tref.slot)
            .ok_or_else(|| ServiceError::UnknownTree(tref.to_string()))?;
        let next = tree.apply_update(draft.case.clone(), draft.proposed.clone(), literals.clone())?;
        if let Some(v) = next.verify_cornerstones().first() {
            return Err(ServiceError::Inconsistent(format!(
                "cornerstone `{}` would conclude differently",
                v.cornerstone
            )));
        }
        if tref.owner == ORDER_FRAME && tref.slot == ORDER_SLOT {
            check_ordering(&next)?;
        }
        let node = next.node_for_case(&draft.case.id).expect("new rule cites its case");
        let summary = CommitSummary {
            audit: AuditRecord {
                update,
                tree: tref.clone(),
                node,
                case_id: draft.case.id.clone(),
                conclusion: draft.proposed.clone(),
                literals: literals.iter().map(ToString::to_string).collect(),
                case_time: draft.time,
                committed_at: self.time(),
            },
            rules: next.len(),
            text: next.render(0),
        };
        self.kb.replace_tree(&tref.owner, &tref.slot, next)?;
        self.drafts.remove(&update);
        self.audit.push(summary.audit.clone());
        self.log(Event::RuleCommitted(summary.audit.clone()));
        Ok(summary)
    }

    /// Drops a draft without a trace.
    pub fn discard_rule_update(&mut self, update: u64) -> Result<(), ServiceError> {
        self.drafts
            .remove(&update)
            .map(|_| ())
            .ok_or(ServiceError::UnknownUpdate(update))
    }
}

fn fresh_id(make: impl Fn(u64) -> String, taken: impl Fn(&str) -> bool) -> String {
    (1..).map(make).find(|id| !taken(id)).expect("unbounded")
}
