use std::collections::BTreeSet;

use thiserror::Error;

use super::{Case, Condition, Literal, NodeId, Operand, RdrNode, RdrTree};
use crate::atom::Atom;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UpdateError {
    #[error("tree already concludes `{0}` for this case")]
    NoChange(Atom),
    #[error("the selected condition is empty")]
    EmptyCondition,
    #[error("the selected condition does not hold on the new case")]
    ConditionFalseOnCase,
    #[error("the selected condition also holds on cornerstone `{0}`")]
    NonDiscriminating(String),
    #[error("cornerstone id `{0}` is already in use")]
    DuplicateCase(String),
}

impl RdrTree {
    /// Adds one rule so that `case` is classified as `correct`.
    ///
    /// The new rule becomes the exception of the rule that fired, or, when
    /// that rule already has exceptions, the last `else` of its exception
    /// chain. `selected` must hold on `case` and fail on the fired rule's
    /// cornerstone, which keeps every stored cornerstone's conclusion intact.
    pub fn apply_update(&self, case: Case, correct: Atom, selected: Vec<Literal>) -> Result<RdrTree, UpdateError> {
        if selected.is_empty() {
            return Err(UpdateError::EmptyCondition);
        }
        let eval = self.evaluate(&case);
        if eval.conclusion == correct {
            return Err(UpdateError::NoChange(correct));
        }
        let condition = Condition::All(selected);
        if !condition.holds(&case) {
            return Err(UpdateError::ConditionFalseOnCase);
        }
        if self.cornerstones.contains_key(&case.id) || case.id.is_empty() {
            return Err(UpdateError::DuplicateCase(case.id));
        }
        let fired_case = self.node_case(eval.fired).unwrap_or_else(|| Case::new("", 0));
        if condition.holds(&fired_case) {
            let label = self.node(eval.fired).cornerstone.clone().unwrap_or_default();
            return Err(UpdateError::NonDiscriminating(label));
        }

        let mut next = self.clone();
        let new_id = NodeId(next.nodes.len());
        next.nodes.push(RdrNode {
            condition,
            conclusion: correct,
            cornerstone: Some(case.id.clone()),
            except: None,
            alternative: None,
        });
        match next.nodes[eval.fired.0].except {
            None => next.nodes[eval.fired.0].except = Some(new_id),
            Some(first) => {
                let mut last = first;
                while let Some(alt) = next.nodes[last.0].alternative {
                    last = alt;
                }
                next.nodes[last.0].alternative = Some(new_id);
            }
        }
        next.cornerstones.insert(case.id.clone(), case);
        next.reorder_from(NodeId::ROOT);
        Ok(next)
    }
}

/// Literals that distinguish `new_case` from `cornerstone`.
///
/// One literal per key bound in `new_case` whose value differs from, or is
/// absent in, the cornerstone. Keys named in `hints` come first in hint
/// order, the rest follow in key order.
pub fn candidate_differences(cornerstone: &Case, new_case: &Case, hints: &[String]) -> Vec<Literal> {
    let differs = |key: &str| match new_case.get(key) {
        Some(v) => cornerstone.get(key) != Some(v),
        None => false,
    };
    let literal = |key: &str| Literal {
        operand: Operand::for_key(key),
        value: new_case.get(key).cloned().expect("checked by differs"),
    };

    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for key in hints {
        if differs(key) && seen.insert(key.as_str()) {
            out.push(literal(key));
        }
    }
    for key in new_case.bindings.keys() {
        if !seen.contains(key.as_str()) && differs(key) {
            out.push(literal(key));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brigade_case(id: &str, health: &str, kind: &str) -> Case {
        Case::new(id, 0)
            .with("buriedness", "buried")
            .with("health", health)
            .with("type", kind)
    }

    #[test]
    fn differences_against_brigade_cornerstone() {
        let corner = brigade_case("case_brigade_1", "injured", "agent");
        let fresh = brigade_case("x", "critical", "civilian");
        let lits = candidate_differences(&corner, &fresh, &["buriedness".into()]);
        let shown: Vec<String> = lits.iter().map(ToString::to_string).collect();
        assert_eq!(shown, ["this health == critical", "this type == civilian"]);
    }

    #[test]
    fn identical_cases_have_no_differences() {
        let a = brigade_case("a", "injured", "agent");
        assert!(candidate_differences(&a, &a, &[]).is_empty());
    }

    #[test]
    fn hints_lead_candidates() {
        let fresh = brigade_case("x", "injured", "agent");
        let lits = candidate_differences(&Case::new("case0", 0), &fresh, &["type".into(), "buriedness".into()]);
        let keys: Vec<&str> = lits.iter().map(|l| l.operand.key()).collect();
        assert_eq!(keys, ["type", "buriedness", "health"]);
    }

    #[test]
    fn variable_keys_become_variable_literals() {
        let fresh = Case::new("x", 0).with("GoalA", "rescueGoal").with("GoalB", "scoutGoal");
        let lits = candidate_differences(&Case::new("", 0), &fresh, &[]);
        assert_eq!(lits[0].to_string(), "GoalA == rescueGoal");
    }

    #[test]
    fn default_human_tree_update() {
        let tree = RdrTree::with_default("none", Some("case0"));
        let case = brigade_case("case_brigade_1", "injured", "agent");
        let next = tree
            .apply_update(
                case.clone(),
                Atom::from("unbury"),
                vec![Literal::new("buriedness", "buried")],
            )
            .unwrap();
        assert_eq!(
            next.render(0),
            "if true then none because case0\n    except\n    if this buriedness == buried\n        then unbury because case_brigade_1\n"
        );
        assert_eq!(next.evaluate(&case).conclusion, "unbury");
        assert_eq!(next.len(), 2);
    }

    #[test]
    fn second_road_rule_is_else_chained() {
        let tree = RdrTree::with_default("none", Some("road0"))
            .apply_update(
                Case::new("case_road_1", 0)
                    .with("requested", "yes")
                    .with("blocked", "yes"),
                Atom::from("unblock"),
                vec![Literal::new("requested", "yes"), Literal::new("blocked", "yes")],
            )
            .unwrap();
        let case = Case::new("case_road_2", 0)
            .with("has_civilians", "yes")
            .with("blocked", "yes")
            .with("requested", "no");
        let next = tree
            .apply_update(
                case,
                Atom::from("unblock"),
                vec![Literal::new("has_civilians", "yes"), Literal::new("blocked", "yes")],
            )
            .unwrap();
        let first = next.root().except.unwrap();
        let second = next.node(first).alternative.unwrap();
        assert_eq!(next.node(second).cornerstone.as_deref(), Some("case_road_2"));
        assert!(next.node(first).except.is_none());
    }

    #[test]
    fn wrong_exception_gets_nested_exception() {
        let tree = RdrTree::with_default("none", Some("case0"))
            .apply_update(
                brigade_case("c1", "injured", "agent"),
                Atom::from("unbury"),
                vec![Literal::new("buriedness", "buried")],
            )
            .unwrap();
        let dead = brigade_case("c2", "dead", "civilian");
        let next = tree
            .apply_update(dead.clone(), Atom::from("none"), vec![Literal::new("health", "dead")])
            .unwrap();
        let first = next.root().except.unwrap();
        assert!(next.node(first).except.is_some());
        assert_eq!(next.evaluate(&dead).conclusion, "none");
        assert!(next.verify_cornerstones().is_empty());
    }

    #[test]
    fn rejects_non_discriminating_condition() {
        let tree = RdrTree::with_default("none", Some("case0"))
            .apply_update(
                brigade_case("c1", "injured", "agent"),
                Atom::from("unbury"),
                vec![Literal::new("buriedness", "buried")],
            )
            .unwrap();
        let err = tree
            .apply_update(
                brigade_case("c2", "dead", "agent"),
                Atom::from("none"),
                vec![Literal::new("type", "agent")],
            )
            .unwrap_err();
        assert_eq!(err, UpdateError::NonDiscriminating("c1".into()));
    }

    #[test]
    fn rejects_bad_preconditions() {
        let tree = RdrTree::with_default("none", Some("case0"));
        let case = brigade_case("c1", "injured", "agent");
        assert_eq!(
            tree.apply_update(case.clone(), Atom::from("none"), vec![Literal::new("type", "agent")]),
            Err(UpdateError::NoChange(Atom::from("none")))
        );
        assert_eq!(
            tree.apply_update(
                case.clone(),
                Atom::from("unbury"),
                vec![Literal::new("type", "civilian")]
            ),
            Err(UpdateError::ConditionFalseOnCase)
        );
        assert_eq!(
            tree.apply_update(case.clone(), Atom::from("unbury"), vec![]),
            Err(UpdateError::EmptyCondition)
        );
        let mut dup = case;
        dup.id = "case0".into();
        assert_eq!(
            tree.apply_update(dup, Atom::from("unbury"), vec![Literal::new("type", "agent")]),
            Err(UpdateError::DuplicateCase("case0".into()))
        );
    }
}
