//! Pairwise goal-ordering trees.
//!
//! An ordering tree classifies the case `{GoalA: a, GoalB: b}` as `true`
//! when goals of type `a` must be pursued before goals of type `b`.

use super::{Case, RdrTree};
use crate::atom::Atom;

pub const ORDER_TRUE: &str = "true";
pub const ORDER_FALSE: &str = "false";

pub fn ordering_case(id: &str, a: &str, b: &str) -> Case {
    Case::new(id, 0).with("GoalA", a).with("GoalB", b)
}

pub fn evaluate_order(tree: &RdrTree, a: &str, b: &str) -> bool {
    tree.evaluate(&ordering_case("", a, b)).conclusion == ORDER_TRUE
}

/// Pairs over `vocabulary` violating antisymmetry: both directions true, or
/// a type preceding itself.
pub fn ordering_conflicts(tree: &RdrTree, vocabulary: &[Atom]) -> Vec<(Atom, Atom)> {
    let mut out = Vec::new();
    for (i, a) in vocabulary.iter().enumerate() {
        for b in &vocabulary[i..] {
            let ab = evaluate_order(tree, a.as_str(), b.as_str());
            let ba = evaluate_order(tree, b.as_str(), a.as_str());
            if (a == b && ab) || (a != b && ab && ba) {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

/// A precedence cycle over `vocabulary`, if any (e.g. a<b, b<c, c<a).
pub fn ordering_cycle(tree: &RdrTree, vocabulary: &[Atom]) -> Option<Vec<Atom>> {
    let n = vocabulary.len();
    let before: Vec<Vec<bool>> = vocabulary
        .iter()
        .map(|a| {
            vocabulary
                .iter()
                .map(|b| evaluate_order(tree, a.as_str(), b.as_str()))
                .collect()
        })
        .collect();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; n];
    let mut stack = Vec::new();

    fn visit(v: usize, before: &[Vec<bool>], state: &mut [u8], stack: &mut Vec<usize>) -> Option<Vec<usize>> {
        state[v] = 1;
        stack.push(v);
        for w in 0..before.len() {
            if !before[v][w] {
                continue;
            }
            if state[w] == 1 {
                let start = stack.iter().position(|&x| x == w).expect("on stack");
                return Some(stack[start..].to_vec());
            }
            if state[w] == 0 {
                if let Some(c) = visit(w, before, state, stack) {
                    return Some(c);
                }
            }
        }
        stack.pop();
        state[v] = 2;
        None
    }

    for v in 0..n {
        if state[v] == 0 {
            if let Some(cycle) = visit(v, &before, &mut state, &mut stack) {
                return Some(cycle.into_iter().map(|i| vocabulary[i].clone()).collect());
            }
        }
    }
    None
}
