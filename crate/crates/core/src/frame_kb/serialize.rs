use std::fmt::Write;

use super::{Frame, FrameKind, FrameSet};
use crate::rdr::{NodeId, RdrTree};

pub(super) fn write_frame_set(kb: &FrameSet) -> String {
    let mut blocks = Vec::new();
    for frame in kb.frames() {
        match frame.kind {
            FrameKind::Generic => {
                blocks.push(generic(frame));
                for (slot, s) in &frame.slots {
                    if let Some(tree) = &s.if_needed {
                        blocks.extend(cornerstones(&frame.id, slot, tree));
                    }
                }
            }
            FrameKind::Instance => blocks.push(instance(frame)),
        }
    }
    blocks.join("\n")
}

fn generic(frame: &Frame) -> String {
    let mut out = format!("{} ako {} with\n", frame.id, frame.parents.join(", "));
    for (name, slot) in &frame.slots {
        let _ = writeln!(out, "    {name}:");
        if let Some(range) = &slot.range {
            let atoms: Vec<&str> = range.iter().map(|a| a.as_str()).collect();
            let _ = writeln!(out, "        range [{}]", atoms.join(", "));
        }
        if let Some(v) = &slot.value {
            let _ = writeln!(out, "        value {v}");
        }
        if let Some(tree) = &slot.if_needed {
            out.push_str("        if_needed\n");
            out.push_str(&tree.render(12));
        }
        if let Some(targets) = &slot.if_replaced {
            out.push_str("        if_replaced\n");
            let _ = writeln!(out, "            rdr_frame([{}])", targets.join(", "));
        }
    }
    out
}

fn instance(frame: &Frame) -> String {
    let pairs: Vec<String> = frame
        .slots
        .iter()
        .filter_map(|(k, s)| s.value.as_ref().map(|v| format!("{k}: {v}")))
        .collect();
    format!(
        "frame({}, [{}], [{}]);\n",
        frame.id,
        frame.parents.join(", "),
        pairs.join(", ")
    )
}

/// Cornerstone blocks in rule order. An empty root case at time 0 is implied
/// by the `because` clause and not written.
fn cornerstones(owner: &str, slot: &str, tree: &RdrTree) -> Vec<String> {
    let mut out = Vec::new();
    for (id, node) in tree.nodes() {
        let Some(case_id) = &node.cornerstone else { continue };
        let Some(case) = tree.cornerstone(case_id) else {
            continue;
        };
        if id == NodeId::ROOT && case.bindings.is_empty() && case.created_at == 0 {
            continue;
        }
        let mut block = format!("cornerstone {case_id} for {owner}.{slot} at {}\n", case.created_at);
        for (k, v) in &case.bindings {
            let _ = writeln!(block, "    {k}: {v}");
        }
        out.push(block);
    }
    out
}
