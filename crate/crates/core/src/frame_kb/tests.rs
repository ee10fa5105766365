use super::*;
use crate::rdr::NodeId;

const HUMAN: &str = "\
human ako object with
    type:
        range [agent, civilian]
    buriedness:
        range
            [non_buried, buried]
    health:
        range [dead, critical, injured, healthy]
    goal:
        range
            [none, unbury]
        if_needed
            if true then none because case0
        if_replaced
            rdr_frame([buriedness])
";

fn human_kb() -> FrameSet {
    let src = format!("{HUMAN}\nframe(human_937073426, [human], [buriedness: buried]);\n");
    FrameSet::parse(&src).unwrap()
}

#[test]
fn parses_generic_human_frame() {
    let kb = FrameSet::parse(HUMAN).unwrap();
    let human = kb.frame("human").unwrap();
    assert_eq!(human.kind, FrameKind::Generic);
    assert_eq!(human.parents, ["object"]);
    let names: Vec<&str> = human.slots.keys().map(String::as_str).collect();
    assert_eq!(names, ["type", "buriedness", "health", "goal"]);
    let goal = &human.slots["goal"];
    assert_eq!(goal.if_replaced.as_deref(), Some(&["buriedness".to_string()][..]));
    let tree = goal.if_needed.as_ref().unwrap();
    assert_eq!(tree.len(), 1);
    assert_eq!(tree.root().conclusion, "none");
    assert_eq!(tree.cornerstone("case0").unwrap().bindings.len(), 0);
}

#[test]
fn parses_instance_frame() {
    let kb = human_kb();
    let inst = kb.frame("human_937073426").unwrap();
    assert_eq!(inst.kind, FrameKind::Instance);
    assert_eq!(inst.parents, ["human"]);
    assert_eq!(inst.slots["buriedness"].value.as_ref().unwrap(), "buried");
}

#[test]
fn empty_source_is_empty_set() {
    let kb = FrameSet::parse("").unwrap();
    assert!(kb.is_empty());
    assert_eq!(kb.serialize(), "");
    assert!(FrameSet::parse("  // only a comment\n").unwrap().is_empty());
}

#[test]
fn default_tree_resolves_to_none() {
    let kb = human_kb();
    assert_eq!(kb.resolve_slot("human_937073426", "goal").unwrap(), "none");
    assert_eq!(kb.resolve_slot("human_937073426", "buriedness").unwrap(), "buried");
}

#[test]
fn resolution_errors() {
    let kb = human_kb();
    assert!(matches!(
        kb.resolve_slot("human_937073426", "wings"),
        Err(KbError::UndeclaredSlot { .. })
    ));
    assert!(matches!(
        kb.resolve_slot("human_937073426", "health"),
        Err(KbError::ValueUnavailable { .. })
    ));
    assert!(matches!(
        kb.resolve_slot("nobody", "health"),
        Err(KbError::UnknownFrame(_))
    ));
}

#[test]
fn overriding_goal_requests_update() {
    let mut kb = human_kb();
    let out = kb
        .set_slot_value("human_937073426", "goal", Atom::from("unbury"))
        .unwrap();
    let SlotAssignment::UpdateRequest(req) = out else {
        panic!("expected an update request, got {out:?}")
    };
    assert_eq!(req.tree_owner, "human");
    assert_eq!(req.current.conclusion, "none");
    assert_eq!(req.current.fired, NodeId::ROOT);
    assert_eq!(req.cornerstone.id, "case0");
    assert_eq!(req.candidates[0].to_string(), "this buriedness == buried");
    // nothing stored: the tree still answers
    assert_eq!(kb.resolve_slot("human_937073426", "goal").unwrap(), "none");
    assert_eq!(
        kb.set_slot_value("human_937073426", "goal", Atom::from("none"))
            .unwrap(),
        SlotAssignment::Confirmed
    );
}

#[test]
fn plain_slot_assignment_is_stored() {
    let mut kb = human_kb();
    let out = kb
        .set_slot_value("human_937073426", "buriedness", Atom::from("non_buried"))
        .unwrap();
    assert_eq!(out, SlotAssignment::Stored);
    assert_eq!(kb.resolve_slot("human_937073426", "buriedness").unwrap(), "non_buried");
}

#[test]
fn range_violation_on_assignment() {
    let mut kb = human_kb();
    let err = kb
        .set_slot_value("human_937073426", "health", Atom::from("flying"))
        .unwrap_err();
    assert_eq!(
        err,
        KbError::RangeViolation {
            frame: "human_937073426".into(),
            slot: "health".into(),
            value: Atom::from("flying"),
        }
    );
}

#[test]
fn updated_tree_resolves_unbury() {
    let mut kb = human_kb();
    let SlotAssignment::UpdateRequest(req) = kb
        .set_slot_value("human_937073426", "goal", Atom::from("unbury"))
        .unwrap()
    else {
        panic!()
    };
    let mut case = req.case.clone();
    case.id = "case_brigade_1".into();
    let tree = kb
        .tree("human", "goal")
        .unwrap()
        .apply_update(case, req.proposed.clone(), vec![req.candidates[0].clone()])
        .unwrap();
    kb.replace_tree("human", "goal", tree).unwrap();
    kb.insert(
        Frame::instance("h2", &["human"])
            .value("buriedness", "buried")
            .value("type", "civilian"),
    )
    .unwrap();
    kb.insert(Frame::instance("h3", &["human"]).value("buriedness", "non_buried"))
        .unwrap();
    assert_eq!(kb.resolve_slot("h2", "goal").unwrap(), "unbury");
    assert_eq!(kb.resolve_slot("h3", "goal").unwrap(), "none");
}

#[test]
fn local_values_shadow_three_deep() {
    let mut kb = FrameSet::new();
    kb.insert(Frame::generic("a", &["object"]).slot(
        "colour",
        Slot {
            value: Some("red".into()),
            ..Slot::with_range(["red", "green", "blue"])
        },
    ))
    .unwrap();
    kb.insert(Frame::generic("b", &["a"])).unwrap();
    kb.insert(Frame::generic("c", &["b"]).value("colour", "green")).unwrap();
    kb.insert(Frame::instance("i", &["c"])).unwrap();
    kb.insert(Frame::instance("j", &["c"]).value("colour", "blue")).unwrap();
    kb.insert(Frame::instance("k", &["b"])).unwrap();
    assert_eq!(kb.resolve_slot("i", "colour").unwrap(), "green");
    assert_eq!(kb.resolve_slot("j", "colour").unwrap(), "blue");
    assert_eq!(kb.resolve_slot("k", "colour").unwrap(), "red");
    // range still enforced through the chain
    assert!(kb
        .insert(Frame::instance("z", &["c"]).value("colour", "mauve"))
        .is_err());
}

#[test]
fn first_parent_wins() {
    let mut kb = FrameSet::new();
    kb.insert(Frame::generic("p", &["object"]).value("x", "one")).unwrap();
    kb.insert(Frame::generic("q", &["object"]).value("x", "two")).unwrap();
    kb.insert(Frame::instance("pq", &["p", "q"])).unwrap();
    kb.insert(Frame::instance("qp", &["q", "p"])).unwrap();
    assert_eq!(kb.resolve_slot("pq", "x").unwrap(), "one");
    assert_eq!(kb.resolve_slot("qp", "x").unwrap(), "two");
}

#[test]
fn structural_errors() {
    assert!(matches!(
        FrameSet::parse("x ako ghost with"),
        Err(KbError::UnknownParent { .. })
    ));
    assert!(matches!(
        FrameSet::parse("frame(a, [object], []);\nframe(b, [a], []);"),
        Err(KbError::InstanceParent { .. })
    ));
    assert!(matches!(
        FrameSet::parse("x ako object with\nx ako object with"),
        Err(KbError::DuplicateFrame(_))
    ));
    assert!(matches!(
        FrameSet::parse(&format!("{HUMAN}frame(h, [human], [health: flying]);")),
        Err(KbError::RangeViolation { .. })
    ));
    assert!(matches!(
        FrameSet::parse(&format!("{HUMAN}frame(h, [human], [wings: two]);")),
        Err(KbError::UndeclaredSlot { .. })
    ));
    assert!(matches!(
        FrameSet::parse("x ako object with\n  g:\n    range [a]\n    if_replaced rdr_frame([nope])"),
        Err(KbError::BadIfReplaced { .. })
    ));
    // conclusions are checked against the range
    assert!(matches!(
        FrameSet::parse("x ako object with\n  g:\n    range [a]\n    if_needed if true then b"),
        Err(KbError::RangeViolation { .. })
    ));
}

#[test]
fn syntax_errors_report_position() {
    let err = FrameSet::parse("human ako object with\n    type:\n        range [agent civilian]").unwrap_err();
    match err {
        KbError::Syntax { line, col, message } => {
            assert_eq!((line, col), (3, 22));
            assert!(message.contains("expected `,` or `]`"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        FrameSet::parse("frame(h, [human], [a: b])"),
        Err(KbError::Syntax { .. })
    ));
}

#[test]
fn cornerstone_resolution_is_checked() {
    let src = "\
r ako object with
    s:
        range [yes, no]
    g:
        range [none, go]
        if_needed
            if true then none because r0
                except
                if this s == yes
                    then go because case_r_1
";
    assert!(matches!(
        FrameSet::parse(src),
        Err(KbError::UnresolvedCornerstone { .. })
    ));
    let ok = format!("{src}\ncornerstone case_r_1 for r.g at 4\n    s: yes\n");
    let kb = FrameSet::parse(&ok).unwrap();
    let case = kb.tree("r", "g").unwrap().cornerstone("case_r_1").unwrap();
    assert_eq!(case.created_at, 4);
    assert_eq!(kb.serialize(), ok);

    let orphan = format!("{ok}\ncornerstone case_r_9 for r.g at 4\n    s: no\n");
    assert!(matches!(
        FrameSet::parse(&orphan),
        Err(KbError::OrphanCornerstone { .. })
    ));
}

#[test]
fn serializes_canonically() {
    let kb = human_kb();
    let text = kb.serialize();
    let expected = "\
human ako object with
    type:
        range [agent, civilian]
    buriedness:
        range [non_buried, buried]
    health:
        range [dead, critical, injured, healthy]
    goal:
        range [none, unbury]
        if_needed
            if true then none because case0
        if_replaced
            rdr_frame([buriedness])

frame(human_937073426, [human], [buriedness: buried]);
";
    assert_eq!(text, expected);
    assert_eq!(FrameSet::parse(&text).unwrap(), kb);
}

#[test]
fn else_binding_follows_indentation() {
    let nested = "\
if true then none because c0
    except
    if this a == x
        then p because c1
        except
        if this b == y
            then q because c2
    else
    if this a == z
        then r because c3
";
    let tree = FrameSet::parse_tree(nested).unwrap();
    let first = tree.root().except.unwrap();
    assert_eq!(tree.node(first).cornerstone.as_deref(), Some("c1"));
    assert!(tree.node(first).except.is_some());
    let sib = tree.node(first).alternative.unwrap();
    assert_eq!(tree.node(sib).cornerstone.as_deref(), Some("c3"));
    assert_eq!(tree.render(0), nested);

    // on a single line the else binds to the nearest rule
    let flat = FrameSet::parse_tree(
        "if true then none because c0 except if this a == x then p because c1 except if this b == y then q because c2 else if this a == z then r because c3",
    )
    .unwrap();
    let first = flat.root().except.unwrap();
    let inner = flat.node(first).except.unwrap();
    assert!(flat.node(inner).alternative.is_some());
}

#[test]
fn ordering_listing_parses_with_tabs_and_semicolon() {
    let listing = "if true then false\n\texcept \n\tif GoalA == rescueGoal and GoalB == scoutGoal \n\t    then true because before(rescueGoal, scoutGoal);\n";
    let tree = FrameSet::parse_tree(listing).unwrap();
    assert_eq!(tree.root().cornerstone, None);
    let ex = tree.root().except.unwrap();
    assert_eq!(
        tree.node(ex).cornerstone.as_deref(),
        Some("before(rescueGoal, scoutGoal)")
    );
    assert_eq!(
        tree.render(0),
        "if true then false\n    except\n    if GoalA == rescueGoal and GoalB == scoutGoal\n        then true because before(rescueGoal, scoutGoal)\n"
    );
}

#[test]
fn literal_forms_are_checked() {
    assert!(FrameSet::parse_tree("if true then a except if goal == x then b because c").is_err());
    assert!(FrameSet::parse_tree("if true then a except if this Goal == x then b because c").is_err());
    assert!(FrameSet::parse_tree("if true then a except if this g == x then b").is_err());
    assert!(FrameSet::parse_tree("if this g == x then a").is_err());
    assert!(FrameSet::parse_tree("if true then a else if this g == x then b because c").is_err());
}
