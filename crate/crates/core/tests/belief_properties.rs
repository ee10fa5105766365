use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rescue_core::sim::{
    merge_belief, Belief, Building, Entity, EntityId, Fieryness, Human, MapNode, Observation, Vitals,
};

fn entity(kind: u8, v: u32) -> Entity {
    if kind == 0 {
        Entity::Building(Building {
            node: MapNode(v % 7),
            fieryness: [Fieryness::None, Fieryness::Heating, Fieryness::Burning][(v % 3) as usize],
            scouted: v.is_multiple_of(2),
            fire_timer: 0,
        })
    } else {
        Entity::Human(Human {
            node: MapNode(v % 5),
            vitals: Vitals {
                hp: v % 101,
                burial_depth: v % 4,
            },
        })
    }
}

/// (time, [(id index, kind, value)]) per observation.
type RawObservations = Vec<(u64, Vec<(u8, u8, u32)>)>;

fn observations() -> impl Strategy<Value = RawObservations> {
    prop::collection::vec(
        (0..20u64, prop::collection::vec((0..12u8, 0..2u8, any::<u32>()), 0..8)),
        0..10,
    )
}

fn build(raw: &RawObservations) -> Vec<Observation> {
    raw.iter()
        .enumerate()
        .map(|(i, (t, seen))| Observation {
            agent: EntityId::new(format!("agent{i}")),
            time: *t,
            // an id always denotes the same kind of entity
            entities: seen
                .iter()
                .map(|(id, _, v)| (EntityId::new(format!("e{id}")), entity(id % 2, *v)))
                .collect(),
        })
        .collect()
}

proptest! {
    #[test]
    fn merging_all_at_once_equals_folding_one_by_one(raw in observations()) {
        let obs = build(&raw);
        let t = obs.iter().map(|o| o.time).max().unwrap_or(0);
        let at_once = merge_belief(&Belief::default(), &obs, t);
        let folded = obs.iter().fold(Belief::default(), |b, o| merge_belief(&b, std::slice::from_ref(o), t));
        prop_assert_eq!(at_once, folded);
    }

    #[test]
    fn known_ids_are_the_union_of_everything_seen(raw in observations(), prior_raw in observations()) {
        let prior = merge_belief(&Belief::default(), &build(&prior_raw), 0);
        let obs = build(&raw);
        let merged = merge_belief(&prior, &obs, 0);
        let mut expected: BTreeSet<EntityId> = prior.entries.keys().cloned().collect();
        for o in &obs {
            expected.extend(o.entities.keys().cloned());
        }
        let got: BTreeSet<EntityId> = merged.entries.keys().cloned().collect();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn latest_observation_wins(raw in observations()) {
        let obs = build(&raw);
        let merged = merge_belief(&Belief::default(), &obs, 0);
        // oracle: newest timestamp, later observation on ties
        let mut newest: BTreeMap<&EntityId, (u64, &Entity)> = BTreeMap::new();
        for o in &obs {
            for (id, e) in &o.entities {
                if newest.get(id).is_none_or(|(t, _)| o.time >= *t) {
                    newest.insert(id, (o.time, e));
                }
            }
        }
        for (id, (t, e)) in newest {
            let entry = &merged.entries[id];
            prop_assert_eq!(entry.seen_at, t);
            prop_assert_eq!(&entry.entity, e);
        }
    }

    #[test]
    fn stale_observations_never_overwrite(raw in observations(), late in 0..20u64) {
        let obs = build(&raw);
        let merged = merge_belief(&Belief::default(), &obs, 0);
        let stale: Vec<Observation> = obs
            .iter()
            .map(|o| Observation {
                time: late,
                entities: o.entities.keys().map(|id| (id.clone(), entity(9, 0))).collect(),
                ..o.clone()
            })
            .collect();
        let again = merge_belief(&merged, &stale, 0);
        for (id, entry) in &merged.entries {
            if entry.seen_at > late {
                prop_assert_eq!(&again.entries[id], entry);
            }
        }
    }
}
