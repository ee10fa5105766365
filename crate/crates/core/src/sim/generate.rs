//! Seeded synthetic scenarios with prescribed entity counts.
//!
//! The map is a grid whose edges are picked as a random spanning tree plus
//! extra random grid edges until the road count is met, so every generated
//! map is connected.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::entity::{AgentKind, Fieryness};
use super::scenario::{
    AgentSpec, BuildingSpec, Dynamics, EntityCounts, EntitySpec, HumanSpec, Limits, MapSpec, NodeSpec, RoadSpec,
    ScenarioConfig,
};

/// Named entity-count presets.
pub const PRESETS: [(&str, EntityCounts); 3] = [
    (
        "test-city",
        EntityCounts {
            civilians: 5,
            agents: 3,
            buildings: 37,
            roads: 58,
        },
    ),
    (
        "kobe",
        EntityCounts {
            civilians: 200,
            agents: 90,
            buildings: 757,
            roads: 1602,
        },
    ),
    (
        "montreal",
        EntityCounts {
            civilians: 100,
            agents: 36,
            buildings: 927,
            roads: 3059,
        },
    ),
];

pub fn preset(name: &str) -> Option<EntityCounts> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, c)| *c)
}

/// Grid dimensions with at least `roads + 1` nodes' worth of spanning edges and enough grid edges.
fn grid_for(roads: usize) -> (usize, usize) {
    let target = (roads * 5 / 8).max(1);
    let w = (target as f64).sqrt().ceil() as usize;
    let mut h = target.div_ceil(w);
    let edges = |w: usize, h: usize| w * (h - 1) + h * (w - 1);
    while edges(w, h) < roads {
        h += 1;
    }
    (w, h)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

pub fn generate(name: &str, counts: EntityCounts, seed: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = if counts.roads == 0 {
        (1, 1)
    } else {
        grid_for(counts.roads)
    };
    let node_count = w * h;
    let nodes: Vec<NodeSpec> = (0..node_count)
        .map(|i| NodeSpec {
            id: i as u32,
            x: (i % w) as f64 * 10.0,
            y: (i / w) as f64 * 10.0,
        })
        .collect();

    let mut grid_edges = Vec::new();
    for i in 0..node_count {
        if i % w + 1 < w {
            grid_edges.push((i, i + 1));
        }
        if i + w < node_count {
            grid_edges.push((i, i + w));
        }
    }
    grid_edges.shuffle(&mut rng);
    let mut parent: Vec<usize> = (0..node_count).collect();
    let mut chosen = Vec::new();
    let mut spare = Vec::new();
    for (a, b) in grid_edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb && chosen.len() < counts.roads {
            parent[ra] = rb;
            chosen.push((a, b));
        } else {
            spare.push((a, b));
        }
    }
    let missing = counts.roads - chosen.len();
    chosen.extend(spare.into_iter().take(missing));
    chosen.sort();

    let roads = chosen
        .into_iter()
        .enumerate()
        .map(|(i, (a, b))| RoadSpec {
            id: format!("road_{i}"),
            from: a as u32,
            to: b as u32,
            length: rng.random_range(1..=5),
            blocked: rng.random_bool(0.1),
            has_civilians: rng.random_bool(0.2),
            requested: false,
        })
        .collect();

    let node = |rng: &mut ChaCha8Rng| rng.random_range(0..node_count) as u32;
    let buildings = (0..counts.buildings)
        .map(|i| {
            let n = node(&mut rng);
            let fieryness = if rng.random_bool(0.08) {
                Fieryness::Heating
            } else {
                Fieryness::None
            };
            BuildingSpec {
                id: format!("building_{i}"),
                node: n,
                fieryness,
                scouted: false,
            }
        })
        .collect();
    let civilians = (0..counts.civilians)
        .map(|i| {
            let n = node(&mut rng);
            let buried = rng.random_bool(0.6);
            HumanSpec {
                id: format!("civilian_{i}"),
                node: n,
                hp: rng.random_range(40..=100),
                burial_depth: if buried { rng.random_range(1..=20) } else { 0 },
            }
        })
        .collect();
    let agents = (0..counts.agents)
        .map(|i| {
            let kind = AgentKind::ALL[i % 3];
            AgentSpec {
                id: format!("{}_{i}", kind.as_str()),
                kind,
                node: node(&mut rng),
                hp: 100,
                burial_depth: 0,
            }
        })
        .collect();

    ScenarioConfig {
        name: name.to_string(),
        map: MapSpec { nodes, roads },
        entities: EntitySpec {
            buildings,
            civilians,
            agents,
        },
        dynamics: Dynamics::default(),
        limits: Limits::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_hit_counts_and_validate() {
        for (name, counts) in PRESETS {
            let config = generate(name, counts, 7);
            assert_eq!(config.counts(), counts, "{name}");
            config.validate().unwrap();
        }
    }

    #[test]
    fn small_counts() {
        for roads in 0..30 {
            let counts = EntityCounts {
                civilians: 1,
                agents: 1,
                buildings: 1,
                roads,
            };
            let config = generate("small", counts, roads as u64);
            assert_eq!(config.counts(), counts);
            config.validate().unwrap();
        }
    }

    #[test]
    fn same_seed_same_scenario() {
        let counts = preset("test-city").unwrap();
        assert_eq!(generate("a", counts, 3), generate("a", counts, 3));
        assert_ne!(generate("a", counts, 3), generate("a", counts, 4));
    }
}
