use std::collections::{BTreeMap, VecDeque};

use super::entity::{EntityId, MapNode};
use super::scenario::MapSpec;

/// Static road topology of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MapTopology {
    positions: BTreeMap<MapNode, (f64, f64)>,
    /// Neighbours of each node with the connecting road, sorted by node.
    adjacency: BTreeMap<MapNode, Vec<(MapNode, EntityId)>>,
    edges: Vec<MapEdge>,
}

/// A road as an undirected map edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapEdge {
    pub road: EntityId,
    pub ends: (MapNode, MapNode),
    pub length: u32,
}

impl MapTopology {
    pub fn new(spec: &MapSpec) -> Self {
        let positions = spec.nodes.iter().map(|n| (MapNode(n.id), (n.x, n.y))).collect();
        let mut adjacency: BTreeMap<MapNode, Vec<(MapNode, EntityId)>> =
            spec.nodes.iter().map(|n| (MapNode(n.id), Vec::new())).collect();
        let mut edges = Vec::with_capacity(spec.roads.len());
        for r in &spec.roads {
            let id = EntityId::new(r.id.clone());
            edges.push(MapEdge {
                road: id.clone(),
                ends: (MapNode(r.from), MapNode(r.to)),
                length: r.length,
            });
            adjacency
                .entry(MapNode(r.from))
                .or_default()
                .push((MapNode(r.to), id.clone()));
            adjacency.entry(MapNode(r.to)).or_default().push((MapNode(r.from), id));
        }
        for list in adjacency.values_mut() {
            list.sort();
        }
        MapTopology {
            positions,
            adjacency,
            edges,
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = MapNode> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn edges(&self) -> &[MapEdge] {
        &self.edges
    }

    pub fn contains(&self, node: MapNode) -> bool {
        self.adjacency.contains_key(&node)
    }

    pub fn position(&self, node: MapNode) -> Option<(f64, f64)> {
        self.positions.get(&node).copied()
    }

    pub fn neighbours(&self, node: MapNode) -> &[(MapNode, EntityId)] {
        self.adjacency.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Hop distance of every node within `radius` of `from`, ignoring blockages.
    pub fn hops_within(&self, from: MapNode, radius: u32) -> BTreeMap<MapNode, u32> {
        let mut dist = BTreeMap::new();
        if !self.contains(from) {
            return dist;
        }
        dist.insert(from, 0);
        let mut queue = VecDeque::from([from]);
        while let Some(n) = queue.pop_front() {
            let d = dist[&n];
            if d == radius {
                continue;
            }
            for (m, _) in self.neighbours(n) {
                if !dist.contains_key(m) {
                    dist.insert(*m, d + 1);
                    queue.push_back(*m);
                }
            }
        }
        dist
    }
}
