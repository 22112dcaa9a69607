//! Root-to-end-point segments as weighted shortest paths.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use super::{ComponentView, NodeId, VesselGraph};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentPath {
    /// `nodes[0]` is the root, the last node is an end-point.
    pub nodes: Vec<NodeId>,
    pub geodesic_length_mm: f64,
}

/// All segments from one root plus the path multiplicity n(v) of every node
/// they cover (number of segments containing the node).
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSet {
    pub root: NodeId,
    pub paths: Vec<SegmentPath>,
    pub multiplicity: BTreeMap<NodeId, u32>,
}

impl SegmentSet {
    pub fn multiplicity_of(&self, v: NodeId) -> u32 {
        self.multiplicity.get(&v).copied().unwrap_or(0)
    }
}

#[derive(PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Relative slack under which two path lengths count as tied.
const TIE_TOLERANCE: f64 = 1e-10;

/// Single-source shortest distances (mm) from `source`; unreachable nodes are infinite.
pub fn shortest_distances(graph: &VesselGraph, source: NodeId) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.node_count()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse((Dist(0.0), source)));
    while let Some(Reverse((Dist(d), v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, e) in graph.neighbors(v) {
            let nd = d + graph.edges()[e].weight_mm;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Reverse((Dist(nd), w)));
            }
        }
    }
    dist
}

/// Shortest-path predecessor of every reachable node. Among neighbors that
/// attain the distance (within tolerance) the smallest coordinate wins.
fn predecessors(graph: &VesselGraph, source: NodeId, dist: &[f64]) -> Vec<Option<NodeId>> {
    (0..graph.node_count())
        .map(|v| {
            if v == source || !dist[v].is_finite() {
                return None;
            }
            let limit = dist[v] + TIE_TOLERANCE * dist[v];
            graph
                .neighbors(v)
                .iter()
                .filter(|&&(u, e)| dist[u] + graph.edges()[e].weight_mm <= limit && dist[u] < dist[v])
                .map(|&(u, _)| u)
                .min_by_key(|&u| graph.coord(u))
        })
        .collect()
}

/// One shortest path from `root` to each end-point (degree 1) of the component
/// other than the root, ordered by end-point coordinate.
pub fn extract_segments(component: &ComponentView, graph: &VesselGraph, root: NodeId) -> Result<SegmentSet> {
    if root >= graph.node_count() || !component.contains(graph, root) {
        return Err(Error::Contract(format!("root {root} is not in component {}", component.id)));
    }
    let dist = shortest_distances(graph, root);
    let pred = predecessors(graph, root, &dist);

    let mut paths = Vec::new();
    let mut multiplicity = BTreeMap::new();
    for &end in &component.nodes {
        if end == root || graph.degree(end) != 1 || !dist[end].is_finite() {
            continue;
        }
        let mut nodes = vec![end];
        let mut cur = end;
        while let Some(p) = pred[cur] {
            nodes.push(p);
            cur = p;
        }
        nodes.reverse();
        debug_assert_eq!(nodes[0], root);
        let geodesic_length_mm = nodes
            .windows(2)
            .map(|w| graph.edge_weight(w[0], w[1]).expect("consecutive path nodes are adjacent"))
            .sum();
        for &v in &nodes {
            *multiplicity.entry(v).or_insert(0) += 1;
        }
        paths.push(SegmentPath {
            nodes,
            geodesic_length_mm,
        });
    }
    Ok(SegmentSet {
        root,
        paths,
        multiplicity,
    })
}
