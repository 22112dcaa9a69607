//! Weighted undirected voxel graph built from a skeleton under 26-connectivity.

pub mod components;
pub mod cycles;
pub mod paths;
pub mod roots;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use components::{components, ComponentView};
pub use cycles::{cycle_basis, Cycle};
pub use paths::{extract_segments, SegmentPath, SegmentSet};
pub use roots::{select_roots, RootSet};

use crate::skeleton::{RadiusField, Skeleton};
use crate::volume::{position, Coord, Spacing};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub coord: Coord,
    pub radius_mm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub weight_mm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VesselGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    spacing: Spacing,
    /// Per node: (neighbor, edge index).
    adjacency: Vec<Vec<(NodeId, usize)>>,
}

/// The 13 offsets with a positive leading non-zero component; each unordered
/// 26-neighbor pair is found exactly once from its lower endpoint.
fn forward_offsets() -> impl Iterator<Item = [i64; 3]> {
    crate::skeleton::topology::TABLES
        .offsets
        .iter()
        .copied()
        .filter(|d| d.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0))
}

/// Edge length in mm for a coordinate delta.
#[inline]
pub fn step_length(delta: [i64; 3], spacing: Spacing) -> f64 {
    let a = spacing[0] * delta[0] as f64;
    let b = spacing[1] * delta[1] as f64;
    let c = spacing[2] * delta[2] as f64;
    (a * a + b * b + c * c).sqrt()
}

impl VesselGraph {
    /// One node per coordinate (in the given order), one edge per unordered 26-neighbor pair.
    pub fn from_voxels(coords: &[Coord], radii_mm: &[f64], spacing: Spacing) -> Self {
        assert_eq!(coords.len(), radii_mm.len(), "one radius per voxel");
        let index: HashMap<Coord, NodeId> = coords.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut edges = Vec::new();
        for (i, &c) in coords.iter().enumerate() {
            for d in forward_offsets() {
                let q = [c[0] as i64 + d[0], c[1] as i64 + d[1], c[2] as i64 + d[2]];
                if q.iter().any(|&v| v < 0) {
                    continue;
                }
                if let Some(&j) = index.get(&[q[0] as usize, q[1] as usize, q[2] as usize]) {
                    edges.push(Edge {
                        u: i.min(j),
                        v: i.max(j),
                        weight_mm: step_length(d, spacing),
                    });
                }
            }
        }
        let nodes = coords
            .iter()
            .zip(radii_mm)
            .map(|(&coord, &radius_mm)| Node { coord, radius_mm })
            .collect();
        Self::from_parts(nodes, edges, spacing)
    }

    fn from_parts(nodes: Vec<Node>, mut edges: Vec<Edge>, spacing: Spacing) -> Self {
        edges.sort_by_key(|e| (e.u, e.v));
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (k, e) in edges.iter().enumerate() {
            adjacency[e.u].push((e.v, k));
            adjacency[e.v].push((e.u, k));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        VesselGraph {
            nodes,
            edges,
            spacing,
            adjacency,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, usize)] {
        &self.adjacency[v]
    }

    pub fn coord(&self, v: NodeId) -> Coord {
        self.nodes[v].coord
    }

    pub fn position_mm(&self, v: NodeId) -> [f64; 3] {
        position(self.nodes[v].coord, self.spacing)
    }

    pub fn diameter_mm(&self, v: NodeId) -> f64 {
        2.0 * self.nodes[v].radius_mm
    }

    pub fn edge_weight(&self, u: NodeId, v: NodeId) -> Option<f64> {
        self.adjacency[u]
            .binary_search_by_key(&v, |&(n, _)| n)
            .ok()
            .map(|k| self.edges[self.adjacency[u][k].1].weight_mm)
    }

    /// Cycle rank |E| − |V| + C.
    pub fn cycle_rank(&self) -> usize {
        self.edges.len() + components(self).len() - self.nodes.len()
    }

    fn without_edges(&self, drop: &[bool]) -> Self {
        let edges = self
            .edges
            .iter()
            .zip(drop)
            .filter(|(_, &d)| !d)
            .map(|(e, _)| *e)
            .collect();
        Self::from_parts(self.nodes.clone(), edges, self.spacing)
    }

    /// Keeps the listed nodes (renumbered in the given order) and the edges among them.
    fn induced(&self, keep: &[NodeId]) -> Self {
        let mut map = vec![usize::MAX; self.nodes.len()];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let nodes = keep.iter().map(|&i| self.nodes[i].clone()).collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| map[e.u] != usize::MAX && map[e.v] != usize::MAX)
            .map(|e| Edge {
                u: map[e.u].min(map[e.v]),
                v: map[e.u].max(map[e.v]),
                weight_mm: e.weight_mm,
            })
            .collect();
        Self::from_parts(nodes, edges, self.spacing)
    }
}

pub fn build_graph(skeleton: &Skeleton, radii: &RadiusField) -> VesselGraph {
    VesselGraph::from_voxels(skeleton.voxels(), &radii.radii_mm, skeleton.spacing())
}

/// Removes the strictly longest edge of every 3-cycle until none is left to remove.
///
/// Triangles with a tied longest edge are kept intact. Removed edges always
/// have both shorter sides of their triangle present, so connectivity holds.
pub fn prune_triangles(graph: &VesselGraph) -> VesselGraph {
    let mut g = graph.clone();
    loop {
        let mut drop = vec![false; g.edges.len()];
        let mut any = false;
        for (k, e) in g.edges.iter().enumerate() {
            let (a, b) = (&g.adjacency[e.u], &g.adjacency[e.v]);
            let (mut i, mut j) = (0, 0);
            while i < a.len() && j < b.len() {
                match a[i].0.cmp(&b[j].0) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        let wa = g.edges[a[i].1].weight_mm;
                        let wb = g.edges[b[j].1].weight_mm;
                        if e.weight_mm > wa && e.weight_mm > wb {
                            drop[k] = true;
                            any = true;
                            break;
                        }
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
        if !any {
            return g;
        }
        g = g.without_edges(&drop);
    }
}

/// Removes terminal branches shorter than `max_length_mm`.
///
/// A terminal branch runs from an end-point through degree-2 nodes up to (not
/// including) the first node of degree ≥ 3. Isolated chains are kept. One pass.
pub fn prune_spurs(graph: &VesselGraph, max_length_mm: f64) -> VesselGraph {
    if max_length_mm <= 0.0 {
        return graph.clone();
    }
    let mut remove = vec![false; graph.node_count()];
    for start in 0..graph.node_count() {
        if graph.degree(start) != 1 {
            continue;
        }
        let mut chain = vec![start];
        let mut length = 0.0;
        let (mut prev, mut cur) = (usize::MAX, start);
        loop {
            let next = graph.neighbors(cur).iter().find(|&&(n, _)| n != prev).copied();
            let Some((n, e)) = next else { break };
            length += graph.edges[e].weight_mm;
            if graph.degree(n) >= 3 {
                if length < max_length_mm {
                    for &c in &chain {
                        remove[c] = true;
                    }
                }
                break;
            }
            if graph.degree(n) == 1 {
                break;
            }
            chain.push(n);
            prev = cur;
            cur = n;
        }
    }
    let keep: Vec<NodeId> = (0..graph.node_count()).filter(|&i| !remove[i]).collect();
    graph.induced(&keep)
}

/// JSON debug dump: `{nodes: [{id, x, y, z, radius_mm}], edges: [{u, v, w_mm}]}`.
pub fn to_json(graph: &VesselGraph) -> serde_json::Value {
    let nodes: Vec<_> = graph
        .nodes
        .iter()
        .enumerate()
        .map(|(id, n)| {
            serde_json::json!({"id": id, "x": n.coord[0], "y": n.coord[1], "z": n.coord[2], "radius_mm": n.radius_mm})
        })
        .collect();
    let edges: Vec<_> = graph
        .edges
        .iter()
        .map(|e| serde_json::json!({"u": e.u, "v": e.v, "w_mm": e.weight_mm}))
        .collect();
    serde_json::json!({ "nodes": nodes, "edges": edges })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn graph(coords: &[Coord], spacing: Spacing) -> VesselGraph {
        VesselGraph::from_voxels(coords, &vec![1.0; coords.len()], spacing)
    }

    #[test]
    fn diagonal_edge_weight() {
        let g = graph(&[[0, 0, 0], [1, 1, 1]], [1.0; 3]);
        assert_eq!(g.edge_count(), 1);
        assert!((g.edges()[0].weight_mm - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn anisotropic_axis_step() {
        let g = graph(&[[0, 0, 0], [0, 0, 1]], [1.0, 1.0, 2.0]);
        assert_eq!(g.edges()[0].weight_mm, 2.0);
    }

    #[test]
    fn collinear_degrees() {
        let g = graph(&[[0, 0, 0], [1, 0, 0], [2, 0, 0]], [1.0; 3]);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.edges().iter().map(|e| e.weight_mm).sum::<f64>(), 2.0);
        assert_eq!((0..3).map(|v| g.degree(v)).collect::<Vec<_>>(), vec![1, 2, 1]);
    }

    #[test]
    fn unit_square_prunes_to_cycle() {
        let g = graph(&[[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], [1.0; 3]);
        assert_eq!(g.edge_count(), 6);
        let p = prune_triangles(&g);
        assert_eq!(p.edge_count(), 4);
        assert!(p.edges().iter().all(|e| e.weight_mm == 1.0));
        assert_eq!(p.cycle_rank(), 1);
    }

    #[test]
    fn staircase_drops_diagonal() {
        let g = graph(&[[0, 0, 0], [1, 0, 0], [1, 1, 0]], [1.0; 3]);
        let p = prune_triangles(&g);
        assert_eq!(p.edge_count(), 2);
        assert_eq!(p.edge_weight(0, 2), None);
    }

    #[test]
    fn equilateral_triangle_is_kept() {
        let g = graph(&[[0, 0, 0], [1, 1, 0], [1, 0, 1]], [1.0; 3]);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(prune_triangles(&g).edge_count(), 3);
    }

    #[test]
    fn tree_is_fixpoint() {
        let g = graph(&[[0, 0, 0], [1, 1, 0], [2, 2, 0], [3, 1, 0], [3, 3, 1]], [1.0; 3]);
        assert_eq!(prune_triangles(&g), g);
    }

    #[test]
    fn spur_pruning_removes_short_side_branch() {
        // long line along x with a 2-voxel side branch at x = 5
        let mut coords: Vec<Coord> = (0..12).map(|x| [x, 0, 0]).collect();
        coords.push([5, 2, 0]);
        coords.push([5, 3, 0]);
        coords.push([5, 1, 0]);
        let g = prune_triangles(&graph(&coords, [1.0; 3]));
        let p = prune_spurs(&g, 3.5);
        assert_eq!(p.node_count(), 12);
        assert_eq!(prune_spurs(&g, 2.5).node_count(), 15);
        assert_eq!(prune_spurs(&g, 0.0), g);
    }

    #[test]
    fn json_dump_shape() {
        let g = graph(&[[0, 0, 0], [0, 1, 0]], [1.0; 3]);
        let j = to_json(&g);
        assert_eq!(j["nodes"].as_array().unwrap().len(), 2);
        assert_eq!(j["edges"][0]["w_mm"], 1.0);
    }
}
