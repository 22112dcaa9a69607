use super::{NodeId, VesselGraph};

/// One connected subgraph G_k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentView {
    pub id: usize,
    /// Node ids sorted by coordinate.
    pub nodes: Vec<NodeId>,
    /// Edge indices into [`VesselGraph::edges`], ascending.
    pub edges: Vec<usize>,
}

impl ComponentView {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, graph: &VesselGraph, v: NodeId) -> bool {
        self.nodes
            .binary_search_by_key(&graph.coord(v), |&n| graph.coord(n))
            .is_ok_and(|k| self.nodes[k] == v)
    }

    pub fn total_length_mm(&self, graph: &VesselGraph) -> f64 {
        self.edges.iter().map(|&e| graph.edges()[e].weight_mm).sum()
    }
}

/// Maximal connected subsets, ordered by size (descending) then smallest coordinate.
pub fn components(graph: &VesselGraph) -> Vec<ComponentView> {
    let n = graph.node_count();
    let mut label = vec![usize::MAX; n];
    let mut groups: Vec<Vec<NodeId>> = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let g = groups.len();
        let mut members = vec![start];
        label[start] = g;
        let mut i = 0;
        while i < members.len() {
            let v = members[i];
            i += 1;
            for &(w, _) in graph.neighbors(v) {
                if label[w] == usize::MAX {
                    label[w] = g;
                    members.push(w);
                }
            }
        }
        members.sort_by_key(|&v| graph.coord(v));
        groups.push(members);
    }
    let mut edge_groups = vec![Vec::new(); groups.len()];
    for (k, e) in graph.edges().iter().enumerate() {
        edge_groups[label[e.u]].push(k);
    }
    let mut views: Vec<(Vec<NodeId>, Vec<usize>)> = groups.into_iter().zip(edge_groups).collect();
    views.sort_by(|a, b| {
        b.0.len()
            .cmp(&a.0.len())
            .then_with(|| graph.coord(a.0[0]).cmp(&graph.coord(b.0[0])))
    });
    views
        .into_iter()
        .enumerate()
        .map(|(id, (nodes, edges))| ComponentView { id, nodes, edges })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::VesselGraph;

    #[test]
    fn empty_graph() {
        let g = VesselGraph::from_voxels(&[], &[], [1.0; 3]);
        assert!(components(&g).is_empty());
    }

    #[test]
    fn two_lines() {
        let coords = [[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 5, 0], [1, 5, 0], [2, 5, 0]];
        let g = VesselGraph::from_voxels(&coords, &[1.0; 6], [1.0; 3]);
        let c = components(&g);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].nodes, vec![0, 1, 2]);
        assert_eq!(c[1].nodes, vec![3, 4, 5]);
        assert_eq!(c[0].edges.len(), 2);
        assert!(c[1].contains(&g, 4) && !c[1].contains(&g, 0));
    }

    #[test]
    fn ordered_by_size_then_coordinate() {
        let coords = [[9, 9, 9], [0, 0, 0], [0, 0, 1], [5, 5, 5]];
        let g = VesselGraph::from_voxels(&coords, &[1.0; 4], [1.0; 3]);
        let c = components(&g);
        assert_eq!(c.iter().map(|c| c.nodes.clone()).collect::<Vec<_>>(), vec![vec![1, 2], vec![3], vec![0]]);
    }
}
