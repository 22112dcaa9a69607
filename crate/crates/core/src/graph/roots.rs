use super::{ComponentView, NodeId, VesselGraph};

/// Root nodes of one component.
///
/// R1 and R2 are the end-points with the largest and second-largest diameter;
/// R3 is the bifurcation (degree ≥ 3) with the largest diameter, or R1 if
/// there is none. Ties go to the lexicographically smaller coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RootSet {
    pub r1: NodeId,
    pub r2: NodeId,
    pub r3: NodeId,
}

impl RootSet {
    pub fn as_array(&self) -> [NodeId; 3] {
        [self.r1, self.r2, self.r3]
    }
}

/// Best node by (diameter desc, coordinate asc).
fn best(graph: &VesselGraph, candidates: impl Iterator<Item = NodeId>) -> Option<NodeId> {
    candidates.min_by(|&a, &b| {
        graph
            .diameter_mm(b)
            .total_cmp(&graph.diameter_mm(a))
            .then_with(|| graph.coord(a).cmp(&graph.coord(b)))
    })
}

/// Panics on an empty component.
pub fn select_roots(component: &ComponentView, graph: &VesselGraph) -> RootSet {
    assert!(!component.is_empty(), "select_roots on an empty component");
    let nodes = || component.nodes.iter().copied();
    let ends = || nodes().filter(|&v| graph.degree(v) == 1);

    let r1 = best(graph, ends()).or_else(|| best(graph, nodes())).unwrap();
    let r2 = best(graph, ends().filter(|&v| v != r1)).unwrap_or(r1);
    let r3 = best(graph, nodes().filter(|&v| graph.degree(v) >= 3)).unwrap_or(r1);
    RootSet { r1, r2, r3 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{components, prune_triangles, VesselGraph};

    #[test]
    fn path_without_bifurcation() {
        let coords: Vec<_> = (0..5).map(|x| [x, 0, 0]).collect();
        let radii = [3.0, 1.0, 1.0, 1.0, 2.0];
        let g = VesselGraph::from_voxels(&coords, &radii, [1.0; 3]);
        let r = select_roots(&components(&g)[0], &g);
        assert_eq!(r, RootSet { r1: 0, r2: 4, r3: 0 });
    }

    #[test]
    fn y_junction_root_is_junction() {
        // junction at (2,2,0) with three arms
        let coords = [[0, 2, 0], [1, 2, 0], [2, 2, 0], [3, 1, 0], [4, 0, 0], [3, 3, 0], [4, 4, 0]];
        let radii = [1.0, 1.0, 5.0, 1.0, 1.5, 1.0, 2.0];
        let g = prune_triangles(&VesselGraph::from_voxels(&coords, &radii, [1.0; 3]));
        assert_eq!(g.degree(2), 3);
        let r = select_roots(&components(&g)[0], &g);
        assert_eq!((r.r1, r.r2, r.r3), (6, 4, 2));
    }

    #[test]
    fn equal_radii_tie_breaks_on_coordinate() {
        let coords = [[3, 0, 0], [2, 0, 0], [1, 0, 0]];
        let g = VesselGraph::from_voxels(&coords, &[1.0; 3], [1.0; 3]);
        let r = select_roots(&components(&g)[0], &g);
        assert_eq!(g.coord(r.r1), [1, 0, 0]);
        assert_eq!(g.coord(r.r2), [3, 0, 0]);
    }

    #[test]
    fn pure_cycle_uses_max_diameter() {
        let coords = [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]];
        let g = prune_triangles(&VesselGraph::from_voxels(&coords, &[1.0, 1.0, 4.0, 1.0], [1.0; 3]));
        let r = select_roots(&components(&g)[0], &g);
        assert_eq!(r.as_array(), [2, 2, 2]);
    }

    #[test]
    fn single_end_point() {
        // lollipop: a square loop with a tail
        let coords = [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [3, 0, 0], [2, 0, 0]];
        let g = prune_triangles(&VesselGraph::from_voxels(&coords, &[1.0; 6], [1.0; 3]));
        let r = select_roots(&components(&g)[0], &g);
        assert_eq!(r.r1, 4);
        assert_eq!(r.r2, 4);
        assert_eq!(g.degree(r.r3), 3);
    }
}
