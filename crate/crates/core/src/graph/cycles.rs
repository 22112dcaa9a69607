//! Fundamental cycle basis from a minimum spanning forest.

use super::{NodeId, VesselGraph};

#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    /// Closed walk without repeating the first node at the end.
    pub nodes: Vec<NodeId>,
    pub length_mm: f64,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// One cycle per non-tree edge of the minimum spanning forest.
///
/// Kruskal order is (weight, lower endpoint coordinate, upper endpoint
/// coordinate), so the basis does not depend on node numbering. Cycles are
/// listed in that same edge order.
pub fn cycle_basis(graph: &VesselGraph) -> Vec<Cycle> {
    let n = graph.node_count();
    let key = |k: usize| {
        let e = graph.edges()[k];
        let (a, b) = (graph.coord(e.u), graph.coord(e.v));
        (e.weight_mm, a.min(b), a.max(b))
    };
    let mut order: Vec<usize> = (0..graph.edge_count()).collect();
    order.sort_by(|&x, &y| {
        let (kx, ky) = (key(x), key(y));
        kx.0.total_cmp(&ky.0).then(kx.1.cmp(&ky.1)).then(kx.2.cmp(&ky.2))
    });

    let mut uf: Vec<usize> = (0..n).collect();
    let mut in_tree = vec![false; graph.edge_count()];
    let mut chords = Vec::new();
    for &k in &order {
        let e = graph.edges()[k];
        let (a, b) = (find(&mut uf, e.u), find(&mut uf, e.v));
        if a == b {
            chords.push(k);
        } else {
            uf[a] = b;
            in_tree[k] = true;
        }
    }
    if chords.is_empty() {
        return Vec::new();
    }

    // Root every tree at its smallest-coordinate node.
    let mut parent: Vec<Option<(NodeId, f64)>> = vec![None; n];
    let mut depth = vec![usize::MAX; n];
    let mut by_coord: Vec<NodeId> = (0..n).collect();
    by_coord.sort_by_key(|&v| graph.coord(v));
    for &r in &by_coord {
        if depth[r] != usize::MAX {
            continue;
        }
        depth[r] = 0;
        let mut queue = std::collections::VecDeque::from([r]);
        while let Some(v) = queue.pop_front() {
            for &(w, e) in graph.neighbors(v) {
                if in_tree[e] && depth[w] == usize::MAX {
                    depth[w] = depth[v] + 1;
                    parent[w] = Some((v, graph.edges()[e].weight_mm));
                    queue.push_back(w);
                }
            }
        }
    }

    chords
        .into_iter()
        .map(|k| {
            let e = graph.edges()[k];
            let (mut a, mut b) = (e.u, e.v);
            let mut up_a = vec![a];
            let mut up_b = vec![b];
            let mut length = e.weight_mm;
            while a != b {
                if depth[a] >= depth[b] {
                    let (p, w) = parent[a].expect("non-root node has a parent");
                    length += w;
                    a = p;
                    up_a.push(a);
                } else {
                    let (p, w) = parent[b].expect("non-root node has a parent");
                    length += w;
                    b = p;
                    up_b.push(b);
                }
            }
            up_b.pop();
            up_b.reverse();
            up_a.extend(up_b);
            Cycle {
                nodes: up_a,
                length_mm: length,
            }
        })
        .collect()
}
