//! Segment geometry: spline curvature integrals, arc-over-chord and the
//! root → component → whole-graph aggregation.

use serde::{Deserialize, Serialize};

use super::spline::{norm, CurveModel, CurveSample, Point, Smoothing};
use crate::graph::{
    components, cycle_basis, extract_segments, select_roots, ComponentView, Cycle, NodeId, SegmentSet, VesselGraph,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurveOptions {
    /// Residual budget multiplier for the smoothing spline; 0 interpolates.
    pub smoothing: f64,
    /// Samples per path node.
    pub sample_factor: usize,
    pub min_samples: usize,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions {
            smoothing: 0.5,
            sample_factor: 10,
            min_samples: 50,
        }
    }
}

impl CurveOptions {
    pub fn interpolating() -> Self {
        CurveOptions {
            smoothing: 0.0,
            ..Self::default()
        }
    }

    pub fn sample_count(&self, nodes: usize) -> usize {
        self.min_samples.max(self.sample_factor * nodes).max(2)
    }

    fn smoothing_for(&self, graph: &VesselGraph) -> Smoothing {
        if self.smoothing <= 0.0 {
            return Smoothing::Interpolate;
        }
        let s = graph.spacing();
        Smoothing::Residual {
            factor: self.smoothing,
            spacing_sq: (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]) / 3.0,
        }
    }
}

/// Geometry of one open segment or closed loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentMetrics {
    pub geodesic_length_mm: f64,
    pub mean_curvature: f64,
    pub mean_square_curvature: f64,
    /// `None` for closed paths (zero chord).
    pub arc_over_chord: Option<f64>,
    pub closed: bool,
    /// κ at every sample point.
    pub kappa: Vec<f64>,
}

/// ∫ f dt by the composite trapezoid rule over the sample grid.
fn trapezoid(samples: &[CurveSample], f: impl Fn(usize, &CurveSample) -> f64) -> f64 {
    let mut acc = 0.0;
    for k in 1..samples.len() {
        let dt = samples[k].t - samples[k - 1].t;
        acc += 0.5 * dt * (f(k - 1, &samples[k - 1]) + f(k, &samples[k]));
    }
    acc
}

fn integrate(samples: &[CurveSample], weight: impl Fn(usize) -> f64, geodesic: f64) -> (f64, f64, Vec<f64>) {
    let kappa: Vec<f64> = samples.iter().map(CurveSample::curvature).collect();
    let mean = trapezoid(samples, |k, s| kappa[k] / weight(k) * s.speed()) / geodesic;
    let mean_sq = trapezoid(samples, |k, s| {
        let w = weight(k);
        kappa[k] * kappa[k] / (w * w) * s.speed()
    }) / geodesic;
    (mean, mean_sq, kappa)
}

/// Metrics of a root → end-point path; `n(v)` gives the path multiplicity.
/// `None` for paths with fewer than two distinct positions.
pub fn open_segment_metrics(
    graph: &VesselGraph,
    nodes: &[NodeId],
    multiplicity: impl Fn(NodeId) -> u32,
    options: &CurveOptions,
) -> Option<SegmentMetrics> {
    let points: Vec<Point> = nodes.iter().map(|&v| graph.position_mm(v)).collect();
    let geodesic: f64 = nodes
        .windows(2)
        .map(|w| graph.edge_weight(w[0], w[1]).expect("consecutive path nodes are adjacent"))
        .sum();
    if geodesic <= 0.0 {
        return None;
    }
    let curve = CurveModel::fit(&points, options.smoothing_for(graph))?;
    let samples = curve.sample_domain(options.sample_count(nodes.len()));
    let weights: Vec<f64> = samples
        .iter()
        .map(|s| multiplicity(nodes[curve.nearest_node(s.t)]).max(1) as f64)
        .collect();
    let (mean_curvature, mean_square_curvature, kappa) = integrate(&samples, |k| weights[k], geodesic);
    let first = points[0];
    let last = points[points.len() - 1];
    let chord = norm([last[0] - first[0], last[1] - first[1], last[2] - first[2]]);
    Some(SegmentMetrics {
        geodesic_length_mm: geodesic,
        mean_curvature,
        mean_square_curvature,
        arc_over_chord: (chord > 0.0).then(|| geodesic / chord),
        closed: false,
        kappa,
    })
}

/// Metrics of a closed loop given as a node cycle (first node not repeated).
pub fn closed_loop_metrics(graph: &VesselGraph, cycle: &[NodeId], options: &CurveOptions) -> Option<SegmentMetrics> {
    let n = cycle.len();
    if n < 3 {
        return None;
    }
    let geodesic: f64 = (0..n)
        .map(|i| {
            graph
                .edge_weight(cycle[i], cycle[(i + 1) % n])
                .expect("consecutive cycle nodes are adjacent")
        })
        .sum();
    let points: Vec<Point> = cycle.iter().map(|&v| graph.position_mm(v)).collect();
    let curve = CurveModel::fit_closed(&points, options.smoothing_for(graph))?;
    let samples = curve.sample_domain(options.sample_count(n + 1));
    let (mean_curvature, mean_square_curvature, kappa) = integrate(&samples, |_| 1.0, geodesic);
    Some(SegmentMetrics {
        geodesic_length_mm: geodesic,
        mean_curvature,
        mean_square_curvature,
        arc_over_chord: None,
        closed: true,
        kappa,
    })
}

/// Curvature-family values averaged at one aggregation level.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct GeometrySummary {
    pub mean_geodesic_length_mm: Option<f64>,
    pub mean_curvature: Option<f64>,
    pub mean_square_curvature: Option<f64>,
    pub arc_over_chord: Option<f64>,
}

#[derive(Default)]
struct Mean {
    sum: f64,
    count: usize,
}

impl Mean {
    fn add(&mut self, v: Option<f64>) {
        if let Some(v) = v {
            self.sum += v;
            self.count += 1;
        }
    }

    fn get(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }
}

impl GeometrySummary {
    fn fields(&self) -> [Option<f64>; 4] {
        [
            self.mean_geodesic_length_mm,
            self.mean_curvature,
            self.mean_square_curvature,
            self.arc_over_chord,
        ]
    }

    fn from_fields(f: [Option<f64>; 4]) -> Self {
        GeometrySummary {
            mean_geodesic_length_mm: f[0],
            mean_curvature: f[1],
            mean_square_curvature: f[2],
            arc_over_chord: f[3],
        }
    }

    /// Unweighted mean of each field over the items where it is defined.
    fn mean_of(items: &[GeometrySummary]) -> Self {
        let mut acc: [Mean; 4] = Default::default();
        for it in items {
            for (a, v) in acc.iter_mut().zip(it.fields()) {
                a.add(v);
            }
        }
        Self::from_fields(acc.map(|a| a.get()))
    }

    fn of_segments(segments: &[SegmentMetrics]) -> Self {
        let items: Vec<GeometrySummary> = segments
            .iter()
            .map(|s| GeometrySummary {
                mean_geodesic_length_mm: Some(s.geodesic_length_mm),
                mean_curvature: Some(s.mean_curvature),
                mean_square_curvature: Some(s.mean_square_curvature),
                arc_over_chord: s.arc_over_chord,
            })
            .collect();
        Self::mean_of(&items)
    }
}

/// Segments measured from one root.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootGeometry {
    pub root: NodeId,
    pub segments: Vec<SegmentMetrics>,
    pub summary: GeometrySummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentGeometry {
    pub component: usize,
    pub total_length_mm: f64,
    /// Three entries (R1, R2, R3) for components with end-points; a single
    /// pseudo-root holding the closed loops otherwise.
    pub roots: Vec<RootGeometry>,
    pub summary: GeometrySummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphGeometry {
    pub components: Vec<ComponentGeometry>,
    pub summary: GeometrySummary,
    /// Closed paths whose chord is zero, excluded from arc-over-chord.
    pub closed_paths: usize,
}

impl GraphGeometry {
    /// Every segment's κ samples in component, root, segment order.
    pub fn kappa_samples(&self) -> impl Iterator<Item = f64> + '_ {
        self.components
            .iter()
            .flat_map(|c| c.roots.iter())
            .flat_map(|r| r.segments.iter())
            .flat_map(|s| s.kappa.iter().copied())
    }

    pub fn segments(&self) -> impl Iterator<Item = &SegmentMetrics> + '_ {
        self.components
            .iter()
            .flat_map(|c| c.roots.iter())
            .flat_map(|r| r.segments.iter())
    }
}

fn root_geometry(graph: &VesselGraph, set: &SegmentSet, options: &CurveOptions) -> RootGeometry {
    let segments: Vec<SegmentMetrics> = set
        .paths
        .iter()
        .filter_map(|p| open_segment_metrics(graph, &p.nodes, |v| set.multiplicity_of(v), options))
        .collect();
    RootGeometry {
        root: set.root,
        summary: GeometrySummary::of_segments(&segments),
        segments,
    }
}

/// Rotates a cycle to start at its smallest coordinate, heading to the
/// smaller of that node's two cycle neighbors.
fn canonical_cycle(graph: &VesselGraph, cycle: &Cycle) -> Vec<NodeId> {
    let n = cycle.nodes.len();
    let start = (0..n).min_by_key(|&i| graph.coord(cycle.nodes[i])).unwrap_or(0);
    let next = cycle.nodes[(start + 1) % n];
    let prev = cycle.nodes[(start + n - 1) % n];
    if graph.coord(next) <= graph.coord(prev) {
        (0..n).map(|k| cycle.nodes[(start + k) % n]).collect()
    } else {
        (0..n).map(|k| cycle.nodes[(start + n - k) % n]).collect()
    }
}

pub fn component_geometry(
    graph: &VesselGraph,
    component: &ComponentView,
    loops: &[Cycle],
    options: &CurveOptions,
) -> ComponentGeometry {
    let has_ends = component.nodes.iter().any(|&v| graph.degree(v) == 1);
    let roots = if has_ends {
        let rs = select_roots(component, graph);
        rs.as_array()
            .iter()
            .map(|&r| {
                let set = extract_segments(component, graph, r).expect("root lies in its component");
                root_geometry(graph, &set, options)
            })
            .collect()
    } else {
        let segments: Vec<SegmentMetrics> = loops
            .iter()
            .filter(|c| component.contains(graph, c.nodes[0]))
            .filter_map(|c| closed_loop_metrics(graph, &canonical_cycle(graph, c), options))
            .collect();
        let root = select_roots(component, graph).r1;
        vec![RootGeometry {
            root,
            summary: GeometrySummary::of_segments(&segments),
            segments,
        }]
    };
    let summaries: Vec<GeometrySummary> = roots.iter().map(|r: &RootGeometry| r.summary).collect();
    ComponentGeometry {
        component: component.id,
        total_length_mm: component.total_length_mm(graph),
        summary: GeometrySummary::mean_of(&summaries),
        roots,
    }
}

/// Length-weighted average of component summaries.
fn weighted(components: &[ComponentGeometry]) -> GeometrySummary {
    let mut num = [0.0f64; 4];
    let mut den = [0.0f64; 4];
    for c in components {
        if c.total_length_mm <= 0.0 {
            continue;
        }
        for (k, v) in c.summary.fields().into_iter().enumerate() {
            if let Some(v) = v {
                num[k] += c.total_length_mm * v;
                den[k] += c.total_length_mm;
            }
        }
    }
    GeometrySummary::from_fields(std::array::from_fn(|k| (den[k] > 0.0).then(|| num[k] / den[k])))
}

pub fn graph_geometry(graph: &VesselGraph, options: &CurveOptions) -> GraphGeometry {
    let loops = cycle_basis(graph);
    let comps: Vec<ComponentGeometry> = components(graph)
        .iter()
        .map(|c| component_geometry(graph, c, &loops, options))
        .collect();
    let closed_paths = comps
        .iter()
        .flat_map(|c| c.roots.iter())
        .flat_map(|r| r.segments.iter())
        .filter(|s| s.closed)
        .count();
    GraphGeometry {
        summary: weighted(&comps),
        components: comps,
        closed_paths,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{prune_triangles, VesselGraph};

    fn graph_of(coords: &[[usize; 3]], spacing: [f64; 3]) -> VesselGraph {
        prune_triangles(&VesselGraph::from_voxels(coords, &vec![1.0; coords.len()], spacing))
    }

    #[test]
    fn straight_segment() {
        let coords: Vec<[usize; 3]> = (0..20).map(|i| [i, 3, 3]).collect();
        let g = graph_of(&coords, [1.0; 3]);
        let geo = graph_geometry(&g, &CurveOptions::default());
        assert!(geo.summary.mean_curvature.unwrap() < 1e-12);
        assert_eq!(geo.summary.arc_over_chord, Some(1.0));
        assert_eq!(geo.summary.mean_geodesic_length_mm, Some(19.0));
    }

    #[test]
    fn semicircle_arc_over_chord() {
        let r = 20.0f64;
        let mut coords: Vec<[usize; 3]> = Vec::new();
        for k in 0..=2000 {
            let a = std::f64::consts::PI * k as f64 / 2000.0;
            let c = [(30.0 + r * a.cos()).round() as usize, (5.0 + r * a.sin()).round() as usize, 2];
            if coords.last() == Some(&c) {
                continue;
            }
            // drop staircase corners so the path is 26-connected without shortcuts
            while coords.len() >= 2 && coords[coords.len() - 2].iter().zip(&c).all(|(a, b)| a.abs_diff(*b) <= 1) {
                coords.pop();
            }
            coords.push(c);
        }
        let g = graph_of(&coords, [1.0; 3]);
        let path: Vec<NodeId> = coords
            .iter()
            .map(|c| g.nodes().iter().position(|n| n.coord == *c).unwrap())
            .collect();
        let m = open_segment_metrics(&g, &path, |_| 1, &CurveOptions::default()).unwrap();
        let aoc = m.arc_over_chord.unwrap();
        // digital arc length runs a few percent above πr
        assert!((std::f64::consts::FRAC_PI_2 * 0.99..std::f64::consts::FRAC_PI_2 * 1.1).contains(&aoc), "{aoc}");
    }

    #[test]
    fn multiplicity_divides_curvature() {
        let coords: Vec<[usize; 3]> = (0..12).map(|i| [i, (i * i) / 16, 0]).collect();
        let g = VesselGraph::from_voxels(&coords, &vec![1.0; coords.len()], [1.0; 3]);
        let path: Vec<NodeId> = (0..coords.len()).collect();
        let opts = CurveOptions::interpolating();
        let one = open_segment_metrics(&g, &path, |_| 1, &opts).unwrap();
        let two = open_segment_metrics(&g, &path, |_| 2, &opts).unwrap();
        assert!((two.mean_curvature * 2.0 - one.mean_curvature).abs() < 1e-12);
        assert!((two.mean_square_curvature * 4.0 - one.mean_square_curvature).abs() < 1e-12);
    }

    #[test]
    fn unit_square_loop_is_closed() {
        let coords = [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]];
        let g = graph_of(&coords, [1.0; 3]);
        let geo = graph_geometry(&g, &CurveOptions::default());
        assert_eq!(geo.closed_paths, 1);
        let seg = geo.segments().next().unwrap();
        assert_eq!(seg.geodesic_length_mm, 4.0);
        assert!(seg.arc_over_chord.is_none());
        assert_eq!(geo.summary.arc_over_chord, None);
        assert!(geo.summary.mean_curvature.unwrap() > 0.0);
    }

    #[test]
    fn scaling_is_exact() {
        let coords: Vec<[usize; 3]> = (0..30).map(|i| [i, (i * i) / 20, i / 3]).collect();
        let a = graph_geometry(&graph_of(&coords, [1.0, 0.5, 2.0]), &CurveOptions::default()).summary;
        let b = graph_geometry(&graph_of(&coords, [2.0, 1.0, 4.0]), &CurveOptions::default()).summary;
        assert_eq!(a.mean_curvature.unwrap(), b.mean_curvature.unwrap() * 2.0);
        assert_eq!(a.mean_square_curvature.unwrap(), b.mean_square_curvature.unwrap() * 4.0);
        assert_eq!(a.arc_over_chord, b.arc_over_chord);
        assert_eq!(a.mean_geodesic_length_mm.unwrap() * 2.0, b.mean_geodesic_length_mm.unwrap());
    }
}
