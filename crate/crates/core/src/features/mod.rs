//! The fifteen vascular features: morphometric, topological, fractal and geometric.

pub mod curvature;
pub mod fractal;
pub mod spline;

use serde::{Deserialize, Serialize};

pub use curvature::{graph_geometry, CurveOptions, GraphGeometry, SegmentMetrics};
pub use fractal::{box_counts, fractal_dimension, lacunarity, Lacunarity, ScaleBounds};
pub use spline::{CurveModel, CurveSample, Smoothing};

use crate::graph::{components, cycle_basis, VesselGraph};
use crate::volume::VoxelVolume;

/// Names of the scalar features, in output column order.
pub const FEATURE_NAMES: [&str; 15] = [
    "total_length_mm",
    "volume_mm3",
    "bifurcation_count",
    "bifurcation_density_per_mm",
    "loop_count",
    "mean_loop_length_mm",
    "abnormal_degree_count",
    "component_count",
    "fractal_dimension",
    "lacunarity",
    "mean_geodesic_length_mm",
    "median_curvature_per_mm",
    "mean_curvature_per_mm",
    "mean_square_curvature_per_mm2",
    "arc_over_chord",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureOptions {
    pub curve: CurveOptions,
    pub scales: ScaleBounds,
    /// Keep per-segment κ(t) arrays in the output.
    pub keep_curvature_samples: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureVector {
    pub total_length_mm: f64,
    pub volume_mm3: f64,
    pub bifurcation_count: usize,
    pub bifurcation_density_per_mm: Option<f64>,
    pub loop_count: usize,
    pub loop_lengths_mm: Vec<f64>,
    pub abnormal_degree_count: usize,
    pub component_count: usize,
    pub fractal_dimension: Option<f64>,
    pub lacunarity: Option<f64>,
    pub lacunarity_per_scale: Vec<(usize, f64)>,
    pub geodesic_lengths_mm: Vec<f64>,
    pub mean_geodesic_length_mm: Option<f64>,
    pub median_curvature_per_mm: Option<f64>,
    pub mean_curvature_per_mm: Option<f64>,
    pub mean_square_curvature_per_mm2: Option<f64>,
    pub arc_over_chord: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curvature_samples: Option<Vec<Vec<f64>>>,
    /// Undefined features and other caveats, as `name: reason`.
    pub flags: Vec<String>,
}

impl FeatureVector {
    pub fn mean_loop_length_mm(&self) -> Option<f64> {
        (!self.loop_lengths_mm.is_empty())
            .then(|| self.loop_lengths_mm.iter().sum::<f64>() / self.loop_lengths_mm.len() as f64)
    }

    /// The fifteen scalars in [`FEATURE_NAMES`] order; `None` where undefined.
    pub fn scalars(&self) -> [(&'static str, Option<f64>); 15] {
        let values = [
            Some(self.total_length_mm),
            Some(self.volume_mm3),
            Some(self.bifurcation_count as f64),
            self.bifurcation_density_per_mm,
            Some(self.loop_count as f64),
            self.mean_loop_length_mm(),
            Some(self.abnormal_degree_count as f64),
            Some(self.component_count as f64),
            self.fractal_dimension,
            self.lacunarity,
            self.mean_geodesic_length_mm,
            self.median_curvature_per_mm,
            self.mean_curvature_per_mm,
            self.mean_square_curvature_per_mm2,
            self.arc_over_chord,
        ];
        std::array::from_fn(|k| (FEATURE_NAMES[k], values[k]))
    }

    pub fn get(&self, name: &str) -> Option<Option<f64>> {
        self.scalars().into_iter().find(|(n, _)| *n == name).map(|(_, v)| v)
    }

    pub fn has_flag(&self, prefix: &str) -> bool {
        self.flags.iter().any(|f| f.starts_with(prefix))
    }
}

/// L = Σ d_uv over all edges.
pub fn total_length(graph: &VesselGraph) -> f64 {
    graph.edges().iter().map(|e| e.weight_mm).sum()
}

/// |M| Δx Δy Δz.
pub fn mask_volume(mask: &VoxelVolume) -> f64 {
    mask.count() as f64 * mask.voxel_volume_mm3()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopologyFeatures {
    pub bifurcation_count: usize,
    pub bifurcation_density_per_mm: Option<f64>,
    pub abnormal_degree_count: usize,
    pub component_count: usize,
    pub loop_count: usize,
    pub loop_lengths_mm: Vec<f64>,
}

pub fn topology_features(graph: &VesselGraph) -> TopologyFeatures {
    let degrees = (0..graph.node_count()).map(|v| graph.degree(v));
    let bifurcation_count = degrees.clone().filter(|&d| d == 3).count();
    let abnormal_degree_count = degrees.filter(|&d| d > 3).count();
    let comps = components(graph);
    let loop_count: usize = comps.iter().map(|c| c.edges.len() + 1 - c.nodes.len()).sum();
    let loop_lengths_mm: Vec<f64> = cycle_basis(graph).iter().map(|c| c.length_mm).collect();
    debug_assert_eq!(loop_lengths_mm.len(), loop_count);
    let length = total_length(graph);
    TopologyFeatures {
        bifurcation_count,
        bifurcation_density_per_mm: (length > 0.0).then(|| bifurcation_count as f64 / length),
        abnormal_degree_count,
        component_count: comps.len(),
        loop_count,
        loop_lengths_mm,
    }
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Every feature for one mask and the graph derived from it. Sub-computations
/// that cannot be evaluated leave their entry undefined and add a flag.
pub fn extract_all(mask: &VoxelVolume, graph: &VesselGraph, options: &FeatureOptions) -> FeatureVector {
    let mut flags = Vec::new();
    if mask.count() == 0 {
        flags.push("mask: empty".to_string());
    }
    let topo = topology_features(graph);
    if topo.bifurcation_density_per_mm.is_none() {
        flags.push("bifurcation_density_per_mm: total length is zero".into());
    }
    if topo.loop_lengths_mm.is_empty() {
        flags.push("mean_loop_length_mm: no loops".into());
    }

    let fractal = fractal_dimension(mask, options.scales)
        .map_err(|e| flags.push(format!("fractal_dimension: {e}")))
        .ok();
    let lac = lacunarity(mask, options.scales)
        .map_err(|e| flags.push(format!("lacunarity: {e}")))
        .ok();

    let geometry = graph_geometry(graph, &options.curve);
    let segments: Vec<&SegmentMetrics> = geometry.segments().collect();
    let mut kappa: Vec<f64> = geometry.kappa_samples().collect();
    let median_curvature = median(&mut kappa);
    let s = geometry.summary;
    if s.mean_curvature.is_none() {
        flags.push("curvature: no measurable segments".into());
    }
    if geometry.closed_paths > 0 {
        flags.push(format!(
            "arc_over_chord: {} closed path(s) have zero chord and are excluded",
            geometry.closed_paths
        ));
    }
    if s.arc_over_chord.is_none() && s.mean_curvature.is_some() {
        flags.push("arc_over_chord: only closed paths".into());
    }

    FeatureVector {
        total_length_mm: total_length(graph),
        volume_mm3: mask_volume(mask),
        bifurcation_count: topo.bifurcation_count,
        bifurcation_density_per_mm: topo.bifurcation_density_per_mm,
        loop_count: topo.loop_count,
        loop_lengths_mm: topo.loop_lengths_mm,
        abnormal_degree_count: topo.abnormal_degree_count,
        component_count: topo.component_count,
        fractal_dimension: fractal,
        lacunarity: lac.as_ref().map(|l| l.mean),
        lacunarity_per_scale: lac.map(|l| l.per_scale).unwrap_or_default(),
        geodesic_lengths_mm: segments.iter().map(|m| m.geodesic_length_mm).collect(),
        mean_geodesic_length_mm: s.mean_geodesic_length_mm,
        median_curvature_per_mm: median_curvature,
        mean_curvature_per_mm: s.mean_curvature,
        mean_square_curvature_per_mm2: s.mean_square_curvature,
        arc_over_chord: s.arc_over_chord,
        curvature_samples: options
            .keep_curvature_samples
            .then(|| segments.iter().map(|m| m.kappa.clone()).collect()),
        flags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, prune_triangles};
    use crate::skeleton::{estimate_radii, skeletonize};

    fn graph_for(mask: &VoxelVolume) -> VesselGraph {
        let sk = skeletonize(mask);
        let radii = estimate_radii(mask, &sk).unwrap();
        prune_triangles(&build_graph(&sk, &radii))
    }

    #[test]
    fn collinear_length() {
        let g = VesselGraph::from_voxels(&[[0, 0, 0], [1, 0, 0], [2, 0, 0]], &[1.0; 3], [1.0; 3]);
        assert_eq!(total_length(&g), 2.0);
        assert_eq!(total_length(&VesselGraph::from_voxels(&[], &[], [1.0; 3])), 0.0);
    }

    #[test]
    fn volume_formula() {
        let m = VoxelVolume::from_fn([4, 4, 4], [0.5; 3], |[x, y, z]| x + 4 * y + 16 * z < 10).unwrap();
        assert_eq!(mask_volume(&m), 1.25);
        let tube = VoxelVolume::from_fn([7, 7, 52], [1.0; 3], |[x, y, z]| {
            (1..6).contains(&x) && (1..6).contains(&y) && (1..51).contains(&z)
        })
        .unwrap();
        assert_eq!(mask_volume(&tube), 1250.0);
    }

    #[test]
    fn square_loop_topology() {
        let coords = [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]];
        let g = prune_triangles(&VesselGraph::from_voxels(&coords, &[1.0; 4], [1.0; 3]));
        let t = topology_features(&g);
        assert_eq!(t.loop_count, 1);
        assert_eq!(t.loop_lengths_mm, vec![4.0]);
        assert_eq!(t.bifurcation_count, 0);
    }

    #[test]
    fn density_formula() {
        // two T-junctions on a 10 mm comb
        let mut coords: Vec<[usize; 3]> = (0..9).map(|x| [x, 0, 0]).collect();
        coords.push([2, 2, 0]);
        coords.push([6, 2, 0]);
        coords.push([2, 1, 0]);
        coords.push([6, 1, 0]);
        let g = VesselGraph::from_voxels(&coords, &vec![1.0; coords.len()], [1.0; 3]);
        let g = prune_triangles(&g);
        let t = topology_features(&g);
        assert_eq!(t.bifurcation_count, 2);
        assert_eq!(total_length(&g), 12.0);
        assert_eq!(t.bifurcation_density_per_mm, Some(2.0 / 12.0));
    }

    #[test]
    fn empty_mask_is_flagged() {
        let m = VoxelVolume::empty([16; 3], [1.0; 3]).unwrap();
        let f = extract_all(&m, &graph_for(&m), &FeatureOptions::default());
        assert_eq!(f.total_length_mm, 0.0);
        assert_eq!(f.component_count, 0);
        assert!(f.fractal_dimension.is_none() && f.lacunarity.is_none());
        assert!(f.mean_curvature_per_mm.is_none());
        assert!(f.has_flag("mask"));
        assert!(f.has_flag("fractal_dimension"));
        assert!(f.has_flag("curvature"));
    }

    #[test]
    fn straight_tube() {
        let m = VoxelVolume::from_fn([9, 9, 40], [1.0; 3], |[x, y, z]| {
            let (dx, dy) = (x as f64 - 4.0, y as f64 - 4.0);
            dx * dx + dy * dy <= 4.0 && (3..37).contains(&z)
        })
        .unwrap();
        let f = extract_all(&m, &graph_for(&m), &FeatureOptions::default());
        assert_eq!(f.bifurcation_count, 0);
        assert_eq!(f.loop_count, 0);
        assert_eq!(f.component_count, 1);
        assert!((f.arc_over_chord.unwrap() - 1.0).abs() < 1e-3);
        assert_eq!(f.scalars().len(), 15);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&mut []), None);
    }
}
