//! Mask → skeleton → graph → features, under one run configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::features::{extract_all, FeatureOptions, FeatureVector};
use crate::graph::{build_graph, prune_spurs, prune_triangles, VesselGraph};
use crate::skeleton::{estimate_radii, skeletonize, Skeleton};
use crate::volume::VoxelVolume;

/// Every knob of a run. Serialized next to outputs so a run can be repeated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Remove the longest edge of every 26-connectivity triangle.
    pub prune_triangles: bool,
    /// Remove terminal branches up to this length (mm); 0 disables.
    pub spur_prune_length_mm: f64,
    /// Use the formulas exactly as written: raw graph, no spur pruning,
    /// interpolating splines. Overrides the three settings above.
    pub strict_literal: bool,
    pub features: FeatureOptions,
    /// Territories 1..=T to report; `None` reports the labels present.
    pub territory_count: Option<u32>,
    /// Worker threads; `None` uses `CARAVEL_JOBS` or all cores.
    pub jobs: Option<usize>,
    /// Output location of the run (informational in the sidecar).
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            prune_triangles: true,
            spur_prune_length_mm: 0.0,
            strict_literal: false,
            features: FeatureOptions::default(),
            territory_count: None,
            jobs: None,
            output: None,
        }
    }
}

impl RunConfig {
    /// The configuration with strict-literal overrides applied.
    pub fn effective(&self) -> RunConfig {
        let mut c = self.clone();
        if c.strict_literal {
            c.prune_triangles = false;
            c.spur_prune_length_mm = 0.0;
            c.features.curve.smoothing = 0.0;
        }
        c
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub skeleton: Skeleton,
    pub graph: VesselGraph,
    pub features: FeatureVector,
}

/// Graph actually used for features under `config`.
pub fn vessel_graph(mask: &VoxelVolume, config: &RunConfig) -> Result<(Skeleton, VesselGraph)> {
    let config = config.effective();
    let skeleton = skeletonize(mask);
    let radii = estimate_radii(mask, &skeleton)?;
    let mut graph = build_graph(&skeleton, &radii);
    if config.prune_triangles {
        graph = prune_triangles(&graph);
    }
    if config.spur_prune_length_mm > 0.0 {
        graph = prune_spurs(&graph, config.spur_prune_length_mm);
    }
    Ok((skeleton, graph))
}

pub fn analyze(mask: &VoxelVolume, config: &RunConfig) -> Result<Analysis> {
    let (skeleton, graph) = vessel_graph(mask, config)?;
    let features = extract_all(mask, &graph, &config.effective().features);
    Ok(Analysis {
        skeleton,
        graph,
        features,
    })
}

pub fn extract_features(mask: &VoxelVolume, config: &RunConfig) -> Result<FeatureVector> {
    Ok(analyze(mask, config)?.features)
}
