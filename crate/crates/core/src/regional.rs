//! Territory decomposition M_i = M ∩ T_i and per-territory feature extraction.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::{extract_all, FeatureVector};
use crate::graph::VesselGraph;
use crate::pipeline::{extract_features, RunConfig};
use crate::skeleton::topology::TABLES;
use crate::volume::{LabelVolume, VoxelVolume};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionFeatures {
    pub region_id: u32,
    /// Atlas voxels carrying this label.
    pub territory_voxels: usize,
    /// Foreground voxels of M_i.
    pub mask_voxels: usize,
    pub features: FeatureVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionalReport {
    pub global: FeatureVector,
    /// Ascending region id.
    pub regions: Vec<RegionFeatures>,
}

impl RegionalReport {
    pub fn region(&self, id: u32) -> Option<&RegionFeatures> {
        self.regions.iter().find(|r| r.region_id == id)
    }
}

fn check_dims(mask: &VoxelVolume, atlas: &LabelVolume) -> Result<()> {
    if mask.dims() != atlas.dims() {
        return Err(Error::DimensionMismatch {
            expected: mask.dims(),
            found: atlas.dims(),
        });
    }
    Ok(())
}

/// Region ids reported for `atlas`: 1..=T when T is configured, otherwise
/// every non-zero label present.
pub fn region_ids(atlas: &LabelVolume, territory_count: Option<u32>) -> Vec<u32> {
    match territory_count {
        Some(t) => (1..=t).collect(),
        None => atlas.labels_present(),
    }
}

/// M ∩ T_i for one territory.
pub fn region_mask(mask: &VoxelVolume, atlas: &LabelVolume, id: u32) -> Result<VoxelVolume> {
    check_dims(mask, atlas)?;
    let data = mask
        .data()
        .iter()
        .zip(atlas.labels())
        .map(|(&m, &l)| u8::from(m != 0 && l == id))
        .collect();
    VoxelVolume::new(mask.dims(), mask.spacing(), data)
}

pub fn regional_masks(
    mask: &VoxelVolume,
    atlas: &LabelVolume,
    territory_count: Option<u32>,
) -> Result<Vec<(u32, VoxelVolume)>> {
    check_dims(mask, atlas)?;
    region_ids(atlas, territory_count)
        .into_iter()
        .map(|id| Ok((id, region_mask(mask, atlas, id)?)))
        .collect()
}

/// Labels whose masked voxels touch masked voxels of another label (or of
/// the background label), i.e. territories whose vessels were cut.
fn cut_labels(mask: &VoxelVolume, atlas: &LabelVolume) -> std::collections::BTreeSet<u32> {
    let mut cut = std::collections::BTreeSet::new();
    let labels = atlas.labels();
    for c in mask.foreground() {
        let own = labels[mask.index(c)];
        if cut.contains(&own) {
            continue;
        }
        for d in &TABLES.offsets {
            let q = [c[0] as i64 + d[0], c[1] as i64 + d[1], c[2] as i64 + d[2]];
            if mask.get_signed(q) {
                let qi = mask.index([q[0] as usize, q[1] as usize, q[2] as usize]);
                if labels[qi] != own {
                    cut.insert(own);
                    break;
                }
            }
        }
    }
    cut
}

fn empty_features(mask: &VoxelVolume, config: &RunConfig) -> FeatureVector {
    let graph = VesselGraph::from_voxels(&[], &[], mask.spacing());
    extract_all(mask, &graph, &config.effective().features)
}

/// Global features plus features of every territory, each re-skeletonized
/// from its own mask. Per-region failures are flagged, never fatal.
pub fn regional_features(mask: &VoxelVolume, atlas: &LabelVolume, config: &RunConfig) -> Result<RegionalReport> {
    check_dims(mask, atlas)?;
    let ids = region_ids(atlas, config.territory_count);
    let cut = cut_labels(mask, atlas);
    let (global, regions) = rayon::join(
        || extract_features(mask, config),
        || {
            ids.par_iter()
                .map(|&id| region_features(mask, atlas, id, cut.contains(&id), config))
                .collect::<Result<Vec<_>>>()
        },
    );
    Ok(RegionalReport {
        global: global?,
        regions: regions?,
    })
}

fn region_features(
    mask: &VoxelVolume,
    atlas: &LabelVolume,
    id: u32,
    cut: bool,
    config: &RunConfig,
) -> Result<RegionFeatures> {
    let m = region_mask(mask, atlas, id)?;
    let territory_voxels = atlas.labels().iter().filter(|&&l| l == id).count();
    let mask_voxels = m.count();
    let mut features = if mask_voxels == 0 {
        let mut f = empty_features(&m, config);
        f.flags.push("region: empty".into());
        f
    } else {
        match extract_features(&m, config) {
            Ok(f) => f,
            Err(e) => {
                let mut f = empty_features(&VoxelVolume::empty(m.dims(), m.spacing())?, config);
                f.flags.push(format!("region: failed: {e}"));
                f
            }
        }
    };
    if cut {
        features
            .flags
            .push("region: vessels cross the territory boundary; cut ends become end-points".into());
    }
    Ok(RegionFeatures {
        region_id: id,
        territory_voxels,
        mask_voxels,
        features,
    })
}
