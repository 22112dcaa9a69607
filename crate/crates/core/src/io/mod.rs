//! Loading masks, atlases and cohort manifests.

pub mod cvol;
pub mod manifest;
pub mod nifti;

use std::path::Path;

use crate::error::{Error, Result};
use crate::volume::{Dims, LabelVolume, VoxelVolume};

pub use manifest::{load_manifest, parse_manifest, BmiCategory, CohortManifest, DemographicValue, ManifestRow};

/// Loads a binary mask from NIfTI-1 (`.nii`, `.nii.gz`) or `.cvol`.
///
/// The format is detected from content. Voxels with value > 0 become foreground.
pub fn load_mask(path: impl AsRef<Path>) -> Result<VoxelVolume> {
    let path = path.as_ref();
    let bytes = nifti::read_maybe_gz(path)?;
    if bytes.starts_with(cvol::MAGIC) {
        return cvol::decode(&bytes, path);
    }
    if nifti::sniff(&bytes) {
        let img = nifti::decode(&bytes, path)?;
        let data = img.values.iter().map(|&v| (v > 0.0) as u8).collect();
        return VoxelVolume::new(img.dims, img.spacing, data);
    }
    Err(Error::format(path, "unrecognized volume format (expected NIfTI-1 or CVOL)"))
}

/// Loads an integer-valued territory atlas and checks it matches `expected_dims`.
pub fn load_atlas(path: impl AsRef<Path>, expected_dims: Dims) -> Result<LabelVolume> {
    let path = path.as_ref();
    let bytes = nifti::read_maybe_gz(path)?;
    let (dims, values): (Dims, Vec<f64>) = if bytes.starts_with(cvol::MAGIC) {
        let v = cvol::decode(&bytes, path)?;
        (v.dims(), v.data().iter().map(|&b| b as f64).collect())
    } else if nifti::sniff(&bytes) {
        let img = nifti::decode(&bytes, path)?;
        (img.dims, img.values)
    } else {
        return Err(Error::format(path, "unrecognized atlas format"));
    };
    if dims != expected_dims {
        return Err(Error::DimensionMismatch {
            expected: expected_dims,
            found: dims,
        });
    }
    let mut labels = Vec::with_capacity(values.len());
    for v in values {
        if v < 0.0 {
            return Err(Error::format(path, format!("negative atlas label {v}")));
        }
        if v.fract() != 0.0 || v > u32::MAX as f64 {
            return Err(Error::format(path, format!("non-integer atlas label {v}")));
        }
        labels.push(v as u32);
    }
    LabelVolume::new(dims, labels)
}

/// Writes a mask as `.cvol`.
pub fn save_cvol(path: impl AsRef<Path>, vol: &VoxelVolume) -> Result<()> {
    cvol::write(path, vol)
}

/// Writes a label volume as a `u16` NIfTI-1 file.
pub fn save_atlas_nifti(path: impl AsRef<Path>, atlas: &LabelVolume, spacing: [f64; 3]) -> Result<()> {
    let values: Vec<f64> = atlas.labels().iter().map(|&l| l as f64).collect();
    nifti::write(path, atlas.dims(), spacing, nifti::DataType::U16, &values)
}
