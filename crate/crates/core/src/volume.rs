//! Voxel-grid data model shared by every stage of the pipeline.
//!
//! Linear order is x-fastest: `index = x + nx * (y + ny * z)`.

use crate::error::{Error, Result};

pub type Dims = [usize; 3];
pub type Spacing = [f64; 3];
pub type Coord = [usize; 3];

/// Binary occupancy mask with physical voxel spacing in millimeters.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelVolume {
    dims: Dims,
    spacing: Spacing,
    data: Vec<u8>,
}

fn check_grid(dims: Dims, spacing: Spacing) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::InvalidVolume(format!("zero-size dimension in {dims:?}")));
    }
    if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidVolume(format!(
            "spacing must be positive and finite, got {spacing:?}"
        )));
    }
    Ok(())
}

impl VoxelVolume {
    pub fn new(dims: Dims, spacing: Spacing, data: Vec<u8>) -> Result<Self> {
        check_grid(dims, spacing)?;
        let n = dims[0] * dims[1] * dims[2];
        if data.len() != n {
            return Err(Error::InvalidVolume(format!(
                "data length {} does not match dims {dims:?} ({n} voxels)",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidVolume(format!("non-binary voxel value {v}")));
        }
        Ok(VoxelVolume {
            dims,
            spacing,
            data,
        })
    }

    pub fn empty(dims: Dims, spacing: Spacing) -> Result<Self> {
        check_grid(dims, spacing)?;
        Ok(VoxelVolume {
            dims,
            spacing,
            data: vec![0; dims[0] * dims[1] * dims[2]],
        })
    }

    /// Builds a mask by evaluating `inside` at every voxel index.
    pub fn from_fn(dims: Dims, spacing: Spacing, mut inside: impl FnMut(Coord) -> bool) -> Result<Self> {
        let mut vol = Self::empty(dims, spacing)?;
        let mut i = 0;
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    vol.data[i] = inside([x, y, z]) as u8;
                    i += 1;
                }
            }
        }
        Ok(vol)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, c: Coord) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    #[inline]
    pub fn coord(&self, index: usize) -> Coord {
        let x = index % self.dims[0];
        let r = index / self.dims[0];
        [x, r % self.dims[1], r / self.dims[1]]
    }

    #[inline]
    pub fn get(&self, c: Coord) -> bool {
        self.data[self.index(c)] != 0
    }

    /// Out-of-bounds coordinates read as background.
    #[inline]
    pub fn get_signed(&self, c: [i64; 3]) -> bool {
        if c.iter().zip(self.dims.iter()).any(|(&v, &d)| v < 0 || v >= d as i64) {
            return false;
        }
        self.get([c[0] as usize, c[1] as usize, c[2] as usize])
    }

    pub fn set(&mut self, c: Coord, value: bool) {
        let i = self.index(c);
        self.data[i] = value as u8;
    }

    /// Foreground voxel count |M|.
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn voxel_volume_mm3(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    /// Foreground coordinates in linear (x-fastest) order.
    pub fn foreground(&self) -> impl Iterator<Item = Coord> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, _)| self.coord(i))
    }

    /// Physical position of a voxel center in millimeters.
    pub fn position(&self, c: Coord) -> [f64; 3] {
        position(c, self.spacing)
    }

    /// Reorders axes: output axis `k` is input axis `axes[k]`, spacing permuted to match.
    pub fn permuted(&self, axes: [usize; 3]) -> Result<Self> {
        let mut seen = [false; 3];
        for &a in &axes {
            if a > 2 || seen[a] {
                return Err(Error::Parameter(format!("invalid axis permutation {axes:?}")));
            }
            seen[a] = true;
        }
        let dims = [self.dims[axes[0]], self.dims[axes[1]], self.dims[axes[2]]];
        let spacing = [self.spacing[axes[0]], self.spacing[axes[1]], self.spacing[axes[2]]];
        Self::from_fn(dims, spacing, |c| {
            let mut src = [0; 3];
            for k in 0..3 {
                src[axes[k]] = c[k];
            }
            self.get(src)
        })
    }

    pub fn with_spacing(&self, spacing: Spacing) -> Result<Self> {
        check_grid(self.dims, spacing)?;
        Ok(VoxelVolume {
            dims: self.dims,
            spacing,
            data: self.data.clone(),
        })
    }
}

#[inline]
pub fn position(c: Coord, spacing: Spacing) -> [f64; 3] {
    [
        c[0] as f64 * spacing[0],
        c[1] as f64 * spacing[1],
        c[2] as f64 * spacing[2],
    ]
}

/// Atlas of arterial territories: 0 is background, 1..=T are territory ids.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    dims: Dims,
    labels: Vec<u32>,
}

impl LabelVolume {
    pub fn new(dims: Dims, labels: Vec<u32>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidVolume(format!("zero-size dimension in {dims:?}")));
        }
        if labels.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::InvalidVolume(format!(
                "label count {} does not match dims {dims:?}",
                labels.len()
            )));
        }
        Ok(LabelVolume { dims, labels })
    }

    pub fn from_fn(dims: Dims, mut label: impl FnMut(Coord) -> u32) -> Result<Self> {
        let mut labels = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    labels.push(label([x, y, z]));
                }
            }
        }
        Self::new(dims, labels)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// T, the largest territory id (0 for an all-background atlas).
    pub fn territory_count(&self) -> u32 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    /// Sorted non-zero labels that occur in the atlas.
    pub fn labels_present(&self) -> Vec<u32> {
        let mut seen = std::collections::BTreeSet::new();
        for &l in &self.labels {
            if l != 0 {
                seen.insert(l);
            }
        }
        seen.into_iter().collect()
    }

    pub fn permute_labels(&self, mut map: impl FnMut(u32) -> u32) -> Self {
        LabelVolume {
            dims: self.dims,
            labels: self.labels.iter().map(|&l| if l == 0 { 0 } else { map(l) }).collect(),
        }
    }
}
