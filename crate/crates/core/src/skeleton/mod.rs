//! Topology-preserving thinning to a one-voxel-thick skeleton, plus
//! distance-transform radius estimation along it.

pub mod distance;
pub mod topology;

pub use distance::{estimate_radii, squared_edt, RadiusField};

use crate::volume::{Coord, Dims, Spacing, VoxelVolume};

#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    voxels: Vec<Coord>,
    source_dims: Dims,
    source_spacing: Spacing,
}

impl Skeleton {
    /// Voxels are sorted lexicographically by (x, y, z) and deduplicated.
    pub fn from_voxels(mut voxels: Vec<Coord>, dims: Dims, spacing: Spacing) -> Self {
        voxels.sort_unstable();
        voxels.dedup();
        Skeleton {
            voxels,
            source_dims: dims,
            source_spacing: spacing,
        }
    }

    pub fn voxels(&self) -> &[Coord] {
        &self.voxels
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    pub fn dims(&self) -> Dims {
        self.source_dims
    }

    pub fn spacing(&self) -> Spacing {
        self.source_spacing
    }

    pub fn to_volume(&self) -> VoxelVolume {
        let mut v = VoxelVolume::empty(self.source_dims, self.source_spacing)
            .expect("skeleton grid was validated by its source volume");
        for &c in &self.voxels {
            v.set(c, true);
        }
        v
    }
}

/// Border directions visited by the six subiterations.
const DIRECTIONS: [[i64; 3]; 6] = [
    [0, -1, 0],
    [0, 1, 0],
    [1, 0, 0],
    [-1, 0, 0],
    [0, 0, 1],
    [0, 0, -1],
];

/// Zero-padded copy of the mask so that neighborhood reads never leave the buffer.
struct PaddedGrid {
    data: Vec<u8>,
    dims: [usize; 3],
    offsets: [isize; topology::NEIGHBOR_COUNT],
}

impl PaddedGrid {
    fn new(mask: &VoxelVolume) -> Self {
        let [nx, ny, nz] = mask.dims();
        let dims = [nx + 2, ny + 2, nz + 2];
        let mut data = vec![0u8; dims[0] * dims[1] * dims[2]];
        for c in mask.foreground() {
            data[(c[0] + 1) + dims[0] * ((c[1] + 1) + dims[1] * (c[2] + 1))] = 1;
        }
        let mut offsets = [0isize; topology::NEIGHBOR_COUNT];
        for (o, d) in offsets.iter_mut().zip(topology::TABLES.offsets.iter()) {
            *o = Self::linear_offset(dims, *d);
        }
        PaddedGrid { data, dims, offsets }
    }

    fn linear_offset(dims: [usize; 3], d: [i64; 3]) -> isize {
        d[0] as isize + dims[0] as isize * (d[1] as isize + dims[1] as isize * d[2] as isize)
    }

    #[inline]
    fn neighborhood(&self, p: usize) -> u32 {
        let mut nb = 0u32;
        for (k, &o) in self.offsets.iter().enumerate() {
            if self.data[(p as isize + o) as usize] != 0 {
                nb |= 1 << k;
            }
        }
        nb
    }

    fn unpadded(&self, p: usize) -> Coord {
        let x = p % self.dims[0];
        let r = p / self.dims[0];
        [x - 1, r % self.dims[1] - 1, r / self.dims[1] - 1]
    }
}

/// Directional parallel thinning with sequential re-checking.
///
/// Each subiteration collects border voxels (background neighbor in the
/// current direction) that are simple and not curve end-points, then deletes
/// them one by one, re-testing simplicity against the already-updated grid.
/// Stops after a full sweep of all six directions removes nothing. Spacing is
/// ignored: topology is metric-free.
pub fn skeletonize(mask: &VoxelVolume) -> Skeleton {
    let mut grid = PaddedGrid::new(mask);
    let mut alive: Vec<usize> = (0..grid.data.len()).filter(|&p| grid.data[p] != 0).collect();
    let mut candidates = Vec::new();
    loop {
        let mut changed = false;
        for dir in DIRECTIONS {
            let step = PaddedGrid::linear_offset(grid.dims, dir);
            candidates.clear();
            for &p in &alive {
                if grid.data[p] == 0 || grid.data[(p as isize + step) as usize] != 0 {
                    continue;
                }
                let nb = grid.neighborhood(p);
                if nb.count_ones() == 1 || !topology::is_simple(nb) {
                    continue;
                }
                candidates.push(p);
            }
            for &p in &candidates {
                let nb = grid.neighborhood(p);
                if nb.count_ones() != 1 && topology::is_simple(nb) {
                    grid.data[p] = 0;
                    changed = true;
                }
            }
            alive.retain(|&p| grid.data[p] != 0);
        }
        if !changed {
            break;
        }
    }
    let voxels = alive.into_iter().map(|p| grid.unpadded(p)).collect();
    Skeleton::from_voxels(voxels, mask.dims(), mask.spacing())
}
