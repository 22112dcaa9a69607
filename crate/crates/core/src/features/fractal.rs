//! Box counting on an origin-anchored dyadic grid: fractal dimension and
//! non-overlapping-box lacunarity.

use crate::error::{Error, Result};
use crate::volume::VoxelVolume;

/// Inclusive bounds on box side length (voxels); `max_box: None` uses the
/// largest power of two not exceeding half the smallest dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ScaleBounds {
    pub min_box: usize,
    pub max_box: Option<usize>,
}

impl Default for ScaleBounds {
    fn default() -> Self {
        ScaleBounds {
            min_box: 1,
            max_box: None,
        }
    }
}

/// Box sizes ε = 1, 2, 4, … up to 2^⌊log2(min dim / 2)⌋, restricted to `bounds`.
pub fn scale_set(dims: [usize; 3], bounds: ScaleBounds) -> Vec<usize> {
    let min_dim = dims.iter().copied().min().unwrap_or(0);
    let mut out = Vec::new();
    let mut eps = 1usize;
    while eps * 2 <= min_dim {
        if eps >= bounds.min_box && bounds.max_box.is_none_or(|m| eps <= m) {
            out.push(eps);
        }
        eps *= 2;
    }
    out
}

/// Foreground counts per box at one scale.
struct Level {
    eps: usize,
    dims: [usize; 3],
    counts: Vec<u32>,
}

impl Level {
    fn from_mask(mask: &VoxelVolume) -> Self {
        Level {
            eps: 1,
            dims: mask.dims(),
            counts: mask.data().iter().map(|&v| v as u32).collect(),
        }
    }

    fn coarsen(&self) -> Self {
        let [nx, ny, nz] = self.dims;
        let dims = [nx.div_ceil(2), ny.div_ceil(2), nz.div_ceil(2)];
        let mut counts = vec![0u32; dims[0] * dims[1] * dims[2]];
        for z in 0..nz {
            for y in 0..ny {
                let row = (z * ny + y) * nx;
                let out_row = ((z / 2) * dims[1] + y / 2) * dims[0];
                for x in 0..nx {
                    counts[out_row + x / 2] += self.counts[row + x];
                }
            }
        }
        Level {
            eps: self.eps * 2,
            dims,
            counts,
        }
    }

    fn occupied(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Counts of boxes lying entirely inside the volume.
    fn complete_boxes(&self, source: [usize; 3]) -> impl Iterator<Item = u32> + '_ {
        let full = source.map(|n| n / self.eps);
        let d = self.dims;
        (0..full[2]).flat_map(move |z| {
            (0..full[1]).flat_map(move |y| (0..full[0]).map(move |x| self.counts[(z * d[1] + y) * d[0] + x]))
        })
    }
}

fn pyramid(mask: &VoxelVolume, scales: &[usize]) -> Vec<Level> {
    let Some(&top) = scales.last() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut level = Level::from_mask(mask);
    loop {
        let next = (level.eps < top).then(|| level.coarsen());
        if scales.contains(&level.eps) {
            out.push(level);
        }
        match next {
            Some(n) => level = n,
            None => break,
        }
    }
    out
}

/// (ε, N(ε)) for every scale in the set.
pub fn box_counts(mask: &VoxelVolume, bounds: ScaleBounds) -> Vec<(usize, usize)> {
    let scales = scale_set(mask.dims(), bounds);
    pyramid(mask, &scales).iter().map(|l| (l.eps, l.occupied())).collect()
}

fn check_nonempty(mask: &VoxelVolume) -> Result<()> {
    if mask.count() == 0 {
        return Err(Error::Undefined("empty mask".into()));
    }
    Ok(())
}

/// Least-squares slope of ln N(ε) against ln(1/ε).
pub fn fractal_dimension(mask: &VoxelVolume, bounds: ScaleBounds) -> Result<f64> {
    check_nonempty(mask)?;
    let counts = box_counts(mask, bounds);
    if counts.len() < 3 {
        return Err(Error::Undefined(format!(
            "volume {:?} admits {} box scales, need at least 3",
            mask.dims(),
            counts.len()
        )));
    }
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .map(|&(eps, n)| (-(eps as f64).ln(), (n as f64).ln()))
        .collect();
    Ok(ls_slope(&pts))
}

fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    // Exact zero for constant counts instead of a -0.0 or rounding residue.
    if pts.iter().all(|p| p.1 == pts[0].1) {
        0.0
    } else {
        slope
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Lacunarity {
    pub mean: f64,
    /// (ε, Λ(ε)) for every scale with at least eight complete boxes and
    /// non-zero mean occupancy.
    pub per_scale: Vec<(usize, f64)>,
}

pub const MIN_BOXES: usize = 8;

/// Var(n)/Mean(n)² + 1 over complete non-overlapping boxes, averaged across scales.
pub fn lacunarity(mask: &VoxelVolume, bounds: ScaleBounds) -> Result<Lacunarity> {
    check_nonempty(mask)?;
    let dims = mask.dims();
    let scales: Vec<usize> = scale_set(dims, bounds)
        .into_iter()
        .filter(|&e| dims.iter().map(|&n| n / e).product::<usize>() >= MIN_BOXES)
        .collect();
    let mut per_scale = Vec::new();
    for level in pyramid(mask, &scales) {
        let mut count = 0usize;
        let mut sum = 0.0;
        for c in level.complete_boxes(dims) {
            count += 1;
            sum += c as f64;
        }
        let mean = sum / count as f64;
        if mean == 0.0 {
            continue;
        }
        let var = level
            .complete_boxes(dims)
            .map(|c| {
                let d = c as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / count as f64;
        per_scale.push((level.eps, var / (mean * mean) + 1.0));
    }
    if per_scale.is_empty() {
        return Err(Error::Undefined(
            "no box scale with enough occupied complete boxes".into(),
        ));
    }
    let mean = per_scale.iter().map(|s| s.1).sum::<f64>() / per_scale.len() as f64;
    Ok(Lacunarity { mean, per_scale })
}
