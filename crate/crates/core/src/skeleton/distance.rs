//! Exact anisotropic Euclidean distance transform (separable lower-envelope method).
//!
//! Everything outside the volume counts as background.

use crate::error::{Error, Result};
use crate::skeleton::Skeleton;
use crate::volume::VoxelVolume;

/// Per skeleton voxel radius in mm, aligned with [`Skeleton::voxels`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusField {
    pub radii_mm: Vec<f64>,
}

impl RadiusField {
    pub fn diameter_mm(&self, i: usize) -> f64 {
        2.0 * self.radii_mm[i]
    }
}

/// Squared distance along one line, with implicit zeros just past each end.
/// `f` holds squared distances from previous passes (`INFINITY` for unseen).
fn envelope_1d(f: &[f64], w2: f64, out: &mut [f64], v: &mut Vec<f64>, z: &mut Vec<f64>, fv: &mut Vec<f64>) {
    let n = f.len();
    v.clear();
    z.clear();
    fv.clear();
    let positions = std::iter::once((-1.0, 0.0))
        .chain(f.iter().enumerate().map(|(i, &x)| (i as f64, x)))
        .chain(std::iter::once((n as f64, 0.0)));
    for (q, fq) in positions {
        if !fq.is_finite() {
            continue;
        }
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    fv.push(fq);
                    z.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let fp = *fv.last().unwrap();
                    let s = ((fq + w2 * q * q) - (fp + w2 * p * p)) / (2.0 * w2 * (q - p));
                    if s <= *z.last().unwrap() {
                        v.pop();
                        fv.pop();
                        z.pop();
                    } else {
                        v.push(q);
                        fv.push(fq);
                        z.push(s);
                        break;
                    }
                }
            }
        }
    }
    let mut k = 0;
    for (i, o) in out.iter_mut().enumerate() {
        let q = i as f64;
        while k + 1 < z.len() && z[k + 1] < q {
            k += 1;
        }
        let d = q - v[k];
        *o = fv[k] + w2 * d * d;
    }
}

/// Squared distance (mm²) from every voxel center to the nearest background voxel center.
pub fn squared_edt(mask: &VoxelVolume) -> Vec<f64> {
    let [nx, ny, nz] = mask.dims();
    let sp = mask.spacing();
    let mut g: Vec<f64> = mask
        .data()
        .iter()
        .map(|&b| if b == 0 { 0.0 } else { f64::INFINITY })
        .collect();

    let (mut v, mut z, mut fv) = (Vec::new(), Vec::new(), Vec::new());
    let mut line = Vec::new();
    let mut out = Vec::new();
    let lens = [nx, ny, nz];
    let strides = [1, nx, nx * ny];
    for axis in 0..3 {
        let n = lens[axis];
        let stride = strides[axis];
        let w2 = sp[axis] * sp[axis];
        line.resize(n, 0.0);
        out.resize(n, 0.0);
        let (a, b) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for j in 0..lens[b] {
            for i in 0..lens[a] {
                let base = i * strides[a] + j * strides[b];
                for k in 0..n {
                    line[k] = g[base + k * stride];
                }
                envelope_1d(&line, w2, &mut out, &mut v, &mut z, &mut fv);
                for k in 0..n {
                    g[base + k * stride] = out[k];
                }
            }
        }
    }
    g
}

/// Radius at each skeleton voxel: distance to the nearest background voxel center.
pub fn estimate_radii(mask: &VoxelVolume, skeleton: &Skeleton) -> Result<RadiusField> {
    if let Some(c) = skeleton.voxels().iter().find(|c| {
        c.iter().zip(mask.dims()).any(|(&v, d)| v >= d) || !mask.get(**c)
    }) {
        return Err(Error::Contract(format!("skeleton voxel {c:?} is not foreground in the mask")));
    }
    if skeleton.is_empty() {
        return Ok(RadiusField { radii_mm: vec![] });
    }
    let d2 = squared_edt(mask);
    Ok(RadiusField {
        radii_mm: skeleton.voxels().iter().map(|&c| d2[mask.index(c)].sqrt()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(mask: &VoxelVolume, c: [usize; 3]) -> f64 {
        let sp = mask.spacing();
        let d = mask.dims();
        let mut best = f64::INFINITY;
        for z in -1..=d[2] as i64 {
            for y in -1..=d[1] as i64 {
                for x in -1..=d[0] as i64 {
                    if mask.get_signed([x, y, z]) {
                        continue;
                    }
                    let dx = (x - c[0] as i64) as f64 * sp[0];
                    let dy = (y - c[1] as i64) as f64 * sp[1];
                    let dz = (z - c[2] as i64) as f64 * sp[2];
                    best = best.min((dx * dx + dy * dy + dz * dz).sqrt());
                }
            }
        }
        best
    }

    fn cube(spacing: [f64; 3]) -> VoxelVolume {
        VoxelVolume::from_fn([9, 9, 9], spacing, |c| c.iter().all(|&v| (2..7).contains(&v))).unwrap()
    }

    #[test]
    fn cube_center_isotropic() {
        let m = cube([1.0; 3]);
        let d2 = squared_edt(&m);
        assert_eq!(d2[m.index([4, 4, 4])].sqrt(), 3.0);
        assert_eq!(brute(&m, [4, 4, 4]), 3.0);
    }

    #[test]
    fn cube_center_anisotropic() {
        let m = cube([1.0, 1.0, 2.0]);
        assert_eq!(squared_edt(&m)[m.index([4, 4, 4])].sqrt(), 3.0);
    }

    #[test]
    fn isolated_voxel() {
        let m = VoxelVolume::from_fn([3, 3, 3], [1.0; 3], |c| c == [1, 1, 1]).unwrap();
        assert_eq!(squared_edt(&m)[m.index([1, 1, 1])].sqrt(), 1.0);
        // boundary counts as background
        let edge = VoxelVolume::from_fn([1, 1, 1], [0.7, 2.0, 3.0], |_| true).unwrap();
        assert_eq!(squared_edt(&edge)[0].sqrt(), 0.7);
    }

    #[test]
    fn matches_brute_force_on_random_masks() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let dims = [rng.gen_range(1..8), rng.gen_range(1..8), rng.gen_range(1..8)];
            let sp = [rng.gen_range(0.3..2.0), rng.gen_range(0.3..2.0), rng.gen_range(0.3..2.0)];
            let m = VoxelVolume::from_fn(dims, sp, |_| rng.gen_bool(0.7)).unwrap();
            let d2 = squared_edt(&m);
            for c in m.foreground() {
                let b = brute(&m, c);
                assert!((d2[m.index(c)].sqrt() - b).abs() < 1e-9, "{c:?}");
            }
        }
    }

    #[test]
    fn rejects_background_skeleton_voxel() {
        let m = VoxelVolume::from_fn([3, 3, 3], [1.0; 3], |c| c == [1, 1, 1]).unwrap();
        let s = Skeleton::from_voxels(vec![[0, 0, 0]], m.dims(), m.spacing());
        assert!(matches!(estimate_radii(&m, &s), Err(Error::Contract(_))));
    }
}
