//! Synthetic masks with analytically known feature values.
//!
//! Solids are swept spheres around a dense centerline polyline; a voxel is
//! foreground when its center lies inside the solid. All geometry is in mm
//! with voxel (i, j, k) centered at (i Δx, j Δy, k Δz).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::volume::{Dims, Spacing, VoxelVolume};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhantomKind {
    /// Straight tube along z.
    Tube { radius_mm: f64, length_mm: f64 },
    /// Ring in the xy-plane.
    Torus { major_radius_mm: f64, tube_radius_mm: f64 },
    /// x = a cos t, y = a sin t, z = c t for t ∈ [0, 2π·turns].
    Helix {
        a_mm: f64,
        c_mm: f64,
        turns: f64,
        tube_radius_mm: f64,
    },
    /// Trunk along z splitting into two branches in the xz-plane.
    YJunction {
        trunk_length_mm: f64,
        branch_length_mm: f64,
        angle_deg: f64,
        radius_mm: f64,
    },
    /// Two disjoint rings.
    CyclePair { major_radius_mm: f64, tube_radius_mm: f64 },
    /// Every voxel of a cube of side `side` voxels.
    FilledCube { side: usize },
    /// One-voxel-thick line of `length` voxels along x, centered in a cube of side `side`.
    Line { length: usize, side: usize },
    /// Independent Bernoulli voxels in a cube of side `side`.
    Scatter { side: usize, density: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    #[serde(flatten)]
    pub kind: PhantomKind,
    #[serde(default = "unit_spacing")]
    pub spacing: Spacing,
}

fn unit_spacing() -> Spacing {
    [1.0; 3]
}

/// One expected feature value with its accepted absolute deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub feature: String,
    pub value: f64,
    pub tolerance: f64,
}

impl Expectation {
    fn exact(feature: &str, value: f64) -> Self {
        Self::absolute(feature, value, 0.0)
    }

    fn absolute(feature: &str, value: f64, tolerance: f64) -> Self {
        Expectation {
            feature: feature.into(),
            value,
            tolerance,
        }
    }

    fn relative(feature: &str, value: f64, fraction: f64) -> Self {
        Self::absolute(feature, value, value.abs() * fraction)
    }

    /// Measured value and whether it is within tolerance.
    pub fn check(&self, features: &FeatureVector) -> (Option<f64>, bool) {
        let got = features.get(&self.feature).flatten();
        let ok = got.is_some_and(|g| (g - self.value).abs() <= self.tolerance);
        (got, ok)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: PhantomSpec,
    pub dims: Dims,
    pub expectations: Vec<Expectation>,
}

impl GroundTruth {
    /// Expectations that the measured features violate, with the measured value.
    pub fn failures(&self, features: &FeatureVector) -> Vec<(Expectation, Option<f64>)> {
        self.expectations
            .iter()
            .filter_map(|e| {
                let (got, ok) = e.check(features);
                (!ok).then(|| (e.clone(), got))
            })
            .collect()
    }
}

type P3 = [f64; 3];

/// Sphere radius swept along one or more polylines.
struct Sweep {
    polylines: Vec<Vec<P3>>,
    radius: f64,
}

/// Voxel margin around swept solids.
const MARGIN: usize = 3;

fn bad(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(bad(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn seg_dist_sq(p: P3, a: P3, b: P3) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let ap = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1], ap[2] - t * ab[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

impl Sweep {
    /// Translates the solid to sit `MARGIN` voxels inside a fitted grid and voxelizes it.
    fn voxelize(mut self, spacing: Spacing) -> Result<VoxelVolume> {
        let r = self.radius;
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in self.polylines.iter().flatten() {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k] - r);
                hi[k] = hi[k].max(p[k] + r);
            }
        }
        let mut dims = [0usize; 3];
        for k in 0..3 {
            let shift = MARGIN as f64 * spacing[k] - lo[k];
            for p in self.polylines.iter_mut().flatten() {
                p[k] += shift;
            }
            dims[k] = ((hi[k] - lo[k]) / spacing[k]).ceil() as usize + 2 * MARGIN + 1;
        }
        let mut vol = VoxelVolume::empty(dims, spacing)?;
        let r2 = r * r;
        for line in &self.polylines {
            for w in line.windows(2) {
                let (a, b) = (w[0], w[1]);
                let range = |k: usize| {
                    let lo = ((a[k].min(b[k]) - r) / spacing[k]).floor().max(0.0) as usize;
                    let hi = (((a[k].max(b[k]) + r) / spacing[k]).ceil() as usize).min(dims[k] - 1);
                    lo..=hi
                };
                for z in range(2) {
                    for y in range(1) {
                        for x in range(0) {
                            let c = [x, y, z];
                            if vol.get(c) {
                                continue;
                            }
                            let p = [x as f64 * spacing[0], y as f64 * spacing[1], z as f64 * spacing[2]];
                            if seg_dist_sq(p, a, b) <= r2 {
                                vol.set(c, true);
                            }
                        }
                    }
                }
            }
        }
        Ok(vol)
    }
}

/// Polyline points on a parametric curve, spaced at most `step` mm apart.
fn trace(f: impl Fn(f64) -> P3, t0: f64, t1: f64, length: f64, step: f64) -> Vec<P3> {
    let n = ((length / step).ceil() as usize).max(1);
    (0..=n).map(|i| f(t0 + (t1 - t0) * i as f64 / n as f64)).collect()
}

fn sampling_step(spacing: Spacing) -> f64 {
    spacing.iter().copied().fold(f64::INFINITY, f64::min) / 8.0
}

fn ring(center: P3, radius: f64, step: f64) -> Vec<P3> {
    trace(
        |t| [center[0] + radius * t.cos(), center[1] + radius * t.sin(), center[2]],
        0.0,
        2.0 * PI,
        2.0 * PI * radius,
        step,
    )
}

fn cube_check(side: usize) -> Result<()> {
    if side == 0 {
        return Err(bad("cube side must be at least 1 voxel"));
    }
    Ok(())
}

/// Builds the mask and its analytic ground truth.
pub fn generate(spec: &PhantomSpec) -> Result<(VoxelVolume, GroundTruth)> {
    let spacing = spec.spacing;
    for (k, s) in spacing.iter().enumerate() {
        positive(&format!("spacing[{k}]"), *s)?;
    }
    let step = sampling_step(spacing);
    let mut exp = Vec::new();
    let vol = match spec.kind {
        PhantomKind::Tube { radius_mm, length_mm } => {
            positive("radius_mm", radius_mm)?;
            positive("length_mm", length_mm)?;
            exp.push(Expectation::relative("total_length_mm", length_mm, 0.05));
            exp.push(Expectation::exact("bifurcation_count", 0.0));
            exp.push(Expectation::exact("loop_count", 0.0));
            exp.push(Expectation::exact("component_count", 1.0));
            exp.push(Expectation::absolute("mean_curvature_per_mm", 0.0, 0.01));
            exp.push(Expectation::absolute("arc_over_chord", 1.0, 1e-3));
            Sweep {
                polylines: vec![vec![[0.0; 3], [0.0, 0.0, length_mm]]],
                radius: radius_mm,
            }
            .voxelize(spacing)?
        }
        PhantomKind::Torus {
            major_radius_mm,
            tube_radius_mm,
        } => {
            positive("major_radius_mm", major_radius_mm)?;
            positive("tube_radius_mm", tube_radius_mm)?;
            if tube_radius_mm >= major_radius_mm {
                return Err(bad("torus tube radius must be below the major radius"));
            }
            let circ = 2.0 * PI * major_radius_mm;
            exp.push(Expectation::exact("loop_count", 1.0));
            exp.push(Expectation::exact("component_count", 1.0));
            exp.push(Expectation::relative("mean_loop_length_mm", circ, 0.10));
            exp.push(Expectation::relative("mean_curvature_per_mm", 1.0 / major_radius_mm, 0.15));
            Sweep {
                polylines: vec![ring([0.0; 3], major_radius_mm, step)],
                radius: tube_radius_mm,
            }
            .voxelize(spacing)?
        }
        PhantomKind::Helix {
            a_mm,
            c_mm,
            turns,
            tube_radius_mm,
        } => {
            positive("a_mm", a_mm)?;
            positive("c_mm", c_mm)?;
            positive("turns", turns)?;
            positive("tube_radius_mm", tube_radius_mm)?;
            if 2.0 * PI * c_mm <= 2.0 * tube_radius_mm + 2.0 * spacing[2] {
                return Err(bad("helix pitch too small: neighboring turns would touch"));
            }
            if tube_radius_mm >= a_mm {
                return Err(bad("helix tube radius must be below the helix radius"));
            }
            let t1 = 2.0 * PI * turns;
            let speed = (a_mm * a_mm + c_mm * c_mm).sqrt();
            exp.push(Expectation::exact("component_count", 1.0));
            exp.push(Expectation::exact("loop_count", 0.0));
            exp.push(Expectation::relative("mean_curvature_per_mm", a_mm / (speed * speed), 0.15));
            let end = [a_mm * t1.cos(), a_mm * t1.sin(), c_mm * t1];
            let chord = ((end[0] - a_mm).powi(2) + end[1].powi(2) + end[2].powi(2)).sqrt();
            exp.push(Expectation::relative("arc_over_chord", speed * t1 / chord, 0.15));
            Sweep {
                polylines: vec![trace(|t| [a_mm * t.cos(), a_mm * t.sin(), c_mm * t], 0.0, t1, speed * t1, step)],
                radius: tube_radius_mm,
            }
            .voxelize(spacing)?
        }
        PhantomKind::YJunction {
            trunk_length_mm,
            branch_length_mm,
            angle_deg,
            radius_mm,
        } => {
            positive("trunk_length_mm", trunk_length_mm)?;
            positive("branch_length_mm", branch_length_mm)?;
            positive("radius_mm", radius_mm)?;
            if !(10.0..=170.0).contains(&angle_deg) {
                return Err(bad("junction angle must lie in [10, 170] degrees"));
            }
            let half = angle_deg.to_radians() / 2.0;
            let fork = [0.0, 0.0, trunk_length_mm];
            let arm = |s: f64| {
                [
                    s * branch_length_mm * half.sin(),
                    0.0,
                    trunk_length_mm + branch_length_mm * half.cos(),
                ]
            };
            exp.push(Expectation::absolute("bifurcation_count", 2.0, 1.0));
            exp.push(Expectation::exact("component_count", 1.0));
            exp.push(Expectation::exact("loop_count", 0.0));
            exp.push(Expectation::relative(
                "total_length_mm",
                trunk_length_mm + 2.0 * branch_length_mm,
                0.10,
            ));
            Sweep {
                polylines: vec![vec![[0.0; 3], fork], vec![fork, arm(1.0)], vec![fork, arm(-1.0)]],
                radius: radius_mm,
            }
            .voxelize(spacing)?
        }
        PhantomKind::CyclePair {
            major_radius_mm,
            tube_radius_mm,
        } => {
            positive("major_radius_mm", major_radius_mm)?;
            positive("tube_radius_mm", tube_radius_mm)?;
            if tube_radius_mm >= major_radius_mm {
                return Err(bad("ring tube radius must be below the major radius"));
            }
            let gap = 2.0 * (major_radius_mm + tube_radius_mm) + 4.0 * spacing[0];
            exp.push(Expectation::exact("loop_count", 2.0));
            exp.push(Expectation::exact("component_count", 2.0));
            exp.push(Expectation::relative("mean_loop_length_mm", 2.0 * PI * major_radius_mm, 0.10));
            Sweep {
                polylines: vec![ring([0.0; 3], major_radius_mm, step), ring([gap, 0.0, 0.0], major_radius_mm, step)],
                radius: tube_radius_mm,
            }
            .voxelize(spacing)?
        }
        PhantomKind::FilledCube { side } => {
            cube_check(side)?;
            if side >= 8 {
                exp.push(Expectation::absolute("fractal_dimension", 3.0, 0.15));
                exp.push(Expectation::exact("lacunarity", 1.0));
            }
            exp.push(Expectation::exact("volume_mm3", (side * side * side) as f64 * spacing.iter().product::<f64>()));
            VoxelVolume::from_fn([side; 3], spacing, |_| true)?
        }
        PhantomKind::Line { length, side } => {
            cube_check(side)?;
            if length == 0 || length > side {
                return Err(bad("line length must be within 1..=side"));
            }
            if side >= 8 {
                exp.push(Expectation::absolute("fractal_dimension", 1.0, 0.15));
            }
            exp.push(Expectation::exact("component_count", 1.0));
            exp.push(Expectation::exact("bifurcation_count", 0.0));
            let m = side / 2;
            VoxelVolume::from_fn([side; 3], spacing, |[x, y, z]| x < length && y == m && z == m)?
        }
        PhantomKind::Scatter { side, density, seed } => {
            cube_check(side)?;
            if !(density > 0.0 && density <= 1.0) {
                return Err(bad("scatter density must lie in (0, 1]"));
            }
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let vol = VoxelVolume::from_fn([side; 3], spacing, |_| rng.gen_bool(density))?;
            exp.push(Expectation::exact("volume_mm3", vol.count() as f64 * vol.voxel_volume_mm3()));
            vol
        }
    };
    if vol.count() == 0 {
        return Err(bad("phantom parameters produce an empty mask"));
    }
    let dims = vol.dims();
    Ok((
        vol,
        GroundTruth {
            spec: spec.clone(),
            dims,
            expectations: exp,
        },
    ))
}

impl PhantomSpec {
    pub fn new(kind: PhantomKind) -> Self {
        PhantomSpec {
            kind,
            spacing: unit_spacing(),
        }
    }

    pub fn with_spacing(mut self, spacing: Spacing) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PhantomKind::Tube { .. } => "tube",
            PhantomKind::Torus { .. } => "torus",
            PhantomKind::Helix { .. } => "helix",
            PhantomKind::YJunction { .. } => "y_junction",
            PhantomKind::CyclePair { .. } => "cycle_pair",
            PhantomKind::FilledCube { .. } => "filled_cube",
            PhantomKind::Line { .. } => "line",
            PhantomKind::Scatter { .. } => "scatter",
        }
    }

    /// Reference parameters for each kind.
    pub fn standard(kind: &str) -> Option<Self> {
        let kind = match kind {
            "tube" => PhantomKind::Tube {
                radius_mm: 2.0,
                length_mm: 100.0,
            },
            "torus" => PhantomKind::Torus {
                major_radius_mm: 20.0,
                tube_radius_mm: 2.0,
            },
            "helix" => PhantomKind::Helix {
                a_mm: 10.0,
                c_mm: 5.0,
                turns: 2.0,
                tube_radius_mm: 2.0,
            },
            "y_junction" => PhantomKind::YJunction {
                trunk_length_mm: 40.0,
                branch_length_mm: 30.0,
                angle_deg: 60.0,
                radius_mm: 2.0,
            },
            "cycle_pair" => PhantomKind::CyclePair {
                major_radius_mm: 12.0,
                tube_radius_mm: 2.0,
            },
            "filled_cube" => PhantomKind::FilledCube { side: 64 },
            "line" => PhantomKind::Line { length: 64, side: 64 },
            "scatter" => PhantomKind::Scatter {
                side: 32,
                density: 0.05,
                seed: 0,
            },
            _ => return None,
        };
        Some(PhantomSpec::new(kind))
    }

    pub const STANDARD_KINDS: [&'static str; 8] = [
        "tube",
        "torus",
        "helix",
        "y_junction",
        "cycle_pair",
        "filled_cube",
        "line",
        "scatter",
    ];
}
