//! Feature JSON/CSV writers and cohort table assembly.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::{FeatureVector, FEATURE_NAMES};
use crate::io::{DemographicValue, ManifestRow};
use crate::regional::RegionalReport;

/// Global scope label; regions use their numeric id.
pub const GLOBAL_SCOPE: &str = "global";

/// Scalar features as an ordered name → value map (`null` when undefined).
struct Scalars<'a>(&'a FeatureVector);

impl Serialize for Scalars<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(FEATURE_NAMES.len()))?;
        for (name, v) in self.0.scalars() {
            m.serialize_entry(name, &v)?;
        }
        m.end()
    }
}

#[derive(Serialize)]
struct Details<'a> {
    loop_lengths_mm: &'a [f64],
    geodesic_lengths_mm: &'a [f64],
    lacunarity_per_scale: &'a [(usize, f64)],
    #[serde(skip_serializing_if = "Option::is_none")]
    curvature_samples: Option<&'a Vec<Vec<f64>>>,
}

#[derive(Serialize)]
struct Record<'a> {
    subject_id: &'a str,
    scope: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    territory_voxels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mask_voxels: Option<usize>,
    features: Scalars<'a>,
    flags: &'a [String],
    details: Details<'a>,
}

fn record<'a>(subject_id: &'a str, scope: String, f: &'a FeatureVector) -> Record<'a> {
    Record {
        subject_id,
        scope,
        territory_voxels: None,
        mask_voxels: None,
        features: Scalars(f),
        flags: &f.flags,
        details: Details {
            loop_lengths_mm: &f.loop_lengths_mm,
            geodesic_lengths_mm: &f.geodesic_lengths_mm,
            lacunarity_per_scale: &f.lacunarity_per_scale,
            curvature_samples: f.curvature_samples.as_ref(),
        },
    }
}

/// One subject's global and regional results.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectFeatures {
    pub subject_id: String,
    pub global: FeatureVector,
    /// (region id, features), ascending id; empty without an atlas.
    pub regions: Vec<(u32, FeatureVector)>,
    region_sizes: Vec<(usize, usize)>,
}

impl SubjectFeatures {
    pub fn global_only(subject_id: impl Into<String>, global: FeatureVector) -> Self {
        SubjectFeatures {
            subject_id: subject_id.into(),
            global,
            regions: Vec::new(),
            region_sizes: Vec::new(),
        }
    }

    pub fn from_report(subject_id: impl Into<String>, report: RegionalReport) -> Self {
        let region_sizes = report.regions.iter().map(|r| (r.territory_voxels, r.mask_voxels)).collect();
        SubjectFeatures {
            subject_id: subject_id.into(),
            global: report.global,
            regions: report.regions.into_iter().map(|r| (r.region_id, r.features)).collect(),
            region_sizes,
        }
    }

    /// (scope, features) pairs: global first, then regions.
    pub fn scopes(&self) -> impl Iterator<Item = (String, &FeatureVector)> {
        std::iter::once((GLOBAL_SCOPE.to_string(), &self.global))
            .chain(self.regions.iter().map(|(id, f)| (id.to_string(), f)))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut records = vec![record(&self.subject_id, GLOBAL_SCOPE.into(), &self.global)];
        for ((id, f), (territory, voxels)) in self.regions.iter().zip(&self.region_sizes) {
            let mut r = record(&self.subject_id, id.to_string(), f);
            r.territory_voxels = Some(*territory);
            r.mask_voxels = Some(*voxels);
            records.push(r);
        }
        let mut text = serde_json::to_string_pretty(&records)?;
        text.push('\n');
        Ok(text)
    }

    /// One CSV row per scope; region_id 0 is the global row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["subject_id", "region_id"];
        header.extend(FEATURE_NAMES);
        header.push("flags");
        w.write_record(&header)?;
        let rows = std::iter::once((0, &self.global)).chain(self.regions.iter().map(|(id, f)| (*id, f)));
        for (id, f) in rows {
            let mut row = vec![self.subject_id.clone(), id.to_string()];
            row.extend(f.scalars().iter().map(|(_, v)| number(*v)));
            row.push(f.flags.join("; "));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Shortest round-tripping decimal, exponent form for very large or small
/// magnitudes; empty when undefined.
pub fn number(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Cohort CSV: subject, demographics, then `feature@scope` for every scope
/// seen in any subject (global first, regions ascending).
pub fn write_cohort_csv<W: Write>(
    demographic_columns: &[String],
    subjects: &[(&ManifestRow, &SubjectFeatures)],
    out: W,
) -> Result<()> {
    let region_ids: BTreeSet<u32> = subjects
        .iter()
        .flat_map(|(_, s)| s.regions.iter().map(|(id, _)| *id))
        .collect();
    let scopes: Vec<Option<u32>> = std::iter::once(None).chain(region_ids.into_iter().map(Some)).collect();

    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["subject_id".to_string()];
    header.extend(demographic_columns.iter().cloned());
    for scope in &scopes {
        let label = scope.map_or(GLOBAL_SCOPE.to_string(), |id| id.to_string());
        header.extend(FEATURE_NAMES.iter().map(|n| format!("{n}@{label}")));
    }
    w.write_record(&header)?;

    for (row, s) in subjects {
        let mut cells = vec![row.subject_id.clone()];
        for c in demographic_columns {
            cells.push(match row.demographics.get(c) {
                Some(DemographicValue::Numeric(v)) => v.to_string(),
                Some(DemographicValue::Categorical(v)) => v.clone(),
                None => String::new(),
            });
        }
        for scope in &scopes {
            let f = match scope {
                None => Some(&s.global),
                Some(id) => s.regions.iter().find(|(r, _)| r == id).map(|(_, f)| f),
            };
            match f {
                Some(f) => cells.extend(f.scalars().iter().map(|(_, v)| number(*v))),
                None => cells.extend(std::iter::repeat_n(String::new(), FEATURE_NAMES.len())),
            }
        }
        w.write_record(&cells)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
