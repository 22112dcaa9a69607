//! Cohort manifest CSV: one row per subject with mask/atlas paths and demographics.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DemographicValue {
    Numeric(f64),
    Categorical(String),
}

impl fmt::Display for DemographicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DemographicValue::Numeric(v) => write!(f, "{v}"),
            DemographicValue::Categorical(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub subject_id: String,
    pub mask_path: PathBuf,
    pub atlas_path: Option<PathBuf>,
    /// Missing cells are absent from the map.
    pub demographics: BTreeMap<String, DemographicValue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortManifest {
    /// Demographic column names in file order, followed by derived columns.
    pub demographic_columns: Vec<String>,
    pub rows: Vec<ManifestRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BmiCategory {
    Underweight,
    Normal,
    Overweight,
    Obese,
}

impl BmiCategory {
    /// Clinical thresholds; a value on a boundary belongs to the higher category.
    pub fn from_bmi(bmi: f64) -> Self {
        if bmi < 18.5 {
            BmiCategory::Underweight
        } else if bmi < 25.0 {
            BmiCategory::Normal
        } else if bmi < 30.0 {
            BmiCategory::Overweight
        } else {
            BmiCategory::Obese
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BmiCategory::Underweight => "underweight",
            BmiCategory::Normal => "normal",
            BmiCategory::Overweight => "overweight",
            BmiCategory::Obese => "obese",
        }
    }
}

/// weight (kg) / height² (m). Heights above 3 are taken to be centimeters.
pub fn bmi(height: f64, weight_kg: f64) -> Option<f64> {
    let h = if height > 3.0 { height / 100.0 } else { height };
    (h > 0.0 && weight_kg > 0.0).then(|| weight_kg / (h * h))
}

const SUBJECT: &str = "subject_id";
const MASK: &str = "mask_path";
const ATLAS: &str = "atlas_path";

pub fn load_manifest(path: impl AsRef<Path>) -> Result<CohortManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_manifest(&text, base)
}

/// Parses manifest text; relative paths resolve against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<CohortManifest> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let subject_col = col(SUBJECT).ok_or_else(|| Error::Manifest(format!("missing required column `{SUBJECT}`")))?;
    let mask_col = col(MASK).ok_or_else(|| Error::Manifest(format!("missing required column `{MASK}`")))?;
    let atlas_col = col(ATLAS);

    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;

    let demo_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != subject_col && *i != mask_col && Some(*i) != atlas_col)
        .map(|(i, h)| (i, h.clone()))
        .collect();

    let numeric: Vec<bool> = demo_cols
        .iter()
        .map(|(i, _)| {
            records
                .iter()
                .filter_map(|r| r.get(*i))
                .filter(|s| !s.is_empty())
                .all(|s| s.parse::<f64>().is_ok())
        })
        .collect();

    let resolve = |p: &str| {
        let p = PathBuf::from(p);
        if p.is_absolute() {
            p
        } else {
            base.join(p)
        }
    };

    let mut seen = HashSet::new();
    let mut rows = Vec::with_capacity(records.len());
    for (line, rec) in records.iter().enumerate() {
        let subject_id = rec.get(subject_col).unwrap_or("").to_string();
        if subject_id.is_empty() {
            return Err(Error::Manifest(format!("row {}: empty subject_id", line + 2)));
        }
        if !seen.insert(subject_id.clone()) {
            return Err(Error::Manifest(format!("duplicate subject_id `{subject_id}`")));
        }
        let mask_path = resolve(rec.get(mask_col).unwrap_or(""));
        if !mask_path.exists() {
            return Err(Error::Manifest(format!(
                "subject `{subject_id}`: mask not found: {}",
                mask_path.display()
            )));
        }
        let atlas_path = match atlas_col.and_then(|c| rec.get(c)).filter(|s| !s.is_empty()) {
            Some(p) => {
                let p = resolve(p);
                if !p.exists() {
                    return Err(Error::Manifest(format!(
                        "subject `{subject_id}`: atlas not found: {}",
                        p.display()
                    )));
                }
                Some(p)
            }
            None => None,
        };

        let mut demographics = BTreeMap::new();
        for ((i, name), &is_num) in demo_cols.iter().zip(&numeric) {
            let Some(cell) = rec.get(*i).filter(|s| !s.is_empty()) else {
                continue;
            };
            let value = if is_num {
                DemographicValue::Numeric(cell.parse().unwrap())
            } else {
                DemographicValue::Categorical(cell.to_string())
            };
            demographics.insert(name.clone(), value);
        }
        rows.push(ManifestRow {
            subject_id,
            mask_path,
            atlas_path,
            demographics,
        });
    }

    let mut demographic_columns: Vec<String> = demo_cols.into_iter().map(|(_, h)| h).collect();
    let has = |cols: &[String], c: &str| cols.iter().any(|h| h == c);
    if has(&demographic_columns, "height") && has(&demographic_columns, "weight") {
        for name in ["bmi", "bmi_category"] {
            if !has(&demographic_columns, name) {
                demographic_columns.push(name.to_string());
            }
        }
        for row in &mut rows {
            let num = |k: &str| match row.demographics.get(k) {
                Some(DemographicValue::Numeric(v)) => Some(*v),
                _ => None,
            };
            if let (Some(h), Some(w)) = (num("height"), num("weight")) {
                if let Some(b) = bmi(h, w) {
                    row.demographics.insert("bmi".into(), DemographicValue::Numeric(b));
                    row.demographics.insert(
                        "bmi_category".into(),
                        DemographicValue::Categorical(BmiCategory::from_bmi(b).as_str().into()),
                    );
                }
            }
        }
    }

    Ok(CohortManifest {
        demographic_columns,
        rows,
    })
}
