//! The cohort table: one row per subject, demographics plus `feature@scope` columns.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CohortTable {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// Cells that count as missing values.
fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "NA" | "NaN" | "nan" | "null" | "None")
}

/// Columns that describe inputs rather than subjects.
const BOOKKEEPING: [&str; 3] = ["subject_id", "mask_path", "atlas_path"];

impl CohortTable {
    pub fn new(headers: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.len() != headers.len()) {
            return Err(Error::Manifest(format!(
                "row has {} cells, header has {}",
                r.len(),
                headers.len()
            )));
        }
        Ok(CohortTable { headers, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Self::new(headers, rows)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.headers.iter().any(|h| h == name)
    }

    /// Raw cells of a column; missing cells are `None`.
    pub fn text(&self, name: &str) -> Result<Vec<Option<&str>>> {
        let k = self.column_index(name)?;
        Ok(self
            .rows
            .iter()
            .map(|r| (!is_missing(&r[k])).then(|| r[k].trim()))
            .collect())
    }

    /// Numeric column; `None` if any present cell fails to parse.
    pub fn numeric(&self, name: &str) -> Result<Option<Vec<Option<f64>>>> {
        let cells = self.text(name)?;
        let mut out = Vec::with_capacity(cells.len());
        for c in cells {
            match c {
                None => out.push(None),
                Some(s) => match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => out.push(Some(v)),
                    Ok(_) => out.push(None),
                    Err(_) => return Ok(None),
                },
            }
        }
        Ok(Some(out))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("cells are UTF-8"))
    }

    /// `name@scope` columns in table order.
    pub fn feature_columns(&self) -> Vec<String> {
        self.headers.iter().filter(|h| h.contains('@')).cloned().collect()
    }

    /// Every other column except subject and path bookkeeping.
    pub fn demographic_columns(&self) -> Vec<String> {
        self.headers
            .iter()
            .filter(|h| !h.contains('@') && !BOOKKEEPING.contains(&h.as_str()))
            .cloned()
            .collect()
    }

    /// Rows for which `keep(row index)` holds.
    pub fn filter(&self, mut keep: impl FnMut(usize) -> bool) -> CohortTable {
        CohortTable {
            headers: self.headers.clone(),
            rows: self
                .rows
                .iter()
                .enumerate()
                .filter(|(i, _)| keep(*i))
                .map(|(_, r)| r.clone())
                .collect(),
        }
    }
}
