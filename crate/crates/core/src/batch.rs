//! Cohort runs: every manifest subject through the pipeline, merged in manifest order.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{load_atlas, load_mask, CohortManifest, ManifestRow};
use crate::output::{write_cohort_csv, write_text, SubjectFeatures};
use crate::pipeline::{extract_features, RunConfig};
use crate::regional::regional_features;

pub const JOBS_ENV: &str = "CARAVEL_JOBS";
pub const CONFIG_SIDECAR: &str = "run_config.json";
pub const ERRORS_SIDECAR: &str = "errors.csv";
pub const COHORT_TABLE: &str = "cohort.csv";

/// Worker count: the explicit setting, else `CARAVEL_JOBS`, else all cores.
pub fn resolve_jobs(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(JOBS_ENV).ok()?.trim().parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Runs `f` on a dedicated pool of `jobs` threads.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Features of one mask, regional as well when an atlas is given.
pub fn process_subject(
    subject_id: &str,
    mask_path: &Path,
    atlas_path: Option<&Path>,
    config: &RunConfig,
) -> Result<SubjectFeatures> {
    let mask = load_mask(mask_path)?;
    match atlas_path {
        Some(a) => {
            let atlas = load_atlas(a, mask.dims())?;
            Ok(SubjectFeatures::from_report(subject_id, regional_features(&mask, &atlas, config)?))
        }
        None => Ok(SubjectFeatures::global_only(subject_id, extract_features(&mask, config)?)),
    }
}

#[derive(Debug)]
pub struct CohortRun {
    pub manifest: CohortManifest,
    /// Manifest order; `Err` holds the failure message.
    pub outcomes: Vec<std::result::Result<SubjectFeatures, String>>,
}

impl CohortRun {
    pub fn succeeded(&self) -> Vec<(&ManifestRow, &SubjectFeatures)> {
        self.manifest
            .rows
            .iter()
            .zip(&self.outcomes)
            .filter_map(|(r, o)| o.as_ref().ok().map(|s| (r, s)))
            .collect()
    }

    pub fn failures(&self) -> Vec<(&str, &str)> {
        self.manifest
            .rows
            .iter()
            .zip(&self.outcomes)
            .filter_map(|(r, o)| o.as_ref().err().map(|e| (r.subject_id.as_str(), e.as_str())))
            .collect()
    }

    pub fn cohort_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        write_cohort_csv(&self.manifest.demographic_columns, &self.succeeded(), &mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    pub fn errors_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["subject_id", "error"])?;
        for (id, e) in self.failures() {
            w.write_record([id, e])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Processes every subject on `jobs` threads. Subject failures are recorded,
/// not propagated; only an empty manifest is an error.
pub fn run_cohort(manifest: CohortManifest, config: &RunConfig, jobs: usize) -> Result<CohortRun> {
    if manifest.rows.is_empty() {
        return Err(Error::Manifest("manifest has no subjects".into()));
    }
    let outcomes = with_jobs(jobs, || {
        manifest
            .rows
            .par_iter()
            .map(|row| {
                process_subject(&row.subject_id, &row.mask_path, row.atlas_path.as_deref(), config)
                    .map_err(|e| e.to_string())
            })
            .collect()
    })?;
    Ok(CohortRun { manifest, outcomes })
}

/// Files written by [`write_cohort_outputs`].
#[derive(Debug, Clone)]
pub struct CohortFiles {
    pub table: PathBuf,
    pub errors: Option<PathBuf>,
    pub config: PathBuf,
}

/// Writes the cohort table, the config sidecar and, if anything failed, the errors sidecar.
pub fn write_cohort_outputs(run: &CohortRun, config: &RunConfig, dir: &Path) -> Result<CohortFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let table = dir.join(COHORT_TABLE);
    write_text(&table, &run.cohort_csv()?)?;
    let config_path = dir.join(CONFIG_SIDECAR);
    write_config(&config_path, config)?;
    let errors_path = dir.join(ERRORS_SIDECAR);
    let errors = if run.failures().is_empty() {
        if errors_path.exists() {
            std::fs::remove_file(&errors_path).map_err(|e| Error::io(&errors_path, e))?;
        }
        None
    } else {
        write_text(&errors_path, &run.errors_csv()?)?;
        Some(errors_path)
    };
    Ok(CohortFiles {
        table,
        errors,
        config: config_path,
    })
}

pub fn write_config(path: &Path, config: &RunConfig) -> Result<()> {
    let mut text = serde_json::to_string_pretty(config)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}
