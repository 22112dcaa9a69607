use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use caravel_core::batch::{self, resolve_jobs, run_cohort, with_jobs, write_cohort_outputs, write_config, CONFIG_SIDECAR};
use caravel_core::io::{load_manifest, save_cvol};
use caravel_core::output::write_text;
use caravel_core::phantom::{generate, PhantomSpec};
use caravel_core::pipeline::RunConfig;
use caravel_core::stats::{run_protocol, write_results, CohortTable, ProtocolConfig};

/// Exit status when some cohort subjects failed.
const PARTIAL_FAILURE: u8 = 2;

#[derive(Parser)]
#[command(name = "caravel", version, about = "Vessel graph morphometry from 3D binary masks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Features of one mask, globally and per territory when an atlas is given.
    Extract(ExtractArgs),
    /// Features of every subject in a manifest, joined with demographics.
    Cohort(CohortArgs),
    /// Statistical protocol over a cohort table.
    Stats(StatsArgs),
    /// Synthetic masks with known ground truth.
    Phantom(PhantomArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration (for example a previous run_config.json).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Keep 26-connectivity triangles in the graph.
    #[arg(long)]
    no_prune: bool,
    /// Formulas exactly as written: no pruning, interpolating splines.
    #[arg(long)]
    strict_literal: bool,
    /// Worker threads.
    #[arg(long, env = "CARAVEL_JOBS")]
    jobs: Option<usize>,
}

impl RunArgs {
    fn config(&self, out: &Path) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => batch::read_config(p)?,
            None => RunConfig::default(),
        };
        if self.no_prune {
            c.prune_triangles = false;
        }
        if self.strict_literal {
            c.strict_literal = true;
        }
        if self.jobs.is_some() {
            c.jobs = self.jobs;
        }
        c.output = Some(out.to_path_buf());
        Ok(c)
    }
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    mask: PathBuf,
    /// Territory label volume on the mask grid.
    #[arg(long)]
    atlas: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Identifier in the outputs; defaults to the mask file name.
    #[arg(long)]
    subject_id: Option<String>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct CohortArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct StatsArgs {
    /// Cohort CSV as written by `caravel cohort`.
    #[arg(long)]
    table: PathBuf,
    /// Results CSV path.
    #[arg(long)]
    out: PathBuf,
    /// JSON protocol configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Drop rows from this site before testing (repeatable).
    #[arg(long)]
    exclude_site: Vec<String>,
    /// Run every test within each site separately.
    #[arg(long)]
    stratify: bool,
    /// Demographic variable to test (repeatable); default all.
    #[arg(long)]
    variable: Vec<String>,
    /// `feature@scope` column to test (repeatable); default all.
    #[arg(long)]
    feature: Vec<String>,
    #[arg(long, env = "CARAVEL_JOBS")]
    jobs: Option<usize>,
}

#[derive(Args)]
struct PhantomArgs {
    /// Standard phantom kind (tube, torus, helix, y_junction, cycle_pair, filled_cube, line, scatter).
    #[arg(long, conflicts_with_all = ["spec", "all"])]
    kind: Option<String>,
    /// JSON phantom specification.
    #[arg(long, conflicts_with = "all")]
    spec: Option<PathBuf>,
    /// Every standard phantom plus a manifest listing them.
    #[arg(long)]
    all: bool,
    /// Isotropic voxel spacing (mm) for standard phantoms.
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn subject_id_from(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    for ext in [".nii.gz", ".nii", ".cvol"] {
        if let Some(stem) = name.strip_suffix(ext) {
            return stem.to_string();
        }
    }
    name
}

fn extract(args: ExtractArgs) -> Result<u8> {
    let config = args.run.config(&args.out)?;
    let id = args.subject_id.unwrap_or_else(|| subject_id_from(&args.mask));
    let jobs = resolve_jobs(config.jobs);
    let features = with_jobs(jobs, || batch::process_subject(&id, &args.mask, args.atlas.as_deref(), &config))??;
    create_dir(&args.out)?;
    write_text(&args.out.join(format!("{id}.features.json")), &features.to_json()?)?;
    let mut csv = Vec::new();
    features.write_csv(&mut csv)?;
    write_text(&args.out.join(format!("{id}.features.csv")), &String::from_utf8(csv)?)?;
    write_config(&args.out.join(CONFIG_SIDECAR), &config)?;
    log::info!("{id}: {} scope(s) written to {}", 1 + features.regions.len(), args.out.display());
    Ok(0)
}

fn cohort(args: CohortArgs) -> Result<u8> {
    let config = args.run.config(&args.out)?;
    let manifest = load_manifest(&args.manifest)?;
    let run = run_cohort(manifest, &config, resolve_jobs(config.jobs))?;
    let files = write_cohort_outputs(&run, &config, &args.out)?;
    let failures = run.failures();
    for (id, e) in &failures {
        log::warn!("{id}: {e}");
    }
    if let Some(p) = &files.errors {
        eprintln!(
            "warning: {} of {} subjects failed; see {}",
            failures.len(),
            run.outcomes.len(),
            p.display()
        );
        return Ok(PARTIAL_FAILURE);
    }
    Ok(0)
}

fn stats(args: StatsArgs) -> Result<u8> {
    let mut config: ProtocolConfig = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("invalid protocol config {}", p.display()))?
        }
        None => ProtocolConfig::default(),
    };
    config.exclude_sites.extend(args.exclude_site);
    config.stratify_by_site |= args.stratify;
    config.variables.extend(args.variable);
    config.features.extend(args.feature);
    let table = CohortTable::read(&args.table)?;
    let results = with_jobs(resolve_jobs(args.jobs), || run_protocol(&table, &config))??;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let file = std::fs::File::create(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    write_results(&results, std::io::BufWriter::new(file))?;
    Ok(0)
}

fn phantom(args: PhantomArgs) -> Result<u8> {
    let specs: Vec<PhantomSpec> = if args.all {
        PhantomSpec::STANDARD_KINDS
            .iter()
            .map(|k| PhantomSpec::standard(k).expect("standard kind").with_spacing([args.spacing; 3]))
            .collect()
    } else if let Some(k) = &args.kind {
        match PhantomSpec::standard(k) {
            Some(s) => vec![s.with_spacing([args.spacing; 3])],
            None => bail!("unknown phantom kind `{k}`"),
        }
    } else if let Some(p) = &args.spec {
        let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
        vec![serde_json::from_str(&text).with_context(|| format!("invalid phantom spec {}", p.display()))?]
    } else {
        bail!("one of --kind, --spec or --all is required");
    };
    create_dir(&args.out)?;
    let mut manifest = String::from("subject_id,mask_path,phantom\n");
    for spec in &specs {
        let (vol, truth) = generate(spec)?;
        let name = spec.name();
        save_cvol(args.out.join(format!("{name}.cvol")), &vol)?;
        let mut text = serde_json::to_string_pretty(&truth)?;
        text.push('\n');
        write_text(&args.out.join(format!("{name}.truth.json")), &text)?;
        manifest.push_str(&format!("{name},{name}.cvol,{name}\n"));
    }
    if args.all {
        write_text(&args.out.join("manifest.csv"), &manifest)?;
    }
    Ok(0)
}

/// The error chain, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut text = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !text.contains(&c) {
            text = format!("{text}: {c}");
        }
    }
    text
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Extract(a) => extract(a),
        Command::Cohort(a) => cohort(a),
        Command::Stats(a) => stats(a),
        Command::Phantom(a) => phantom(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}
