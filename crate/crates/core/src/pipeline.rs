//! End-to-end runs: ingest, clean, normalise, stratify, average, cluster,
//! score and write a run directory.
//!
//! A run writes into a hidden staging directory next to `outdir` and only
//! replaces `outdir` once every artifact is in place; a `<outdir>.lock` file
//! keeps concurrent runs off the same directory.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{MethodChoice, RunConfig};
use crate::error::{Error, Result};
use crate::ingest::{self, assemble_days, drop_incomplete_days, CleanedDays, Diagnostic};
use crate::kmeans::{self, ElbowPoint};
use crate::metrics::{mia, mia_wcss_identity_check, MiaVariant};
use crate::model::{Hourly, MeanLoadProfile, Method, Stratum};
use crate::preprocess::{self, build_mean_profiles, PreparedProfiles};
use crate::report::{files, svg};
use crate::som;
use crate::two_stage::{self, comparison_json, compare_runs, ComparisonRow, MethodRun};

fn stage<T>(name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(())
}

/// Everything produced before clustering.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub rows: usize,
    pub diagnostics: Vec<Diagnostic>,
    pub cleaned: CleanedDays,
    pub profiles: PreparedProfiles,
}

#[derive(Debug, Clone, Serialize)]
pub struct Counts {
    pub rows: usize,
    pub diagnostics: usize,
    pub days_kept: usize,
    pub days_dropped: usize,
    pub days_degenerate: usize,
    pub households_clustered: usize,
    pub households_excluded: usize,
}

impl Prepared {
    pub fn counts(&self) -> Counts {
        Counts {
            rows: self.rows,
            diagnostics: self.diagnostics.len(),
            days_kept: self.cleaned.kept.len(),
            days_dropped: self.cleaned.total_dropped(),
            days_degenerate: self.profiles.degenerate.len(),
            households_clustered: self.profiles.profiles.len(),
            households_excluded: self.profiles.excluded.len(),
        }
    }
}

/// Reads and cleans `input`, then builds mean profiles for `stratum`.
pub fn prepare(input: &Path, stratum: Stratum) -> Result<Prepared> {
    let (rows, diagnostics) = stage("ingest", || {
        let file = File::open(input).map_err(|source| Error::Path {
            path: input.to_path_buf(),
            source,
        })?;
        ingest::parse_readings(BufReader::new(file))
    })?;
    let cleaned = stage("clean", || Ok(drop_incomplete_days(assemble_days(&rows))))?;
    let profiles = stage("preprocess", || build_mean_profiles(&cleaned.kept, stratum))?;
    Ok(Prepared {
        rows: rows.len(),
        diagnostics,
        cleaned,
        profiles,
    })
}

fn write_prepared(dir: &Path, prepared: &Prepared) -> Result<()> {
    ingest::write_diagnostics(&prepared.diagnostics, create(&dir.join("diagnostics.csv"))?)?;
    let mut kept: BTreeMap<String, usize> = BTreeMap::new();
    for d in &prepared.cleaned.kept {
        *kept.entry(d.household_id.clone()).or_default() += 1;
    }
    files::write_cleaning(&kept, &prepared.cleaned.dropped, create(&dir.join("cleaning.csv"))?)?;
    preprocess::write_mean_profiles(&prepared.profiles.profiles, create(&dir.join("mean_profiles.csv"))?)?;
    files::write_excluded(&prepared.profiles.excluded, create(&dir.join("excluded.csv"))?)?;
    Ok(())
}

/// Writes the ingest artifacts for `input` into `outdir`.
pub fn run_ingest(input: &Path, stratum: Stratum, outdir: &Path) -> Result<Counts> {
    let prepared = prepare(input, stratum)?;
    stage("report", || {
        fs::create_dir_all(outdir)?;
        write_prepared(outdir, &prepared)
    })?;
    Ok(prepared.counts())
}

/// Writes assignments, centroids, metrics and SVGs for one method run.
/// Returns the MIA.
pub fn write_method_outputs(dir: &Path, run: &MethodRun, profiles: &[MeanLoadProfile], variant: MiaVariant) -> Result<f64> {
    let result = &run.result;
    let identity = mia_wcss_identity_check(result, profiles);
    if !identity {
        return Err(Error::Contract(format!(
            "{} result fails the MIA/WCSS identity",
            result.method
        )));
    }
    let m = mia(result, profiles, variant)?;
    let w = kmeans::wcss(result, profiles);
    files::write_assignments(result, create(&dir.join("assignments.csv"))?)?;
    files::write_centroids(result, create(&dir.join("centroids.csv"))?)?;
    let metrics = files::MetricsReport::new(result, m, variant, w, identity);
    write_text(&dir.join("metrics.json"), &(serde_json::to_string_pretty(&metrics)? + "\n"))?;
    write_text(&dir.join("clusters.svg"), &svg::render_cluster_small_multiples(result, profiles))?;
    if let Some(grid) = &run.grid {
        files::write_codebooks(grid, create(&dir.join("codebooks.csv"))?)?;
        write_text(&dir.join("lattice.svg"), &svg::render_som_lattice(grid))?;
    }
    Ok(m)
}

fn method_dir(method: Method) -> &'static str {
    match method {
        Method::Kmeans => "kmeans",
        Method::Som => "som",
        Method::TwoStage => "two_stage",
    }
}

fn run_method(method: Method, profiles: &[MeanLoadProfile], config: &RunConfig) -> Result<MethodRun> {
    Ok(match method {
        Method::Kmeans => MethodRun {
            result: kmeans::best_of_restarts(profiles, &config.kmeans_params())?,
            grid: None,
        },
        Method::Som => {
            let (result, grid) = som::som_cluster(profiles, &config.som_params())?;
            MethodRun {
                result,
                grid: Some(grid),
            }
        }
        Method::TwoStage => {
            let out = two_stage::two_stage_cluster(profiles, &config.two_stage_params())?;
            MethodRun {
                result: out.result,
                grid: Some(out.grid),
            }
        }
    })
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    counts: Counts,
    excluded_households: &'a [String],
    outputs: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub outdir: PathBuf,
    pub counts: Counts,
    pub rows: Vec<ComparisonRow>,
}

struct Lock(PathBuf);

impl Lock {
    fn acquire(outdir: &Path) -> Result<Self> {
        let path = sibling(outdir, "", ".lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Lock(path))
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(outdir.to_path_buf())),
            Err(e) => Err(Error::Io(e)),
        }
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn sibling(path: &Path, prefix: &str, suffix: &str) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    path.with_file_name(format!("{prefix}{name}{suffix}"))
}

fn list_outputs(root: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if let Ok(rel) = path.strip_prefix(root) {
                out.push(rel.to_string_lossy().replace('\\', "/"));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Runs the configured method(s) and writes the run directory.
///
/// On error nothing is left behind in `outdir`'s place.
pub fn run_pipeline(config: &RunConfig) -> Result<RunSummary> {
    stage("config", || config.validate())?;
    let outdir = config.outdir.clone();
    if let Some(parent) = outdir.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let _lock = Lock::acquire(&outdir)?;
    let staging = sibling(&outdir, ".", ".partial");
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir_all(&staging)?;

    match populate(config, &staging) {
        Ok((counts, rows)) => {
            if outdir.exists() {
                fs::remove_dir_all(&outdir)?;
            }
            fs::rename(&staging, &outdir)?;
            Ok(RunSummary { outdir, counts, rows })
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&staging);
            Err(e)
        }
    }
}

fn populate(config: &RunConfig, dir: &Path) -> Result<(Counts, Vec<ComparisonRow>)> {
    let prepared = prepare(&config.input, config.stratum)?;
    stage("report", || write_prepared(dir, &prepared))?;
    let profiles = &prepared.profiles.profiles;
    if profiles.is_empty() {
        return Err(Error::Stage {
            stage: "preprocess",
            source: Box::new(Error::Parameter(format!("no household has valid days in stratum {}", config.stratum))),
        });
    }

    let methods = config.method.methods();
    let runs = stage("cluster", || {
        if config.method == MethodChoice::All {
            two_stage::compare_methods(profiles, &config.compare_params()).map(|c| c.runs)
        } else {
            methods.iter().map(|&m| run_method(m, profiles, config)).collect()
        }
    })?;
    let comparison = stage("metrics", || compare_runs(runs, profiles, config.mia_variant))?;

    stage("report", || {
        for run in &comparison.runs {
            let target = if config.method == MethodChoice::All {
                let sub = dir.join(method_dir(run.result.method));
                fs::create_dir_all(&sub)?;
                sub
            } else {
                dir.to_path_buf()
            };
            write_method_outputs(&target, run, profiles, config.mia_variant)?;
        }
        if config.method == MethodChoice::All {
            two_stage::write_comparison_csv(&comparison.rows, create(&dir.join("comparison.csv"))?)?;
            let json = serde_json::to_string_pretty(&comparison_json(&comparison.rows))?;
            write_text(&dir.join("comparison.json"), &(json + "\n"))?;
        }
        let mut outputs = list_outputs(dir)?;
        outputs.push("manifest.json".into());
        outputs.sort();
        let manifest = Manifest {
            tool: "loadshape",
            version: env!("CARGO_PKG_VERSION"),
            config,
            counts: prepared.counts(),
            excluded_households: &prepared.profiles.excluded,
            outputs,
        };
        write_text(&dir.join("manifest.json"), &(serde_json::to_string_pretty(&manifest)? + "\n"))
    })?;
    Ok((prepared.counts(), comparison.rows))
}

/// Elbow curve for `k_min..=k_max`, written as `elbow.csv` and `elbow.svg`.
pub fn run_sweep(config: &RunConfig, k_min: usize, k_max: usize) -> Result<Vec<ElbowPoint>> {
    let prepared = prepare(&config.input, config.stratum)?;
    let curve = stage("cluster", || {
        kmeans::sweep_k(&prepared.profiles.profiles, k_min, k_max, &config.kmeans_params())
    })?;
    stage("report", || {
        fs::create_dir_all(&config.outdir)?;
        files::write_elbow(&curve, create(&config.outdir.join("elbow.csv"))?)?;
        write_text(&config.outdir.join("elbow.svg"), &svg::render_elbow(&curve))
    })?;
    Ok(curve)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| Error::Path {
        path: path.to_path_buf(),
        source,
    })
}

/// Regenerates the SVGs of a run directory (and its method
/// subdirectories) from the CSV artifacts. Returns the files written.
pub fn render_dir(dir: &Path, stratum: Stratum) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut targets = vec![dir.to_path_buf()];
    targets.extend(Method::ALL.iter().map(|&m| dir.join(method_dir(m))).filter(|p| p.is_dir()));
    for target in targets {
        let assignments = target.join("assignments.csv");
        if assignments.exists() {
            let profiles_path = [target.join("mean_profiles.csv"), dir.join("mean_profiles.csv")]
                .into_iter()
                .find(|p| p.exists())
                .ok_or_else(|| Error::Format(format!("no mean_profiles.csv for {}", target.display())))?;
            let profiles: HashMap<String, Hourly> = preprocess::read_mean_profiles(open(&profiles_path)?, stratum)?
                .into_iter()
                .map(|p| (p.household_id.clone(), *p.profile.values()))
                .collect();
            let (centroids, empty) = files::read_centroids(open(&target.join("centroids.csv"))?)?;
            let mut members: Vec<Vec<&Hourly>> = vec![Vec::new(); centroids.len()];
            for (id, c) in files::read_assignments(open(&assignments)?)? {
                let p = profiles
                    .get(&id)
                    .ok_or_else(|| Error::Format(format!("household {id} has no mean profile")))?;
                members
                    .get_mut(c)
                    .ok_or_else(|| Error::Format(format!("cluster {c} has no centroid")))?
                    .push(p);
            }
            let path = target.join("clusters.svg");
            write_text(&path, &svg::render_panels(&centroids, &empty, &members))?;
            written.push(path);
        }
        let codebooks = target.join("codebooks.csv");
        if codebooks.exists() {
            let grid = files::read_codebooks(open(&codebooks)?)?;
            let path = target.join("lattice.svg");
            write_text(&path, &svg::render_som_lattice(&grid))?;
            written.push(path);
        }
        let elbow = target.join("elbow.csv");
        if elbow.exists() {
            let curve = files::read_elbow(open(&elbow)?)?;
            let path = target.join("elbow.svg");
            write_text(&path, &svg::render_elbow(&curve))?;
            written.push(path);
        }
    }
    Ok(written)
}
