//! Run reports, output directories and merging of split runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiment::{compute, Aggregate};
use crate::output::{render, Files, SCHEMA_VERSION};

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Everything needed to reproduce or extend a run. The data files listed in
/// `manifest` depend only on the configuration; timings live here only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub software_version: String,
    pub config: ExperimentConfig,
    pub manifest: Vec<ManifestEntry>,
    pub wall_clock_seconds: f64,
    pub trials: u64,
    pub trials_per_second: f64,
    /// Cut-detection throughput of `cut_bench` runs, in walk steps per second.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_per_second: Option<f64>,
    pub aggregate: Aggregate,
}

pub fn manifest(files: &Files) -> Vec<ManifestEntry> {
    files
        .iter()
        .map(|(name, bytes)| ManifestEntry {
            file: name.clone(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        })
        .collect()
}

fn report(config: ExperimentConfig, files: &Files, seconds: f64, aggregate: Aggregate) -> RunReport {
    let trials = config.experiment.trial_range().1;
    let steps_per_second = match &aggregate {
        Aggregate::CutBench(b) if b.detect_seconds > 0.0 => {
            Some(b.rows.iter().map(|r| r.n_steps as f64).sum::<f64>() / b.detect_seconds)
        }
        _ => None,
    };
    RunReport {
        schema_version: SCHEMA_VERSION,
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        config,
        manifest: manifest(files),
        wall_clock_seconds: seconds,
        trials,
        trials_per_second: if seconds > 0.0 { trials as f64 / seconds } else { 0.0 },
        steps_per_second,
        aggregate,
    }
}

/// Runs `config` in memory, returning the report and the rendered files.
pub fn execute(config: &ExperimentConfig) -> Result<(RunReport, Files)> {
    config.validate()?;
    let t = Instant::now();
    let aggregate = compute(config)?;
    let files = render(config, &aggregate)?;
    let seconds = t.elapsed().as_secs_f64();
    Ok((report(config.clone(), &files, seconds, aggregate), files))
}

/// Writes the data files and `report.json` into `dir`.
pub fn write_outputs(dir: &Path, report: &RunReport, files: &Files) -> Result<()> {
    let wrap = |path: PathBuf| move |source| HarnessError::Write { path, source };
    fs::create_dir_all(dir).map_err(wrap(dir.to_path_buf()))?;
    for (name, bytes) in files {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(wrap(path.clone()))?;
    }
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    let path = dir.join(REPORT_FILE);
    fs::write(&path, text).map_err(wrap(path.clone()))
}

/// Validates, runs and writes. Nothing is written unless the configuration
/// validates and the computation succeeds.
pub fn run(config: &ExperimentConfig, dir: &Path) -> Result<RunReport> {
    let (report, files) = execute(config)?;
    write_outputs(dir, &report, &files)?;
    Ok(report)
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    let path = if path.is_dir() {
        path.join(REPORT_FILE)
    } else {
        path.to_path_buf()
    };
    let text = fs::read_to_string(&path).map_err(|source| HarnessError::Read {
        path: path.clone(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

/// Pools reports of one configuration run over adjacent, non-overlapping
/// trial ranges. The result equals a single run over the union of the
/// ranges, whatever the order of `reports`.
pub fn merge(reports: Vec<RunReport>) -> Result<(RunReport, Files)> {
    let mut reports = reports;
    if reports.is_empty() {
        return Err(HarnessError::Merge("nothing to merge".into()));
    }
    let key = reports[0].config.merge_key();
    if reports.iter().any(|r| r.config.merge_key() != key) {
        return Err(HarnessError::Merge(
            "configurations differ beyond their trial ranges".into(),
        ));
    }
    reports.sort_by_key(|r| r.config.experiment.trial_range());
    let (first, mut end) = {
        let (f, n) = reports[0].config.experiment.trial_range();
        (f, f + n)
    };
    for r in &reports[1..] {
        let (f, n) = r.config.experiment.trial_range();
        if f < end {
            return Err(HarnessError::Merge(format!("trial ranges overlap at index {f}")));
        }
        if f > end {
            return Err(HarnessError::Merge(format!("trials {end}..{f} are missing")));
        }
        end = f + n;
    }
    let mut config = reports[0].config.clone();
    config.experiment = config.experiment.with_trial_range(first, end - first);
    let seconds = reports.iter().map(|r| r.wall_clock_seconds).sum();
    let aggregate = Aggregate::combine(reports.into_iter().map(|r| r.aggregate).collect())?;
    let files = render(&config, &aggregate)?;
    Ok((report(config, &files, seconds, aggregate), files))
}
