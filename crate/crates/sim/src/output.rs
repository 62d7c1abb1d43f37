//! Result files and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SimError};
use crate::runner::{Outcome, SweepSummary};

pub const SUMMARY: &str = "summary.json";
pub const MANIFEST: &str = "manifest.json";
pub const REPLICATIONS: &str = "replications.csv";
pub const DIAGNOSTICS: &str = "diagnostics.csv";
pub const COUPLING: &str = "coupling.csv";
pub const VIOLATIONS: &str = "quantile_violations.csv";
pub const SWEEP: &str = "sweep.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the results directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_path: Option<PathBuf>,
    pub config_hash: String,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
    pub elapsed_seconds: f64,
    pub version: String,
    pub seed: u64,
    pub workers: usize,
    pub outputs: Vec<OutputFile>,
    pub status: crate::checks::Status,
    pub failed: Vec<String>,
    pub exit_code: i32,
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| SimError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| SimError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| SimError::io(path, e.into()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| SimError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| SimError::Config { path: path.into(), message: e.to_string() })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| SimError::io(path, e.into()))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> SimError + '_ {
    move |e| SimError::io(path, e.into())
}

/// Writes the summary and CSVs of `outcome` into `dir` and returns the
/// output file names.
pub fn write_outcome(dir: &Path, outcome: &Outcome) -> Result<Vec<String>> {
    create_dir(dir)?;
    let config = &outcome.summary.config;
    let mut written = vec![SUMMARY.to_string()];
    write_json(&dir.join(SUMMARY), &outcome.summary)?;
    let data = &outcome.construction;

    if config.output.replications_csv {
        let path = dir.join(REPLICATIONS);
        let mut w = csv_writer(&path)?;
        w.write_record(["arm", "rep", "f", "s"]).map_err(csv_err(&path))?;
        let arms = std::iter::once(("construction", data)).chain(outcome.baseline.as_ref().map(|b| ("baseline", b)));
        for (arm, d) in arms {
            for (rep, row) in d.reps.iter().zip(&d.s) {
                for (f, s) in row.iter().enumerate() {
                    w.write_record([arm, &rep.to_string(), &f.to_string(), &format!("{s:e}")]).map_err(csv_err(&path))?;
                }
            }
        }
        w.flush().map_err(|e| SimError::io(&path, e))?;
        written.push(REPLICATIONS.into());
    }

    if config.output.diagnostics_csv && !data.node_values.is_empty() {
        let path = dir.join(DIAGNOSTICS);
        let mut w = csv_writer(&path)?;
        w.write_record(["rep", "m", "k", "j", "s_tilde"]).map_err(csv_err(&path))?;
        for (rep, row) in data.reps.iter().zip(&data.node_values) {
            for (key, v) in data.nodes.iter().zip(row) {
                let k = key.k.map_or_else(|| "root".to_string(), |k| k.to_string());
                w.write_record([rep.to_string(), key.m.to_string(), k, key.j.to_string(), format!("{v:e}")]).map_err(csv_err(&path))?;
            }
        }
        w.flush().map_err(|e| SimError::io(&path, e))?;
        written.push(DIAGNOSTICS.into());
    }

    if config.output.coupling_csv {
        let path = dir.join(COUPLING);
        let mut w = csv_writer(&path)?;
        w.write_record(["rep", "i", "n", "x_tilde"]).map_err(csv_err(&path))?;
        for rec in &data.coupling {
            for (i, (g, x)) in rec.gauss.iter().zip(&rec.x).enumerate() {
                w.write_record([rec.rep.to_string(), (i + 1).to_string(), format!("{g:e}"), format!("{x:e}")]).map_err(csv_err(&path))?;
            }
        }
        w.flush().map_err(|e| SimError::io(&path, e))?;
        written.push(COUPLING.into());
    }

    if !data.node_values.is_empty() {
        let path = dir.join(VIOLATIONS);
        let mut w = csv_writer(&path)?;
        w.write_record(["rep", "m", "k", "j", "s_tilde", "bound", "t_tilde", "v", "y_left", "y_right", "b_left", "b_right"])
            .map_err(csv_err(&path))?;
        for v in &data.monitor.violations {
            let k = v.node.k.map_or_else(|| "root".to_string(), |k| k.to_string());
            let nums = [v.s_tilde, v.bound, v.t_tilde, v.v, v.y_left, v.y_right, v.b_left, v.b_right].map(|x| format!("{x:e}"));
            let mut rec = vec![v.rep.to_string(), v.node.m.to_string(), k, v.node.j.to_string()];
            rec.extend(nums);
            w.write_record(&rec).map_err(csv_err(&path))?;
        }
        w.flush().map_err(|e| SimError::io(&path, e))?;
        written.push(VIOLATIONS.into());
    }
    Ok(written)
}

/// Hashes `files` (relative to `dir`) and writes the manifest.
#[allow(clippy::too_many_arguments)]
pub fn write_manifest(
    dir: &Path,
    config_path: Option<&Path>,
    config_hash: &str,
    seed: u64,
    workers: usize,
    started: DateTime<Utc>,
    files: &[String],
    verdict: (crate::checks::Status, Vec<String>, i32),
) -> Result<Manifest> {
    let finished = Utc::now();
    let outputs =
        files.iter().map(|f| Ok(OutputFile { path: f.clone(), sha256: sha256_file(&dir.join(f))? })).collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        config_path: config_path.map(Path::to_path_buf),
        config_hash: config_hash.to_string(),
        started,
        finished,
        elapsed_seconds: (finished - started).num_milliseconds() as f64 / 1000.0,
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        workers,
        outputs,
        status: verdict.0,
        failed: verdict.1,
        exit_code: verdict.2,
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

/// Sweep summary file; returns its name.
pub fn write_sweep(dir: &Path, sweep: &SweepSummary) -> Result<String> {
    write_json(&dir.join(SWEEP), sweep)?;
    Ok(SWEEP.into())
}
