//! Writing reports to disk: one JSON report, one CSV per sweep, and a
//! manifest with SHA-256 digests of everything written.
//!
//! Only the manifest's `run_id` carries a timestamp; the digested files are
//! pure functions of the configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::experiments::{Sweep, TheoremReport, TOOL_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// File name relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// `<unix seconds>-<first 12 hex digits of the config digest>`.
    pub run_id: String,
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub artifacts: Vec<Artifact>,
}

impl Manifest {
    pub fn artifact(&self, path: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.path == path)
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        write!(out, "{b:02x}").expect("writing to a String");
    }
    out
}

/// Integral values print as integers, everything else with 17 significant
/// digits.
pub fn format_number(x: f64) -> String {
    if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else if x.is_nan() {
        "NaN".to_owned()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else {
        format!("{x:.16e}")
    }
}

/// Columns: the sweep's configuration keys, then
/// `statistic,ci_lo,ci_hi,trials`.
pub fn sweep_csv(sweep: &Sweep) -> String {
    let mut out = String::new();
    for c in &sweep.columns {
        out.push_str(c);
        out.push(',');
    }
    out.push_str("statistic,ci_lo,ci_hi,trials\n");
    for row in &sweep.rows {
        for k in &row.keys {
            out.push_str(&format_number(*k));
            out.push(',');
        }
        let _ = writeln!(
            out,
            "{},{},{},{}",
            format_number(row.statistic),
            format_number(row.ci_lo),
            format_number(row.ci_hi),
            row.trials
        );
    }
    out
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<Artifact> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(Artifact {
        path: name.to_owned(),
        sha256: sha256_hex(bytes),
        bytes: bytes.len() as u64,
    })
}

pub fn run_id(config: &ExperimentConfig) -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let digest = sha256_hex(config.to_json().as_bytes());
    format!("{secs}-{}", &digest[..12])
}

pub fn write_report(report: &TheoremReport, outdir: &Path) -> Result<Manifest> {
    fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let id = report.id.name();
    let mut artifacts = Vec::new();
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    artifacts.push(write_file(outdir, &format!("{id}.json"), json.as_bytes())?);
    for sweep in &report.sweeps {
        let name = format!("{id}_{}.csv", sweep.name);
        artifacts.push(write_file(outdir, &name, sweep_csv(sweep).as_bytes())?);
    }
    let config = report.provenance.config.clone();
    let manifest = Manifest {
        run_id: run_id(&config),
        tool_version: TOOL_VERSION.to_owned(),
        config,
        artifacts,
    };
    let path: PathBuf = outdir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Recomputes every artifact digest; returns the paths that do not match.
pub fn verify_manifest(manifest: &Manifest, outdir: &Path) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    for a in &manifest.artifacts {
        let path = outdir.join(&a.path);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if sha256_hex(&bytes) != a.sha256 {
            bad.push(a.path.clone());
        }
    }
    Ok(bad)
}

pub fn read_manifest(outdir: &Path) -> Result<Manifest> {
    let path = outdir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}
