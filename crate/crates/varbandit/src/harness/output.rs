//! Deterministic result persistence.
//!
//! Every experiment writes the same skeleton into its output directory:
//! the resolved configuration, a SHA-256 sidecar of that configuration, a
//! machine-readable summary, and one or more CSV tables. All writes are
//! atomic (temp file + rename in the destination directory) so an
//! interrupted run never leaves a half-written artifact, and nothing is
//! ever written outside the requested directory.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::HarnessError;

/// Paths produced by [`write_experiment_outputs`].
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub resolved_config: PathBuf,
    pub config_hash: PathBuf,
    pub summary: PathBuf,
    pub tables: Vec<PathBuf>,
}

/// Write `contents` to `dir/name` atomically: the bytes land in a unique
/// temp file in `dir` first and are renamed into place, so readers only
/// ever observe complete files.
pub fn atomic_write(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    let final_path = dir.join(name);
    tmp.persist(&final_path).map_err(|e| HarnessError::Io(e.error))?;
    Ok(final_path)
}

/// SHA-256 of the canonical JSON form of a configuration, hex encoded.
/// The value is serialized through `serde_json::Value`, whose object maps
/// keep keys sorted, so the hash is stable across field-declaration order
/// and runs.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String, HarnessError> {
    let value = serde_json::to_value(config)
        .map_err(|e| HarnessError::InvalidConfig(format!("unserializable config: {e}")))?;
    let json = serde_json::to_string(&value)
        .map_err(|e| HarnessError::InvalidConfig(format!("unserializable config: {e}")))?;
    let digest = Sha256::digest(json.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Choose up to `count` strictly increasing step indices in `1..=n`,
/// approximately log-spaced, always ending at `n`. Used to thin
/// per-step traces before they are written out.
pub fn log_spaced_points(n: u64, count: usize) -> Vec<u64> {
    if n == 0 {
        return Vec::new();
    }
    let count = count.min(n as usize).max(1);
    if count == 1 {
        return vec![n];
    }
    let mut points = Vec::with_capacity(count);
    let mut prev = 0u64;
    for i in 0..count {
        let frac = i as f64 / (count - 1) as f64;
        let candidate = (n as f64).powf(frac).round() as u64;
        let t = candidate.max(prev + 1).min(n);
        if t > prev {
            points.push(t);
            prev = t;
        }
    }
    if *points.last().unwrap() != n {
        points.push(n);
    }
    points
}

/// Render rows as CSV with a header line. Floats are written with enough
/// digits to round-trip (`{:?}` on f64), keeping files byte-stable.
pub(crate) fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Round-tripping text form of a float for CSV cells.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Persist the standard artifact set for one experiment run.
pub fn write_experiment_outputs<C: Serialize, S: Serialize>(
    out_dir: &Path,
    resolved_config: &C,
    summary: &S,
    tables: &[(&str, String)],
) -> Result<OutputFiles, HarnessError> {
    let config_json = serde_json::to_string_pretty(resolved_config)
        .map_err(|e| HarnessError::InvalidConfig(format!("unserializable config: {e}")))?;
    let hash = config_hash(resolved_config)?;
    let summary_json = serde_json::to_string_pretty(summary)
        .map_err(|e| HarnessError::InvalidConfig(format!("unserializable summary: {e}")))?;

    let resolved_config_path =
        atomic_write(out_dir, "resolved_config.json", config_json.as_bytes())?;
    let hash_path =
        atomic_write(out_dir, "resolved_config.sha256", format!("{hash}\n").as_bytes())?;
    let summary_path = atomic_write(out_dir, "summary.json", summary_json.as_bytes())?;
    let mut table_paths = Vec::with_capacity(tables.len());
    for (name, contents) in tables {
        table_paths.push(atomic_write(out_dir, name, contents.as_bytes())?);
    }
    Ok(OutputFiles {
        resolved_config: resolved_config_path,
        config_hash: hash_path,
        summary: summary_path,
        tables: table_paths,
    })
}
