//! Run manifests and bit-exact replay.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::{HarnessError, Result};
use crate::output::{emit, write_file, Format};
use crate::recipes::{Recipe, Runner};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub recipe: Recipe,
    pub tool_version: String,
    pub master_seed: u64,
    pub format: Format,
    pub config: Config,
    /// SHA-256 of the recipe, seed, format and config as canonical JSON.
    pub spec_hash: String,
    /// Derived cell seeds, in cell order.
    pub seeds: Vec<u64>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub files: Vec<FileDigest>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn spec_hash(recipe: &Recipe, config: &Config, master_seed: u64, format: Format) -> String {
    let doc = serde_json::json!({
        "recipe": recipe,
        "master_seed": master_seed,
        "format": format,
        "config": config,
    });
    sha256_hex(doc.to_string().as_bytes())
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn digest_files(dir: &Path, names: &[String]) -> Result<Vec<FileDigest>> {
    names
        .iter()
        .map(|name| {
            let path = dir.join(name);
            let bytes = std::fs::read(&path).map_err(|e| HarnessError::io(&path, e))?;
            Ok(FileDigest {
                path: name.clone(),
                sha256: sha256_hex(&bytes),
            })
        })
        .collect()
}

/// Runs a recipe, writes its outputs and manifest into `out`.
pub fn execute(
    recipe: Recipe,
    config: &Config,
    master_seed: u64,
    jobs: usize,
    format: Format,
    out: &Path,
) -> Result<RunManifest> {
    config.validate()?;
    let started_unix = unix_now();
    let run = Runner::new(config, master_seed, jobs)?.run(recipe)?;
    let names = emit(&run.output, out, format)?;
    let manifest = RunManifest {
        recipe,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed,
        format,
        config: config.clone(),
        spec_hash: spec_hash(&recipe, config, master_seed, format),
        seeds: run.seeds,
        started_unix,
        finished_unix: unix_now(),
        files: digest_files(out, &names)?,
    };
    manifest.write(&out.join(MANIFEST_NAME))?;
    Ok(manifest)
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| HarnessError::config(e.to_string()))?;
        write_file(path, &(text + "\n"))
    }

    pub fn read(path: &Path) -> Result<RunManifest> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))
    }
}

/// Outcome of a successful replay.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub dir: PathBuf,
    pub files: usize,
}

/// Re-runs the manifest's recipe into `out` (default: `replay/` beside the
/// manifest) and checks every recorded file is reproduced byte for byte.
pub fn replay(manifest_path: &Path, out: Option<&Path>, jobs: usize) -> Result<Replay> {
    let m = RunManifest::read(manifest_path)?;
    let expected = spec_hash(&m.recipe, &m.config, m.master_seed, m.format);
    if expected != m.spec_hash {
        return Err(HarnessError::config(format!(
            "{}: spec hash {} does not match its contents ({expected})",
            manifest_path.display(),
            m.spec_hash
        )));
    }
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => manifest_path.parent().unwrap_or(Path::new(".")).join("replay"),
    };
    let again = execute(m.recipe, &m.config, m.master_seed, jobs, m.format, &dir)?;
    let mut diffs = Vec::new();
    for f in &m.files {
        match again.files.iter().find(|g| g.path == f.path) {
            Some(g) if g.sha256 == f.sha256 => {}
            Some(_) => diffs.push(format!("{} changed", f.path)),
            None => diffs.push(format!("{} missing", f.path)),
        }
    }
    for g in &again.files {
        if !m.files.iter().any(|f| f.path == g.path) {
            diffs.push(format!("{} unexpected", g.path));
        }
    }
    if !diffs.is_empty() {
        return Err(HarnessError::ReplayMismatch(diffs.join(", ")));
    }
    Ok(Replay {
        dir,
        files: m.files.len(),
    })
}
