//! Run directories: lock, outputs, effective configuration and manifest.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::commands::{execute, Products};
use crate::error::{read_file, CliError, CliResult};
use crate::formats::{json_bytes, sha256_hex};
use crate::jobs::Job;

pub const LOCK: &str = ".lock";
pub const MANIFEST: &str = "manifest.json";
pub const CONFIG: &str = "config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub job: Job,
    /// SHA-256 of the written `config.toml`.
    pub config_sha256: String,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<InputHash>,
    pub outputs: Vec<OutputHash>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputHash {
    pub file: String,
    pub sha256: String,
}

/// Exclusive ownership of a run directory for the lifetime of the guard.
struct RunLock(PathBuf);

impl RunLock {
    fn acquire(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::from(e).at(dir))?;
        let path = dir.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(RunLock(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::data(format!("{} is locked by another run ({} exists)", dir.display(), LOCK)))
            }
            Err(e) => Err(CliError::from(e).at(&path)),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// SHA-256 of a file, or of a directory as the hash of its sorted
/// `name:hash` lines.
pub fn hash_path(path: &Path) -> CliResult<String> {
    if !path.is_dir() {
        return Ok(sha256_hex(&read_file(path)?));
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(path)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    entries.sort();
    let mut listing = String::new();
    for e in entries {
        let name = e.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        listing.push_str(&format!("{name}:{}\n", hash_path(&e)?));
    }
    Ok(sha256_hex(listing.as_bytes()))
}

/// Makes input paths absolute, so the manifest replays from any directory.
pub fn resolve_inputs(job: &mut Job) -> CliResult<()> {
    for (role, path) in job.inputs_mut() {
        *path = fs::canonicalize(&*path).map_err(|e| CliError::data(format!("{role} input: {e}")).at(path))?;
    }
    Ok(())
}

fn input_hashes(job: &mut Job) -> CliResult<Vec<InputHash>> {
    job.inputs_mut()
        .into_iter()
        .map(|(role, path)| Ok(InputHash { role: role.into(), path: path.clone(), sha256: hash_path(path)? }))
        .collect()
}

/// Executes `job` into `out`, writing its outputs, `config.toml` and the
/// manifest. Nothing is written when the job fails.
pub fn run_job(mut job: Job, out: &Path) -> CliResult<(Manifest, String)> {
    resolve_inputs(&mut job)?;
    let _lock = RunLock::acquire(out)?;
    let inputs = input_hashes(&mut job)?;
    let Products { files, summary } = execute(&job)?;
    let config = job.to_toml();
    let mut outputs = Vec::with_capacity(files.len());
    for (name, bytes) in &files {
        fs::write(out.join(name), bytes)?;
        outputs.push(OutputHash { file: name.clone(), sha256: sha256_hex(bytes) });
    }
    fs::write(out.join(CONFIG), &config)?;
    let manifest = Manifest {
        tool: "wordprune".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seeds: job.seeds().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        job,
        config_sha256: sha256_hex(config.as_bytes()),
        inputs,
        outputs,
    };
    fs::write(out.join(MANIFEST), json_bytes(&manifest))?;
    Ok((manifest, summary))
}

pub fn read_manifest(path: &Path) -> CliResult<Manifest> {
    let m: Manifest = serde_json::from_slice(&read_file(path)?).map_err(|e| CliError::from(e).at(path))?;
    if m.tool != "wordprune" {
        return Err(CliError::data(format!("manifest written by {:?}", m.tool)).at(path));
    }
    Ok(m)
}

/// Re-executes a manifest's job into `out` and compares output hashes.
/// Inputs must still hash to the recorded values.
pub fn replay(manifest_path: &Path, out: &Path) -> CliResult<Manifest> {
    let recorded = read_manifest(manifest_path)?;
    for input in &recorded.inputs {
        let now = hash_path(&input.path)?;
        if now != input.sha256 {
            return Err(CliError::data(format!("{} input {} changed since the run", input.role, input.path.display())));
        }
    }
    let (fresh, _) = run_job(recorded.job.clone(), out)?;
    let differing: Vec<&str> = recorded
        .outputs
        .iter()
        .filter(|o| !fresh.outputs.contains(o))
        .map(|o| o.file.as_str())
        .collect();
    if !differing.is_empty() || fresh.outputs.len() != recorded.outputs.len() {
        return Err(CliError::data(format!("replay differs from the recorded run: {}", differing.join(", "))));
    }
    Ok(fresh)
}
