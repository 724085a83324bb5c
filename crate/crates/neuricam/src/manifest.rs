//! Run manifests.
//!
//! Every subcommand drops a `manifest.json` beside its outputs recording
//! the seed, a hash of the resolved configuration, tool versions and a
//! hash per output file. Two runs with the same inputs and seed must
//! produce byte-identical trees, manifest included, so the manifest holds
//! no timestamps, hostnames or absolute paths.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::streamio::write_json;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config_sha256: String,
    pub config: serde_json::Value,
    /// Crate versions, keyed by crate name.
    pub versions: BTreeMap<String, String>,
    /// Input paths as given on the command line.
    pub inputs: BTreeMap<String, String>,
    /// Relative output path -> SHA-256 of its bytes.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn leaf_name(path: &Path) -> String {
    path.file_name()
        .unwrap_or(path.as_os_str())
        .to_string_lossy()
        .into_owned()
}

pub fn hash_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

fn walk_sorted(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) -> CliResult<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::io(dir, e))?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let path = entry.path();
        if path.is_dir() {
            walk_sorted(root, &path, out)?;
        } else {
            let rel = path
                .strip_prefix(root)
                .expect("walk stays under root")
                .to_string_lossy()
                .replace('\\', "/");
            if rel == MANIFEST_NAME {
                continue;
            }
            out.insert(rel, hash_file(&path)?);
        }
    }
    Ok(())
}

/// Hash every file under `root` (sorted, recursive), excluding the
/// manifest itself.
pub fn hash_tree(root: &Path) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    walk_sorted(root, root, &mut out)?;
    Ok(out)
}

pub fn versions() -> BTreeMap<String, String> {
    let mut v = BTreeMap::new();
    v.insert("neuricam".into(), env!("CARGO_PKG_VERSION").into());
    v.insert("neuricam-core".into(), neuricam_core::VERSION.into());
    v
}

impl RunManifest {
    /// Build a manifest for a run with the given resolved config.
    pub fn new<C: Serialize>(command: &str, config: &C, seed: Option<u64>) -> CliResult<Self> {
        let config = serde_json::to_value(config)
            .map_err(|e| CliError::Config(format!("config not serializable: {e}")))?;
        let canonical = serde_json::to_vec(&config)
            .map_err(|e| CliError::Config(format!("config not serializable: {e}")))?;
        Ok(RunManifest {
            command: command.into(),
            seed,
            config_sha256: sha256_hex(&canonical),
            config,
            versions: versions(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    /// Record an input by its final path component only. Storing full
    /// paths would make reruns into different directories produce
    /// different manifests, breaking the byte-identical-rerun contract.
    pub fn input(mut self, name: &str, path: &Path) -> Self {
        self.inputs.insert(name.into(), leaf_name(path));
        self
    }

    /// Hash everything under `dir` into the outputs map and write the
    /// manifest there.
    pub fn write_for_tree(mut self, dir: &Path) -> CliResult<()> {
        self.outputs = hash_tree(dir)?;
        write_json(&dir.join(MANIFEST_NAME), &self)
    }

    /// Record the given output files and write the manifest to
    /// `manifest_path`.
    pub fn write_for_files(mut self, files: &[&Path], manifest_path: &Path) -> CliResult<()> {
        for file in files {
            self.outputs.insert(leaf_name(file), hash_file(file)?);
        }
        write_json(manifest_path, &self)
    }

    /// Record a single output file and write the manifest next to it as
    /// `<file>.manifest.json`.
    pub fn write_for_file(self, file: &Path) -> CliResult<()> {
        let mut manifest_path = file.as_os_str().to_owned();
        manifest_path.push(".manifest.json");
        self.write_for_files(&[file], Path::new(&manifest_path))
    }
}
