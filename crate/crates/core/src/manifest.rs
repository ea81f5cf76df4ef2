//! Content manifests: every dataset and every command output is tied to the
//! exact bytes it was computed from, so downstream steps can refuse to mix
//! results from different inputs and reruns can be compared hash-for-hash.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::channel::{trace_from_str, trace_to_string, Trace};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed manifest: {0}")]
    Malformed(String),
    #[error("trace file {path}: {err}")]
    Trace { path: String, err: String },
    #[error("trace sets differ: {0}")]
    Mismatch(String),
}

/// Hex-encoded SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One trace file: its name, content hash, and headline metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceEntry {
    pub file: String,
    pub sha256: String,
    pub seed: u64,
    pub speed_kmh: f64,
    pub n_bs: usize,
    pub n_ticks: usize,
}

/// The dataset manifest written next to generated traces and re-derived by
/// every consumer. Entries are kept sorted by file name so the combined
/// hash does not depend on directory iteration order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceManifest {
    pub entries: Vec<TraceEntry>,
}

fn entry_for<S: Scalar>(file: String, trace: &Trace<S>, text: &str) -> TraceEntry {
    TraceEntry {
        file,
        sha256: sha256_hex(text.as_bytes()),
        seed: trace.seed,
        speed_kmh: trace.meta.speed_kmh,
        n_bs: trace.n_bs(),
        n_ticks: trace.n_ticks(),
    }
}

impl TraceManifest {
    /// Builds the manifest for in-memory traces, hashing exactly the bytes
    /// [`crate::channel::write_trace`] would put on disk.
    pub fn for_traces<S: Scalar>(named: &[(String, &Trace<S>)]) -> Self {
        let mut entries: Vec<TraceEntry> = named
            .iter()
            .map(|(file, trace)| entry_for(file.clone(), trace, &trace_to_string(trace)))
            .collect();
        entries.sort_by(|a, b| a.file.cmp(&b.file));
        Self { entries }
    }

    /// One digest over the whole set: file names and content hashes, in
    /// manifest order.
    pub fn combined_sha256(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.entries {
            h.update(e.file.as_bytes());
            h.update([0u8]);
            h.update(e.sha256.as_bytes());
            h.update([b'\n']);
        }
        hex::encode(h.finalize())
    }

    /// The combined digest's first eight bytes as a little-endian integer —
    /// the dataset key that seeds episode randomization during training.
    pub fn set_hash_u64(&self) -> u64 {
        let mut h = Sha256::new();
        for e in &self.entries {
            h.update(e.file.as_bytes());
            h.update([0u8]);
            h.update(e.sha256.as_bytes());
            h.update([b'\n']);
        }
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("sha256 is 32 bytes"))
    }

    pub fn write(&self, path: &Path) -> Result<(), ManifestError> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| ManifestError::Malformed(e.to_string()))?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, ManifestError> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| ManifestError::Malformed(e.to_string()))
    }

    /// Errors unless both manifests describe byte-identical trace sets,
    /// naming the two combined hashes when they differ.
    pub fn ensure_matches(&self, other: &Self) -> Result<(), ManifestError> {
        let a = self.combined_sha256();
        let b = other.combined_sha256();
        if a != b {
            return Err(ManifestError::Mismatch(format!("{a} vs {b}")));
        }
        Ok(())
    }
}

/// Loads every `.trace` file in a directory (sorted by name) together with
/// the manifest re-derived from the bytes actually read.
pub fn load_traces<S: Scalar>(
    dir: &Path,
) -> Result<(Vec<Trace<S>>, TraceManifest), ManifestError> {
    let mut files: Vec<String> = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".trace") && entry.file_type()?.is_file() {
            files.push(name);
        }
    }
    files.sort();
    let mut traces = Vec::with_capacity(files.len());
    let mut entries = Vec::with_capacity(files.len());
    for file in files {
        let path = dir.join(&file);
        let text = fs::read_to_string(&path)?;
        let trace: Trace<S> = trace_from_str(&text).map_err(|e| ManifestError::Trace {
            path: path.display().to_string(),
            err: e.to_string(),
        })?;
        entries.push(entry_for(file, &trace, &text));
        traces.push(trace);
    }
    Ok((traces, TraceManifest { entries }))
}

/// Provenance record written by every command: what ran, with which seed and
/// config, over which inputs, producing which files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    pub seed: u64,
    /// Combined hash of the input trace set, where the command reads one.
    pub input_manifest_sha256: Option<String>,
    /// Full configuration snapshot after flag overrides.
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<(), ManifestError> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| ManifestError::Malformed(e.to_string()))?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, ManifestError> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| ManifestError::Malformed(e.to_string()))
    }
}
