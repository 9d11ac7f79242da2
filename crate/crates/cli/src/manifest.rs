//! Run manifests, content hashes and atomic output.
//!
//! Each command writes its files into one output directory together with
//! `manifest.json`. The manifest records the configuration snapshot, the
//! manifests of the artifacts it consumed and the SHA-256 of every
//! reproducible output. Every output file `x` also gets a sidecar `x.json`
//! naming the manifest hash that produced it.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::snb1::Tensor;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOOL: &str = "snb";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Reference from a manifest to an artifact it consumed. Paths are left out
/// so that identical runs in different directories agree byte for byte.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRef {
    pub role: String,
    pub manifest_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub seed: Option<u64>,
    pub scheme: Option<String>,
    pub layout: Option<String>,
    pub inputs: Vec<InputRef>,
    /// SHA-256 of every output whose bytes are reproducible.
    pub outputs: BTreeMap<String, String>,
    /// Outputs that carry wall-clock measurements and are not hashed.
    pub timing_outputs: Vec<String>,
    pub details: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            seed: None,
            scheme: None,
            layout: None,
            inputs: Vec::new(),
            outputs: BTreeMap::new(),
            timing_outputs: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn input(&self, role: &str) -> Option<&InputRef> {
        self.inputs.iter().find(|r| r.role == role)
    }

    pub fn detail<T: serde::de::DeserializeOwned>(&self, key: &str) -> Result<T> {
        let v = self
            .details
            .get(key)
            .with_context(|| format!("manifest has no '{key}' entry"))?;
        serde_json::from_value(v.clone()).with_context(|| format!("manifest entry '{key}'"))
    }
}

/// A manifest read back from disk together with its hash.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub hash: String,
}

impl Artifact {
    /// Loads `dir/manifest.json`, checking that it came from `command` and
    /// that every hashed output still matches.
    pub fn open(dir: &Path, command: &str) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let bytes = std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        let manifest: Manifest =
            serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?;
        ensure!(manifest.tool == TOOL, "{} was not written by {TOOL}", path.display());
        if manifest.command != command {
            bail!(
                "{} holds '{}' output, expected '{command}'",
                dir.display(),
                manifest.command
            );
        }
        for (name, expected) in &manifest.outputs {
            let file = dir.join(name);
            let data = std::fs::read(&file).with_context(|| format!("reading {}", file.display()))?;
            ensure!(
                &sha256_hex(&data) == expected,
                "{} does not match its manifest hash",
                file.display()
            );
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            hash: sha256_hex(&bytes),
            manifest,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn tensor(&self, name: &str) -> Result<Tensor> {
        Tensor::read(&self.path(name))
    }

    pub fn input_ref(&self, role: &str) -> InputRef {
        InputRef {
            role: role.into(),
            manifest_sha256: self.hash.clone(),
        }
    }
}

/// Collects output files in memory and commits them with their manifest.
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>, bool)>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes, true));
    }

    pub fn add_tensor(&mut self, name: &str, tensor: &Tensor) {
        self.add(name, tensor.encode());
    }

    /// An output whose content depends on wall-clock time.
    pub fn add_timing(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes, false));
    }

    /// Writes every file, the manifest and the sidecars; returns the
    /// manifest hash.
    pub fn commit(self, mut manifest: Manifest) -> Result<String> {
        std::fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        manifest.outputs.clear();
        manifest.timing_outputs.clear();
        for (name, bytes, hashed) in &self.files {
            if *hashed {
                manifest.outputs.insert(name.clone(), sha256_hex(bytes));
            } else {
                manifest.timing_outputs.push(name.clone());
            }
        }
        let mut text = serde_json::to_vec_pretty(&manifest)?;
        text.push(b'\n');
        let hash = sha256_hex(&text);
        for (name, bytes, hashed) in &self.files {
            write_atomic(&self.dir.join(name), bytes)?;
            let sidecar = match hashed {
                true => serde_json::json!({ "manifest_sha256": hash, "sha256": sha256_hex(bytes) }),
                false => serde_json::json!({ "manifest_sha256": hash }),
            };
            let mut side = serde_json::to_vec_pretty(&sidecar)?;
            side.push(b'\n');
            write_atomic(&self.dir.join(format!("{name}.json")), &side)?;
        }
        write_atomic(&self.dir.join(MANIFEST_FILE), &text)?;
        Ok(hash)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commit_then_open() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputSet::new(dir.path());
        out.add("a.bin", vec![1, 2, 3]);
        out.add_timing("t.csv", b"seconds\n0.1\n".to_vec());
        let mut m = Manifest::new("demo", &RunConfig::default());
        m.seed = Some(4);
        let hash = out.commit(m).unwrap();
        let art = Artifact::open(dir.path(), "demo").unwrap();
        assert_eq!(art.hash, hash);
        assert_eq!(art.manifest.seed, Some(4));
        assert_eq!(art.manifest.timing_outputs, vec!["t.csv".to_string()]);
        let side: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join("a.bin.json")).unwrap()).unwrap();
        assert_eq!(side["manifest_sha256"], hash.as_str());
        assert!(Artifact::open(dir.path(), "other").is_err());
    }

    #[test]
    fn tampered_outputs_are_detected() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputSet::new(dir.path());
        out.add("a.bin", vec![1, 2, 3]);
        out.commit(Manifest::new("demo", &RunConfig::default())).unwrap();
        std::fs::write(dir.path().join("a.bin"), [9u8]).unwrap();
        assert!(Artifact::open(dir.path(), "demo").is_err());
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
