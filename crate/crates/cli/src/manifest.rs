//! Run manifests: the full command configuration plus checksums of every
//! input and output, enough to re-run and compare.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use skillnet::data::io::SCHEMA_VERSION;

use crate::{Command, Format, Global};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: u64,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub format: Format,
    pub config: Command,
    pub out: PathBuf,
    pub inputs: Vec<FileDigest>,
    /// Paths relative to `out`.
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn absolute(path: &mut PathBuf) -> anyhow::Result<()> {
    *path = std::path::absolute(&*path).with_context(|| format!("resolving {}", path.display()))?;
    Ok(())
}

/// Collects the inputs read and outputs written by one command.
pub struct Session {
    out: PathBuf,
    inputs: Vec<PathBuf>,
    outputs: Vec<FileDigest>,
}

impl Session {
    pub fn new(global: &Global) -> anyhow::Result<Self> {
        let out = std::path::absolute(&global.out)?;
        Ok(Session {
            out,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    /// Records `path` as an input and returns it.
    pub fn input<'p>(&mut self, path: &'p Path) -> &'p Path {
        if !self.inputs.iter().any(|p| p == path) {
            self.inputs.push(path.to_path_buf());
        }
        path
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(FileDigest {
            path: PathBuf::from(name),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        self.write(name, skillnet::data::io::to_json_string(value)?.as_bytes())
    }

    pub fn finish(mut self, command: &Command, global: &Global) -> anyhow::Result<()> {
        let inputs = self
            .inputs
            .iter()
            .map(|p| {
                let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
                Ok(FileDigest {
                    path: p.clone(),
                    sha256: sha256_hex(&bytes),
                })
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        let manifest = RunManifest {
            version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.name().to_string(),
            seed: global.seed,
            format: global.format,
            config: command.clone(),
            out: self.out.clone(),
            inputs,
            outputs: std::mem::take(&mut self.outputs),
        };
        let text = skillnet::data::io::to_json_string(&manifest)?;
        fs::create_dir_all(&self.out)?;
        let path = self.out.join(MANIFEST_FILE);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
