//! Artifact generation and atomic output writing.
//!
//! Every subcommand produces its artifacts as plain byte buffers first; the
//! writer then lands them atomically (temp file + rename) and finishes with
//! a manifest listing each file with its SHA-256 checksum. Nothing in an
//! artifact depends on wall-clock time, so identical configurations produce
//! bitwise-identical outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn json<T: Serialize>(name: &str, value: &T) -> anyhow::Result<Artifact> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(Artifact {
            name: name.to_string(),
            bytes,
        })
    }

    pub fn text(name: &str, text: String) -> Artifact {
        Artifact {
            name: name.to_string(),
            bytes: text.into_bytes(),
        }
    }
}

/// CSV writer with shortest-round-trip float formatting.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Csv {
        Csv {
            buf: header.join(",") + "\n",
        }
    }

    pub fn row(&mut self, cells: &[CsvCell<'_>]) {
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            match cell {
                CsvCell::Float(v) => {
                    let _ = write!(self.buf, "{v}");
                }
                CsvCell::Int(v) => {
                    let _ = write!(self.buf, "{v}");
                }
                CsvCell::Str(s) => self.buf.push_str(s),
            }
        }
        self.buf.push('\n');
    }

    pub fn into_artifact(self, name: &str) -> Artifact {
        Artifact::text(name, self.buf)
    }
}

pub enum CsvCell<'a> {
    Float(f64),
    Int(i64),
    Str(&'a str),
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

#[derive(Serialize)]
struct ManifestEntry {
    name: String,
    sha256: String,
    bytes: usize,
}

#[derive(Serialize)]
struct Manifest {
    schema: &'static str,
    version: &'static str,
    config_sha256: String,
    files: Vec<ManifestEntry>,
}

/// Writes every artifact atomically into `dir`, then the manifest last.
pub fn write_artifacts(dir: &Path, config_text: &str, artifacts: &[Artifact]) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut entries = Vec::new();
    for artifact in artifacts {
        write_atomic(dir, &artifact.name, &artifact.bytes)?;
        entries.push(ManifestEntry {
            name: artifact.name.clone(),
            sha256: sha256_hex(&artifact.bytes),
            bytes: artifact.bytes.len(),
        });
    }
    let manifest = Manifest {
        schema: "phaseflow-manifest/1",
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: sha256_hex(config_text.as_bytes()),
        files: entries,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    write_atomic(dir, "manifest.json", &bytes)?;
    Ok(())
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
    let tmp = dir.join(format!("{name}.tmp"));
    let final_path = dir.join(name);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, &final_path)
        .with_context(|| format!("renaming into {}", final_path.display()))?;
    Ok(())
}
