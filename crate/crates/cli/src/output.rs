//! Artifact writing: CSV tables, JSON documents and the run manifest.
//!
//! Every CSV row carries the `seed` and `run_id` columns and every JSON document
//! carries both fields, so each artifact can be matched to its manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Format;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Cell text for an optional number; missing values are empty cells.
pub fn opt(x: Option<f64>) -> String {
    x.map(lepage_core::paths::format_f64).unwrap_or_default()
}

pub fn num(x: f64) -> String {
    lepage_core::paths::format_f64(x)
}

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub file: String,
    pub sha256: String,
}

pub struct Output {
    dir: PathBuf,
    formats: Vec<Format>,
    run_id: String,
    seed: u64,
    files: Vec<FileRecord>,
}

impl Output {
    pub fn new(dir: &Path, formats: &[Format], run_id: &str, seed: u64) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            formats: formats.to_vec(),
            run_id: run_id.to_string(),
            seed,
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.files.push(FileRecord {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Writes `<name>.csv` if CSV output is enabled.
    pub fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
        if !self.formats.contains(&Format::Csv) {
            return Ok(());
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut head: Vec<&str> = header.to_vec();
        head.extend(["seed", "run_id"]);
        w.write_record(&head)?;
        let seed = self.seed.to_string();
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(
                row.iter()
                    .map(String::as_str)
                    .chain([seed.as_str(), self.run_id.as_str()]),
            )?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
        self.write(&format!("{name}.csv"), &bytes)
    }

    /// Writes `<name>.json` if JSON output is enabled.
    pub fn json<T: Serialize>(&mut self, name: &str, data: &T) -> anyhow::Result<()> {
        if !self.formats.contains(&Format::Json) {
            return Ok(());
        }
        let doc = serde_json::json!({
            "run_id": self.run_id,
            "seed": self.seed,
            "data": data,
        });
        let mut bytes = serde_json::to_vec_pretty(&doc)?;
        bytes.push(b'\n');
        self.write(&format!("{name}.json"), &bytes)
    }

    pub fn finish(self, mut manifest: serde_json::Value) -> anyhow::Result<PathBuf> {
        manifest["outputs"] = serde_json::to_value(&self.files)?;
        let path = self.dir.join("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
