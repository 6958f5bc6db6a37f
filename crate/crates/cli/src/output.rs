//! CSV tables, atomic file writes and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

/// Scientific notation with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn flag(b: bool) -> String {
    if b { "true" } else { "false" }.to_string()
}

/// A CSV body with a fixed header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().context("output path has no parent directory")?;
    let name = path.file_name().context("output path has no file name")?.to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Record of one run; written last as `manifest.txt`.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_hash: String,
    pub seed: u64,
    pub versions: Vec<(String, String)>,
    /// Orientation constant of the ∂̄ solver, when one was calibrated.
    pub c0: Option<(f64, f64)>,
    pub wall_times: Vec<(String, Duration)>,
    pub files: Vec<FileEntry>,
    pub dir: PathBuf,
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("subcommand {}\n", self.subcommand));
        s.push_str(&format!("config_hash {}\n", self.config_hash));
        s.push_str(&format!("seed {}\n", self.seed));
        for (name, v) in &self.versions {
            s.push_str(&format!("version {name} {v}\n"));
        }
        match self.c0 {
            Some((re, im)) => s.push_str(&format!("c0 {} {}\n", num(re), num(im))),
            None => s.push_str("c0 none\n"),
        }
        for (stage, t) in &self.wall_times {
            s.push_str(&format!("wall_time {stage} {:.6}\n", t.as_secs_f64()));
        }
        for f in &self.files {
            s.push_str(&format!("file {} {} {}\n", f.name, f.bytes, f.sha256));
        }
        s
    }

    /// Recomputes every listed checksum; returns the names that no longer match.
    pub fn verify(dir: &Path) -> Result<Vec<String>> {
        let text = fs::read_to_string(dir.join("manifest.txt")).context("reading manifest.txt")?;
        let mut bad = Vec::new();
        for line in text.lines() {
            let parts: Vec<&str> = line.split(' ').collect();
            if parts.len() == 4 && parts[0] == "file" {
                let ok = fs::read(dir.join(parts[1]))
                    .map(|b| b.len().to_string() == parts[2] && sha256_hex(&b) == parts[3])
                    .unwrap_or(false);
                if !ok {
                    bad.push(parts[1].to_string());
                }
            }
        }
        Ok(bad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_seventeen_digits() {
        assert_eq!(num(1.0), "1.0000000000000000e0");
        assert_eq!(num(-0.1), "-1.0000000000000001e-1");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn table_renders_with_lf() {
        let mut t = Table::new(&["k", "s_k"]);
        t.push(vec!["1".into(), num(0.5)]);
        assert_eq!(t.render(), "k,s_k\n1,5.0000000000000000e-1\n");
    }
}
