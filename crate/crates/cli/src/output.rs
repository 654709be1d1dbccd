//! Run directory: data files plus a manifest that lists every one of them.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use tfstar::RadialProfile;

pub const MANIFEST: &str = "manifest.json";

/// Fixed 17-significant-digit formatting for every float written to CSV.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub file: String,
    pub kind: String,
    /// Data rows for CSV files.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
}

pub struct RunDir {
    dir: PathBuf,
    records: Vec<Record>,
}

impl RunDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(RunDir { dir: dir.to_path_buf(), records: Vec::new() })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    fn open(&mut self, name: &str, kind: &str, rows: Option<usize>) -> Result<BufWriter<File>> {
        if self.records.iter().any(|r| r.file == name) {
            anyhow::bail!("artifact {name} written twice");
        }
        let path = self.dir.join(name);
        let f = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        self.records.push(Record { file: name.to_string(), kind: kind.to_string(), rows });
        Ok(BufWriter::new(f))
    }

    pub fn profile(&mut self, name: &str, kind: &str, profile: &RadialProfile) -> Result<()> {
        let mut w = self.open(name, kind, Some(profile.len()))?;
        profile.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// CSV from pre-formatted cells.
    pub fn table(&mut self, name: &str, kind: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = self.open(name, kind, Some(rows.len()))?;
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, kind: &str, content: &str) -> Result<()> {
        let mut w = self.open(name, kind, None)?;
        w.write_all(content.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, kind: &str, value: &T) -> Result<()> {
        let mut w = self.open(name, kind, None)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_manifest<T: Serialize>(&self, manifest: &T) -> Result<()> {
        let path = self.dir.join(MANIFEST);
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("cannot write {}", path.display()))?);
        serde_json::to_writer_pretty(&mut w, manifest)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}
