//! Run-directory writer that hashes every file it produces.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One produced file as listed in the manifest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Path relative to the run directory.
    pub name: String,
    /// Data rows for CSV files (header excluded), 1 for JSON documents.
    pub rows: usize,
    pub sha256: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes artifacts into one directory and keeps a record of each.
///
/// Names are plain relative paths; anything that would escape the run
/// directory is refused.
pub struct ArtifactSink {
    dir: PathBuf,
    files: Vec<FileRecord>,
}

impl ArtifactSink {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[FileRecord] {
        &self.files
    }

    fn target(&self, name: &str) -> Result<PathBuf> {
        let p = Path::new(name);
        if p.is_absolute() || p.components().any(|c| !matches!(c, std::path::Component::Normal(_))) {
            bail!("artifact name {name:?} must be a plain relative path");
        }
        if self.files.iter().any(|f| f.name == name) {
            bail!("artifact {name} written twice");
        }
        Ok(self.dir.join(p))
    }

    fn push(&mut self, name: &str, rows: usize, bytes: &[u8]) -> Result<()> {
        let path = self.target(name)?;
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut f = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
        self.files.push(FileRecord {
            name: name.to_string(),
            rows,
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    /// CSV with a header row; every row must match the header width.
    pub fn csv<R, I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: ToString,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        let mut count = 0;
        for row in rows {
            let cells: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
            if cells.len() != header.len() {
                bail!("{name}: row {count} has {} cells, header has {}", cells.len(), header.len());
            }
            w.write_record(&cells)?;
            count += 1;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{name}: {e}"))?;
        self.push(name, count, &bytes)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.push(name, 1, text.as_bytes())
    }

    pub fn text(&mut self, name: &str, text: &str) -> Result<()> {
        self.push(name, text.lines().count(), text.as_bytes())
    }

    /// Records a file some other writer already placed in the run directory.
    pub fn adopt(&mut self, name: &str) -> Result<()> {
        let path = self.target(name)?;
        let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        let rows = if name.ends_with(".csv") {
            bytes.iter().filter(|&&b| b == b'\n').count().saturating_sub(1)
        } else {
            1
        };
        self.files.push(FileRecord {
            name: name.to_string(),
            rows,
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }
}
