//! CSV artifacts. Each file starts with one comment line naming the config
//! hash and the crate version, then a header row.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::config_hash;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_sha256: String,
    pub version: String,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(config_text: &str, seed: Option<u64>) -> Self {
        Provenance { config_sha256: config_hash(config_text), version: env!("CARGO_PKG_VERSION").to_string(), seed }
    }

    pub fn comment(&self) -> String {
        let mut s = format!("# config_sha256={} version={}", self.config_sha256, self.version);
        if let Some(seed) = self.seed {
            s.push_str(&format!(" seed={seed}"));
        }
        s
    }
}

/// Render a table as CSV text with the provenance line on top.
pub fn csv_text<R, I>(prov: &Provenance, header: &[&str], rows: R) -> Result<String>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    let mut out = Vec::new();
    writeln!(out, "{}", prov.comment()).map_err(Error::from)?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
        for r in rows {
            let rec: Vec<String> = r.into_iter().map(|x| x.as_ref().to_string()).collect();
            w.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
    }
    String::from_utf8(out).map_err(|e| Error::Io(e.to_string()))
}

/// Output directory; created on first write.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub prov: Provenance,
    pub written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path, prov: Provenance) -> Self {
        Artifacts { dir: dir.to_path_buf(), prov, written: Vec::new() }
    }

    pub fn csv<R, I>(&mut self, name: &str, header: &[&str], rows: R) -> Result<PathBuf>
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        let text = csv_text(&self.prov, header, rows)?;
        self.text(name, &text)
    }

    pub fn text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.written.push(path.clone());
        Ok(path)
    }
}

/// Shortest round-trip formatting, so equal numbers give equal bytes.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}
