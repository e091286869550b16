//! Run artifacts: CSV tables, WFLD fields, and the sha256 manifest.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::{Error, Result, WaveField, C64};

pub const MANIFEST_NAME: &str = "manifest.txt";

/// Shortest round-trip form, in exponent notation outside [1e-4, 1e15);
/// identical input gives identical text.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn complex(z: C64) -> [String; 2] {
    [num(z.re), num(z.im)]
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Consistency(format!("csv: {other:?}")),
    }
}

/// An output directory that remembers what has been written into it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root, files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    fn open(&mut self, rel: &str) -> Result<BufWriter<fs::File>> {
        let rel = PathBuf::from(rel);
        let path = self.root.join(&rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        if !self.files.contains(&rel) {
            self.files.push(rel);
        }
        Ok(BufWriter::new(fs::File::create(path)?))
    }

    /// RFC-4180 table with a header row.
    pub fn write_csv(&mut self, rel: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(self.open(rel)?);
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            if r.len() != header.len() {
                return Err(Error::Shape(format!("{rel}: row of {} fields under a {}-column header", r.len(), header.len())));
            }
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_text(&mut self, rel: &str, text: &str) -> Result<()> {
        let mut w = self.open(rel)?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn write_wfld(&mut self, rel: &str, field: &WaveField) -> Result<()> {
        let mut w = self.open(rel)?;
        field.write_wfld(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Hash every written file into `manifest.txt` as `sha256  path` lines,
    /// sorted by path, after `#` comment lines for `notes`.
    pub fn write_manifest(&self, notes: &[String]) -> Result<Vec<ManifestEntry>> {
        let mut entries = self
            .files
            .iter()
            .map(|rel| {
                Ok(ManifestEntry { sha256: sha256_file(&self.root.join(rel))?, path: portable(rel) })
            })
            .collect::<Result<Vec<_>>>()?;
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        let mut text = String::new();
        for n in notes {
            text.push_str(&format!("# {n}\n"));
        }
        for e in &entries {
            text.push_str(&format!("{}  {}\n", e.sha256, e.path));
        }
        fs::write(self.root.join(MANIFEST_NAME), text)?;
        Ok(entries)
    }
}

fn portable(p: &Path) -> String {
    p.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect::<Vec<_>>().join("/")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub sha256: String,
    pub path: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut h = Sha256::new();
    let mut f = fs::File::open(path)?;
    std::io::copy(&mut f, &mut h)?;
    Ok(hex::encode(h.finalize()))
}

/// Entries and `#` notes of a manifest file.
pub fn read_manifest(path: &Path) -> Result<(Vec<ManifestEntry>, Vec<String>)> {
    let text = fs::read_to_string(path)?;
    let mut entries = Vec::new();
    let mut notes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(n) = line.strip_prefix("# ") {
            notes.push(n.to_string());
            continue;
        }
        match line.split_once("  ") {
            Some((h, p)) if h.len() == 64 => entries.push(ManifestEntry { sha256: h.into(), path: p.into() }),
            _ => return Err(Error::Parse { line: i + 1, column: 1, message: "expected `sha256  path`".into() }),
        }
    }
    Ok((entries, notes))
}

/// Paths whose current hash differs from the manifest, or that are missing.
pub fn verify_manifest(root: &Path) -> Result<Vec<String>> {
    let (entries, _) = read_manifest(&root.join(MANIFEST_NAME))?;
    Ok(entries
        .into_iter()
        .filter(|e| sha256_file(&root.join(&e.path)).map_or(true, |h| h != e.sha256))
        .map(|e| e.path)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Grid1D, Space};

    #[test]
    fn manifest_lists_every_file_with_its_hash() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write_csv("a.csv", &["x", "note"], &[vec![num(0.1), "has, comma".into()], vec![num(-2.0), "say \"hi\"".into()]]).unwrap();
        let g = Grid1D::new(4, 2.0).unwrap();
        let f = WaveField::new(vec![g], vec![C64::new(1.0, 0.5); 4], Space::Position).unwrap();
        out.write_wfld("p0/f.wfld", &f).unwrap();
        let entries = out.write_manifest(&["quick".into()]).unwrap();
        assert_eq!(entries.len(), 2);
        let (read, notes) = read_manifest(&dir.path().join(MANIFEST_NAME)).unwrap();
        assert_eq!(read, entries);
        assert_eq!(notes, vec!["quick".to_string()]);
        assert!(verify_manifest(dir.path()).unwrap().is_empty());
        let text = fs::read_to_string(dir.path().join("a.csv")).unwrap();
        assert_eq!(text, "x,note\r\n0.1,\"has, comma\"\r\n-2,\"say \"\"hi\"\"\"\r\n");
        fs::write(dir.path().join("a.csv"), "tampered").unwrap();
        assert_eq!(verify_manifest(dir.path()).unwrap(), vec!["a.csv".to_string()]);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        assert!(matches!(out.write_csv("b.csv", &["a", "b"], &[vec!["1".into()]]), Err(Error::Shape(_))));
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, 1.7e-9, 36.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1.7e-9), "1.7e-9");
        assert_eq!(num(36.0), "36");
    }
}
