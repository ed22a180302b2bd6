//! Output directory handling: atomic writes, hash-stamped CSV/JSON and the
//! run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use suptest_core::numeric::fmt_g17;

use crate::CliError;

/// sha256 over the raw config bytes followed by the effective seed (LE).
pub fn config_hash(config: &[u8], seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(config);
    h.update(seed.to_le_bytes());
    hex::encode(h.finalize())
}

/// Writes `bytes` to `path` through a temp file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

/// A CSV cell.
pub enum Cell {
    Int(u64),
    Real(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(x) => fmt_g17(*x),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config_hash: &'a str,
    result: &'a T,
}

#[derive(Serialize)]
struct Versions {
    #[serde(rename = "suptest-cli")]
    cli: &'static str,
    #[serde(rename = "suptest-core")]
    core: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    config_hash: &'a str,
    seed: u64,
    versions: Versions,
    status: &'a str,
    artifacts: &'a [String],
}

/// One run's output directory.
pub struct Run {
    out: PathBuf,
    subcommand: &'static str,
    hash: String,
    seed: u64,
    artifacts: Vec<String>,
}

impl Run {
    pub fn new(subcommand: &'static str, out: PathBuf, config: &[u8], seed: u64) -> Result<Self, CliError> {
        std::fs::create_dir_all(&out)?;
        Ok(Self { out, subcommand, hash: config_hash(config, seed), seed, artifacts: vec![] })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.out.join(name), bytes)?;
        if !self.artifacts.iter().any(|a| a == name) {
            self.artifacts.push(name.to_string());
        }
        Ok(())
    }

    /// CSV with a `# config_hash:` line, then the header, then rows.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<Cell>>) -> Result<(), CliError> {
        let mut s = format!("# config_hash: {}\n{}\n", self.hash, header.join(","));
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        self.put(name, s.as_bytes())
    }

    /// `{"config_hash": …, "result": value}`.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let hash = self.hash.clone();
        self.json_raw(name, &Envelope { config_hash: &hash, result: value })
    }

    /// A value that carries its own hash field.
    pub fn json_raw<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Run(e.to_string()))?;
        s.push('\n');
        self.put(name, s.as_bytes())
    }

    /// Writes manifest.json; called last.
    pub fn finish(mut self, status: &str) -> Result<(), CliError> {
        let artifacts = std::mem::take(&mut self.artifacts);
        let hash = self.hash.clone();
        let manifest = Manifest {
            subcommand: self.subcommand,
            config_hash: &hash,
            seed: self.seed,
            versions: Versions { cli: env!("CARGO_PKG_VERSION"), core: suptest_core::VERSION },
            status,
            artifacts: &artifacts,
        };
        self.json_raw("manifest.json", &manifest)
    }
}
