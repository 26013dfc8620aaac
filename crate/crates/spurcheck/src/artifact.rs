//! Things every artifact shares: the provenance header, atomic writes and
//! the per-directory lock.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Written into every derived artifact so that outputs of different
/// configurations are never combined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    /// `# spurcheck <kind> config=<hash> seed=<seed>`
    pub fn comment_line(&self, kind: &str) -> String {
        format!("# spurcheck {kind} config={} seed={}\n", self.config_hash, self.seed)
    }

    /// JSON object used as the first line of line-delimited artifacts.
    pub fn json_line(&self, kind: &str) -> String {
        let v = serde_json::json!({ "artifact": kind, "config": self.config_hash, "seed": self.seed });
        format!("{v}\n")
    }

    /// Parses either header form.
    pub fn parse(line: &str) -> Option<(String, Provenance)> {
        let line = line.trim_end();
        if let Some(rest) = line.strip_prefix("# spurcheck ") {
            let mut parts = rest.split(' ');
            let kind = parts.next()?.to_string();
            let hash = parts.next()?.strip_prefix("config=")?.to_string();
            let seed = parts.next()?.strip_prefix("seed=")?.parse().ok()?;
            return Some((kind, Provenance { config_hash: hash, seed }));
        }
        let v: serde_json::Value = serde_json::from_str(line).ok()?;
        Some((
            v.get("artifact")?.as_str()?.to_string(),
            Provenance { config_hash: v.get("config")?.as_str()?.to_string(), seed: v.get("seed")?.as_u64()? },
        ))
    }
}

/// Reads the header of an artifact without loading the rest.
pub fn read_provenance(path: &Path) -> Result<Provenance> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first).map_err(|e| Error::io(path, e))?;
    Provenance::parse(&first)
        .map(|(_, p)| p)
        .ok_or_else(|| Error::parse(path, 1, "missing spurcheck provenance header"))
}

/// Fails unless the artifact was produced under `expected`.
pub fn check_provenance(path: &Path, expected: &Provenance) -> Result<()> {
    let found = read_provenance(path)?;
    if found.config_hash != expected.config_hash {
        return Err(Error::ConfigMismatch {
            path: path.to_path_buf(),
            found: found.config_hash,
            expected: expected.config_hash.clone(),
        });
    }
    Ok(())
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = tmp_path(path);
    let mut f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

pub const LOCK_FILE: &str = ".spurcheck.lock";

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<DirLock> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(DirLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(path)),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Formats a float with 17 significant digits, enough to round-trip.
pub fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses a float written by [`f17`] (or any other decimal form).
pub fn parse_f64(s: &str, path: &Path, line: usize) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::parse(path, line, format!("not a number: {s:?}")))
}
