use std::io::Write;
use std::path::Path;

use anyhow::Context;
use halftest::distributions::{io::read_auto, Dataset};
use halftest::testers::TesterConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::exit::Failure;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Constants {
    pub c1: f64,
    pub c_hyper: f64,
    pub lambda: f64,
    pub gamma: f64,
    /// `C1·λ^C1`.
    pub scale: f64,
    pub sdp_tol: f64,
}

impl From<&TesterConfig> for Constants {
    fn from(c: &TesterConfig) -> Self {
        Self {
            c1: c.c1,
            c_hyper: c.c_hyper,
            lambda: c.lambda,
            gamma: c.gamma,
            scale: c.scale(),
            sdp_tol: c.sdp_tol,
        }
    }
}

/// Envelope shared by every JSON report.
#[derive(Debug, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub schema: u32,
    pub command: &'a str,
    pub version: &'static str,
    /// SHA-256 of the resolved configuration, serialized as JSON.
    pub config_hash: String,
    pub constants: Constants,
    #[serde(flatten)]
    pub body: T,
}

impl<'a, T: Serialize> Report<'a, T> {
    pub fn new(command: &'a str, resolved: &impl Serialize, constants: Constants, body: T) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            command,
            version: env!("CARGO_PKG_VERSION"),
            config_hash: config_hash(resolved),
            constants,
            body,
        }
    }

    pub fn to_json(&self) -> Result<String, Failure> {
        serde_json::to_string_pretty(self)
            .context("serializing report")
            .map_err(Failure::usage)
    }
}

/// Prints to stdout; a closed pipe is not an error.
pub fn emit(text: &str) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::io(e)),
        _ => Ok(()),
    }
}

pub fn config_hash(resolved: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(resolved).unwrap_or_default();
    format!("{:x}", Sha256::digest(&bytes))
}

/// Writes via a temporary file in the target directory and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let go = || -> anyhow::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(path)?;
        Ok(())
    };
    go().with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::io)
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::io)
}

/// Missing or unreadable files are I/O failures; malformed content is a
/// usage failure.
pub fn read_dataset(path: &Path) -> Result<Dataset, Failure> {
    let bytes = read_file(path)?;
    read_auto(&bytes)
        .with_context(|| format!("parsing dataset {}", path.display()))
        .map_err(Failure::usage)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&serde_json::json!({"seed": 1}));
        assert_eq!(a, config_hash(&serde_json::json!({"seed": 1})));
        assert_ne!(a, config_hash(&serde_json::json!({"seed": 2})));
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
