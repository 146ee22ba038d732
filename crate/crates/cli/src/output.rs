//! Output staging: every file of a run is written into a temporary sibling
//! directory that replaces `--out` only once the run has succeeded.

use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::ser::Formatter;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Compact JSON with every float in 17-significant-digit scientific notation.
struct RoundTripFormatter;

impl Formatter for RoundTripFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(macroreal::fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, RoundTripFormatter);
    value
        .serialize(&mut ser)
        .expect("in-memory serialization cannot fail");
    buf.push(b'\n');
    buf
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool_version: String,
    pub command: String,
    pub config_path: String,
    pub config_sha256: String,
    pub workers: usize,
    /// Hashes of auxiliary input files (explicit-matrix fixtures).
    pub inputs: Vec<OutputFile>,
    pub outputs: Vec<OutputFile>,
    pub stages: Vec<StageTiming>,
    pub wall_clock_seconds: f64,
    /// Headline numbers of the run (fits, verdicts), duplicated from the data files.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results: Option<serde_json::Value>,
}

/// Files produced by one command, held in memory until committed.
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
    stages: Vec<StageTiming>,
    started: Instant,
}

impl Default for OutputSet {
    fn default() -> Self {
        Self::new()
    }
}

impl OutputSet {
    pub fn new() -> Self {
        OutputSet {
            files: Vec::new(),
            stages: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn add(&mut self, name: &str, contents: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), contents.into()));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) {
        self.add(name, to_json(value));
    }

    /// Runs `f` and records its wall time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.stages.push(StageTiming {
            stage: stage.to_string(),
            seconds: t0.elapsed().as_secs_f64(),
        });
        out
    }

    /// Writes all files plus `manifest.json` and swaps the directory into place.
    pub fn commit(mut self, out: &Path, mut manifest: Manifest) -> Result<(), CliError> {
        manifest.outputs = self
            .files
            .iter()
            .map(|(n, b)| OutputFile {
                name: n.clone(),
                sha256: sha256_hex(b),
                bytes: b.len(),
            })
            .collect();
        manifest.stages = std::mem::take(&mut self.stages);
        manifest.wall_clock_seconds = self.started.elapsed().as_secs_f64();
        let manifest_bytes = to_json(&manifest);

        let parent = match out.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&parent).map_err(|e| CliError::io(&parent, e))?;
        let stage = tempfile::Builder::new()
            .prefix(".macroreal-stage-")
            .tempdir_in(&parent)
            .map_err(|e| CliError::io(&parent, e))?;
        for (name, bytes) in self.files.iter().chain(std::iter::once(&(
            "manifest.json".to_string(),
            manifest_bytes,
        ))) {
            let p = stage.path().join(name);
            std::fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))?;
        }
        let old = if out.exists() {
            let backup = tempfile::Builder::new()
                .prefix(".macroreal-old-")
                .tempdir_in(&parent)
                .map_err(|e| CliError::io(&parent, e))?;
            let target = backup.path().join("previous");
            std::fs::rename(out, &target).map_err(|e| CliError::io(out, e))?;
            Some(backup)
        } else {
            None
        };
        let staged = stage.keep();
        if let Err(e) = std::fs::rename(&staged, out) {
            if let Some(b) = &old {
                let _ = std::fs::rename(b.path().join("previous"), out);
            }
            let _ = std::fs::remove_dir_all(&staged);
            return Err(CliError::io(out, e));
        }
        drop(old);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_digits() {
        let s = String::from_utf8(to_json(&serde_json::json!({"x": 0.1, "n": 3}))).unwrap();
        assert_eq!(s, "{\"n\":3,\"x\":1.0000000000000001e-1}\n");
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64().unwrap(), 0.1);
    }

    #[test]
    fn commit_replaces_directory() {
        let root = tempfile::tempdir().unwrap();
        let out = root.path().join("run");
        std::fs::create_dir(&out).unwrap();
        std::fs::write(out.join("stale.csv"), "x").unwrap();
        let mut set = OutputSet::new();
        set.add("a.csv", "y,density\n");
        let manifest = Manifest {
            tool_version: "0".into(),
            command: "test".into(),
            config_path: "c.json".into(),
            config_sha256: String::new(),
            workers: 1,
            inputs: vec![],
            outputs: vec![],
            stages: vec![],
            wall_clock_seconds: 0.0,
            results: None,
        };
        set.commit(&out, manifest).unwrap();
        assert!(out.join("a.csv").exists() && out.join("manifest.json").exists());
        assert!(!out.join("stale.csv").exists());
        let leftovers: Vec<_> = std::fs::read_dir(root.path()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }
}
