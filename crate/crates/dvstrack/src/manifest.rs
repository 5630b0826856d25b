//! Run manifests: flat `key=value` records of a fully resolved invocation.
//!
//! Keys other than `tool_version`, `command` and `scene` are long flag
//! names, so a manifest replays by turning each entry back into `--key=value`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const POSITIONAL: [&str; 3] = ["tool_version", "command", "scene"];

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ManifestError {
    #[error("manifest line {line}: expected key=value")]
    Malformed { line: usize },
    #[error("manifest line {line}: duplicate key {key:?}")]
    Duplicate { line: usize, key: String },
    #[error("manifest has no command")]
    MissingCommand,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.set("tool_version", TOOL_VERSION);
        m.set("command", command);
        m
    }

    /// Sets `key`, replacing any earlier value in place.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, ManifestError> {
        let mut m = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ManifestError::Malformed { line: i + 1 })?;
            if k.is_empty() {
                return Err(ManifestError::Malformed { line: i + 1 });
            }
            if m.get(k).is_some() {
                return Err(ManifestError::Duplicate {
                    line: i + 1,
                    key: k.to_string(),
                });
            }
            m.entries.push((k.to_string(), v.to_string()));
        }
        if m.get("command").is_none() {
            return Err(ManifestError::MissingCommand);
        }
        Ok(m)
    }

    /// Command-line arguments (without the program name) that reproduce the run.
    pub fn to_args(&self) -> Result<Vec<String>, ManifestError> {
        let mut args = vec![self.get("command").ok_or(ManifestError::MissingCommand)?.to_string()];
        if let Some(scene) = self.get("scene") {
            args.push(scene.to_string());
        }
        for (k, v) in &self.entries {
            if !POSITIONAL.contains(&k.as_str()) {
                args.push(format!("--{k}={v}"));
            }
        }
        Ok(args)
    }
}

/// Where the manifest for `output` lives: the same path with `.manifest`
/// appended.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}
