//! Versioned on-disk artifacts.
//!
//! Every stage output is a JSON envelope:
//!
//! ```json
//! {"kind": "corpus", "schema_version": 1, "config_hash": "…",
//!  "inputs": {"…": "…"}, "payload": {…}}
//! ```
//!
//! `config_hash` covers the producing stage's configuration and the hashes
//! of its inputs, so a downstream artifact pins the exact lineage it was
//! built from.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: not a valid artifact: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{path}: expected a {expected} artifact, found {found}")]
    Kind { path: PathBuf, expected: String, found: String },
    #[error("{path}: {kind} schema version {found} is not supported (expected {expected}); rebuild it with this version")]
    Version { path: PathBuf, kind: String, expected: u32, found: u32 },
    #[error("{path}: built from a different {input} (hash {recorded}, loaded {actual}); rebuild downstream stages")]
    Lineage { path: PathBuf, input: String, recorded: String, actual: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArtifactKind {
    pub name: &'static str,
    pub version: u32,
}

pub const CORPUS: ArtifactKind = ArtifactKind { name: "corpus", version: 1 };
pub const STRUCTURED: ArtifactKind = ArtifactKind { name: "structured", version: 1 };
pub const TAXONOMY: ArtifactKind = ArtifactKind { name: "taxonomy", version: 1 };
pub const INDEX: ArtifactKind = ArtifactKind { name: "index", version: 1 };

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub kind: String,
    pub schema_version: u32,
    pub config_hash: String,
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
    pub payload: T,
}

/// Short SHA-256 hex digest of a value's JSON form.
pub fn config_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    let digest = Sha256::digest(&bytes);
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl<T: Serialize> Artifact<T> {
    /// `config` and the input hashes together determine `config_hash`.
    pub fn new<C: Serialize>(kind: ArtifactKind, config: &C, inputs: BTreeMap<String, String>, payload: T) -> Self {
        let config_hash = config_hash(&(config, &inputs));
        Self { kind: kind.name.to_string(), schema_version: kind.version, config_hash, inputs, payload }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), ArtifactError> {
        let io = |source| ArtifactError::Io { path: path.to_path_buf(), source };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        std::fs::write(path, self.to_json()).map_err(io)
    }
}

impl<T: DeserializeOwned> Artifact<T> {
    pub fn read(path: &Path, kind: ArtifactKind) -> Result<Self, ArtifactError> {
        let text = std::fs::read_to_string(path).map_err(|source| ArtifactError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, path, kind)
    }

    pub fn parse(text: &str, path: &Path, kind: ArtifactKind) -> Result<Self, ArtifactError> {
        #[derive(Deserialize)]
        struct Header {
            kind: String,
            schema_version: u32,
        }
        let parse = |source| ArtifactError::Parse { path: path.to_path_buf(), source };
        let header: Header = serde_json::from_str(text).map_err(parse)?;
        if header.kind != kind.name {
            return Err(ArtifactError::Kind { path: path.to_path_buf(), expected: kind.name.into(), found: header.kind });
        }
        if header.schema_version != kind.version {
            return Err(ArtifactError::Version {
                path: path.to_path_buf(),
                kind: kind.name.into(),
                expected: kind.version,
                found: header.schema_version,
            });
        }
        serde_json::from_str(text).map_err(parse)
    }
}

impl<T> Artifact<T> {
    /// Fails if this artifact recorded a different hash for `input`.
    pub fn check_input(&self, path: &Path, input: ArtifactKind, actual_hash: &str) -> Result<(), ArtifactError> {
        match self.inputs.get(input.name) {
            Some(recorded) if recorded != actual_hash => Err(ArtifactError::Lineage {
                path: path.to_path_buf(),
                input: input.name.into(),
                recorded: recorded.clone(),
                actual: actual_hash.into(),
            }),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_and_kind_are_checked() {
        let a = Artifact::new(CORPUS, &1u32, BTreeMap::new(), vec![1, 2, 3]);
        let text = a.to_json();
        let p = Path::new("x.json");
        let back: Artifact<Vec<i32>> = Artifact::parse(&text, p, CORPUS).unwrap();
        assert_eq!(back, a);
        assert!(matches!(
            Artifact::<Vec<i32>>::parse(&text, p, INDEX),
            Err(ArtifactError::Kind { .. })
        ));
        let bumped = text.replace("\"schema_version\": 1", "\"schema_version\": 7");
        assert!(matches!(
            Artifact::<Vec<i32>>::parse(&bumped, p, CORPUS),
            Err(ArtifactError::Version { found: 7, .. })
        ));
    }

    #[test]
    fn hash_depends_on_config_and_inputs() {
        let a = Artifact::new(INDEX, &0.4f64, BTreeMap::new(), ());
        let b = Artifact::new(INDEX, &0.5f64, BTreeMap::new(), ());
        let c = Artifact::new(INDEX, &0.4f64, BTreeMap::from([("corpus".to_string(), "ab".to_string())]), ());
        assert_ne!(a.config_hash, b.config_hash);
        assert_ne!(a.config_hash, c.config_hash);
        assert_eq!(a.config_hash, Artifact::new(INDEX, &0.4f64, BTreeMap::new(), ()).config_hash);
        assert_eq!(a.config_hash.len(), 16);
    }
}
