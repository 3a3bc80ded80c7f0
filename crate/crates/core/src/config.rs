//! Pipeline and service configuration (TOML file plus `ODCL_*` overrides).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::DEFAULT_THRESHOLD_MS;
use crate::index::ScoringConfig;
use crate::ingest::IngestConfig;
use crate::taxonomy::ClusteringConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("environment variable {key}: {reason}")]
    Env { key: String, reason: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub dump: PathBuf,
    pub corpus: PathBuf,
    pub gazetteer: PathBuf,
    pub naming: PathBuf,
    pub structured: PathBuf,
    pub taxonomy: PathBuf,
    pub index: PathBuf,
    pub maps_dir: PathBuf,
}

impl Paths {
    /// Standard artifact layout under one directory.
    pub fn under(dir: &Path) -> Self {
        Self {
            dump: dir.join("dump.jsonl"),
            corpus: dir.join("corpus.json"),
            gazetteer: dir.join("gazetteer.txt"),
            naming: dir.join("naming.txt"),
            structured: dir.join("structured.json"),
            taxonomy: dir.join("taxonomy.json"),
            index: dir.join("index.json"),
            maps_dir: dir.join("maps"),
        }
    }
}

impl Default for Paths {
    fn default() -> Self {
        Self::under(Path::new("work"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StructureConfig {
    /// `lexicon` is the only provider shipped.
    pub provider: String,
}

impl Default for StructureConfig {
    fn default() -> Self {
        Self { provider: "lexicon".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    pub recommendations: usize,
    pub history_depth: usize,
    pub dwell_threshold_ms: i64,
    pub title_keywords: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            recommendations: 5,
            history_depth: 50,
            dwell_threshold_ms: DEFAULT_THRESHOLD_MS,
            title_keywords: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub ingest: IngestConfig,
    pub structure: StructureConfig,
    pub clustering: ClusteringConfig,
    pub scoring: ScoringConfig,
    pub service: ServiceConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            paths: Paths::default(),
            ingest: IngestConfig::default(),
            structure: StructureConfig::default(),
            clustering: ClusteringConfig::default(),
            scoring: ScoringConfig::default(),
            service: ServiceConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text, path)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.clustering.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.scoring.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.service.recommendations == 0 {
            return Err(ConfigError::Invalid("service.recommendations must be at least 1".into()));
        }
        if self.service.title_keywords == 0 {
            return Err(ConfigError::Invalid("service.title_keywords must be at least 1".into()));
        }
        if self.service.dwell_threshold_ms < 0 {
            return Err(ConfigError::Invalid("service.dwell_threshold_ms must be non-negative".into()));
        }
        Ok(())
    }

    /// Applies `ODCL_*` overrides from the given variables.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
            v.parse().map_err(|_| ConfigError::Env { key: key.into(), reason: format!("not a number: {v:?}") })
        }
        for (k, v) in vars {
            let (k, v) = (k.as_ref(), v.as_ref());
            match k {
                "ODCL_HOST" => self.service.host = v.into(),
                "ODCL_PORT" => self.service.port = num(k, v)?,
                "ODCL_RECOMMENDATIONS" => self.service.recommendations = num(k, v)?,
                "ODCL_DWELL_THRESHOLD_MS" => self.service.dwell_threshold_ms = num(k, v)?,
                "ODCL_CORPUS" => self.paths.corpus = v.into(),
                "ODCL_STRUCTURED" => self.paths.structured = v.into(),
                "ODCL_TAXONOMY" => self.paths.taxonomy = v.into(),
                "ODCL_INDEX" => self.paths.index = v.into(),
                "ODCL_MAPS_DIR" => self.paths.maps_dir = v.into(),
                "ODCL_DATA_DIR" => {
                    let dump = self.paths.dump.clone();
                    self.paths = Paths { dump, ..Paths::under(Path::new(v)) };
                }
                _ => {}
            }
        }
        self.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_documented_values() {
        let c = PipelineConfig::default();
        assert_eq!((c.clustering.k_ui, c.clustering.k_ve), (8, 6));
        assert_eq!((c.scoring.w_ui, c.scoring.w_ve), (0.4, 0.6));
        assert_eq!(c.service.dwell_threshold_ms, 5000);
        assert_eq!(c.ingest.inclusion_flair, "Feedback Request");
    }

    #[test]
    fn partial_toml_and_env() {
        let mut c = PipelineConfig::from_toml(
            "[scoring]\nw_ui = 1.0\nw_ve = 0.0\n[service]\nport = 9000\n",
            Path::new("c.toml"),
        )
        .unwrap();
        assert_eq!(c.scoring.w_ui, 1.0);
        assert_eq!(c.service.port, 9000);
        c.apply_env([("ODCL_PORT", "9100"), ("ODCL_DATA_DIR", "/tmp/d"), ("HOME", "/root")]).unwrap();
        assert_eq!(c.service.port, 9100);
        assert_eq!(c.paths.index, PathBuf::from("/tmp/d/index.json"));
        assert!(c.apply_env([("ODCL_PORT", "high")]).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(PipelineConfig::from_toml("[scoring]\nw_ui = -1.0\n", Path::new("c")).is_err());
        assert!(PipelineConfig::from_toml("[clustering]\nk_ui = 0\n", Path::new("c")).is_err());
        assert!(PipelineConfig::from_toml("[clustering]\nk_ui = \"eight\"\n", Path::new("c")).is_err());
    }
}
