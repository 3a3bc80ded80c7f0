//! File-to-file batch stages and the bundled demo.
//!
//! Each stage reads the previous stage's artifact, writes its own, and
//! records the hashes of its inputs. [`load_index`] refuses artifacts whose
//! lineage or schema version does not line up.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::{self, config_hash, Artifact, ArtifactError};
use crate::config::{ConfigError, Paths, PipelineConfig};
use crate::embed::{EmbeddingProvider, HashEmbedder};
use crate::index::{IndexError, IndexSnapshot, KnowledgeIndex, ScoringConfig};
use crate::ingest::{build_corpus, parse_dump_str, Corpus, DropReport, IngestConfig, IngestError};
use crate::kmeans::KScanRow;
use crate::structure::{
    structure_corpus, ClassifierProvider, Gazetteer, KeywordKind, LexiconProvider, StructureError, StructuredCorpus,
};
use crate::taxonomy::{
    self, cooccurrence, scan_axis, ClusteringConfig, CooccurrenceMatrix, NamingMap, TaxonomyBuild, TaxonomyError,
};

/// Demo inputs compiled into the binary.
pub mod fixtures {
    pub const DEMO_DUMP: &str = include_str!("../fixtures/demo_dump.jsonl");
    pub const DEMO_GAZETTEER: &str = include_str!("../fixtures/gazetteer.txt");
    pub const DEMO_NAMING: &str = include_str!("../fixtures/naming.txt");
    pub const DEMO_CONFIG: &str = include_str!("../fixtures/demo.toml");
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Ingest { path: PathBuf, source: IngestError },
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: inconsistent corpus: {reason}")]
    Corpus { path: PathBuf, reason: String },
}

fn read(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<(), PipelineError> {
    let io = |source| PipelineError::Io { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io)?;
    }
    fs::write(path, text).map_err(io)
}

fn inputs(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusPayload {
    pub malformed_lines: Vec<usize>,
    pub drops: DropReport,
    pub corpus: Corpus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyPayload {
    pub embedder: String,
    pub dim: usize,
    pub clustering: ClusteringConfig,
    pub build: TaxonomyBuild,
    pub cooccurrence: CooccurrenceMatrix,
}

pub type CorpusArtifact = Artifact<CorpusPayload>;
pub type StructuredArtifact = Artifact<StructuredCorpus>;
pub type TaxonomyArtifact = Artifact<TaxonomyPayload>;
pub type IndexArtifact = Artifact<IndexSnapshot>;

/// Parses a dump file, filters it and writes the corpus artifact.
pub fn ingest(dump: &Path, out: &Path, cfg: &IngestConfig) -> Result<CorpusArtifact, PipelineError> {
    let text = read(dump)?;
    let parsed = parse_dump_str(&text).map_err(|source| PipelineError::Ingest { path: dump.to_path_buf(), source })?;
    let (corpus, drops) = build_corpus(&parsed.records, cfg);
    let dump_hash = config_hash(&text);
    let art = Artifact::new(
        artifact::CORPUS,
        cfg,
        inputs(&[("dump", &dump_hash)]),
        CorpusPayload { malformed_lines: parsed.malformed_lines, drops, corpus },
    );
    art.write(out)?;
    Ok(art)
}

/// Instantiates a classifier provider by its configured name.
pub fn make_provider(name: &str, gazetteer: Gazetteer) -> Result<Box<dyn ClassifierProvider>, StructureError> {
    match name {
        "lexicon" => Ok(Box::new(LexiconProvider::new(gazetteer))),
        other => Err(StructureError::UnknownProvider(other.to_string())),
    }
}

pub fn read_corpus(path: &Path) -> Result<CorpusArtifact, PipelineError> {
    let art: CorpusArtifact = Artifact::read(path, artifact::CORPUS)?;
    art.payload
        .corpus
        .check_consistency()
        .map_err(|reason| PipelineError::Corpus { path: path.to_path_buf(), reason })?;
    Ok(art)
}

/// Segments, labels and tags every retained comment.
pub fn structure(
    corpus_path: &Path,
    gazetteer_path: &Path,
    provider: &str,
    out: &Path,
) -> Result<StructuredArtifact, PipelineError> {
    let corpus = read_corpus(corpus_path)?;
    let gaz_text = read(gazetteer_path)?;
    let provider = make_provider(provider, Gazetteer::parse(&gaz_text)?)?;
    let structured = structure_corpus(&corpus.payload.corpus, provider.as_ref())?;
    let cfg = (provider.name(), config_hash(&gaz_text));
    let art = Artifact::new(artifact::STRUCTURED, &cfg, inputs(&[("corpus", &corpus.config_hash)]), structured);
    art.write(out)?;
    Ok(art)
}

fn read_structured(path: &Path, corpus: &CorpusArtifact) -> Result<StructuredArtifact, PipelineError> {
    let art: StructuredArtifact = Artifact::read(path, artifact::STRUCTURED)?;
    art.check_input(path, artifact::CORPUS, &corpus.config_hash)?;
    Ok(art)
}

/// Clusters both axes, names the clusters and counts co-occurrence.
pub fn build_taxonomy(
    corpus_path: &Path,
    structured_path: &Path,
    naming_path: &Path,
    clustering: &ClusteringConfig,
    out: &Path,
) -> Result<TaxonomyArtifact, PipelineError> {
    let corpus = read_corpus(corpus_path)?;
    let structured = read_structured(structured_path, &corpus)?;
    let naming_text = read(naming_path)?;
    let naming = NamingMap::parse(&naming_text)?;
    let embedder = HashEmbedder::default();
    let build = taxonomy::build_taxonomy(&structured.payload, &embedder, &naming, clustering)?;
    let matrix = cooccurrence(&corpus.payload.corpus, &structured.payload, &build.taxonomy)?;
    let cfg = (clustering, embedder.name(), embedder.dim(), config_hash(&naming_text));
    let art = Artifact::new(
        artifact::TAXONOMY,
        &cfg,
        inputs(&[("corpus", &corpus.config_hash), ("structured", &structured.config_hash)]),
        TaxonomyPayload {
            embedder: embedder.name().to_string(),
            dim: embedder.dim(),
            clustering: clustering.clone(),
            build,
            cooccurrence: matrix,
        },
    );
    art.write(out)?;
    Ok(art)
}

/// Inertia and silhouette over the configured k range for both axes.
pub fn scan_k(structured_path: &Path, clustering: &ClusteringConfig) -> Result<Vec<(KeywordKind, Vec<KScanRow>)>, PipelineError> {
    let structured: StructuredArtifact = Artifact::read(structured_path, artifact::STRUCTURED)?;
    let embedder = HashEmbedder::default();
    [KeywordKind::UiComponent, KeywordKind::VisualElement]
        .into_iter()
        .map(|kind| Ok((kind, scan_axis(kind, &structured.payload, &embedder, clustering)?)))
        .collect()
}

fn read_taxonomy(path: &Path, structured: &StructuredArtifact) -> Result<TaxonomyArtifact, PipelineError> {
    let art: TaxonomyArtifact = Artifact::read(path, artifact::TAXONOMY)?;
    art.check_input(path, artifact::STRUCTURED, &structured.config_hash)?;
    Ok(art)
}

/// Computes per-post stats and writes the index artifact.
pub fn build_index(paths: &Paths, scoring: &ScoringConfig) -> Result<IndexArtifact, PipelineError> {
    let corpus = read_corpus(&paths.corpus)?;
    let structured = read_structured(&paths.structured, &corpus)?;
    let tax = read_taxonomy(&paths.taxonomy, &structured)?;
    let index = KnowledgeIndex::build(
        corpus.payload.corpus,
        structured.payload,
        tax.payload.build.taxonomy,
        *scoring,
    )?;
    let art = Artifact::new(
        artifact::INDEX,
        scoring,
        inputs(&[
            ("corpus", &corpus.config_hash),
            ("structured", &structured.config_hash),
            ("taxonomy", &tax.config_hash),
        ]),
        index.snapshot(),
    );
    art.write(&paths.index)?;
    Ok(art)
}

/// Loads every artifact and rebuilds the in-memory index, checking
/// versions and lineage along the way.
pub fn load_index(paths: &Paths) -> Result<KnowledgeIndex, PipelineError> {
    let corpus = read_corpus(&paths.corpus)?;
    let structured = read_structured(&paths.structured, &corpus)?;
    let tax = read_taxonomy(&paths.taxonomy, &structured)?;
    let idx: IndexArtifact = Artifact::read(&paths.index, artifact::INDEX)?;
    idx.check_input(&paths.index, artifact::CORPUS, &corpus.config_hash)?;
    idx.check_input(&paths.index, artifact::STRUCTURED, &structured.config_hash)?;
    idx.check_input(&paths.index, artifact::TAXONOMY, &tax.config_hash)?;
    Ok(KnowledgeIndex::from_snapshot(
        corpus.payload.corpus,
        structured.payload,
        tax.payload.build.taxonomy,
        &idx.payload,
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub posts: usize,
    pub comments: usize,
    pub malformed_lines: usize,
    pub drops: DropReport,
    pub sentences: usize,
    pub mentions: usize,
    pub ui_clusters: Vec<String>,
    pub ve_clusters: Vec<String>,
    pub cooccurrence_total: u64,
}

/// Runs ingest through build-index with the paths in `cfg`.
pub fn run_all(cfg: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    let p = &cfg.paths;
    let corpus = ingest(&p.dump, &p.corpus, &cfg.ingest)?;
    let structured = structure(&p.corpus, &p.gazetteer, &cfg.structure.provider, &p.structured)?;
    let tax = build_taxonomy(&p.corpus, &p.structured, &p.naming, &cfg.clustering, &p.taxonomy)?;
    build_index(p, &cfg.scoring)?;
    let s = &structured.payload;
    Ok(RunSummary {
        posts: corpus.payload.corpus.posts.len(),
        comments: corpus.payload.corpus.comments.len(),
        malformed_lines: corpus.payload.malformed_lines.len(),
        drops: corpus.payload.drops,
        sentences: s.comments.values().map(|c| c.sentences.len()).sum(),
        mentions: s.comments.values().map(|c| c.mentions.len()).sum(),
        ui_clusters: tax.payload.build.taxonomy.names(KeywordKind::UiComponent),
        ve_clusters: tax.payload.build.taxonomy.names(KeywordKind::VisualElement),
        cooccurrence_total: tax.payload.cooccurrence.total(),
    })
}

/// The bundled demo configuration with every path under `dir`.
pub fn demo_config(dir: &Path) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = PipelineConfig::from_toml(fixtures::DEMO_CONFIG, Path::new("demo.toml"))?;
    cfg.paths = Paths::under(dir);
    Ok(cfg)
}

/// Writes the bundled inputs into `dir` and runs every stage.
pub fn demo(dir: &Path) -> Result<(PipelineConfig, RunSummary), PipelineError> {
    let cfg = demo_config(dir)?;
    write(&cfg.paths.dump, fixtures::DEMO_DUMP)?;
    write(&cfg.paths.gazetteer, fixtures::DEMO_GAZETTEER)?;
    write(&cfg.paths.naming, fixtures::DEMO_NAMING)?;
    let summary = run_all(&cfg)?;
    Ok((cfg, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_recovers_named_taxonomy() {
        let dir = tempfile::tempdir().unwrap();
        let (_, s) = demo(dir.path()).unwrap();
        assert_eq!((s.posts, s.comments, s.malformed_lines), (20, 100, 1));
        let mut ui = s.ui_clusters.clone();
        ui.sort();
        assert_eq!(
            ui,
            ["Background", "Bar&Page", "Button", "Decorative Element", "Icon", "Image", "Interactive Card Element", "Text"]
        );
        let mut ve = s.ve_clusters.clone();
        ve.sort();
        assert_eq!(ve, ["Color", "Contrast", "Layout", "Shape&Size", "Space", "Typography"]);
    }

    #[test]
    fn external_provider_is_reported() {
        assert!(matches!(
            make_provider("external", Gazetteer::default()),
            Err(StructureError::UnknownProvider(_))
        ));
    }
}
