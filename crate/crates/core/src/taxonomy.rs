//! Keyword clustering, cluster naming and the component × element
//! co-occurrence matrix.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{embed_terms, EmbedError, EmbeddingProvider};
use crate::ingest::Corpus;
use crate::kmeans::{kmeans_restarts, scan_k, KMeansError, KScanRow};
use crate::structure::{KeywordKind, StructuredComment, StructuredCorpus};

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("invalid clustering config: {0}")]
    Config(String),
    #[error("only {terms} distinct {kind} terms, cannot form {k} clusters")]
    TooFewTerms { kind: KeywordKind, terms: usize, k: usize },
    #[error(transparent)]
    KMeans(#[from] KMeansError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("naming file: {0}")]
    Naming(String),
    #[error("two {kind} clusters are both named {name:?}")]
    DuplicateName { kind: KeywordKind, name: String },
    #[error("term {term:?} appears in more than one {kind} cluster")]
    OverlappingClusters { kind: KeywordKind, term: String },
    #[error("terms without a cluster: {}", .terms.join(", "))]
    Unmapped { terms: Vec<String> },
    #[error("comment {0} has not been structured")]
    MissingStructured(String),
}

impl std::fmt::Display for KeywordKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KeywordKind::UiComponent => "ui_component",
            KeywordKind::VisualElement => "visual_element",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusteringConfig {
    pub k_ui: usize,
    pub k_ve: usize,
    /// Inclusive range explored by `scan-k`.
    pub k_range: (usize, usize),
    pub seed: u64,
    /// Seeded restarts per axis; the lowest-inertia run is kept.
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self { k_ui: 8, k_ve: 6, k_range: (3, 10), seed: 42, n_init: 10, max_iter: 300, tol: 1e-9 }
    }
}

impl ClusteringConfig {
    pub fn validate(&self) -> Result<(), TaxonomyError> {
        let (lo, hi) = self.k_range;
        if self.k_ui == 0 || self.k_ve == 0 {
            return Err(TaxonomyError::Config("k_ui and k_ve must be positive".into()));
        }
        if lo == 0 || lo > hi {
            return Err(TaxonomyError::Config(format!("bad k_range [{lo}, {hi}]")));
        }
        if self.n_init == 0 {
            return Err(TaxonomyError::Config("n_init must be at least 1".into()));
        }
        if self.max_iter == 0 {
            return Err(TaxonomyError::Config("max_iter must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(TaxonomyError::Config("tol must be non-negative".into()));
        }
        Ok(())
    }

    pub fn k_for(&self, kind: KeywordKind) -> usize {
        match kind {
            KeywordKind::UiComponent => self.k_ui,
            KeywordKind::VisualElement => self.k_ve,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    pub name: String,
    /// Sorted canonical terms.
    pub member_terms: Vec<String>,
    /// Set when no member matched the naming file.
    pub unnamed: bool,
}

/// Named clusters per axis plus the term → cluster lookup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub ui_clusters: Vec<Cluster>,
    pub ve_clusters: Vec<Cluster>,
    ui_terms: BTreeMap<String, usize>,
    ve_terms: BTreeMap<String, usize>,
}

impl Taxonomy {
    /// Checks that names are unique per axis and no term sits in two
    /// clusters. Cluster ids are reassigned to list positions.
    pub fn new(mut ui: Vec<Cluster>, mut ve: Vec<Cluster>) -> Result<Self, TaxonomyError> {
        let ui_terms = index_axis(KeywordKind::UiComponent, &mut ui)?;
        let ve_terms = index_axis(KeywordKind::VisualElement, &mut ve)?;
        Ok(Self { ui_clusters: ui, ve_clusters: ve, ui_terms, ve_terms })
    }

    /// Builds a taxonomy straight from `(name, terms)` groups.
    pub fn from_named_groups(
        ui: &[(&str, &[&str])],
        ve: &[(&str, &[&str])],
    ) -> Result<Self, TaxonomyError> {
        let mk = |groups: &[(&str, &[&str])]| {
            groups
                .iter()
                .enumerate()
                .map(|(id, (name, terms))| {
                    let mut member_terms: Vec<String> = terms.iter().map(|t| t.to_string()).collect();
                    member_terms.sort();
                    Cluster { id, name: name.to_string(), member_terms, unnamed: false }
                })
                .collect::<Vec<_>>()
        };
        Self::new(mk(ui), mk(ve))
    }

    pub fn clusters(&self, kind: KeywordKind) -> &[Cluster] {
        match kind {
            KeywordKind::UiComponent => &self.ui_clusters,
            KeywordKind::VisualElement => &self.ve_clusters,
        }
    }

    pub fn cluster_of(&self, kind: KeywordKind, canonical: &str) -> Option<usize> {
        match kind {
            KeywordKind::UiComponent => self.ui_terms.get(canonical).copied(),
            KeywordKind::VisualElement => self.ve_terms.get(canonical).copied(),
        }
    }

    pub fn cluster_by_name(&self, kind: KeywordKind, name: &str) -> Option<usize> {
        self.clusters(kind).iter().position(|c| c.name == name)
    }

    pub fn names(&self, kind: KeywordKind) -> Vec<String> {
        self.clusters(kind).iter().map(|c| c.name.clone()).collect()
    }

    /// Maps every mention to its cluster id, split by kind.
    pub fn mention_clusters(
        &self,
        comment: &StructuredComment,
    ) -> Result<(Vec<usize>, Vec<usize>), TaxonomyError> {
        let mut ui = Vec::new();
        let mut ve = Vec::new();
        let mut orphans = BTreeSet::new();
        for m in &comment.mentions {
            match (self.cluster_of(m.kind, &m.canonical), m.kind) {
                (Some(c), KeywordKind::UiComponent) => ui.push(c),
                (Some(c), KeywordKind::VisualElement) => ve.push(c),
                (None, kind) => {
                    orphans.insert(format!("{kind}:{}", m.canonical));
                }
            }
        }
        if !orphans.is_empty() {
            return Err(TaxonomyError::Unmapped { terms: orphans.into_iter().collect() });
        }
        Ok((ui, ve))
    }
}

fn index_axis(kind: KeywordKind, clusters: &mut [Cluster]) -> Result<BTreeMap<String, usize>, TaxonomyError> {
    let mut names = BTreeSet::new();
    let mut terms = BTreeMap::new();
    for (i, c) in clusters.iter_mut().enumerate() {
        c.id = i;
        if !names.insert(c.name.clone()) {
            return Err(TaxonomyError::DuplicateName { kind, name: c.name.clone() });
        }
        for t in &c.member_terms {
            if terms.insert(t.clone(), i).is_some() {
                return Err(TaxonomyError::OverlappingClusters { kind, term: t.clone() });
            }
        }
    }
    Ok(terms)
}

/// Human-authored `term = Name` mapping per axis.
///
/// ```text
/// [ui_component]
/// button = Button
/// [visual_element]
/// color = Color
/// ```
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NamingMap {
    ui: Vec<(Vec<String>, String)>,
    ve: Vec<(Vec<String>, String)>,
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_lowercase).collect()
}

impl NamingMap {
    pub fn parse(text: &str) -> Result<Self, TaxonomyError> {
        let mut map = NamingMap::default();
        let mut section = None;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = Some(match name.trim() {
                    "ui_component" => KeywordKind::UiComponent,
                    "visual_element" => KeywordKind::VisualElement,
                    other => return Err(TaxonomyError::Naming(format!("line {}: unknown section [{other}]", n + 1))),
                });
                continue;
            }
            let kind = section
                .ok_or_else(|| TaxonomyError::Naming(format!("line {}: entry outside a section", n + 1)))?;
            let (term, name) = line
                .split_once('=')
                .ok_or_else(|| TaxonomyError::Naming(format!("line {}: expected `term = Name`", n + 1)))?;
            let (term, name) = (words(term), name.trim().to_string());
            if term.is_empty() || name.is_empty() {
                return Err(TaxonomyError::Naming(format!("line {}: empty term or name", n + 1)));
            }
            map.entries_mut(kind).push((term, name));
        }
        Ok(map)
    }

    fn entries_mut(&mut self, kind: KeywordKind) -> &mut Vec<(Vec<String>, String)> {
        match kind {
            KeywordKind::UiComponent => &mut self.ui,
            KeywordKind::VisualElement => &mut self.ve,
        }
    }

    fn entries(&self, kind: KeywordKind) -> &[(Vec<String>, String)] {
        match kind {
            KeywordKind::UiComponent => &self.ui,
            KeywordKind::VisualElement => &self.ve,
        }
    }

    /// Name for a member term: an exact key wins, otherwise the longest key
    /// that occurs as a whole-word run inside the term.
    pub fn name_for(&self, kind: KeywordKind, term: &str) -> Option<&str> {
        let tw = words(term);
        let mut best: Option<(bool, usize, &str)> = None;
        for (key, name) in self.entries(kind) {
            let exact = *key == tw;
            let contained = exact || tw.windows(key.len()).any(|w| w == key.as_slice());
            if !contained {
                continue;
            }
            let cand = (exact, key.len(), name.as_str());
            if best.is_none_or(|b| (cand.0, cand.1) > (b.0, b.1)) {
                best = Some(cand);
            }
        }
        best.map(|b| b.2)
    }
}

/// Names each group after its most frequent mapped member (ties: the
/// lexicographically smaller term). Groups without a mapped member become
/// `cluster-<id>` and are flagged.
pub fn name_clusters(
    kind: KeywordKind,
    groups: &[Vec<String>],
    frequencies: &BTreeMap<String, usize>,
    naming: &NamingMap,
) -> Result<Vec<Cluster>, TaxonomyError> {
    let mut out = Vec::with_capacity(groups.len());
    let mut seen = BTreeSet::new();
    for (id, members) in groups.iter().enumerate() {
        let mut member_terms = members.clone();
        member_terms.sort();
        let best = member_terms
            .iter()
            .filter_map(|t| naming.name_for(kind, t).map(|n| (t, n)))
            .max_by(|(ta, _), (tb, _)| {
                let fa = frequencies.get(*ta).copied().unwrap_or(0);
                let fb = frequencies.get(*tb).copied().unwrap_or(0);
                fa.cmp(&fb).then(tb.cmp(ta))
            });
        let (name, unnamed) = match best {
            Some((_, n)) => (n.to_string(), false),
            None => (format!("cluster-{id}"), true),
        };
        if !seen.insert(name.clone()) {
            return Err(TaxonomyError::DuplicateName { kind, name });
        }
        out.push(Cluster { id, name, member_terms, unnamed });
    }
    Ok(out)
}

/// Mention-level frequency of each canonical term, per kind.
pub fn term_frequencies(structured: &StructuredCorpus, kind: KeywordKind) -> BTreeMap<String, usize> {
    let mut freq = BTreeMap::new();
    for sc in structured.comments.values() {
        for m in sc.mentions_of(kind) {
            *freq.entry(m.canonical.clone()).or_insert(0) += 1;
        }
    }
    freq
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBuild {
    pub kind: KeywordKind,
    pub terms: usize,
    pub inertia: f64,
    pub iterations: usize,
    pub unnamed_clusters: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyBuild {
    pub taxonomy: Taxonomy,
    pub axes: Vec<AxisBuild>,
}

fn cluster_axis(
    kind: KeywordKind,
    structured: &StructuredCorpus,
    embedder: &dyn EmbeddingProvider,
    naming: &NamingMap,
    cfg: &ClusteringConfig,
) -> Result<(Vec<Cluster>, AxisBuild), TaxonomyError> {
    let freq = term_frequencies(structured, kind);
    let terms: Vec<String> = freq.keys().cloned().collect();
    let k = cfg.k_for(kind);
    if terms.len() < k {
        return Err(TaxonomyError::TooFewTerms { kind, terms: terms.len(), k });
    }
    let points = embed_terms(&terms, embedder)?;
    let run = kmeans_restarts(&points, k, cfg.seed, cfg.n_init, cfg.max_iter, cfg.tol)?;
    let mut groups = vec![Vec::new(); k];
    for (term, &a) in terms.iter().zip(&run.assignments) {
        groups[a].push(term.clone());
    }
    let clusters = name_clusters(kind, &groups, &freq, naming)?;
    let axis = AxisBuild {
        kind,
        terms: terms.len(),
        inertia: run.inertia,
        iterations: run.iterations,
        unnamed_clusters: clusters.iter().filter(|c| c.unnamed).map(|c| c.id).collect(),
    };
    Ok((clusters, axis))
}

/// Embeds, clusters and names both axes.
pub fn build_taxonomy(
    structured: &StructuredCorpus,
    embedder: &dyn EmbeddingProvider,
    naming: &NamingMap,
    cfg: &ClusteringConfig,
) -> Result<TaxonomyBuild, TaxonomyError> {
    cfg.validate()?;
    let (ui, ui_axis) = cluster_axis(KeywordKind::UiComponent, structured, embedder, naming, cfg)?;
    let (ve, ve_axis) = cluster_axis(KeywordKind::VisualElement, structured, embedder, naming, cfg)?;
    Ok(TaxonomyBuild { taxonomy: Taxonomy::new(ui, ve)?, axes: vec![ui_axis, ve_axis] })
}

/// Inertia/silhouette report over `cfg.k_range` for one axis.
pub fn scan_axis(
    kind: KeywordKind,
    structured: &StructuredCorpus,
    embedder: &dyn EmbeddingProvider,
    cfg: &ClusteringConfig,
) -> Result<Vec<KScanRow>, TaxonomyError> {
    cfg.validate()?;
    let terms: Vec<String> = term_frequencies(structured, kind).into_keys().collect();
    let points = embed_terms(&terms, embedder)?;
    Ok(scan_k(&points, cfg.k_range.0..=cfg.k_range.1, cfg.seed, cfg.max_iter, cfg.tol)?)
}

/// Comment counts per (component cluster, element cluster).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooccurrenceMatrix {
    pub ui_names: Vec<String>,
    pub ve_names: Vec<String>,
    /// `counts[ui][ve]`.
    pub counts: Vec<Vec<u64>>,
}

impl CooccurrenceMatrix {
    pub fn get(&self, ui: &str, ve: &str) -> Option<u64> {
        let i = self.ui_names.iter().position(|n| n == ui)?;
        let j = self.ve_names.iter().position(|n| n == ve)?;
        Some(self.counts[i][j])
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Distinct (component, element) cluster pairs co-occurring in one comment.
pub fn comment_pairs(
    comment: &StructuredComment,
    taxonomy: &Taxonomy,
) -> Result<BTreeSet<(usize, usize)>, TaxonomyError> {
    let (ui, ve) = taxonomy.mention_clusters(comment)?;
    let ui: BTreeSet<usize> = ui.into_iter().collect();
    let ve: BTreeSet<usize> = ve.into_iter().collect();
    Ok(ui.iter().flat_map(|&u| ve.iter().map(move |&v| (u, v))).collect())
}

/// Counts, for every pair, the comments mentioning at least one term of
/// each cluster. A comment adds at most one to any pair.
pub fn cooccurrence(
    corpus: &Corpus,
    structured: &StructuredCorpus,
    taxonomy: &Taxonomy,
) -> Result<CooccurrenceMatrix, TaxonomyError> {
    let mut counts = vec![vec![0u64; taxonomy.ve_clusters.len()]; taxonomy.ui_clusters.len()];
    let mut orphans = BTreeSet::new();
    for cid in corpus.comments.keys() {
        let sc = structured
            .get(cid)
            .ok_or_else(|| TaxonomyError::MissingStructured(cid.clone()))?;
        match comment_pairs(sc, taxonomy) {
            Ok(pairs) => {
                for (u, v) in pairs {
                    counts[u][v] += 1;
                }
            }
            Err(TaxonomyError::Unmapped { terms }) => orphans.extend(terms),
            Err(e) => return Err(e),
        }
    }
    if !orphans.is_empty() {
        return Err(TaxonomyError::Unmapped { terms: orphans.into_iter().collect() });
    }
    Ok(CooccurrenceMatrix {
        ui_names: taxonomy.names(KeywordKind::UiComponent),
        ve_names: taxonomy.names(KeywordKind::VisualElement),
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{KeywordMention, StructuredComment};
    use crate::Span;

    fn freq(pairs: &[(&str, usize)]) -> BTreeMap<String, usize> {
        pairs.iter().map(|(t, n)| (t.to_string(), *n)).collect()
    }

    fn naming() -> NamingMap {
        NamingMap::parse(
            "[ui_component]\nbutton = Button\nicon = Icon\n[visual_element]\ncolor = Color\ngrey = Color\nfont = Typography\n",
        )
        .unwrap()
    }

    #[test]
    fn cluster_named_by_head_word() {
        let groups = vec![vec!["home button".to_string(), "settings button".to_string()]];
        let c = name_clusters(
            KeywordKind::UiComponent,
            &groups,
            &freq(&[("home button", 3), ("settings button", 1)]),
            &naming(),
        )
        .unwrap();
        assert_eq!(c[0].name, "Button");
        assert!(!c[0].unnamed);
    }

    #[test]
    fn unmapped_cluster_gets_fallback_name() {
        let groups = vec![
            vec!["button".to_string()],
            vec!["icon".to_string()],
            vec!["navbar".to_string()],
            vec!["sidebar".to_string(), "menu".to_string()],
        ];
        let c = name_clusters(KeywordKind::UiComponent, &groups, &BTreeMap::new(), &naming()).unwrap();
        assert_eq!(c[3].name, "cluster-3");
        assert!(c[3].unnamed);
        assert_eq!(c[3].member_terms, vec!["menu", "sidebar"]);
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let groups = vec![vec!["color".to_string()], vec!["grey".to_string()]];
        let err = name_clusters(KeywordKind::VisualElement, &groups, &BTreeMap::new(), &naming()).unwrap_err();
        assert!(matches!(err, TaxonomyError::DuplicateName { ref name, .. } if name == "Color"));
    }

    #[test]
    fn most_frequent_mapped_member_decides() {
        let groups = vec![vec!["font color".to_string(), "font".to_string(), "colour".to_string()]];
        let c = name_clusters(
            KeywordKind::VisualElement,
            &groups,
            &freq(&[("font color", 9), ("font", 2)]),
            &naming(),
        )
        .unwrap();
        // "font color" contains both keys; it is not an exact match for
        // either, so the longer key wins and ties go to the earlier entry
        assert_eq!(naming().name_for(KeywordKind::VisualElement, "font color"), Some("Color"));
        assert_eq!(c[0].name, "Color");
    }

    fn mention(kind: KeywordKind, canonical: &str) -> KeywordMention {
        KeywordMention { span: Span::new(0, 1), surface: "x".into(), kind, canonical: canonical.into() }
    }

    #[test]
    fn caption_example_pairs() {
        let tax = Taxonomy::from_named_groups(
            &[("Button", &["home button"]), ("Image", &["photo"])],
            &[("Color", &["grey"]), ("Contrast", &["gradient"])],
        )
        .unwrap();
        let sc = StructuredComment {
            comment_id: "c".into(),
            post_id: "p".into(),
            sentences: vec![],
            mentions: vec![
                mention(KeywordKind::VisualElement, "gradient"),
                mention(KeywordKind::UiComponent, "photo"),
                mention(KeywordKind::UiComponent, "home button"),
            ],
        };
        let pairs = comment_pairs(&sc, &tax).unwrap();
        assert_eq!(pairs, BTreeSet::from([(0, 1), (1, 1)]));
    }

    #[test]
    fn unmapped_terms_are_listed() {
        let tax = Taxonomy::from_named_groups(&[("Button", &["button"])], &[("Color", &["grey"])]).unwrap();
        let sc = StructuredComment {
            comment_id: "c".into(),
            post_id: "p".into(),
            sentences: vec![],
            mentions: vec![mention(KeywordKind::UiComponent, "navbar")],
        };
        match comment_pairs(&sc, &tax) {
            Err(TaxonomyError::Unmapped { terms }) => assert_eq!(terms, vec!["ui_component:navbar"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn taxonomy_rejects_shared_terms() {
        let err = Taxonomy::from_named_groups(&[("A", &["x"]), ("B", &["x"])], &[]).unwrap_err();
        assert!(matches!(err, TaxonomyError::OverlappingClusters { .. }));
    }

    #[test]
    fn config_validation() {
        assert!(ClusteringConfig::default().validate().is_ok());
        let bad = ClusteringConfig { k_range: (5, 3), ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ClusteringConfig { max_iter: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
