//! Per-post knowledge statistics and the read-side queries behind the
//! overview, comment pane and recommendation pane.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Corpus, Post};
use crate::structure::{FeedbackLabel, KeywordKind, StructuredCorpus};
use crate::taxonomy::{comment_pairs, Taxonomy, TaxonomyError};
use crate::Span;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("unknown {kind} cluster {name:?}")]
    UnknownCluster { kind: KeywordKind, name: String },
    #[error("unknown post {0}")]
    UnknownPost(String),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error("invalid scoring config: {0}")]
    Config(String),
    #[error("stored index does not match its inputs: {0}")]
    Stale(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringConfig {
    pub w_ui: f64,
    pub w_ve: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self { w_ui: 0.4, w_ve: 0.6 }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<(), IndexError> {
        let ok = self.w_ui.is_finite()
            && self.w_ve.is_finite()
            && self.w_ui >= 0.0
            && self.w_ve >= 0.0
            && self.w_ui + self.w_ve > 0.0;
        if ok {
            Ok(())
        } else {
            Err(IndexError::Config(format!(
                "weights must be non-negative with a positive sum, got w_ui={} w_ve={}",
                self.w_ui, self.w_ve
            )))
        }
    }
}

/// Mention-level keyword counts for one post, indexed by cluster id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostKnowledgeStats {
    pub post_id: String,
    pub num_ui_by_cluster: Vec<u64>,
    pub num_ve_by_cluster: Vec<u64>,
    /// Comments in this post where both clusters co-occur, `[ui][ve]`.
    pub pair_counts: Vec<Vec<u64>>,
}

impl PostKnowledgeStats {
    pub fn is_empty(&self) -> bool {
        self.num_ui_by_cluster.iter().all(|&n| n == 0) && self.num_ve_by_cluster.iter().all(|&n| n == 0)
    }
}

pub fn compute_stats(
    post_id: &str,
    corpus: &Corpus,
    structured: &StructuredCorpus,
    taxonomy: &Taxonomy,
) -> Result<PostKnowledgeStats, IndexError> {
    if corpus.post(post_id).is_none() {
        return Err(IndexError::UnknownPost(post_id.to_string()));
    }
    let (nu, nv) = (taxonomy.ui_clusters.len(), taxonomy.ve_clusters.len());
    let mut stats = PostKnowledgeStats {
        post_id: post_id.to_string(),
        num_ui_by_cluster: vec![0; nu],
        num_ve_by_cluster: vec![0; nv],
        pair_counts: vec![vec![0; nv]; nu],
    };
    for c in corpus.comments_of(post_id) {
        let sc = structured
            .get(&c.id)
            .ok_or_else(|| TaxonomyError::MissingStructured(c.id.clone()))?;
        let (ui, ve) = taxonomy.mention_clusters(sc)?;
        ui.iter().for_each(|&u| stats.num_ui_by_cluster[u] += 1);
        ve.iter().for_each(|&v| stats.num_ve_by_cluster[v] += 1);
        for (u, v) in comment_pairs(sc, taxonomy)? {
            stats.pair_counts[u][v] += 1;
        }
    }
    Ok(stats)
}

/// `w_ui * num_ui[ui] + w_ve * num_ve[ve]`.
pub fn score(stats: &PostKnowledgeStats, ui: usize, ve: usize, cfg: &ScoringConfig) -> Result<f64, IndexError> {
    let nu = *stats.num_ui_by_cluster.get(ui).ok_or_else(|| IndexError::UnknownCluster {
        kind: KeywordKind::UiComponent,
        name: format!("#{ui}"),
    })?;
    let nv = *stats.num_ve_by_cluster.get(ve).ok_or_else(|| IndexError::UnknownCluster {
        kind: KeywordKind::VisualElement,
        name: format!("#{ve}"),
    })?;
    Ok(cfg.w_ui * nu as f64 + cfg.w_ve * nv as f64)
}

/// Score on a 1e-9 grid after dividing out the weight sum, so rounding
/// noise never decides a tie and scaling both weights keeps the order.
fn rank_key(score: f64, cfg: &ScoringConfig) -> i128 {
    (score / (cfg.w_ui + cfg.w_ve) * 1e9).round() as i128
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetQuery {
    pub ui: Option<String>,
    pub ve: Option<String>,
    pub feedback_type: Option<FeedbackLabel>,
}

impl FacetQuery {
    pub fn new(ui: Option<&str>, ve: Option<&str>) -> Self {
        Self { ui: ui.map(str::to_string), ve: ve.map(str::to_string), feedback_type: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPost {
    pub post_id: String,
    pub created_at: i64,
    pub num_ui: Option<u64>,
    pub num_ve: Option<u64>,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightedMention {
    pub span: Span,
    pub surface: String,
    pub kind: KeywordKind,
    pub canonical: String,
    pub cluster: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceView {
    pub index: usize,
    pub span: Span,
    pub label: FeedbackLabel,
    pub highlighted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommentView {
    pub comment_id: String,
    pub author: String,
    pub created_at: i64,
    pub body: String,
    /// Mentions of the selected element cluster, if one is selected.
    pub ve_count: Option<u64>,
    pub keyword_highlights: Vec<HighlightedMention>,
    pub sentences: Vec<SentenceView>,
}

/// Everything the read-side queries need, built once and then shared.
#[derive(Debug, Clone)]
pub struct KnowledgeIndex {
    corpus: Corpus,
    structured: StructuredCorpus,
    taxonomy: Taxonomy,
    scoring: ScoringConfig,
    stats: BTreeMap<String, PostKnowledgeStats>,
}

/// Persisted form of the index statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSnapshot {
    pub scoring: ScoringConfig,
    pub ui_clusters: Vec<String>,
    pub ve_clusters: Vec<String>,
    pub stats: Vec<PostKnowledgeStats>,
}

impl KnowledgeIndex {
    pub fn build(
        corpus: Corpus,
        structured: StructuredCorpus,
        taxonomy: Taxonomy,
        scoring: ScoringConfig,
    ) -> Result<Self, IndexError> {
        scoring.validate()?;
        let mut stats = BTreeMap::new();
        for pid in corpus.posts.keys() {
            stats.insert(pid.clone(), compute_stats(pid, &corpus, &structured, &taxonomy)?);
        }
        Ok(Self { corpus, structured, taxonomy, scoring, stats })
    }

    /// Rebuilds from inputs and checks the stored statistics still match.
    pub fn from_snapshot(
        corpus: Corpus,
        structured: StructuredCorpus,
        taxonomy: Taxonomy,
        snapshot: &IndexSnapshot,
    ) -> Result<Self, IndexError> {
        let index = Self::build(corpus, structured, taxonomy, snapshot.scoring)?;
        if snapshot.ui_clusters != index.taxonomy.names(KeywordKind::UiComponent)
            || snapshot.ve_clusters != index.taxonomy.names(KeywordKind::VisualElement)
        {
            return Err(IndexError::Stale("cluster names differ from the taxonomy".into()));
        }
        let stored: BTreeMap<&str, &PostKnowledgeStats> =
            snapshot.stats.iter().map(|s| (s.post_id.as_str(), s)).collect();
        if stored.len() != index.stats.len() {
            return Err(IndexError::Stale(format!(
                "{} posts stored, {} in corpus",
                stored.len(),
                index.stats.len()
            )));
        }
        for (pid, s) in &index.stats {
            if stored.get(pid.as_str()) != Some(&s) {
                return Err(IndexError::Stale(format!("statistics for post {pid} differ")));
            }
        }
        Ok(index)
    }

    pub fn snapshot(&self) -> IndexSnapshot {
        IndexSnapshot {
            scoring: self.scoring,
            ui_clusters: self.taxonomy.names(KeywordKind::UiComponent),
            ve_clusters: self.taxonomy.names(KeywordKind::VisualElement),
            stats: self.stats.values().cloned().collect(),
        }
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn structured(&self) -> &StructuredCorpus {
        &self.structured
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn scoring(&self) -> &ScoringConfig {
        &self.scoring
    }

    pub fn stats(&self, post_id: &str) -> Option<&PostKnowledgeStats> {
        self.stats.get(post_id)
    }

    pub fn post(&self, post_id: &str) -> Result<&Post, IndexError> {
        self.corpus
            .post(post_id)
            .ok_or_else(|| IndexError::UnknownPost(post_id.to_string()))
    }

    pub fn resolve(&self, kind: KeywordKind, name: &str) -> Result<usize, IndexError> {
        self.taxonomy
            .cluster_by_name(kind, name)
            .ok_or_else(|| IndexError::UnknownCluster { kind, name: name.to_string() })
    }

    fn resolve_opt(&self, kind: KeywordKind, name: Option<&str>) -> Result<Option<usize>, IndexError> {
        name.map(|n| self.resolve(kind, n)).transpose()
    }

    /// Score for a post under a named facet pair.
    pub fn score_post(&self, post_id: &str, ui: &str, ve: &str) -> Result<f64, IndexError> {
        let stats = self
            .stats(post_id)
            .ok_or_else(|| IndexError::UnknownPost(post_id.to_string()))?;
        score(stats, self.resolve(KeywordKind::UiComponent, ui)?, self.resolve(KeywordKind::VisualElement, ve)?, &self.scoring)
    }

    pub fn sort_posts(&self, query: &FacetQuery) -> Result<Vec<RankedPost>, IndexError> {
        self.sort_posts_with(query, &self.scoring)
    }

    /// Orders posts for a facet query.
    ///
    /// Component and element selected: score descending. One of them:
    /// that cluster's mention count descending. Neither: newest first.
    /// Ties: newer first, then post id ascending.
    pub fn sort_posts_with(&self, query: &FacetQuery, cfg: &ScoringConfig) -> Result<Vec<RankedPost>, IndexError> {
        cfg.validate()?;
        let ui = self.resolve_opt(KeywordKind::UiComponent, query.ui.as_deref())?;
        let ve = self.resolve_opt(KeywordKind::VisualElement, query.ve.as_deref())?;
        let mut ranked: Vec<RankedPost> = self
            .corpus
            .posts
            .values()
            .map(|p| {
                let s = &self.stats[&p.id];
                let num_ui = ui.map(|u| s.num_ui_by_cluster[u]);
                let num_ve = ve.map(|v| s.num_ve_by_cluster[v]);
                let score = match (num_ui, num_ve) {
                    (Some(a), Some(b)) => Some(cfg.w_ui * a as f64 + cfg.w_ve * b as f64),
                    _ => None,
                };
                RankedPost { post_id: p.id.clone(), created_at: p.created_at, num_ui, num_ve, score }
            })
            .collect();
        let key = |r: &RankedPost| -> i128 {
            match (r.score, r.num_ui, r.num_ve) {
                (Some(s), _, _) => rank_key(s, cfg),
                (None, Some(n), _) | (None, None, Some(n)) => n as i128,
                _ => 0,
            }
        };
        ranked.sort_by(|a, b| {
            key(b)
                .cmp(&key(a))
                .then(b.created_at.cmp(&a.created_at))
                .then_with(|| a.post_id.cmp(&b.post_id))
        });
        Ok(ranked)
    }

    /// Comments of a post for the comment pane.
    ///
    /// With an element cluster: ordered by that cluster's mention count
    /// descending (ties oldest first) and carrying its mention spans.
    /// Without one: stored order and no keyword highlights. Sentences whose
    /// label equals `feedback` are flagged highlighted.
    pub fn sort_comments(
        &self,
        post_id: &str,
        ve: Option<&str>,
        feedback: Option<FeedbackLabel>,
    ) -> Result<Vec<CommentView>, IndexError> {
        self.post(post_id)?;
        let ve = self.resolve_opt(KeywordKind::VisualElement, ve)?;
        let mut views = Vec::new();
        for c in self.corpus.comments_of(post_id) {
            let sc = self
                .structured
                .get(&c.id)
                .ok_or_else(|| TaxonomyError::MissingStructured(c.id.clone()))?;
            let mut highlights = Vec::new();
            if let Some(v) = ve {
                for m in sc.mentions_of(KeywordKind::VisualElement) {
                    if self.taxonomy.cluster_of(m.kind, &m.canonical) == Some(v) {
                        highlights.push(HighlightedMention {
                            span: m.span,
                            surface: m.surface.clone(),
                            kind: m.kind,
                            canonical: m.canonical.clone(),
                            cluster: self.taxonomy.ve_clusters[v].name.clone(),
                        });
                    }
                }
            }
            let sentences = sc
                .sentences
                .iter()
                .map(|s| SentenceView {
                    index: s.index,
                    span: s.span,
                    label: s.label,
                    highlighted: feedback == Some(s.label),
                })
                .collect();
            views.push(CommentView {
                comment_id: c.id.clone(),
                author: c.author.clone(),
                created_at: c.created_at,
                body: c.body.clone(),
                ve_count: ve.map(|_| highlights.len() as u64),
                keyword_highlights: highlights,
                sentences,
            });
        }
        if ve.is_some() {
            views.sort_by(|a, b| {
                b.ve_count
                    .cmp(&a.ve_count)
                    .then(a.created_at.cmp(&b.created_at))
                    .then_with(|| a.comment_id.cmp(&b.comment_id))
            });
        }
        Ok(views)
    }

    /// Seeded uniform sample of up to `n` other posts whose comments mention
    /// the component cluster and the element cluster. An unset facet places
    /// no constraint on that axis.
    pub fn recommend(
        &self,
        current_post: &str,
        ui: Option<&str>,
        ve: Option<&str>,
        n: usize,
        seed: u64,
    ) -> Result<Vec<String>, IndexError> {
        let ui = self.resolve_opt(KeywordKind::UiComponent, ui)?;
        let ve = self.resolve_opt(KeywordKind::VisualElement, ve)?;
        let mut candidates: Vec<String> = self
            .stats
            .values()
            .filter(|s| s.post_id != current_post)
            .filter(|s| ui.is_none_or(|u| s.num_ui_by_cluster[u] > 0))
            .filter(|s| ve.is_none_or(|v| s.num_ve_by_cluster[v] > 0))
            .map(|s| s.post_id.clone())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        candidates.shuffle(&mut rng);
        candidates.truncate(n);
        Ok(candidates)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_corpus, IngestConfig, RawRecord, RecordKind};
    use crate::structure::{structure_corpus, Gazetteer, LexiconProvider};

    fn post(id: &str, t: i64) -> RawRecord {
        RawRecord {
            kind: RecordKind::Post,
            id: id.into(),
            parent_id: None,
            author: format!("op-{id}"),
            flair: Some("Feedback Request".into()),
            title: Some(format!("Post {id}")),
            body: String::new(),
            created_at: t,
            image_refs: vec![format!("https://i.redd.it/{id}.png")],
        }
    }

    fn comment(id: &str, post: &str, body: &str, t: i64) -> RawRecord {
        RawRecord {
            kind: RecordKind::Comment,
            id: id.into(),
            parent_id: Some(post.into()),
            author: "reader".into(),
            flair: None,
            title: None,
            body: body.into(),
            created_at: t,
            image_refs: vec![],
        }
    }

    fn index(records: Vec<RawRecord>) -> KnowledgeIndex {
        let (corpus, _) = build_corpus(&records, &IngestConfig::default());
        let gaz = Gazetteer::parse(
            "[ui_component]\nbutton\nhome button\nicon\n[visual_element]\ngrey\nwhite\ncolor\nfont\n",
        )
        .unwrap();
        let structured = structure_corpus(&corpus, &LexiconProvider::new(gaz)).unwrap();
        let tax = Taxonomy::from_named_groups(
            &[("Button", &["button", "home button"]), ("Icon", &["icon"])],
            &[("Color", &["grey", "white", "color"]), ("Typography", &["font"])],
        )
        .unwrap();
        KnowledgeIndex::build(corpus, structured, tax, ScoringConfig::default()).unwrap()
    }

    #[test]
    fn single_comment_stats() {
        let idx = index(vec![post("p", 10), comment("c", "p", "the home button is grey", 11)]);
        let s = idx.stats("p").unwrap();
        assert_eq!(s.num_ui_by_cluster, vec![1, 0]);
        assert_eq!(s.num_ve_by_cluster, vec![1, 0]);
        assert_eq!(s.pair_counts[0][0], 1);
    }

    #[test]
    fn no_mentions_all_zero() {
        let idx = index(vec![post("p", 10), comment("c", "p", "Nice work.", 11)]);
        assert!(idx.stats("p").unwrap().is_empty());
    }

    #[test]
    fn score_arithmetic() {
        let s = PostKnowledgeStats {
            post_id: "p".into(),
            num_ui_by_cluster: vec![2, 0],
            num_ve_by_cluster: vec![3, 0],
            pair_counts: vec![],
        };
        assert!((score(&s, 0, 0, &ScoringConfig::default()).unwrap() - 2.6).abs() < 1e-12);
        assert_eq!(score(&s, 1, 1, &ScoringConfig::default()).unwrap(), 0.0);
        assert_eq!(score(&s, 0, 0, &ScoringConfig { w_ui: 1.0, w_ve: 0.0 }).unwrap(), 2.0);
        assert!(score(&s, 5, 0, &ScoringConfig::default()).is_err());
    }

    #[test]
    fn weights_are_validated() {
        assert!(ScoringConfig { w_ui: -1.0, w_ve: 1.0 }.validate().is_err());
        assert!(ScoringConfig { w_ui: 0.0, w_ve: 0.0 }.validate().is_err());
    }

    #[test]
    fn higher_score_first_then_newer() {
        let idx = index(vec![
            post("a", 100),
            comment("a1", "a", "button button grey grey grey", 101),
            post("b", 200),
            comment("b1", "b", "button grey", 201),
            post("c", 300),
            comment("c1", "c", "button grey", 301),
        ]);
        let order: Vec<_> = idx
            .sort_posts(&FacetQuery::new(Some("Button"), Some("Color")))
            .unwrap()
            .into_iter()
            .map(|r| r.post_id)
            .collect();
        assert_eq!(order, vec!["a", "c", "b"]);
    }

    #[test]
    fn no_facets_is_newest_first() {
        let idx = index(vec![
            post("a", 100),
            comment("a1", "a", "icon", 101),
            post("b", 300),
            comment("b1", "b", "icon", 301),
            post("c", 200),
            comment("c1", "c", "icon", 201),
        ]);
        let order: Vec<_> = idx.sort_posts(&FacetQuery::default()).unwrap().into_iter().map(|r| r.post_id).collect();
        assert_eq!(order, vec!["b", "c", "a"]);
    }

    #[test]
    fn unknown_cluster_is_error() {
        let idx = index(vec![post("a", 100), comment("a1", "a", "icon", 101)]);
        assert!(matches!(
            idx.sort_posts(&FacetQuery::new(Some("Nope"), None)),
            Err(IndexError::UnknownCluster { .. })
        ));
    }

    #[test]
    fn comments_resorted_by_element_count() {
        let idx = index(vec![
            post("p", 100),
            comment("c0", "p", "no colour words here", 101),
            comment("c1", "p", "grey", 102),
            comment("c3", "p", "grey white color. Make it pop.", 103),
        ]);
        let views = idx.sort_comments("p", Some("Color"), None).unwrap();
        let counts: Vec<_> = views.iter().map(|v| v.ve_count.unwrap()).collect();
        assert_eq!(counts, vec![3, 1, 0]);
        for v in &views {
            for h in &v.keyword_highlights {
                assert_eq!(h.span.slice(&v.body), h.surface);
            }
        }
        let plain = idx.sort_comments("p", None, None).unwrap();
        assert_eq!(plain.iter().map(|v| v.comment_id.as_str()).collect::<Vec<_>>(), vec!["c0", "c1", "c3"]);
        assert!(plain.iter().all(|v| v.keyword_highlights.is_empty() && v.ve_count.is_none()));
    }

    #[test]
    fn feedback_filter_flags_matching_sentences() {
        let idx = index(vec![post("p", 100), comment("c", "p", "The icon is too small. Make it bigger.", 101)]);
        let v = &idx.sort_comments("p", None, Some(FeedbackLabel::Suggestion)).unwrap()[0];
        let flags: Vec<_> = v.sentences.iter().map(|s| s.highlighted).collect();
        assert_eq!(flags, vec![false, true]);
        assert!(idx.sort_comments("missing", None, None).is_err());
    }

    #[test]
    fn recommendations() {
        let idx = index(vec![
            post("a", 100),
            comment("a1", "a", "button grey", 101),
            post("b", 200),
            comment("b1", "b", "button white", 201),
            post("c", 300),
            comment("c1", "c", "button", 301),
            post("d", 400),
            comment("d1", "d", "the home button uses color", 401),
        ]);
        let recs = idx.recommend("a", Some("Button"), Some("Color"), 5, 1).unwrap();
        let mut sorted = recs.clone();
        sorted.sort();
        assert_eq!(sorted, vec!["b", "d"]);
        assert_eq!(recs, idx.recommend("a", Some("Button"), Some("Color"), 5, 1).unwrap());
        assert_eq!(idx.recommend("a", Some("Button"), Some("Color"), 1, 1).unwrap().len(), 1);
    }

    #[test]
    fn snapshot_round_trip_and_staleness() {
        let idx = index(vec![post("a", 100), comment("a1", "a", "button grey", 101)]);
        let snap = idx.snapshot();
        let again = KnowledgeIndex::from_snapshot(
            idx.corpus().clone(),
            idx.structured().clone(),
            idx.taxonomy().clone(),
            &snap,
        )
        .unwrap();
        assert_eq!(again.snapshot(), snap);
        let mut bad = snap.clone();
        bad.stats[0].num_ui_by_cluster[0] += 1;
        assert!(matches!(
            KnowledgeIndex::from_snapshot(idx.corpus().clone(), idx.structured().clone(), idx.taxonomy().clone(), &bad),
            Err(IndexError::Stale(_))
        ));
    }
}
