//! Brute-force recounts of index stats and co-occurrence on the demo corpus.

use std::collections::BTreeMap;

use odcl_core::pipeline::{self, fixtures, TaxonomyArtifact};
use odcl_core::artifact::{self, Artifact};
use odcl_core::{KeywordKind, KnowledgeIndex};

struct Vocab {
    terms: Vec<(Vec<String>, KeywordKind)>,
}

impl Vocab {
    fn parse(text: &str) -> Self {
        let mut kind = None;
        let mut terms = Vec::new();
        for line in text.lines().map(str::trim) {
            match line {
                "" => {}
                l if l.starts_with('#') => {}
                "[ui_component]" => kind = Some(KeywordKind::UiComponent),
                "[visual_element]" => kind = Some(KeywordKind::VisualElement),
                l => terms.push((l.split_whitespace().map(str::to_lowercase).collect(), kind.unwrap())),
            }
        }
        Self { terms }
    }

    /// Leftmost-longest scan over lower-cased word tokens, per kind.
    fn find(&self, body: &str, kind: KeywordKind) -> Vec<String> {
        let words: Vec<String> = body
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(str::to_lowercase)
            .collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < words.len() {
            let best = self
                .terms
                .iter()
                .filter(|(t, k)| *k == kind && words[i..].starts_with(t))
                .max_by_key(|(t, _)| t.len());
            match best {
                Some((t, _)) => {
                    out.push(t.join(" "));
                    i += t.len();
                }
                None => i += 1,
            }
        }
        out
    }
}

fn demo() -> (tempfile::TempDir, KnowledgeIndex, TaxonomyArtifact) {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = pipeline::demo(dir.path()).unwrap();
    let index = pipeline::load_index(&cfg.paths).unwrap();
    let tax: TaxonomyArtifact = Artifact::read(&cfg.paths.taxonomy, artifact::TAXONOMY).unwrap();
    (dir, index, tax)
}

fn cluster_names(index: &KnowledgeIndex, kind: KeywordKind) -> BTreeMap<String, String> {
    index
        .taxonomy()
        .clusters(kind)
        .iter()
        .flat_map(|c| c.member_terms.iter().map(move |t| (t.clone(), c.name.clone())))
        .collect()
}

#[test]
fn stats_match_recount() {
    let (_dir, index, _) = demo();
    let vocab = Vocab::parse(fixtures::DEMO_GAZETTEER);
    for kind in [KeywordKind::UiComponent, KeywordKind::VisualElement] {
        let names = cluster_names(&index, kind);
        let order = index.taxonomy().names(kind);
        for post_id in index.corpus().posts.keys() {
            let mut expected = vec![0u64; order.len()];
            for c in index.corpus().comments_of(post_id) {
                for term in vocab.find(&c.body, kind) {
                    let name = &names[&term];
                    expected[order.iter().position(|n| n == name).unwrap()] += 1;
                }
            }
            let stats = index.stats(post_id).unwrap();
            let got = match kind {
                KeywordKind::UiComponent => &stats.num_ui_by_cluster,
                KeywordKind::VisualElement => &stats.num_ve_by_cluster,
            };
            assert_eq!(got, &expected, "post {post_id} {kind}");
        }
    }
}

#[test]
fn cooccurrence_matches_recount() {
    let (_dir, index, tax) = demo();
    let vocab = Vocab::parse(fixtures::DEMO_GAZETTEER);
    let ui_names = cluster_names(&index, KeywordKind::UiComponent);
    let ve_names = cluster_names(&index, KeywordKind::VisualElement);
    let m = &tax.payload.cooccurrence;
    for (ui_i, ui) in m.ui_names.iter().enumerate() {
        for (ve_i, ve) in m.ve_names.iter().enumerate() {
            let expected = index
                .corpus()
                .comments
                .values()
                .filter(|c| {
                    let has_ui = vocab.find(&c.body, KeywordKind::UiComponent).iter().any(|t| &ui_names[t] == ui);
                    let has_ve = vocab.find(&c.body, KeywordKind::VisualElement).iter().any(|t| &ve_names[t] == ve);
                    has_ui && has_ve
                })
                .count() as u64;
            assert_eq!(m.counts[ui_i][ve_i], expected, "({ui}, {ve})");
        }
    }
}

#[test]
fn every_cell_has_a_post() {
    let (_dir, index, _) = demo();
    for ui in index.taxonomy().names(KeywordKind::UiComponent) {
        for ve in index.taxonomy().names(KeywordKind::VisualElement) {
            let hit = index.corpus().posts.keys().any(|p| index.score_post(p, &ui, &ve).unwrap() > 0.0 && {
                let s = index.stats(p).unwrap();
                let u = index.resolve(KeywordKind::UiComponent, &ui).unwrap();
                let v = index.resolve(KeywordKind::VisualElement, &ve).unwrap();
                s.pair_counts[u][v] > 0
            });
            assert!(hit, "no post co-mentions ({ui}, {ve})");
        }
    }
}

#[test]
fn structure_stage_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = pipeline::demo(dir.path()).unwrap();
    let first = std::fs::read(&cfg.paths.structured).unwrap();
    let again = dir.path().join("structured-2.json");
    pipeline::structure(&cfg.paths.corpus, &cfg.paths.gazetteer, "lexicon", &again).unwrap();
    assert_eq!(first, std::fs::read(&again).unwrap());
}

#[test]
fn rebuilt_corpus_invalidates_downstream() {
    let dir = tempfile::tempdir().unwrap();
    let (mut cfg, _) = pipeline::demo(dir.path()).unwrap();
    cfg.ingest.bot_authors.push("ana_ux".into());
    pipeline::ingest(&cfg.paths.dump, &cfg.paths.corpus, &cfg.ingest).unwrap();
    let err = pipeline::load_index(&cfg.paths).unwrap_err();
    assert!(err.to_string().contains("rebuild"), "{err}");
}
