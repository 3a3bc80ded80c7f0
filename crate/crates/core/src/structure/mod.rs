//! Per-comment structuring: sentences with feedback labels, plus UI
//! component and visual element keyword mentions.

mod classify;
mod gazetteer;
mod segment;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use classify::classify_sentence;
pub use gazetteer::{canonicalize, Detection, Gazetteer};
pub use segment::segment;

use crate::ingest::{Comment, Corpus};
use crate::Span;

#[derive(Debug, Error)]
pub enum StructureError {
    #[error("gazetteer: {0}")]
    Gazetteer(String),
    #[error("provider {provider} failed on comment {comment_id}: {reason}")]
    Provider {
        provider: String,
        comment_id: String,
        reason: String,
    },
    #[error("unknown provider {0:?}; available: lexicon")]
    UnknownProvider(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackLabel {
    Critique,
    Suggestion,
    Rationale,
    Other,
}

impl FeedbackLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            FeedbackLabel::Critique => "critique",
            FeedbackLabel::Suggestion => "suggestion",
            FeedbackLabel::Rationale => "rationale",
            FeedbackLabel::Other => "other",
        }
    }
}

impl std::str::FromStr for FeedbackLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "critique" => Ok(Self::Critique),
            "suggestion" => Ok(Self::Suggestion),
            "rationale" => Ok(Self::Rationale),
            "other" => Ok(Self::Other),
            _ => Err(format!("unknown feedback type {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeywordKind {
    UiComponent,
    VisualElement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub span: Span,
    pub text: String,
    pub label: FeedbackLabel,
    pub confidence: f32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordMention {
    pub span: Span,
    pub surface: String,
    pub kind: KeywordKind,
    pub canonical: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredComment {
    pub comment_id: String,
    pub post_id: String,
    pub sentences: Vec<Sentence>,
    pub mentions: Vec<KeywordMention>,
}

impl StructuredComment {
    pub fn mentions_of(&self, kind: KeywordKind) -> impl Iterator<Item = &KeywordMention> {
        self.mentions.iter().filter(move |m| m.kind == kind)
    }

    /// Checks span and ordering invariants against the comment body.
    pub fn validate(&self, body: &str) -> Result<(), String> {
        let mut prev_end = 0usize;
        for (i, s) in self.sentences.iter().enumerate() {
            if s.index != i {
                return Err(format!("sentence {i} has index {}", s.index));
            }
            if !s.span.is_valid_in(body) {
                return Err(format!("sentence {i} span {:?} invalid", s.span));
            }
            if s.span.start < prev_end {
                return Err(format!("sentence {i} overlaps its predecessor"));
            }
            prev_end = s.span.end;
        }
        for (i, m) in self.mentions.iter().enumerate() {
            if !m.span.is_valid_in(body) {
                return Err(format!("mention {i} span {:?} invalid", m.span));
            }
            if m.span.slice(body) != m.surface {
                return Err(format!("mention {i} surface does not match body"));
            }
            for other in &self.mentions[..i] {
                if other.kind == m.kind && other.span.overlaps(&m.span) {
                    return Err(format!("mention {i} overlaps another of the same kind"));
                }
            }
        }
        Ok(())
    }
}

/// Pluggable sentence classifier and keyword detector.
///
/// Implementations must be deterministic for a fixed configuration and safe
/// to call from several threads.
pub trait ClassifierProvider: Send + Sync {
    fn name(&self) -> &str;

    /// One `(label, confidence)` per input sentence.
    fn classify(&self, sentences: &[&str]) -> Result<Vec<(FeedbackLabel, f32)>, String>;

    fn detect(&self, text: &str) -> Result<Vec<Detection>, String>;
}

/// Rule table classifier plus gazetteer detection.
#[derive(Debug, Clone)]
pub struct LexiconProvider {
    gazetteer: Gazetteer,
}

impl LexiconProvider {
    pub fn new(gazetteer: Gazetteer) -> Self {
        Self { gazetteer }
    }

    pub fn gazetteer(&self) -> &Gazetteer {
        &self.gazetteer
    }
}

impl ClassifierProvider for LexiconProvider {
    fn name(&self) -> &str {
        "lexicon"
    }

    fn classify(&self, sentences: &[&str]) -> Result<Vec<(FeedbackLabel, f32)>, String> {
        Ok(sentences.iter().map(|s| classify_sentence(s)).collect())
    }

    fn detect(&self, text: &str) -> Result<Vec<Detection>, String> {
        self.gazetteer.detect(text).map_err(|e| e.to_string())
    }
}

pub fn detect_keywords(body: &str, gazetteer: &Gazetteer) -> Result<Vec<KeywordMention>, StructureError> {
    Ok(gazetteer
        .detect(body)?
        .into_iter()
        .map(|d| KeywordMention {
            surface: d.span.slice(body).to_string(),
            span: d.span,
            kind: d.kind,
            canonical: d.canonical,
        })
        .collect())
}

/// Segments, labels, and detects keywords in one comment. Provider output
/// that breaks span invariants is reported as a provider error.
pub fn structure_comment(
    comment: &Comment,
    provider: &dyn ClassifierProvider,
) -> Result<StructuredComment, StructureError> {
    let fail = |reason: String| StructureError::Provider {
        provider: provider.name().to_string(),
        comment_id: comment.id.clone(),
        reason,
    };
    let body = comment.body.as_str();
    let spans = segment(body);
    let texts: Vec<&str> = spans.iter().map(|s| s.slice(body)).collect();
    let labels = provider.classify(&texts).map_err(fail)?;
    if labels.len() != spans.len() {
        return Err(fail(format!(
            "returned {} labels for {} sentences",
            labels.len(),
            spans.len()
        )));
    }
    let sentences = spans
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(index, (span, (label, confidence)))| Sentence {
            index,
            span: *span,
            text: span.slice(body).to_string(),
            label,
            confidence: confidence.clamp(0.0, 1.0),
        })
        .collect();

    let mut detections = provider.detect(body).map_err(fail)?;
    detections.sort_by(|a, b| a.span.start.cmp(&b.span.start).then(a.kind.cmp(&b.kind)));
    let mut mentions = Vec::with_capacity(detections.len());
    for d in detections {
        if d.span.is_empty() || !d.span.is_valid_in(body) {
            return Err(fail(format!("mention span {:?} outside body", d.span)));
        }
        mentions.push(KeywordMention {
            surface: d.span.slice(body).to_string(),
            span: d.span,
            kind: d.kind,
            canonical: d.canonical,
        });
    }

    let out = StructuredComment {
        comment_id: comment.id.clone(),
        post_id: comment.post_id.clone(),
        sentences,
        mentions,
    };
    out.validate(body).map_err(fail)?;
    Ok(out)
}

/// Structured comments for a whole corpus, keyed by comment id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StructuredCorpus {
    pub provider: String,
    pub comments: BTreeMap<String, StructuredComment>,
}

impl StructuredCorpus {
    pub fn get(&self, comment_id: &str) -> Option<&StructuredComment> {
        self.comments.get(comment_id)
    }
}

pub fn structure_corpus(
    corpus: &Corpus,
    provider: &dyn ClassifierProvider,
) -> Result<StructuredCorpus, StructureError> {
    let mut out = StructuredCorpus {
        provider: provider.name().to_string(),
        comments: BTreeMap::new(),
    };
    for c in corpus.comments.values() {
        out.comments.insert(c.id.clone(), structure_comment(c, provider)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comment(body: &str) -> Comment {
        Comment {
            id: "c1".into(),
            post_id: "p1".into(),
            author: "bob".into(),
            body: body.into(),
            created_at: 1,
        }
    }

    fn provider() -> LexiconProvider {
        LexiconProvider::new(
            Gazetteer::parse("[ui_component]\nbutton\nhome button\nicon\n[visual_element]\ngrey\ncolor\n")
                .unwrap(),
        )
    }

    #[test]
    fn no_mentions() {
        let s = structure_comment(&comment("Looks clean."), &provider()).unwrap();
        assert_eq!(s.sentences.len(), 1);
        assert!(s.mentions.is_empty());
        assert_eq!(s.sentences[0].label, FeedbackLabel::Critique);
    }

    #[test]
    fn two_sentences_three_terms() {
        let s = structure_comment(
            &comment("The home button is grey. Make the icon color brighter."),
            &provider(),
        )
        .unwrap();
        assert_eq!(s.sentences.len(), 2);
        let canon: Vec<_> = s.mentions.iter().map(|m| m.canonical.as_str()).collect();
        assert_eq!(canon, vec!["home button", "grey", "icon", "color"]);
        assert_eq!(s.sentences[1].label, FeedbackLabel::Suggestion);
    }

    #[test]
    fn deterministic_output() {
        let c = comment("The home button is grey. Because contrast.");
        let a = serde_json::to_vec(&structure_comment(&c, &provider()).unwrap()).unwrap();
        let b = serde_json::to_vec(&structure_comment(&c, &provider()).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    struct Broken;
    impl ClassifierProvider for Broken {
        fn name(&self) -> &str {
            "broken"
        }
        fn classify(&self, _: &[&str]) -> Result<Vec<(FeedbackLabel, f32)>, String> {
            Ok(vec![])
        }
        fn detect(&self, _: &str) -> Result<Vec<Detection>, String> {
            Ok(vec![])
        }
    }

    #[test]
    fn provider_failure_carries_comment_id() {
        match structure_comment(&comment("One. Two."), &Broken) {
            Err(StructureError::Provider { comment_id, provider, .. }) => {
                assert_eq!(comment_id, "c1");
                assert_eq!(provider, "broken");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
