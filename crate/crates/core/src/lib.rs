//! Structures design-community feedback into a UI component / visual
//! element taxonomy and serves it to learners.
//!
//! The batch side runs ingest → structure → taxonomy → index; the
//! interactive side is the [`index::KnowledgeIndex`] queries, the
//! [`mindmap`] note model and the [`analytics`] dwell report.

pub mod analytics;
pub mod artifact;
pub mod config;
pub mod embed;
pub mod ingest;
pub mod kmeans;
pub mod index;
pub mod mindmap;
pub mod pipeline;
pub mod structure;
pub mod taxonomy;

pub use analytics::{exploration_report, EventKind, ExplorationReport, SessionEvent};
pub use config::PipelineConfig;
pub use index::{CommentView, FacetQuery, KnowledgeIndex, RankedPost, ScoringConfig};
pub use ingest::{Comment, Corpus, Post};
pub use mindmap::{Mindmap, MindmapDocument, MindmapError, MindmapStore};
pub use structure::{FeedbackLabel, KeywordKind, StructuredComment};
pub use taxonomy::{Cluster, Taxonomy};

use serde::{Deserialize, Serialize};

/// Half-open `[start, end)` byte range into a UTF-8 string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// Non-empty, in bounds, and on char boundaries.
    pub fn is_valid_in(&self, text: &str) -> bool {
        self.start < self.end
            && self.end <= text.len()
            && text.is_char_boundary(self.start)
            && text.is_char_boundary(self.end)
    }

    /// Panics if the span is not valid for `text`.
    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}
