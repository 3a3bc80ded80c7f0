//! Request and response bodies.

use serde::{Deserialize, Serialize};

use odcl_core::index::CommentView;
use odcl_core::mindmap::{Link, MindmapDocument};
use odcl_core::{ExplorationReport, FeedbackLabel, SessionEvent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostCard {
    pub post_id: String,
    pub title: String,
    pub thumbnail: Option<String>,
    pub created_at: i64,
    pub num_ui: Option<u64>,
    pub num_ve: Option<u64>,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverviewPage {
    pub total: usize,
    pub offset: usize,
    pub limit: usize,
    pub ui: Option<String>,
    pub ve: Option<String>,
    pub cards: Vec<PostCard>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyView {
    pub ui_components: Vec<String>,
    pub visual_elements: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostView {
    pub post_id: String,
    pub title: String,
    pub body: String,
    pub author: String,
    pub created_at: i64,
    pub image_refs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Facet {
    pub ui: Option<String>,
    pub ve: Option<String>,
    pub feedback_type: Option<FeedbackLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct History {
    pub previous_post_id: Option<String>,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadingPage {
    pub post: PostView,
    pub facet: Facet,
    pub comments: Vec<CommentView>,
    pub history: History,
    pub recommendations: Vec<PostCard>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendations {
    pub post_id: String,
    pub ui: Option<String>,
    pub ve: Option<String>,
    pub seed: u64,
    pub items: Vec<PostCard>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateMap {
    #[serde(default)]
    pub root_title: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddNode {
    pub expected_revision: u64,
    pub parent: String,
    pub title: String,
    #[serde(default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddCommentNode {
    pub expected_revision: u64,
    pub parent: String,
    pub comment_id: String,
}

/// Any combination of retitle, note change and re-parent, applied atomically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditNode {
    pub expected_revision: u64,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub note: Option<String>,
    #[serde(default)]
    pub clear_note: bool,
    #[serde(default)]
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapView {
    pub map_id: String,
    pub revision: u64,
    pub document: MindmapDocument,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mutation {
    pub revision: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub removed: Option<usize>,
}

pub type JumpTarget = Link;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventBatch {
    pub events: Vec<SessionEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventsAccepted {
    pub accepted: usize,
    pub total: usize,
}

pub type Report = ExplorationReport;
