//! HTTP API over a loaded knowledge index.
//!
//! | Method | Path | |
//! |---|---|---|
//! | GET | `/health` | liveness |
//! | GET | `/taxonomy` | cluster names per axis |
//! | GET | `/overview?ui&ve&offset&limit` | ranked post cards |
//! | GET | `/posts/{id}/reading?ui&ve&feedback_type&session&n&seed` | reading page |
//! | GET | `/posts/{id}/recommendations?ui&ve&n&seed` | sampled related posts |
//! | GET, POST | `/maps/{id}` | fetch / create a mind map |
//! | POST | `/maps/{id}/nodes`, `/maps/{id}/comment-nodes` | add nodes |
//! | PUT, DELETE | `/maps/{id}/nodes/{node}` | edit or move / delete subtree |
//! | POST | `/maps/{id}/nodes/{node}/jump` | resolve a node's comment link |
//! | GET, POST | `/maps/{id}/export`, `/maps/{id}/import` | portable document |
//! | POST | `/sessions/{id}/events` | append session events |
//! | POST | `/sessions/{id}/back` | pop navigation history |
//! | GET | `/sessions/{id}/report?threshold_ms&end_ms` | exploration counts |
//!
//! Mutations carry `expected_revision`; a stale one gets 409 with
//! `current_revision` in the body.

pub mod error;
pub mod payload;

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::Deserialize;

use odcl_core::analytics::{exploration_report, validate_events, EventKind, SessionEvent};
use odcl_core::config::ServiceConfig;
use odcl_core::index::{FacetQuery, RankedPost};
use odcl_core::mindmap::{AutoTitlePolicy, MindmapDocument};
use odcl_core::{FeedbackLabel, KeywordKind, KnowledgeIndex, MindmapStore};

pub use error::{ApiError, ErrorBody};
use payload::*;

#[derive(Default)]
struct Session {
    events: Vec<SessionEvent>,
    history: VecDeque<String>,
}

pub struct AppState {
    index: Arc<KnowledgeIndex>,
    maps: MindmapStore,
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

impl AppState {
    pub fn new(index: KnowledgeIndex, maps: MindmapStore, config: ServiceConfig) -> Self {
        Self { index: Arc::new(index), maps, config, sessions: Mutex::default() }
    }

    pub fn index(&self) -> &KnowledgeIndex {
        &self.index
    }

    pub fn maps(&self) -> &MindmapStore {
        &self.maps
    }

    fn session(&self, id: &str) -> Arc<Mutex<Session>> {
        self.sessions.lock().expect("sessions lock").entry(id.to_string()).or_default().clone()
    }
}

type Shared = State<Arc<AppState>>;
type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/taxonomy", get(taxonomy))
        .route("/overview", get(overview))
        .route("/posts/{id}/reading", get(reading))
        .route("/posts/{id}/recommendations", get(recommendations))
        .route("/maps/{id}", get(get_map).post(create_map))
        .route("/maps/{id}/nodes", post(add_node))
        .route("/maps/{id}/comment-nodes", post(add_comment_node))
        .route("/maps/{id}/nodes/{node}", put(edit_node).delete(delete_node))
        .route("/maps/{id}/nodes/{node}/jump", post(jump))
        .route("/maps/{id}/export", get(export_map))
        .route("/maps/{id}/import", post(import_map))
        .route("/sessions/{id}/events", post(add_events))
        .route("/sessions/{id}/back", post(back))
        .route("/sessions/{id}/report", get(report))
        .with_state(state)
}

/// Binds `host:port` and serves until the process is interrupted.
pub async fn serve(state: Arc<AppState>) -> std::io::Result<()> {
    let addr = format!("{}:{}", state.config.host, state.config.port);
    let listener = tokio::net::TcpListener::bind(&addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn empty_to_none(v: Option<String>) -> Option<String> {
    v.filter(|s| !s.trim().is_empty())
}

fn parse_feedback(v: Option<String>) -> Result<Option<FeedbackLabel>, ApiError> {
    match empty_to_none(v).as_deref() {
        None | Some("default") => Ok(None),
        Some(s) => s.parse().map(Some).map_err(ApiError::bad_request),
    }
}

fn card(index: &KnowledgeIndex, r: &RankedPost) -> Result<PostCard, ApiError> {
    let post = index.post(&r.post_id)?;
    Ok(PostCard {
        post_id: r.post_id.clone(),
        title: post.title.clone(),
        thumbnail: post.image_refs.first().cloned(),
        created_at: r.created_at,
        num_ui: r.num_ui,
        num_ve: r.num_ve,
        score: r.score,
    })
}

fn facet_card(index: &KnowledgeIndex, post_id: &str, ui: Option<&str>, ve: Option<&str>) -> Result<PostCard, ApiError> {
    let post = index.post(post_id)?;
    let stats = index.stats(post_id).ok_or_else(|| ApiError::not_found(format!("unknown post {post_id}")))?;
    let ui_i = ui.map(|u| index.resolve(KeywordKind::UiComponent, u)).transpose()?;
    let ve_i = ve.map(|v| index.resolve(KeywordKind::VisualElement, v)).transpose()?;
    let score = match (ui, ve) {
        (Some(u), Some(v)) => Some(index.score_post(post_id, u, v)?),
        _ => None,
    };
    Ok(PostCard {
        post_id: post_id.to_string(),
        title: post.title.clone(),
        thumbnail: post.image_refs.first().cloned(),
        created_at: post.created_at,
        num_ui: ui_i.map(|i| stats.num_ui_by_cluster[i]),
        num_ve: ve_i.map(|i| stats.num_ve_by_cluster[i]),
        score,
    })
}

async fn taxonomy(State(s): Shared) -> Json<TaxonomyView> {
    let t = s.index.taxonomy();
    Json(TaxonomyView {
        ui_components: t.names(KeywordKind::UiComponent),
        visual_elements: t.names(KeywordKind::VisualElement),
    })
}

#[derive(Deserialize)]
struct OverviewQuery {
    ui: Option<String>,
    ve: Option<String>,
    #[serde(default)]
    offset: usize,
    limit: Option<usize>,
}

const DEFAULT_PAGE: usize = 20;
const MAX_PAGE: usize = 500;

async fn overview(State(s): Shared, Query(q): Query<OverviewQuery>) -> ApiResult<OverviewPage> {
    let (ui, ve) = (empty_to_none(q.ui), empty_to_none(q.ve));
    let ranked = s.index.sort_posts(&FacetQuery::new(ui.as_deref(), ve.as_deref()))?;
    let limit = q.limit.unwrap_or(DEFAULT_PAGE).min(MAX_PAGE);
    let cards = ranked
        .iter()
        .skip(q.offset)
        .take(limit)
        .map(|r| card(&s.index, r))
        .collect::<Result<_, _>>()?;
    Ok(Json(OverviewPage { total: ranked.len(), offset: q.offset, limit, ui, ve, cards }))
}

#[derive(Deserialize)]
struct ReadingQuery {
    ui: Option<String>,
    ve: Option<String>,
    feedback_type: Option<String>,
    session: Option<String>,
    n: Option<usize>,
    #[serde(default)]
    seed: u64,
}

fn recommend_cards(
    s: &AppState,
    post_id: &str,
    ui: Option<&str>,
    ve: Option<&str>,
    n: Option<usize>,
    seed: u64,
) -> Result<Vec<PostCard>, ApiError> {
    let n = n.unwrap_or(s.config.recommendations);
    s.index
        .recommend(post_id, ui, ve, n, seed)?
        .iter()
        .map(|id| facet_card(&s.index, id, ui, ve))
        .collect()
}

async fn reading(State(s): Shared, Path(id): Path<String>, Query(q): Query<ReadingQuery>) -> ApiResult<ReadingPage> {
    let post = s.index.post(&id)?;
    let (ui, ve) = (empty_to_none(q.ui), empty_to_none(q.ve));
    let feedback_type = parse_feedback(q.feedback_type)?;
    if let Some(u) = &ui {
        s.index.resolve(KeywordKind::UiComponent, u)?;
    }
    let comments = s.index.sort_comments(&id, ve.as_deref(), feedback_type)?;
    let recommendations = recommend_cards(&s, &id, ui.as_deref(), ve.as_deref(), q.n, q.seed)?;
    let history = match empty_to_none(q.session) {
        Some(sid) => {
            let session = s.session(&sid);
            let mut sess = session.lock().expect("session lock");
            if sess.history.back() != Some(&id) {
                sess.history.push_back(id.clone());
                while sess.history.len() > s.config.history_depth.max(1) {
                    sess.history.pop_front();
                }
            }
            let len = sess.history.len();
            History { previous_post_id: len.checked_sub(2).map(|i| sess.history[i].clone()), depth: len }
        }
        None => History { previous_post_id: None, depth: 0 },
    };
    Ok(Json(ReadingPage {
        post: PostView {
            post_id: post.id.clone(),
            title: post.title.clone(),
            body: post.body.clone(),
            author: post.author.clone(),
            created_at: post.created_at,
            image_refs: post.image_refs.clone(),
        },
        facet: Facet { ui, ve, feedback_type },
        comments,
        history,
        recommendations,
    }))
}

#[derive(Deserialize)]
struct RecommendQuery {
    ui: Option<String>,
    ve: Option<String>,
    n: Option<usize>,
    #[serde(default)]
    seed: u64,
}

async fn recommendations(
    State(s): Shared,
    Path(id): Path<String>,
    Query(q): Query<RecommendQuery>,
) -> ApiResult<Recommendations> {
    s.index.post(&id)?;
    let (ui, ve) = (empty_to_none(q.ui), empty_to_none(q.ve));
    let items = recommend_cards(&s, &id, ui.as_deref(), ve.as_deref(), q.n, q.seed)?;
    Ok(Json(Recommendations { post_id: id, ui, ve, seed: q.seed, items }))
}

fn map_view(s: &AppState, map_id: &str) -> ApiResult<MapView> {
    let map = s.maps.get(map_id)?;
    Ok(Json(MapView { map_id: map_id.to_string(), revision: map.revision(), document: map.export() }))
}

async fn get_map(State(s): Shared, Path(id): Path<String>) -> ApiResult<MapView> {
    map_view(&s, &id)
}

async fn create_map(
    State(s): Shared,
    Path(id): Path<String>,
    body: Option<Json<CreateMap>>,
) -> Result<(StatusCode, Json<MapView>), ApiError> {
    let title = body.and_then(|b| b.0.root_title).unwrap_or_else(|| "Notes".to_string());
    s.maps.create(&id, &title)?;
    Ok((StatusCode::CREATED, map_view(&s, &id)?))
}

async fn add_node(State(s): Shared, Path(id): Path<String>, Json(b): Json<AddNode>) -> ApiResult<Mutation> {
    let (node_id, revision) = s.maps.mutate(&id, b.expected_revision, |m| m.add_node(&b.parent, b.title, b.note))?;
    Ok(Json(Mutation { revision, node_id: Some(node_id), title: None, removed: None }))
}

async fn add_comment_node(
    State(s): Shared,
    Path(id): Path<String>,
    Json(b): Json<AddCommentNode>,
) -> ApiResult<Mutation> {
    let comment = s
        .index
        .corpus()
        .comment(&b.comment_id)
        .ok_or_else(|| ApiError::not_found(format!("unknown comment {}", b.comment_id)))?;
    let structured = s
        .index
        .structured()
        .comments
        .get(&b.comment_id)
        .ok_or_else(|| ApiError::not_found(format!("comment {} was not structured", b.comment_id)))?;
    let policy = AutoTitlePolicy { max_keywords: s.config.title_keywords, rng_seed: 0 };
    let ((node_id, title), revision) = s.maps.mutate(&id, b.expected_revision, |m| {
        let node = m.add_comment_node(&b.parent, comment, structured, &policy)?;
        let title = m.node(&node).map(|n| n.title.clone()).unwrap_or_default();
        Ok((node, title))
    })?;
    Ok(Json(Mutation { revision, node_id: Some(node_id), title: Some(title), removed: None }))
}

async fn edit_node(
    State(s): Shared,
    Path((id, node)): Path<(String, String)>,
    Json(b): Json<EditNode>,
) -> ApiResult<Mutation> {
    let note = if b.clear_note { Some(None) } else { b.note.map(Some) };
    let ((), revision) = s.maps.mutate(&id, b.expected_revision, |m| {
        if b.title.is_some() || note.is_some() {
            m.edit_node(&node, b.title.clone(), note.clone())?;
        }
        if let Some(parent) = &b.parent {
            m.move_node(&node, parent)?;
        }
        Ok(())
    })?;
    Ok(Json(Mutation { revision, node_id: Some(node), title: None, removed: None }))
}

#[derive(Deserialize)]
struct RevisionQuery {
    expected_revision: u64,
}

async fn delete_node(
    State(s): Shared,
    Path((id, node)): Path<(String, String)>,
    Query(q): Query<RevisionQuery>,
) -> ApiResult<Mutation> {
    let (removed, revision) = s.maps.mutate(&id, q.expected_revision, |m| m.delete_subtree(&node))?;
    Ok(Json(Mutation { revision, node_id: Some(node), title: None, removed: Some(removed) }))
}

async fn jump(State(s): Shared, Path((id, node)): Path<(String, String)>) -> ApiResult<JumpTarget> {
    let map = s.maps.get(&id)?;
    Ok(Json(map.resolve_jump(&node, s.index.corpus())?))
}

async fn export_map(State(s): Shared, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let text = s.maps.export(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], text))
}

async fn import_map(State(s): Shared, Path(id): Path<String>, body: String) -> ApiResult<MapView> {
    let doc = MindmapDocument::from_json(&body)?;
    s.maps.import(&id, doc)?;
    map_view(&s, &id)
}

async fn add_events(State(s): Shared, Path(id): Path<String>, Json(b): Json<EventBatch>) -> ApiResult<EventsAccepted> {
    let session = s.session(&id);
    let mut sess = session.lock().expect("session lock");
    validate_events(&id, &b.events, sess.events.last().map(|e| e.timestamp))?;
    for (i, e) in b.events.iter().enumerate() {
        let known = match e.kind {
            EventKind::ViewPost => s.index.corpus().post(&e.subject_id).is_some(),
            EventKind::ViewComment => s.index.corpus().comment(&e.subject_id).is_some(),
            _ => true,
        };
        if !known {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "unknown_subject",
                format!("event {i}: unknown subject {}", e.subject_id),
            ));
        }
    }
    sess.events.extend(b.events.iter().cloned());
    Ok(Json(EventsAccepted { accepted: b.events.len(), total: sess.events.len() }))
}

async fn back(State(s): Shared, Path(id): Path<String>) -> ApiResult<History> {
    let session = s.session(&id);
    let mut sess = session.lock().expect("session lock");
    if sess.history.len() > 1 {
        sess.history.pop_back();
    }
    let depth = sess.history.len();
    let previous_post_id = if depth > 0 { sess.history.back().cloned() } else { None };
    Ok(Json(History { previous_post_id, depth }))
}

#[derive(Deserialize)]
struct ReportQuery {
    threshold_ms: Option<i64>,
    end_ms: Option<i64>,
}

async fn report(State(s): Shared, Path(id): Path<String>, Query(q): Query<ReportQuery>) -> ApiResult<Report> {
    let threshold = q.threshold_ms.unwrap_or(s.config.dwell_threshold_ms);
    if threshold < 0 {
        return Err(ApiError::bad_request("threshold_ms must be non-negative"));
    }
    let events = s.session(&id).lock().expect("session lock").events.clone();
    Ok(Json(exploration_report(&id, &events, threshold, q.end_ms)?))
}
