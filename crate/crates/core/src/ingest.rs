//! Raw dump parsing and corpus construction.
//!
//! A dump is newline-delimited JSON in the shape of public Reddit archive
//! exports. Only a small field subset is read:
//!
//! | field            | posts | comments | notes                                   |
//! |------------------|-------|----------|-----------------------------------------|
//! | `kind`           | opt   | opt      | `"post"`/`"comment"`; inferred if absent |
//! | `id`             | req   | req      | `t1_`/`t3_` prefixes are stripped        |
//! | `author`         | req   | req      |                                         |
//! | `created_utc`    | req   | req      | number or numeric string, seconds        |
//! | `link_flair_text`| opt   |          | also accepted as `flair`                 |
//! | `title`          | req   |          |                                         |
//! | `selftext`       | opt   |          | also accepted as `body`                  |
//! | `url`            | opt   |          | image if it looks like an image link     |
//! | `image_refs`     | opt   |          | explicit list of image URLs              |
//! | `link_id`        |       | opt      | owning post; preferred over `parent_id`  |
//! | `parent_id`      |       | opt      | used when `link_id` is absent            |
//! | `body`           |       | req      |                                         |
//!
//! Without `kind`, a record with a `title` is a post and anything with
//! `link_id`/`parent_id` is a comment. Nested replies are flattened onto
//! their owning post.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read dump: {0}")]
    Io(#[from] std::io::Error),
    #[error("dump looks corrupt: {malformed} of {total} non-empty lines are malformed")]
    CorruptDump { malformed: usize, total: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Post,
    Comment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub kind: RecordKind,
    pub id: String,
    /// Owning post id for comments.
    pub parent_id: Option<String>,
    pub author: String,
    pub flair: Option<String>,
    pub title: Option<String>,
    pub body: String,
    pub created_at: i64,
    pub image_refs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    pub inclusion_flair: String,
    pub bot_authors: Vec<String>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            inclusion_flair: "Feedback Request".to_string(),
            bot_authors: vec!["AutoModerator".to_string()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub title: String,
    pub body: String,
    pub flair: String,
    pub created_at: i64,
    pub image_refs: Vec<String>,
    pub author: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub id: String,
    pub post_id: String,
    pub author: String,
    pub body: String,
    pub created_at: i64,
}

/// Filtered posts and comments.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub posts: BTreeMap<String, Post>,
    pub comments: BTreeMap<String, Comment>,
    /// Comment ids per post, ordered by `created_at` then id.
    pub comments_by_post: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Default)]
pub struct ParsedDump {
    pub records: Vec<RawRecord>,
    pub malformed: usize,
    /// 1-based line numbers of malformed lines.
    pub malformed_lines: Vec<usize>,
}

/// Per-reason drop counters from [`build_corpus`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropReport {
    pub input_posts: usize,
    pub input_comments: usize,
    pub retained_posts: usize,
    pub retained_comments: usize,
    pub post_drops: BTreeMap<PostDropReason, usize>,
    pub comment_drops: BTreeMap<CommentDropReason, usize>,
}

impl DropReport {
    pub fn post_drop_total(&self) -> usize {
        self.post_drops.values().sum()
    }

    pub fn comment_drop_total(&self) -> usize {
        self.comment_drops.values().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostDropReason {
    WrongFlair,
    NoImage,
    NoRetainedComments,
    DuplicateId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommentDropReason {
    BotAuthor,
    OpComment,
    DeletedOrEmpty,
    /// Owning post is not in the dump.
    Orphan,
    /// Owning post was dropped by a post-level filter.
    ParentDropped,
    DuplicateId,
}

/// Parses a newline-delimited dump. Blank lines are skipped; lines that are
/// not valid records are counted, and more than half malformed is fatal.
pub fn parse_dump<R: BufRead>(reader: R) -> Result<ParsedDump, IngestError> {
    let mut out = ParsedDump::default();
    let mut total = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        total += 1;
        match parse_line(trimmed) {
            Some(rec) => out.records.push(rec),
            None => {
                out.malformed += 1;
                out.malformed_lines.push(i + 1);
            }
        }
    }
    if out.malformed * 2 > total {
        return Err(IngestError::CorruptDump {
            malformed: out.malformed,
            total,
        });
    }
    Ok(out)
}

pub fn parse_dump_str(text: &str) -> Result<ParsedDump, IngestError> {
    parse_dump(text.as_bytes())
}

fn parse_line(line: &str) -> Option<RawRecord> {
    let value: Value = serde_json::from_str(line).ok()?;
    let obj = value.as_object()?;

    let kind = match obj.get("kind").and_then(Value::as_str) {
        Some("post") | Some("submission") => RecordKind::Post,
        Some("comment") => RecordKind::Comment,
        Some(_) => return None,
        None if obj.contains_key("title") => RecordKind::Post,
        None if obj.contains_key("link_id") || obj.contains_key("parent_id") => {
            RecordKind::Comment
        }
        None => return None,
    };

    let id = strip_fullname(str_field(obj, "id")?).to_string();
    if id.is_empty() {
        return None;
    }
    let author = str_field(obj, "author")?.to_string();
    let created_at = time_field(obj)?;
    if created_at <= 0 {
        return None;
    }

    match kind {
        RecordKind::Post => {
            let title = str_field(obj, "title")?.to_string();
            let body = str_field(obj, "selftext")
                .or_else(|| str_field(obj, "body"))
                .unwrap_or("")
                .to_string();
            let flair = str_field(obj, "link_flair_text")
                .or_else(|| str_field(obj, "flair"))
                .map(str::to_string);
            let mut image_refs: Vec<String> = match obj.get("image_refs") {
                Some(Value::Array(items)) => items
                    .iter()
                    .filter_map(Value::as_str)
                    .map(str::to_string)
                    .collect(),
                Some(_) => return None,
                None => Vec::new(),
            };
            if let Some(url) = str_field(obj, "url") {
                if is_image_url(url) {
                    image_refs.push(url.to_string());
                }
            }
            image_refs.extend(extract_image_urls(&body));
            let mut seen = BTreeSet::new();
            image_refs.retain(|u| seen.insert(u.clone()));
            Some(RawRecord {
                kind,
                id,
                parent_id: None,
                author,
                flair,
                title: Some(title),
                body,
                created_at,
                image_refs,
            })
        }
        RecordKind::Comment => {
            let parent = str_field(obj, "link_id").or_else(|| str_field(obj, "parent_id"))?;
            let parent = strip_fullname(parent).to_string();
            if parent.is_empty() {
                return None;
            }
            let body = str_field(obj, "body")?.to_string();
            Some(RawRecord {
                kind,
                id,
                parent_id: Some(parent),
                author,
                flair: None,
                title: None,
                body,
                created_at,
                image_refs: Vec::new(),
            })
        }
    }
}

fn str_field<'a>(obj: &'a Map<String, Value>, key: &str) -> Option<&'a str> {
    obj.get(key).and_then(Value::as_str)
}

fn time_field(obj: &Map<String, Value>) -> Option<i64> {
    let v = obj.get("created_utc").or_else(|| obj.get("created_at"))?;
    match v {
        Value::Number(n) => n.as_i64().or_else(|| n.as_f64().map(|f| f as i64)),
        Value::String(s) => s.trim().parse::<f64>().ok().map(|f| f as i64),
        _ => None,
    }
}

fn strip_fullname(id: &str) -> &str {
    match id.get(..3) {
        Some("t1_") | Some("t3_") => &id[3..],
        _ => id,
    }
}

const IMAGE_EXTENSIONS: [&str; 6] = [".png", ".jpg", ".jpeg", ".gif", ".webp", ".bmp"];
const IMAGE_HOSTS: [&str; 3] = ["i.redd.it", "i.imgur.com", "imgur.com"];

pub fn is_image_url(url: &str) -> bool {
    let url = url.trim();
    if !(url.starts_with("http://") || url.starts_with("https://")) {
        return false;
    }
    let without_query = url.split(['?', '#']).next().unwrap_or(url).to_ascii_lowercase();
    if IMAGE_EXTENSIONS.iter().any(|ext| without_query.ends_with(ext)) {
        return true;
    }
    let host = without_query
        .split("://")
        .nth(1)
        .and_then(|rest| rest.split('/').next())
        .unwrap_or("");
    IMAGE_HOSTS.contains(&host)
}

fn extract_image_urls(text: &str) -> Vec<String> {
    text.split(|c: char| c.is_whitespace() || matches!(c, '(' | ')' | '[' | ']' | '<' | '>' | '"'))
        .filter(|tok| is_image_url(tok))
        .map(str::to_string)
        .collect()
}

fn nfc(s: &str) -> String {
    s.nfc().collect()
}

fn is_deleted_body(body: &str) -> bool {
    let t = body.trim();
    t.is_empty() || t == "[deleted]" || t == "[removed]"
}

/// Applies the inclusion filters.
///
/// Posts need the inclusion flair, at least one image reference and at
/// least one retained comment. Comments by bots, by the post's author, or
/// with deleted/empty bodies are dropped. Text is NFC-normalized so byte
/// offsets computed downstream agree across components.
pub fn build_corpus(records: &[RawRecord], config: &IngestConfig) -> (Corpus, DropReport) {
    let mut report = DropReport::default();
    let bots: BTreeSet<&str> = config.bot_authors.iter().map(String::as_str).collect();

    // First pass: post-level filters that do not depend on comments.
    let mut candidate_posts: BTreeMap<String, Post> = BTreeMap::new();
    let mut seen_posts = BTreeSet::new();
    let mut dropped_posts = BTreeSet::new();
    for rec in records.iter().filter(|r| r.kind == RecordKind::Post) {
        report.input_posts += 1;
        if !seen_posts.insert(rec.id.clone()) {
            *report.post_drops.entry(PostDropReason::DuplicateId).or_default() += 1;
            continue;
        }
        if rec.flair.as_deref() != Some(config.inclusion_flair.as_str()) {
            *report.post_drops.entry(PostDropReason::WrongFlair).or_default() += 1;
            dropped_posts.insert(rec.id.clone());
            continue;
        }
        if rec.image_refs.is_empty() {
            *report.post_drops.entry(PostDropReason::NoImage).or_default() += 1;
            dropped_posts.insert(rec.id.clone());
            continue;
        }
        candidate_posts.insert(
            rec.id.clone(),
            Post {
                id: rec.id.clone(),
                title: nfc(rec.title.as_deref().unwrap_or("")),
                body: nfc(&rec.body),
                flair: rec.flair.clone().unwrap_or_default(),
                created_at: rec.created_at,
                image_refs: rec.image_refs.clone(),
                author: rec.author.clone(),
            },
        );
    }

    // Second pass: comment filters.
    let mut comments: BTreeMap<String, Comment> = BTreeMap::new();
    let mut seen_comments = BTreeSet::new();
    for rec in records.iter().filter(|r| r.kind == RecordKind::Comment) {
        report.input_comments += 1;
        let reason = if !seen_comments.insert(rec.id.clone()) {
            Some(CommentDropReason::DuplicateId)
        } else {
            let parent = rec.parent_id.as_deref().unwrap_or("");
            match candidate_posts.get(parent) {
                None if dropped_posts.contains(parent) => Some(CommentDropReason::ParentDropped),
                None => Some(CommentDropReason::Orphan),
                Some(_) if bots.contains(rec.author.as_str()) => Some(CommentDropReason::BotAuthor),
                Some(post) if post.author == rec.author => Some(CommentDropReason::OpComment),
                Some(_) if is_deleted_body(&rec.body) => Some(CommentDropReason::DeletedOrEmpty),
                Some(_) => None,
            }
        };
        match reason {
            Some(r) => *report.comment_drops.entry(r).or_default() += 1,
            None => {
                comments.insert(
                    rec.id.clone(),
                    Comment {
                        id: rec.id.clone(),
                        post_id: rec.parent_id.clone().unwrap_or_default(),
                        author: rec.author.clone(),
                        body: nfc(&rec.body),
                        created_at: rec.created_at,
                    },
                );
            }
        }
    }

    let mut comments_by_post: BTreeMap<String, Vec<&Comment>> = BTreeMap::new();
    for c in comments.values() {
        comments_by_post.entry(c.post_id.clone()).or_default().push(c);
    }

    let mut corpus = Corpus::default();
    for (id, post) in candidate_posts {
        match comments_by_post.get_mut(&id) {
            Some(list) if !list.is_empty() => {
                list.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
                corpus
                    .comments_by_post
                    .insert(id.clone(), list.iter().map(|c| c.id.clone()).collect());
                corpus.posts.insert(id, post);
            }
            _ => {
                *report
                    .post_drops
                    .entry(PostDropReason::NoRetainedComments)
                    .or_default() += 1;
            }
        }
    }
    corpus.comments = comments;
    report.retained_posts = corpus.posts.len();
    report.retained_comments = corpus.comments.len();
    (corpus, report)
}

impl Corpus {
    pub fn post(&self, id: &str) -> Option<&Post> {
        self.posts.get(id)
    }

    pub fn comment(&self, id: &str) -> Option<&Comment> {
        self.comments.get(id)
    }

    /// Comments of a post in stored order.
    pub fn comments_of<'a>(&'a self, post_id: &str) -> impl Iterator<Item = &'a Comment> + 'a {
        self.comments_by_post
            .get(post_id)
            .into_iter()
            .flatten()
            .filter_map(move |cid| self.comments.get(cid))
    }

    /// Re-expresses the corpus as raw records, posts first.
    pub fn to_records(&self) -> Vec<RawRecord> {
        let mut out: Vec<RawRecord> = self
            .posts
            .values()
            .map(|p| RawRecord {
                kind: RecordKind::Post,
                id: p.id.clone(),
                parent_id: None,
                author: p.author.clone(),
                flair: Some(p.flair.clone()),
                title: Some(p.title.clone()),
                body: p.body.clone(),
                created_at: p.created_at,
                image_refs: p.image_refs.clone(),
            })
            .collect();
        out.extend(self.comments.values().map(|c| RawRecord {
            kind: RecordKind::Comment,
            id: c.id.clone(),
            parent_id: Some(c.post_id.clone()),
            author: c.author.clone(),
            flair: None,
            title: None,
            body: c.body.clone(),
            created_at: c.created_at,
            image_refs: Vec::new(),
        }));
        out
    }

    /// Checks the cross-structure invariants.
    pub fn check_consistency(&self) -> Result<(), String> {
        let mut listed = 0usize;
        for (pid, ids) in &self.comments_by_post {
            if !self.posts.contains_key(pid) {
                return Err(format!("comment list for unknown post {pid}"));
            }
            if ids.is_empty() {
                return Err(format!("post {pid} has no comments"));
            }
            let mut prev: Option<&Comment> = None;
            for cid in ids {
                let c = self
                    .comments
                    .get(cid)
                    .ok_or_else(|| format!("unknown comment {cid} listed under {pid}"))?;
                if &c.post_id != pid {
                    return Err(format!("comment {cid} listed under {pid} but owned by {}", c.post_id));
                }
                if let Some(p) = prev {
                    if (p.created_at, &p.id) > (c.created_at, &c.id) {
                        return Err(format!("comments of {pid} out of order at {cid}"));
                    }
                }
                prev = Some(c);
                listed += 1;
            }
        }
        if listed != self.comments.len() {
            return Err(format!(
                "{} comments stored but {listed} listed per post",
                self.comments.len()
            ));
        }
        if self.comments_by_post.len() != self.posts.len() {
            return Err("post without comment list".to_string());
        }
        Ok(())
    }
}
