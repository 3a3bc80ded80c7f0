//! Learner mindmaps: a tree of notes where nodes added from a comment keep
//! a link back to their post and comment.
//!
//! The portable document (`format = "odcl-mindmap"`, `version = 1`):
//!
//! ```json
//! {
//!   "format": "odcl-mindmap",
//!   "version": 1,
//!   "map_id": "m1",
//!   "root": "root",
//!   "nodes": [
//!     {"id": "root", "title": "Button", "note": null, "link": null,
//!      "children": ["n1"], "created_at": 1700000000000},
//!     {"id": "n1", "title": "grey, home button", "note": "The home button...",
//!      "link": {"post_id": "p1", "comment_id": "c9"}, "children": [],
//!      "created_at": 1700000001000}
//!   ]
//! }
//! ```
//!
//! Nodes are listed in pre-order from the root. `created_at` is unix
//! milliseconds. The revision counter is session state and is not part of
//! the document; an imported map starts at revision 0.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Comment, Corpus};
use crate::structure::StructuredComment;

pub const DOCUMENT_FORMAT: &str = "odcl-mindmap";
pub const DOCUMENT_VERSION: u32 = 1;
pub const ROOT_ID: &str = "root";

#[derive(Debug, Error)]
pub enum MindmapError {
    #[error("node {0} not found")]
    NotFound(String),
    #[error("map {0} not found")]
    MapNotFound(String),
    #[error("map {0} already exists")]
    MapExists(String),
    #[error("node {0} has no link")]
    NoLink(String),
    #[error("node {node} links to post {post_id} / comment {comment_id}, which no longer exist")]
    StaleLink { node: String, post_id: String, comment_id: String },
    #[error("moving {node} under {target} would create a cycle")]
    Cycle { node: String, target: String },
    #[error("the root node cannot be {0}")]
    RootImmutable(&'static str),
    #[error("revision conflict: expected {expected}, current is {current}")]
    Conflict { expected: u64, current: u64 },
    #[error("import failed at {location}: {reason}")]
    Import { location: String, reason: String },
    #[error("invalid title policy: {0}")]
    Policy(String),
    #[error("mindmap storage: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub post_id: String,
    pub comment_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MindmapNode {
    pub id: String,
    pub title: String,
    pub note: Option<String>,
    pub link: Option<Link>,
    pub children: Vec<String>,
    pub created_at: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutoTitlePolicy {
    pub max_keywords: usize,
    pub rng_seed: u64,
}

impl Default for AutoTitlePolicy {
    fn default() -> Self {
        Self { max_keywords: 5, rng_seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct Mindmap {
    map_id: String,
    root: String,
    nodes: BTreeMap<String, MindmapNode>,
    parents: HashMap<String, String>,
    revision: u64,
    next_id: u64,
}

fn now_ms() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0)
}

/// Up to `policy.max_keywords` distinct canonical keywords drawn uniformly
/// without replacement from the comment's mentions (both kinds pooled).
pub fn sample_title_keywords(comment: &StructuredComment, policy: &AutoTitlePolicy) -> Vec<String> {
    let mut pool: Vec<String> = comment
        .mentions
        .iter()
        .map(|m| m.canonical.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(policy.rng_seed);
    pool.shuffle(&mut rng);
    pool.truncate(policy.max_keywords);
    pool
}

pub fn auto_title(comment: &StructuredComment, policy: &AutoTitlePolicy) -> String {
    let words = sample_title_keywords(comment, policy);
    if words.is_empty() {
        let short: String = comment.comment_id.chars().take(8).collect();
        format!("comment {short}")
    } else {
        words.join(", ")
    }
}

impl Mindmap {
    pub fn new(map_id: impl Into<String>, root_title: impl Into<String>) -> Self {
        let root = MindmapNode {
            id: ROOT_ID.to_string(),
            title: root_title.into(),
            note: None,
            link: None,
            children: Vec::new(),
            created_at: now_ms(),
        };
        Self {
            map_id: map_id.into(),
            root: ROOT_ID.to_string(),
            nodes: BTreeMap::from([(ROOT_ID.to_string(), root)]),
            parents: HashMap::new(),
            revision: 0,
            next_id: 1,
        }
    }

    pub fn map_id(&self) -> &str {
        &self.map_id
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() <= 1
    }

    pub fn node(&self, id: &str) -> Option<&MindmapNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &MindmapNode> {
        self.nodes.values()
    }

    pub fn parent_of(&self, id: &str) -> Option<&str> {
        self.parents.get(id).map(String::as_str)
    }

    fn require(&self, id: &str) -> Result<&MindmapNode, MindmapError> {
        self.nodes.get(id).ok_or_else(|| MindmapError::NotFound(id.to_string()))
    }

    fn fresh_id(&mut self) -> String {
        loop {
            let id = format!("n{}", self.next_id);
            self.next_id += 1;
            if !self.nodes.contains_key(&id) {
                return id;
            }
        }
    }

    fn insert_child(&mut self, parent: &str, mut node: MindmapNode) -> String {
        let id = self.fresh_id();
        node.id = id.clone();
        self.nodes.insert(id.clone(), node);
        self.nodes.get_mut(parent).expect("parent checked").children.push(id.clone());
        self.parents.insert(id.clone(), parent.to_string());
        self.revision += 1;
        id
    }

    pub fn add_node(&mut self, parent: &str, title: impl Into<String>, note: Option<String>) -> Result<String, MindmapError> {
        self.require(parent)?;
        let node = MindmapNode {
            id: String::new(),
            title: title.into(),
            note,
            link: None,
            children: Vec::new(),
            created_at: now_ms(),
        };
        Ok(self.insert_child(parent, node))
    }

    /// Adds a node for a comment: sampled-keyword title, the body as note,
    /// and a link back to the post and comment.
    pub fn add_comment_node(
        &mut self,
        parent: &str,
        comment: &Comment,
        structured: &StructuredComment,
        policy: &AutoTitlePolicy,
    ) -> Result<String, MindmapError> {
        if policy.max_keywords == 0 {
            return Err(MindmapError::Policy("max_keywords must be at least 1".into()));
        }
        self.require(parent)?;
        let node = MindmapNode {
            id: String::new(),
            title: auto_title(structured, policy),
            note: Some(comment.body.clone()),
            link: Some(Link { post_id: comment.post_id.clone(), comment_id: comment.id.clone() }),
            children: Vec::new(),
            created_at: now_ms(),
        };
        Ok(self.insert_child(parent, node))
    }

    /// Returns the stored link after checking it still resolves.
    pub fn resolve_jump(&self, node_id: &str, corpus: &Corpus) -> Result<Link, MindmapError> {
        let node = self.require(node_id)?;
        let link = node.link.clone().ok_or_else(|| MindmapError::NoLink(node_id.to_string()))?;
        let ok = corpus.post(&link.post_id).is_some()
            && corpus.comment(&link.comment_id).is_some_and(|c| c.post_id == link.post_id);
        if !ok {
            return Err(MindmapError::StaleLink {
                node: node_id.to_string(),
                post_id: link.post_id,
                comment_id: link.comment_id,
            });
        }
        Ok(link)
    }

    /// `note: Some(None)` clears the note.
    pub fn edit_node(&mut self, node_id: &str, title: Option<String>, note: Option<Option<String>>) -> Result<(), MindmapError> {
        self.require(node_id)?;
        let node = self.nodes.get_mut(node_id).expect("checked");
        if let Some(t) = title {
            node.title = t;
        }
        if let Some(n) = note {
            node.note = n;
        }
        self.revision += 1;
        Ok(())
    }

    /// Removes a node and its descendants; returns how many were removed.
    pub fn delete_subtree(&mut self, node_id: &str) -> Result<usize, MindmapError> {
        self.require(node_id)?;
        if node_id == self.root {
            return Err(MindmapError::RootImmutable("deleted"));
        }
        let parent = self.parents[node_id].clone();
        self.nodes
            .get_mut(&parent)
            .expect("parent exists")
            .children
            .retain(|c| c != node_id);
        let mut stack = vec![node_id.to_string()];
        let mut removed = 0;
        while let Some(id) = stack.pop() {
            if let Some(n) = self.nodes.remove(&id) {
                stack.extend(n.children);
                self.parents.remove(&id);
                removed += 1;
            }
        }
        self.revision += 1;
        Ok(removed)
    }

    fn is_ancestor<'a>(&'a self, ancestor: &str, mut node: &'a str) -> bool {
        loop {
            if node == ancestor {
                return true;
            }
            match self.parents.get(node) {
                Some(p) => node = p,
                None => return false,
            }
        }
    }

    /// Re-parents a node, appending it to the new parent's children.
    pub fn move_node(&mut self, node_id: &str, new_parent: &str) -> Result<(), MindmapError> {
        self.require(node_id)?;
        self.require(new_parent)?;
        if node_id == self.root {
            return Err(MindmapError::RootImmutable("moved"));
        }
        if self.is_ancestor(node_id, new_parent) {
            return Err(MindmapError::Cycle { node: node_id.to_string(), target: new_parent.to_string() });
        }
        let old = self.parents[node_id].clone();
        self.nodes.get_mut(&old).expect("parent exists").children.retain(|c| c != node_id);
        self.nodes.get_mut(new_parent).expect("checked").children.push(node_id.to_string());
        self.parents.insert(node_id.to_string(), new_parent.to_string());
        self.revision += 1;
        Ok(())
    }

    /// Checks the tree invariants: one root, every node reachable exactly
    /// once, parent links consistent with child lists.
    pub fn validate(&self) -> Result<(), String> {
        if !self.nodes.contains_key(&self.root) {
            return Err("root missing".into());
        }
        if self.parents.contains_key(&self.root) {
            return Err("root has a parent".into());
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.root.as_str()];
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                return Err(format!("node {id} reached twice"));
            }
            let node = self.nodes.get(id).ok_or_else(|| format!("dangling child {id}"))?;
            if node.id != id {
                return Err(format!("node keyed {id} has id {}", node.id));
            }
            for c in &node.children {
                if self.parents.get(c).map(String::as_str) != Some(id) {
                    return Err(format!("parent link of {c} disagrees with children of {id}"));
                }
                stack.push(c);
            }
        }
        if seen.len() != self.nodes.len() {
            return Err(format!("{} of {} nodes unreachable", self.nodes.len() - seen.len(), self.nodes.len()));
        }
        if self.parents.len() + 1 != self.nodes.len() {
            return Err("stray parent links".into());
        }
        Ok(())
    }

    pub fn export(&self) -> MindmapDocument {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root.as_str()];
        while let Some(id) = stack.pop() {
            let n = &self.nodes[id];
            nodes.push(n.clone());
            stack.extend(n.children.iter().rev().map(String::as_str));
        }
        MindmapDocument {
            format: DOCUMENT_FORMAT.to_string(),
            version: DOCUMENT_VERSION,
            map_id: self.map_id.clone(),
            root: self.root.clone(),
            nodes,
        }
    }

    pub fn to_json(&self) -> String {
        self.export().to_json()
    }

    /// Validates and loads a document. The revision restarts at 0.
    pub fn import(doc: MindmapDocument) -> Result<Self, MindmapError> {
        let err = |location: String, reason: &str| MindmapError::Import { location, reason: reason.to_string() };
        if doc.format != DOCUMENT_FORMAT {
            return Err(err("format".into(), "unexpected document format"));
        }
        if doc.version != DOCUMENT_VERSION {
            return Err(err("version".into(), "unsupported document version"));
        }
        let mut nodes = BTreeMap::new();
        for (i, n) in doc.nodes.iter().enumerate() {
            if n.id.is_empty() {
                return Err(err(format!("nodes[{i}].id"), "empty node id"));
            }
            if nodes.insert(n.id.clone(), n.clone()).is_some() {
                return Err(err(format!("nodes[{i}].id"), "duplicate node id"));
            }
        }
        if !nodes.contains_key(&doc.root) {
            return Err(err("root".into(), "root node not present"));
        }
        let mut parents: HashMap<String, String> = HashMap::new();
        for (i, n) in doc.nodes.iter().enumerate() {
            for (j, c) in n.children.iter().enumerate() {
                let loc = format!("nodes[{i}].children[{j}]");
                if !nodes.contains_key(c) {
                    return Err(err(loc, &format!("child id {c:?} not present")));
                }
                if *c == doc.root || c == &n.id {
                    return Err(err(loc, "cycle"));
                }
                if parents.insert(c.clone(), n.id.clone()).is_some() {
                    return Err(err(loc, "node has more than one parent"));
                }
            }
        }
        if let Some((i, n)) = doc
            .nodes
            .iter()
            .enumerate()
            .find(|(_, n)| n.id != doc.root && !parents.contains_key(&n.id))
        {
            return Err(err(format!("nodes[{i}] ({})", n.id), "multiple roots"));
        }
        // every non-root has exactly one parent; anything unreachable from
        // the root must sit on a cycle
        let mut seen = BTreeSet::new();
        let mut stack = vec![doc.root.clone()];
        while let Some(id) = stack.pop() {
            if seen.insert(id.clone()) {
                stack.extend(nodes[&id].children.iter().cloned());
            }
        }
        if let Some((i, n)) = doc.nodes.iter().enumerate().find(|(_, n)| !seen.contains(&n.id)) {
            return Err(err(format!("nodes[{i}] ({})", n.id), "cycle"));
        }
        let next_id = nodes
            .keys()
            .filter_map(|k| k.strip_prefix('n').and_then(|d| d.parse::<u64>().ok()))
            .max()
            .map_or(1, |m| m + 1);
        Ok(Self { map_id: doc.map_id, root: doc.root, nodes, parents, revision: 0, next_id })
    }

    pub fn from_json(text: &str) -> Result<Self, MindmapError> {
        Self::import(MindmapDocument::from_json(text)?)
    }

    /// Equality on everything the portable document carries.
    pub fn same_structure(&self, other: &Mindmap) -> bool {
        self.export() == other.export()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MindmapDocument {
    pub format: String,
    pub version: u32,
    pub map_id: String,
    pub root: String,
    pub nodes: Vec<MindmapNode>,
}

impl MindmapDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, MindmapError> {
        serde_json::from_str(text).map_err(|e| MindmapError::Import {
            location: format!("line {} column {}", e.line(), e.column()),
            reason: e.to_string(),
        })
    }
}

/// Maps keyed by id with per-map serialized, revision-checked mutation.
/// With a directory, every successful mutation rewrites `<map_id>.json`.
#[derive(Debug, Default)]
pub struct MindmapStore {
    dir: Option<PathBuf>,
    maps: RwLock<HashMap<String, Arc<Mutex<Mindmap>>>>,
}

impl MindmapStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens a directory store, loading every `*.json` document in it.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, MindmapError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let mut maps = HashMap::new();
        let mut entries: Vec<_> = std::fs::read_dir(&dir)?.collect::<Result<_, _>>()?;
        entries.sort_by_key(|e| e.path());
        for e in entries {
            let path = e.path();
            if path.extension().and_then(|x| x.to_str()) != Some("json") {
                continue;
            }
            let text = std::fs::read_to_string(&path)?;
            let map = Mindmap::from_json(&text).map_err(|err| match err {
                MindmapError::Import { location, reason } => MindmapError::Import {
                    location: format!("{}: {location}", path.display()),
                    reason,
                },
                other => other,
            })?;
            maps.insert(map.map_id.clone(), Arc::new(Mutex::new(map)));
        }
        Ok(Self { dir: Some(dir), maps: RwLock::new(maps) })
    }

    fn entry(&self, map_id: &str) -> Result<Arc<Mutex<Mindmap>>, MindmapError> {
        self.maps
            .read()
            .expect("store lock")
            .get(map_id)
            .cloned()
            .ok_or_else(|| MindmapError::MapNotFound(map_id.to_string()))
    }

    fn persist(&self, map: &Mindmap) -> Result<(), MindmapError> {
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{}.json", sanitize(&map.map_id)));
            let tmp = path.with_extension("json.tmp");
            std::fs::write(&tmp, map.to_json())?;
            std::fs::rename(tmp, path)?;
        }
        Ok(())
    }

    fn insert(&self, map: Mindmap, replace: bool) -> Result<Mindmap, MindmapError> {
        let mut maps = self.maps.write().expect("store lock");
        if !replace && maps.contains_key(&map.map_id) {
            return Err(MindmapError::MapExists(map.map_id.clone()));
        }
        self.persist(&map)?;
        maps.insert(map.map_id.clone(), Arc::new(Mutex::new(map.clone())));
        Ok(map)
    }

    pub fn create(&self, map_id: &str, root_title: &str) -> Result<Mindmap, MindmapError> {
        self.insert(Mindmap::new(map_id, root_title), false)
    }

    /// Loads a document as `map_id`, replacing any existing map.
    pub fn import(&self, map_id: &str, doc: MindmapDocument) -> Result<Mindmap, MindmapError> {
        let mut map = Mindmap::import(doc)?;
        map.map_id = map_id.to_string();
        self.insert(map, true)
    }

    pub fn get(&self, map_id: &str) -> Result<Mindmap, MindmapError> {
        Ok(self.entry(map_id)?.lock().expect("map lock").clone())
    }

    pub fn export(&self, map_id: &str) -> Result<String, MindmapError> {
        Ok(self.get(map_id)?.to_json())
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<_> = self.maps.read().expect("store lock").keys().cloned().collect();
        ids.sort();
        ids
    }

    /// Applies `f` if the map is still at `expected_revision`. A successful
    /// call advances the revision by exactly one however many edits `f`
    /// makes; a failed one leaves the map untouched. Returns `f`'s value and
    /// the new revision.
    pub fn mutate<T>(
        &self,
        map_id: &str,
        expected_revision: u64,
        f: impl FnOnce(&mut Mindmap) -> Result<T, MindmapError>,
    ) -> Result<(T, u64), MindmapError> {
        let entry = self.entry(map_id)?;
        let mut guard = entry.lock().expect("map lock");
        if guard.revision != expected_revision {
            return Err(MindmapError::Conflict { expected: expected_revision, current: guard.revision });
        }
        let mut draft = guard.clone();
        let out = f(&mut draft)?;
        draft.revision = guard.revision + 1;
        self.persist(&draft)?;
        *guard = draft;
        Ok((out, guard.revision))
    }
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{KeywordKind, KeywordMention};
    use crate::Span;

    fn structured(id: &str, keywords: &[&str]) -> StructuredComment {
        StructuredComment {
            comment_id: id.into(),
            post_id: "p1".into(),
            sentences: vec![],
            mentions: keywords
                .iter()
                .enumerate()
                .map(|(i, k)| KeywordMention {
                    span: Span::new(i, i + 1),
                    surface: k.to_string(),
                    kind: if i % 2 == 0 { KeywordKind::UiComponent } else { KeywordKind::VisualElement },
                    canonical: k.to_string(),
                })
                .collect(),
        }
    }

    fn comment(id: &str) -> Comment {
        Comment { id: id.into(), post_id: "p1".into(), author: "x".into(), body: "body text".into(), created_at: 1 }
    }

    #[test]
    fn add_under_root_preserves_order() {
        let mut m = Mindmap::new("m", "Root");
        let ids: Vec<_> = (0..3).map(|i| m.add_node(ROOT_ID, format!("n{i}"), None).unwrap()).collect();
        assert_eq!(m.node(ROOT_ID).unwrap().children, ids);
        assert_eq!(m.revision(), 3);
        assert!(matches!(m.add_node("ghost", "x", None), Err(MindmapError::NotFound(_))));
        assert_eq!(m.revision(), 3);
    }

    #[test]
    fn comment_node_title_samples_keywords() {
        let mut m = Mindmap::new("m", "Root");
        let sc = structured("c1", &["a", "b", "c", "d", "e", "f", "g"]);
        let id = m.add_comment_node(ROOT_ID, &comment("c1"), &sc, &AutoTitlePolicy::default()).unwrap();
        let node = m.node(&id).unwrap();
        let words: Vec<&str> = node.title.split(", ").collect();
        assert_eq!(words.len(), 5);
        assert_eq!(words.iter().collect::<BTreeSet<_>>().len(), 5);
        assert!(words.iter().all(|w| "abcdefg".contains(*w)));
        assert_eq!(node.note.as_deref(), Some("body text"));
        assert_eq!(node.link, Some(Link { post_id: "p1".into(), comment_id: "c1".into() }));
    }

    #[test]
    fn duplicate_mentions_count_once() {
        let sc = structured("c1", &["grey", "grey", "button"]);
        let mut t = sample_title_keywords(&sc, &AutoTitlePolicy::default());
        t.sort();
        assert_eq!(t, vec!["button", "grey"]);
    }

    #[test]
    fn zero_mentions_fallback_title() {
        let mut m = Mindmap::new("m", "Root");
        let id = m
            .add_comment_node(ROOT_ID, &comment("abcdefghijk"), &structured("abcdefghijk", &[]), &AutoTitlePolicy::default())
            .unwrap();
        assert_eq!(m.node(&id).unwrap().title, "comment abcdefgh");
        assert!(m.node(&id).unwrap().note.is_some());
    }

    #[test]
    fn edit_only_touches_target() {
        let mut m = Mindmap::new("m", "Root");
        let a = m.add_node(ROOT_ID, "a", None).unwrap();
        let b = m.add_node(ROOT_ID, "b", Some("keep".into())).unwrap();
        let before = m.node(&b).unwrap().clone();
        m.edit_node(&a, None, Some(Some("new note".into()))).unwrap();
        assert_eq!(m.node(&a).unwrap().note.as_deref(), Some("new note"));
        assert_eq!(m.node(&a).unwrap().title, "a");
        assert_eq!(m.node(&b).unwrap(), &before);
    }

    #[test]
    fn delete_and_move() {
        let mut m = Mindmap::new("m", "Root");
        let a = m.add_node(ROOT_ID, "a", None).unwrap();
        let b = m.add_node(&a, "b", None).unwrap();
        let c = m.add_node(&b, "c", None).unwrap();
        assert!(matches!(m.move_node(&a, &c), Err(MindmapError::Cycle { .. })));
        assert!(matches!(m.move_node(&a, &a), Err(MindmapError::Cycle { .. })));
        m.move_node(&c, ROOT_ID).unwrap();
        assert_eq!(m.node(ROOT_ID).unwrap().children, vec![a.clone(), c.clone()]);
        assert_eq!(m.delete_subtree(&c).unwrap(), 1);
        assert_eq!(m.len(), 3);
        assert_eq!(m.delete_subtree(&a).unwrap(), 2);
        assert_eq!(m.len(), 1);
        assert!(matches!(m.delete_subtree(ROOT_ID), Err(MindmapError::RootImmutable(_))));
        m.validate().unwrap();
    }

    #[test]
    fn round_trip() {
        let mut m = Mindmap::new("m", "Root");
        let a = m.add_node(ROOT_ID, "a", Some("note".into())).unwrap();
        m.add_comment_node(&a, &comment("c1"), &structured("c1", &["x", "y"]), &AutoTitlePolicy::default()).unwrap();
        let back = Mindmap::from_json(&m.to_json()).unwrap();
        assert!(back.same_structure(&m));
        assert_eq!(back.revision(), 0);
        // ids stay fresh after import
        let mut back = back;
        let fresh = back.add_node(ROOT_ID, "z", None).unwrap();
        assert!(m.node(&fresh).is_none());
    }

    #[test]
    fn empty_map_round_trips() {
        let m = Mindmap::new("m", "Root");
        assert!(Mindmap::from_json(&m.to_json()).unwrap().same_structure(&m));
    }

    fn node(id: &str, children: &[&str]) -> MindmapNode {
        MindmapNode {
            id: id.into(),
            title: id.into(),
            note: None,
            link: None,
            children: children.iter().map(|c| c.to_string()).collect(),
            created_at: 0,
        }
    }

    fn doc(nodes: Vec<MindmapNode>) -> MindmapDocument {
        MindmapDocument { format: DOCUMENT_FORMAT.into(), version: 1, map_id: "m".into(), root: "root".into(), nodes }
    }

    fn import_reason(d: MindmapDocument) -> String {
        match Mindmap::import(d) {
            Err(MindmapError::Import { location, reason }) => format!("{location}: {reason}"),
            other => panic!("expected import error, got {other:?}"),
        }
    }

    #[test]
    fn import_rejects_bad_documents() {
        assert!(import_reason(doc(vec![node("root", &["a"]), node("a", &["b"]), node("b", &["a"])])).contains("parent"));
        assert!(import_reason(doc(vec![node("root", &[]), node("a", &["b"]), node("b", &["a"])])).contains("cycle"));
        assert!(import_reason(doc(vec![node("root", &["a"]), node("a", &["root"])])).contains("cycle"));
        assert!(import_reason(doc(vec![node("root", &[]), node("root", &[])])).contains("duplicate"));
        assert!(import_reason(doc(vec![node("root", &[]), node("x", &[])])).contains("multiple roots"));
        assert!(import_reason(doc(vec![node("root", &["ghost"])])).contains("nodes[0].children[0]"));
        let mut d = doc(vec![node("root", &[])]);
        d.version = 9;
        assert!(import_reason(d).starts_with("version"));
        assert!(Mindmap::from_json("{\"format\": 1}").is_err());
    }

    #[test]
    fn jump_resolution() {
        use crate::ingest::Post;
        let mut corpus = Corpus::default();
        corpus.posts.insert(
            "p1".into(),
            Post {
                id: "p1".into(),
                title: "t".into(),
                body: String::new(),
                flair: "Feedback Request".into(),
                created_at: 1,
                image_refs: vec!["u".into()],
                author: "o".into(),
            },
        );
        corpus.comments.insert("c1".into(), comment("c1"));
        corpus.comments_by_post.insert("p1".into(), vec!["c1".into()]);
        let mut m = Mindmap::new("m", "Root");
        let auto = m.add_comment_node(ROOT_ID, &comment("c1"), &structured("c1", &["x"]), &AutoTitlePolicy::default()).unwrap();
        let manual = m.add_node(ROOT_ID, "mine", None).unwrap();
        assert_eq!(m.resolve_jump(&auto, &corpus).unwrap(), Link { post_id: "p1".into(), comment_id: "c1".into() });
        assert!(matches!(m.resolve_jump(&manual, &corpus), Err(MindmapError::NoLink(_))));
        corpus.posts.clear();
        assert!(matches!(m.resolve_jump(&auto, &corpus), Err(MindmapError::StaleLink { .. })));
    }

    #[test]
    fn store_revision_checks() {
        let store = MindmapStore::in_memory();
        store.create("m", "Root").unwrap();
        assert!(matches!(store.create("m", "Root"), Err(MindmapError::MapExists(_))));
        let (id, rev) = store.mutate("m", 0, |m| m.add_node(ROOT_ID, "a", None)).unwrap();
        assert_eq!(rev, 1);
        match store.mutate("m", 0, |m| m.add_node(ROOT_ID, "b", None)) {
            Err(MindmapError::Conflict { expected: 0, current: 1 }) => {}
            other => panic!("{other:?}"),
        }
        // failed mutation leaves revision alone
        assert!(store.mutate("m", 1, |m| m.move_node(ROOT_ID, &id)).is_err());
        assert_eq!(store.get("m").unwrap().revision(), 1);
    }

    #[test]
    fn store_persists_to_directory() {
        let dir = tempfile::tempdir().unwrap();
        {
            let store = MindmapStore::open(dir.path()).unwrap();
            store.create("learner/1", "Root").unwrap();
            store.mutate("learner/1", 0, |m| m.add_node(ROOT_ID, "kept", None)).unwrap();
        }
        let store = MindmapStore::open(dir.path()).unwrap();
        let m = store.get("learner/1").unwrap();
        assert_eq!(m.len(), 2);
    }
}
