//! Term lists and longest-match keyword detection.
//!
//! File format:
//!
//! ```text
//! # comment
//! [ui_component]
//! button
//! home button
//! [visual_element]
//! color
//! ```

use std::collections::HashMap;

use super::{KeywordKind, StructureError};
use crate::Span;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Term {
    canonical: String,
    kind: KeywordKind,
    tokens: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    terms: Vec<Term>,
    by_first_token: HashMap<String, Vec<usize>>,
}

/// A raw detection before it is bound to a comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Detection {
    pub span: Span,
    pub kind: KeywordKind,
    pub canonical: String,
}

/// Lower-cases and collapses whitespace.
pub fn canonicalize(term: &str) -> String {
    term.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

struct Token {
    start: usize,
    end: usize,
    lower: String,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            out.push(Token { start: s, end: i, lower: text[s..i].to_lowercase() });
        }
    }
    if let Some(s) = start {
        out.push(Token {
            start: s,
            end: text.len(),
            lower: text[s..].to_lowercase(),
        });
    }
    out
}

impl Gazetteer {
    pub fn parse(text: &str) -> Result<Self, StructureError> {
        let mut g = Gazetteer::default();
        let mut section: Option<KeywordKind> = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = Some(match name.trim() {
                    "ui_component" => KeywordKind::UiComponent,
                    "visual_element" => KeywordKind::VisualElement,
                    other => {
                        return Err(StructureError::Gazetteer(format!(
                            "line {}: unknown section [{other}]",
                            lineno + 1
                        )))
                    }
                });
                continue;
            }
            let kind = section.ok_or_else(|| {
                StructureError::Gazetteer(format!("line {}: term outside a section", lineno + 1))
            })?;
            g.insert(kind, line);
        }
        if g.is_empty() {
            return Err(StructureError::Gazetteer("gazetteer has no terms".into()));
        }
        Ok(g)
    }

    pub fn from_terms<'a>(
        ui: impl IntoIterator<Item = &'a str>,
        ve: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        let mut g = Gazetteer::default();
        for t in ui {
            g.insert(KeywordKind::UiComponent, t);
        }
        for t in ve {
            g.insert(KeywordKind::VisualElement, t);
        }
        g
    }

    fn insert(&mut self, kind: KeywordKind, term: &str) {
        let tokens: Vec<String> = tokenize(term).into_iter().map(|t| t.lower).collect();
        if tokens.is_empty() {
            return;
        }
        let canonical = tokens.join(" ");
        if self
            .terms
            .iter()
            .any(|t| t.kind == kind && t.canonical == canonical)
        {
            return;
        }
        let idx = self.terms.len();
        self.by_first_token.entry(tokens[0].clone()).or_default().push(idx);
        self.terms.push(Term { canonical, kind, tokens });
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self, kind: KeywordKind) -> impl Iterator<Item = &str> {
        self.terms
            .iter()
            .filter(move |t| t.kind == kind)
            .map(|t| t.canonical.as_str())
    }

    /// Case-insensitive whole-word scan. Overlapping candidates of the same
    /// kind resolve to the longer span, then the earlier start. Results are
    /// ordered by start offset, UI components before visual elements on ties.
    pub fn detect(&self, text: &str) -> Result<Vec<Detection>, StructureError> {
        if self.is_empty() {
            return Err(StructureError::Gazetteer("gazetteer has no terms".into()));
        }
        let tokens = tokenize(text);
        let mut candidates: Vec<(usize, Detection)> = Vec::new();
        for (i, tok) in tokens.iter().enumerate() {
            let Some(ids) = self.by_first_token.get(&tok.lower) else {
                continue;
            };
            for &id in ids {
                let term = &self.terms[id];
                if i + term.tokens.len() > tokens.len() {
                    continue;
                }
                let window = &tokens[i..i + term.tokens.len()];
                let words_match = window.iter().zip(&term.tokens).all(|(t, w)| &t.lower == w);
                // multi-word terms may only be separated by whitespace
                let contiguous = window
                    .windows(2)
                    .all(|p| text[p[0].end..p[1].start].chars().all(char::is_whitespace));
                if words_match && contiguous {
                    let span = Span::new(tok.start, window.last().map_or(tok.end, |t| t.end));
                    candidates.push((
                        id,
                        Detection { span, kind: term.kind, canonical: term.canonical.clone() },
                    ));
                }
            }
        }

        candidates.sort_by(|(ia, a), (ib, b)| {
            b.span
                .len()
                .cmp(&a.span.len())
                .then(a.span.start.cmp(&b.span.start))
                .then(ia.cmp(ib))
        });
        let mut kept: Vec<Detection> = Vec::new();
        for (_, cand) in candidates {
            let clash = kept
                .iter()
                .any(|k| k.kind == cand.kind && k.span.overlaps(&cand.span));
            if !clash {
                kept.push(cand);
            }
        }
        kept.sort_by(|a, b| a.span.start.cmp(&b.span.start).then(a.kind.cmp(&b.kind)));
        Ok(kept)
    }
}
