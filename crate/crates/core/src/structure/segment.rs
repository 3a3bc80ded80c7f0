//! Sentence segmentation over byte offsets.

use crate::Span;

/// Tokens ending in a period that never close a sentence.
const ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "etc.", "vs.", "cf.", "approx.", "fig.", "mr.", "mrs.", "ms.", "dr.", "st.",
    "no.", "incl.", "esp.", "w.r.t.",
];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Splits `body` into sentence spans.
///
/// Boundaries are newlines and runs of `.`, `!`, `?` followed by whitespace
/// or end of text. A period closing a token from [`ABBREVIATIONS`] is not a
/// boundary. Spans are trimmed of surrounding whitespace and keep their
/// terminal punctuation; empty spans are skipped.
pub fn segment(body: &str) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut start = 0usize;
    let mut chars = body.char_indices().peekable();

    while let Some((i, c)) = chars.next() {
        if c == '\n' || c == '\r' {
            push_trimmed(body, start, i, &mut spans);
            start = i + c.len_utf8();
            continue;
        }
        if !is_terminal(c) {
            continue;
        }
        // Extend over a run like "?!" or "...".
        let mut end = i + c.len_utf8();
        while let Some(&(j, d)) = chars.peek() {
            if is_terminal(d) || matches!(d, '"' | '\'' | ')' | '\u{201d}') {
                end = j + d.len_utf8();
                chars.next();
            } else {
                break;
            }
        }
        let at_break = match chars.peek() {
            None => true,
            Some(&(_, d)) => d.is_whitespace(),
        };
        if !at_break {
            continue;
        }
        if c == '.' && ends_with_abbreviation(&body[start..end]) {
            continue;
        }
        push_trimmed(body, start, end, &mut spans);
        start = end;
    }
    push_trimmed(body, start, body.len(), &mut spans);
    spans
}

fn ends_with_abbreviation(text: &str) -> bool {
    let last = text
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(['(', '"', '\''])
        .to_lowercase();
    ABBREVIATIONS.contains(&last.as_str())
}

fn push_trimmed(body: &str, start: usize, end: usize, out: &mut Vec<Span>) {
    let slice = &body[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trail = slice.len() - slice.trim_end().len();
    let (s, e) = (start + lead, end - trail);
    if s < e {
        out.push(Span::new(s, e));
    }
}
