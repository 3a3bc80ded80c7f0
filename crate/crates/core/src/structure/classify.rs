//! Rule-based feedback classifier used as the default provider.

use super::FeedbackLabel;

const RATIONALE_WORDS: &[&str] = &["because", "since"];
const RATIONALE_PHRASES: &[&[&str]] = &[&["so", "that"], &["due", "to"]];

/// Imperative verbs recognised at the head of a sentence.
const IMPERATIVE_HEADS: &[&str] = &[
    "make", "use", "try", "add", "consider", "remove", "increase", "decrease", "reduce", "change",
    "move", "put", "keep", "avoid", "give", "align", "center", "centre", "swap", "replace",
    "include", "drop", "darken", "lighten", "enlarge", "shrink", "switch", "go", "get", "maybe",
    "perhaps", "tone", "bump", "space", "separate", "group", "simplify",
];
const SUGGESTION_WORDS: &[&str] = &["should", "try", "consider", "suggest", "recommend"];
const SUGGESTION_PHRASES: &[&[&str]] = &[
    &["i", "would"],
    &["i'd"],
    &["could", "be"],
    &["might", "want"],
    &["how", "about"],
    &["what", "if"],
];

const CRITIQUE_WORDS: &[&str] = &[
    "too", "cluttered", "inconsistent", "looks", "look", "feels", "bland", "busy", "confusing",
    "unclear", "messy", "clean", "nice", "great", "good", "love", "like", "awesome", "ugly", "bad",
    "hard", "difficult", "weird", "off", "strong", "weak", "crowded", "beautiful", "solid",
    "readable", "unreadable", "distracting", "boring", "well",
];
const CRITIQUE_PHRASES: &[&[&str]] = &[&["hard", "to"], &["not", "sure"], &["stands", "out"]];

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

fn has_phrase(words: &[String], phrase: &[&str]) -> bool {
    words
        .windows(phrase.len())
        .any(|win| win.iter().zip(phrase).all(|(w, p)| w == p))
}

fn has_any(words: &[String], cues: &[&str], phrases: &[&[&str]]) -> bool {
    words.iter().any(|w| cues.contains(&w.as_str())) || phrases.iter().any(|p| has_phrase(words, p))
}

/// Labels one sentence. Rationale cues beat suggestion cues, which beat
/// critique cues. Rule hits get confidence 1.0, `Other` gets 0.0.
pub fn classify_sentence(text: &str) -> (FeedbackLabel, f32) {
    let w = words(text);
    if has_any(&w, RATIONALE_WORDS, RATIONALE_PHRASES) {
        return (FeedbackLabel::Rationale, 1.0);
    }
    let imperative = w
        .first()
        .is_some_and(|head| IMPERATIVE_HEADS.contains(&head.as_str()));
    if imperative || has_any(&w, SUGGESTION_WORDS, SUGGESTION_PHRASES) {
        return (FeedbackLabel::Suggestion, 1.0);
    }
    if has_any(&w, CRITIQUE_WORDS, CRITIQUE_PHRASES) {
        return (FeedbackLabel::Critique, 1.0);
    }
    (FeedbackLabel::Other, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn imperative_head_is_suggestion() {
        assert_eq!(
            classify_sentence("Make the CTA button more prominent."),
            (FeedbackLabel::Suggestion, 1.0)
        );
    }

    #[test]
    fn evaluative_cue_is_critique() {
        assert_eq!(
            classify_sentence("The text is too small."),
            (FeedbackLabel::Critique, 1.0)
        );
    }

    #[test]
    fn because_is_rationale() {
        assert_eq!(
            classify_sentence("Because red signals errors, users hesitate."),
            (FeedbackLabel::Rationale, 1.0)
        );
    }

    #[test]
    fn suggestion_beats_critique() {
        // "too" is a critique cue, "should" a suggestion cue
        assert_eq!(
            classify_sentence("The header is too tall, it should shrink.").0,
            FeedbackLabel::Suggestion
        );
    }

    #[test]
    fn rationale_beats_suggestion() {
        assert_eq!(
            classify_sentence("Use grey so that the CTA pops.").0,
            FeedbackLabel::Rationale
        );
    }

    #[test]
    fn no_cue_is_other() {
        assert_eq!(classify_sentence("Posted from my phone."), (FeedbackLabel::Other, 0.0));
    }

    #[test]
    fn cue_words_match_whole_words_only() {
        // "tooltip" must not trigger "too"
        assert_eq!(classify_sentence("The tooltip is blue.").0, FeedbackLabel::Other);
    }
}
