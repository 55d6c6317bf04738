//! Training-data augmentation through an LLM: paraphrases of gold passages
//! and procedurally generated synthetic passages.
//!
//! Every emitted passage passes [`validate_augmented`]; generated text that
//! loses track of its annotated spans is discarded and reported.

mod paraphrase;
mod synthetic;

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

pub use paraphrase::{paraphrase_corpus, paraphrase_passage, ParaphraseConfig};
pub use synthetic::{generate_synthetic, parse_list_reply, GenerationPlan, SyntheticConfig};

use crate::chat::ChatError;
use crate::model::{AnnotatedPassage, Provenance, TextSpan};
use crate::text::{find_chars, normalize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    /// A related mention's text is absent from the passage.
    MentionNotFound(String),
    EventNotFound(String),
    /// A distractor normalizes to the same string as a true context.
    DistractorMatchesContext(String),
    Structure(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MentionNotFound(t) => write!(f, "mention '{t}' not found in text"),
            Violation::EventNotFound(t) => write!(f, "event '{t}' not found in text"),
            Violation::DistractorMatchesContext(t) => {
                write!(f, "distractor '{t}' equals a true context after normalization")
            }
            Violation::Structure(s) => f.write_str(s),
        }
    }
}

/// Checks that the relation bookkeeping of a generated passage survived
/// generation. Empty when valid.
pub fn validate_augmented(p: &AnnotatedPassage) -> Vec<Violation> {
    let mut out: Vec<Violation> = p
        .check_invariants()
        .into_iter()
        .map(Violation::Structure)
        .collect();
    let related: HashSet<&str> = p.relations.iter().map(|r| r.mention_id.as_str()).collect();
    for m in &p.mentions {
        if related.contains(m.id.as_str()) && !p.text.contains(&m.span.text) {
            out.push(Violation::MentionNotFound(m.span.text.clone()));
        }
    }
    for e in &p.events {
        if !p.text.contains(&e.span.text) {
            out.push(Violation::EventNotFound(e.span.text.clone()));
        }
    }
    let true_contexts: HashSet<String> = p
        .mentions
        .iter()
        .filter(|m| !m.distractor)
        .map(|m| normalize(&m.span.text))
        .collect();
    for m in p.mentions.iter().filter(|m| m.distractor) {
        if true_contexts.contains(&normalize(&m.span.text)) {
            out.push(Violation::DistractorMatchesContext(m.span.text.clone()));
        }
    }
    out
}

/// A generated variant that was dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Discard {
    pub source: String,
    pub variant: String,
    pub reason: String,
}

/// A chat request that failed after retries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub source: String,
    pub variant: String,
    pub error: String,
}

impl Failure {
    fn new(source: &str, variant: &str, error: &ChatError) -> Self {
        Failure {
            source: source.to_owned(),
            variant: variant.to_owned(),
            error: error.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AugmentOutcome {
    pub passages: Vec<AnnotatedPassage>,
    pub discarded: Vec<Discard>,
    pub failures: Vec<Failure>,
}

impl AugmentOutcome {
    pub fn relation_count(&self) -> usize {
        self.passages.iter().map(|p| p.relations.len()).sum()
    }

    fn extend(&mut self, other: AugmentOutcome) {
        self.passages.extend(other.passages);
        self.discarded.extend(other.discarded);
        self.failures.extend(other.failures);
    }

    /// Drops passages whose text repeats an earlier one (or one of
    /// `seen`), recording each as discarded.
    fn dedup(&mut self, seen: &mut HashSet<String>) {
        let passages = std::mem::take(&mut self.passages);
        for p in passages {
            if seen.insert(p.text.clone()) {
                self.passages.push(p);
            } else {
                self.discarded.push(Discard {
                    source: p.passage_id.clone(),
                    variant: p.passage_id,
                    reason: "duplicate text".into(),
                });
            }
        }
    }
}

/// Strips the wrapping an LLM tends to add around a short answer: blank
/// lines, quotes, backticks and a trailing period.
pub(crate) fn clean_short_reply(reply: &str) -> String {
    let line = reply
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("");
    let stripped = line
        .trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '*'))
        .trim();
    stripped.strip_suffix('.').unwrap_or(stripped).trim().to_owned()
}

/// Re-locates the spans of `original` in `new_text`.
///
/// Spans are searched verbatim; repeated surface forms map to successive
/// occurrences. Every event in `required` must be found together with all
/// its related mentions. Other events survive only under the same
/// condition; lost mentions and their relations are dropped.
pub(crate) fn reanchor(
    original: &AnnotatedPassage,
    new_text: &str,
    required: &[&str],
    passage_id: String,
) -> Result<AnnotatedPassage, String> {
    let mut by_start: Vec<usize> = (0..original.mentions.len()).collect();
    by_start.sort_by_key(|&i| (original.mentions[i].span.char_start.unwrap_or(usize::MAX), i));
    let mut cursor = HashMap::new();
    let mut mention_spans: HashMap<&str, TextSpan> = HashMap::new();
    for i in by_start {
        let m = &original.mentions[i];
        if let Some(span) = locate_next(new_text, &m.span.text, &mut cursor) {
            mention_spans.insert(&m.id, span);
        }
    }
    let mut cursor = HashMap::new();
    let mut event_spans: HashMap<&str, TextSpan> = HashMap::new();
    for e in &original.events {
        if let Some(span) = locate_next(new_text, &e.span.text, &mut cursor) {
            event_spans.insert(&e.id, span);
        }
    }

    let complete = |event_id: &str| -> Result<(), String> {
        let e = original.event(event_id).ok_or("unknown event")?;
        if !event_spans.contains_key(event_id) {
            return Err(format!("event '{}' not found in text", e.span.text));
        }
        for m in original.related_mentions(event_id) {
            if !mention_spans.contains_key(m.id.as_str()) {
                return Err(format!("mention '{}' not found in text", m.span.text));
            }
        }
        Ok(())
    };
    for id in required {
        complete(id)?;
    }

    let mut out = original.clone();
    out.passage_id = passage_id;
    out.text = new_text.to_owned();
    out.provenance = Provenance::Paraphrase;
    out.events.retain(|e| complete(&e.id).is_ok());
    for e in &mut out.events {
        e.span = event_spans[e.id.as_str()].clone();
    }
    out.mentions.retain(|m| mention_spans.contains_key(m.id.as_str()));
    for m in &mut out.mentions {
        m.span = mention_spans[m.id.as_str()].clone();
    }
    let kept_events: HashSet<String> = out.events.iter().map(|e| e.id.clone()).collect();
    let kept_mentions: HashSet<String> = out.mentions.iter().map(|m| m.id.clone()).collect();
    out.relations
        .retain(|r| kept_events.contains(&r.event_id) && kept_mentions.contains(&r.mention_id));
    if out.relations.is_empty() {
        return Err("no relation survived".into());
    }
    Ok(out)
}

/// Next occurrence of `needle` after the previous one found for the same
/// string.
fn locate_next(text: &str, needle: &str, cursor: &mut HashMap<String, usize>) -> Option<TextSpan> {
    let from = cursor.get(needle).copied().unwrap_or(0);
    let start = find_chars(text, needle, from)?;
    cursor.insert(needle.to_owned(), start + 1);
    Some(TextSpan::with_offsets(needle, start, start + needle.chars().count()))
}
