//! Model input prompts and target sequences.
//!
//! Input:
//!
//! ```text
//! Text: <event>
//!
//! Context: <passage>
//! ```
//!
//! Target: `location: a, b; time: c`. Both labels are always present, an
//! empty side leaves its value empty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AnnotatedPassage, ContextSet};
use crate::text::normalize;

/// One (input, target) example for the seq2seq trainer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub input: String,
    pub target: String,
    pub passage_id: String,
    pub event_id: String,
}

/// One decoded model output, as written by the trainer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedRecord {
    pub passage_id: String,
    pub event_id: String,
    pub decoded: String,
}

pub fn build_input_prompt(event_text: &str, passage_text: &str) -> Result<String> {
    if event_text.is_empty() {
        return Err(Error::InvalidInput("event text is empty".into()));
    }
    if passage_text.is_empty() {
        return Err(Error::InvalidInput("passage text is empty".into()));
    }
    Ok(format!("Text: {event_text}\n\nContext: {passage_text}"))
}

/// Serializes an already-normalized context set.
pub fn build_target_sequence(ctx: &ContextSet) -> Result<String> {
    for item in ctx.locations.iter().chain(&ctx.times) {
        if item.contains(';') || item.contains(',') {
            return Err(Error::InvalidInput(format!(
                "target element '{item}' contains a delimiter"
            )));
        }
    }
    Ok(format!(
        "location: {}; time: {}",
        ctx.locations.join(", "),
        ctx.times.join(", ")
    ))
}

/// Result of decoding a model output. `valid` is false when neither label
/// was found.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedOutput {
    pub context: ContextSet,
    pub valid: bool,
}

const LOCATION_LABEL: &str = "location:";
const TIME_LABEL: &str = "time:";

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Location,
    Time,
}

fn strip_label(segment: &str) -> (Option<Side>, &str) {
    let trimmed = segment.trim_start();
    for (label, side) in [(LOCATION_LABEL, Side::Location), (TIME_LABEL, Side::Time)] {
        if trimmed.len() >= label.len()
            && trimmed.is_char_boundary(label.len())
            && trimmed[..label.len()].eq_ignore_ascii_case(label)
        {
            return (Some(side), &trimmed[label.len()..]);
        }
    }
    (None, segment)
}

/// Decodes `location: ...; time: ...`. Never fails: unrecognizable output
/// yields an empty set with `valid == false`.
///
/// The string is split at the first ';'. A labeled segment goes to its
/// label's side; an unlabeled segment goes to the side its position implies
/// (first = location, second = time), but only if the other segment carried
/// a label.
pub fn parse_model_output(decoded: &str) -> ParsedOutput {
    let segments: Vec<&str> = match decoded.split_once(';') {
        Some((a, b)) => vec![a, b],
        None => vec![decoded],
    };
    let labeled: Vec<(Option<Side>, &str)> = segments.iter().map(|s| strip_label(s)).collect();
    if labeled.iter().all(|(side, _)| side.is_none()) {
        return ParsedOutput::default();
    }
    let mut context = ContextSet::default();
    for (i, (side, body)) in labeled.into_iter().enumerate() {
        let side = side.unwrap_or(if i == 0 { Side::Location } else { Side::Time });
        let items = body
            .split(',')
            .map(normalize)
            .filter(|s| !s.is_empty());
        match side {
            Side::Location => context.locations.extend(items),
            Side::Time => context.times.extend(items),
        }
    }
    ParsedOutput {
        context,
        valid: true,
    }
}

/// Why an event produced no training pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedEvent {
    pub passage_id: String,
    pub event_id: String,
    pub reason: String,
}

/// One training pair per event (events without context get an empty
/// target). Target strings are normalized span texts in passage order.
pub fn emit_training_pairs(passages: &[AnnotatedPassage]) -> (Vec<TrainingPair>, Vec<SkippedEvent>) {
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for p in passages {
        for e in &p.events {
            let target = build_input_prompt(&e.span.text, &p.text).and_then(|input| {
                let gold = p.gold_context(&e.id).normalized();
                build_target_sequence(&gold).map(|target| (input, target))
            });
            match target {
                Ok((input, target)) => pairs.push(TrainingPair {
                    input,
                    target,
                    passage_id: p.passage_id.clone(),
                    event_id: e.id.clone(),
                }),
                Err(err) => skipped.push(SkippedEvent {
                    passage_id: p.passage_id.clone(),
                    event_id: e.id.clone(),
                    reason: err.to_string(),
                }),
            }
        }
    }
    (pairs, skipped)
}
