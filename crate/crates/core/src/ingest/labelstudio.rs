//! LabelStudio JSON export import.
//!
//! Which result types and label names mark events, locations and times is
//! read from an [`IngestConfig`], so a change in the export layout is a
//! config edit. The default config ships in `config/labelstudio.toml`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{
    AnnotatedPassage, ContextMention, ContextType, EventAnchor, Provenance, ScenarioRelation,
    TextSpan,
};
use crate::text::char_slice;

pub const DEFAULT_CONFIG: &str = include_str!("../../config/labelstudio.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OffsetUnit {
    /// Unicode scalar values.
    Char,
    /// UTF-16 code units, as produced by browser-based tools.
    Utf16,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    pub version: u32,
    /// Key under `task.data` holding the passage text.
    pub text_field: String,
    /// Key under `task.data` holding the source document id; falls back to
    /// the task id.
    pub doc_id_field: String,
    /// Key on the task holding annotation objects.
    pub annotations_field: String,
    pub span_result_types: Vec<String>,
    pub relation_result_type: String,
    pub event_labels: Vec<String>,
    pub location_labels: Vec<String>,
    pub temporal_labels: Vec<String>,
    pub offset_unit: OffsetUnit,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig::from_toml(DEFAULT_CONFIG).expect("bundled config is valid")
    }
}

impl IngestConfig {
    pub const SUPPORTED_VERSION: u32 = 1;

    pub fn from_toml(raw: &str) -> Result<Self> {
        let cfg: IngestConfig = toml::from_str(raw).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.version != Self::SUPPORTED_VERSION {
            return Err(Error::Config(format!(
                "unsupported ingest config version {} (expected {})",
                cfg.version,
                Self::SUPPORTED_VERSION
            )));
        }
        Ok(cfg)
    }

    fn classify(&self, label: &str) -> Option<SpanKind> {
        if self.event_labels.iter().any(|l| l == label) {
            Some(SpanKind::Event)
        } else if self.location_labels.iter().any(|l| l == label) {
            Some(SpanKind::Mention(ContextType::Location))
        } else if self.temporal_labels.iter().any(|l| l == label) {
            Some(SpanKind::Mention(ContextType::Temporal))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SpanKind {
    Event,
    Mention(ContextType),
}

/// A task that could not be converted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskDiagnostic {
    pub task_id: String,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct LabelStudioImport {
    pub passages: Vec<AnnotatedPassage>,
    pub skipped: Vec<TaskDiagnostic>,
}

/// Converts a LabelStudio export (JSON array of tasks) into gold passages.
///
/// Tasks whose relations reference unknown spans are skipped and reported
/// in [`LabelStudioImport::skipped`]; tasks with no relations are kept.
pub fn parse_labelstudio_export(raw: &[u8], config: &IngestConfig) -> Result<LabelStudioImport> {
    let source = String::from_utf8_lossy(raw);
    let root: Value = serde_json::from_str(&source).map_err(|e| Error::json(e, &source))?;
    let tasks = root
        .as_array()
        .ok_or_else(|| Error::InvalidInput("LabelStudio export must be a JSON array".into()))?;

    let mut import = LabelStudioImport::default();
    for (i, task) in tasks.iter().enumerate() {
        let task_id = task
            .get("id")
            .map(value_to_id)
            .unwrap_or_else(|| format!("#{i}"));
        match convert_task(task, &task_id, config) {
            Ok(p) => import.passages.push(p),
            Err(message) => import.skipped.push(TaskDiagnostic { task_id, message }),
        }
    }
    Ok(import)
}

fn value_to_id(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn convert_task(task: &Value, task_id: &str, cfg: &IngestConfig) -> Result<AnnotatedPassage, String> {
    let data = task.get("data").ok_or("task has no 'data' object")?;
    let text = data
        .get(&cfg.text_field)
        .and_then(Value::as_str)
        .ok_or_else(|| format!("task data has no string field '{}'", cfg.text_field))?;
    let doc_id = data
        .get(&cfg.doc_id_field)
        .map(value_to_id)
        .unwrap_or_else(|| task_id.to_owned());

    let annotation = task
        .get(&cfg.annotations_field)
        .and_then(Value::as_array)
        .and_then(|anns| {
            anns.iter().find(|a| {
                !a.get("was_cancelled")
                    .and_then(Value::as_bool)
                    .unwrap_or(false)
            })
        });
    let results: &[Value] = annotation
        .and_then(|a| a.get("result"))
        .and_then(Value::as_array)
        .map(Vec::as_slice)
        .unwrap_or(&[]);

    let mut events: Vec<EventAnchor> = Vec::new();
    let mut mentions: Vec<ContextMention> = Vec::new();
    // result id -> (canonical span id, kind)
    let mut ids: HashMap<String, (String, SpanKind)> = HashMap::new();

    for r in results {
        let rtype = r.get("type").and_then(Value::as_str).unwrap_or_default();
        if !cfg.span_result_types.iter().any(|t| t == rtype) {
            continue;
        }
        let rid = r.get("id").map(value_to_id).ok_or("span result without id")?;
        let value = r.get("value").ok_or_else(|| format!("span {rid} has no value"))?;
        let kind = value
            .get("labels")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
            .filter_map(Value::as_str)
            .find_map(|l| cfg.classify(l));
        let Some(kind) = kind else { continue };
        let span = read_span(value, text, cfg.offset_unit).map_err(|e| format!("span {rid}: {e}"))?;

        match kind {
            SpanKind::Event => {
                // One anchor per distinct range; later duplicates alias it.
                let existing = events
                    .iter()
                    .find(|e| e.span.offsets().is_some() && e.span.offsets() == span.offsets());
                let canonical = match existing {
                    Some(e) => e.id.clone(),
                    None => {
                        events.push(EventAnchor {
                            id: rid.clone(),
                            span,
                        });
                        rid.clone()
                    }
                };
                ids.insert(rid, (canonical, kind));
            }
            SpanKind::Mention(ctype) => {
                mentions.push(ContextMention {
                    id: rid.clone(),
                    span,
                    ctype,
                    distractor: false,
                });
                ids.insert(rid.clone(), (rid, kind));
            }
        }
    }

    let mut relations: Vec<ScenarioRelation> = Vec::new();
    for r in results {
        if r.get("type").and_then(Value::as_str) != Some(cfg.relation_result_type.as_str()) {
            continue;
        }
        let from = r.get("from_id").map(value_to_id).unwrap_or_default();
        let to = r.get("to_id").map(value_to_id).unwrap_or_default();
        let a = ids
            .get(&from)
            .ok_or_else(|| format!("relation references missing span '{from}'"))?;
        let b = ids
            .get(&to)
            .ok_or_else(|| format!("relation references missing span '{to}'"))?;
        let (event_id, mention_id, ctype) = match (a, b) {
            ((e, SpanKind::Event), (m, SpanKind::Mention(t)))
            | ((m, SpanKind::Mention(t)), (e, SpanKind::Event)) => (e, m, *t),
            _ => {
                return Err(format!(
                    "relation {from} -> {to} must link one event and one context span"
                ))
            }
        };
        let rel = ScenarioRelation {
            event_id: event_id.clone(),
            mention_id: mention_id.clone(),
            ctype,
        };
        if !relations.contains(&rel) {
            relations.push(rel);
        }
    }

    let passage = AnnotatedPassage {
        passage_id: task_id.to_owned(),
        doc_id,
        text: text.to_owned(),
        events,
        mentions,
        relations,
        provenance: Provenance::Gold,
    };
    let violations = passage.check_invariants();
    if !violations.is_empty() {
        return Err(violations.join("; "));
    }
    Ok(passage)
}

fn read_span(value: &Value, text: &str, unit: OffsetUnit) -> Result<TextSpan, String> {
    let start = value.get("start").and_then(Value::as_u64);
    let end = value.get("end").and_then(Value::as_u64);
    let label_text = value.get("text").and_then(Value::as_str);
    match (start, end) {
        (Some(s), Some(e)) => {
            let (s, e) = match unit {
                OffsetUnit::Char => (s as usize, e as usize),
                OffsetUnit::Utf16 => (
                    utf16_to_char(text, s as usize).ok_or("offset out of range")?,
                    utf16_to_char(text, e as usize).ok_or("offset out of range")?,
                ),
            };
            if s >= e {
                return Err(format!("empty or inverted range {s}..{e}"));
            }
            let slice = char_slice(text, s, e).ok_or_else(|| format!("range {s}..{e} out of bounds"))?;
            Ok(TextSpan::with_offsets(slice, s, e))
        }
        _ => match label_text {
            Some(t) if !t.is_empty() => Ok(TextSpan::new(t)),
            _ => Err("span has neither offsets nor text".into()),
        },
    }
}

fn utf16_to_char(text: &str, units: usize) -> Option<usize> {
    let mut seen = 0;
    for (i, c) in text.chars().enumerate() {
        if seen == units {
            return Some(i);
        }
        if seen > units {
            return None;
        }
        seen += c.len_utf16();
    }
    (seen == units).then(|| text.chars().count())
}
