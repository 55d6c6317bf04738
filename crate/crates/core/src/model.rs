//! Domain types: passages, event anchors, context mentions and the relations
//! linking them.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::text::{char_slice, find_chars};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextType {
    Location,
    Temporal,
}

impl ContextType {
    pub const ALL: [ContextType; 2] = [ContextType::Location, ContextType::Temporal];

    pub fn as_str(self) -> &'static str {
        match self {
            ContextType::Location => "location",
            ContextType::Temporal => "temporal",
        }
    }
}

impl fmt::Display for ContextType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One value per context type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PerType<T> {
    pub location: T,
    pub temporal: T,
}

impl<T> PerType<T> {
    pub fn new(location: T, temporal: T) -> Self {
        PerType { location, temporal }
    }

    pub fn get(&self, ctype: ContextType) -> &T {
        match ctype {
            ContextType::Location => &self.location,
            ContextType::Temporal => &self.temporal,
        }
    }

    pub fn get_mut(&mut self, ctype: ContextType) -> &mut T {
        match ctype {
            ContextType::Location => &mut self.location,
            ContextType::Temporal => &mut self.temporal,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(ContextType, &T) -> U) -> PerType<U> {
        PerType {
            location: f(ContextType::Location, &self.location),
            temporal: f(ContextType::Temporal, &self.temporal),
        }
    }
}

/// Surface text of a span, with optional char offsets into its passage
/// (end exclusive).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextSpan {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub char_start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub char_end: Option<usize>,
}

impl TextSpan {
    pub fn new(text: impl Into<String>) -> Self {
        TextSpan {
            text: text.into(),
            char_start: None,
            char_end: None,
        }
    }

    pub fn with_offsets(text: impl Into<String>, start: usize, end: usize) -> Self {
        TextSpan {
            text: text.into(),
            char_start: Some(start),
            char_end: Some(end),
        }
    }

    pub fn offsets(&self) -> Option<(usize, usize)> {
        self.char_start.zip(self.char_end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventAnchor {
    pub id: String,
    pub span: TextSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextMention {
    pub id: String,
    pub span: TextSpan,
    pub ctype: ContextType,
    #[serde(default)]
    pub distractor: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScenarioRelation {
    pub event_id: String,
    pub mention_id: String,
    pub ctype: ContextType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Gold,
    Paraphrase,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedPassage {
    pub passage_id: String,
    pub doc_id: String,
    pub text: String,
    #[serde(default)]
    pub events: Vec<EventAnchor>,
    #[serde(default)]
    pub mentions: Vec<ContextMention>,
    #[serde(default)]
    pub relations: Vec<ScenarioRelation>,
    pub provenance: Provenance,
}

/// Location and time strings attached to one event. Treated as multisets
/// by every scorer.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSet {
    #[serde(default)]
    pub locations: Vec<String>,
    #[serde(default)]
    pub times: Vec<String>,
}

impl ContextSet {
    pub fn new(locations: Vec<String>, times: Vec<String>) -> Self {
        ContextSet { locations, times }
    }

    pub fn get(&self, ctype: ContextType) -> &[String] {
        match ctype {
            ContextType::Location => &self.locations,
            ContextType::Temporal => &self.times,
        }
    }

    pub fn get_mut(&mut self, ctype: ContextType) -> &mut Vec<String> {
        match ctype {
            ContextType::Location => &mut self.locations,
            ContextType::Temporal => &mut self.times,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty() && self.times.is_empty()
    }

    /// Copy with every element normalized and empties dropped.
    pub fn normalized(&self) -> ContextSet {
        let norm = |items: &[String]| {
            items
                .iter()
                .map(|s| crate::text::normalize(s))
                .filter(|s| !s.is_empty())
                .collect()
        };
        ContextSet {
            locations: norm(&self.locations),
            times: norm(&self.times),
        }
    }
}

impl AnnotatedPassage {
    pub fn event(&self, id: &str) -> Option<&EventAnchor> {
        self.events.iter().find(|e| e.id == id)
    }

    pub fn mention(&self, id: &str) -> Option<&ContextMention> {
        self.mentions.iter().find(|m| m.id == id)
    }

    pub fn relation_count(&self, ctype: ContextType) -> usize {
        self.relations.iter().filter(|r| r.ctype == ctype).count()
    }

    /// Mentions related to `event_id`, in passage order (by char offset
    /// when known, otherwise by mention list order).
    pub fn related_mentions(&self, event_id: &str) -> Vec<&ContextMention> {
        let mut related: Vec<(usize, &ContextMention)> = self
            .mentions
            .iter()
            .enumerate()
            .filter(|(_, m)| {
                self.relations
                    .iter()
                    .any(|r| r.event_id == event_id && r.mention_id == m.id)
            })
            .collect();
        related.sort_by_key(|(i, m)| (m.span.char_start.unwrap_or(usize::MAX), *i));
        related.into_iter().map(|(_, m)| m).collect()
    }

    /// Gold context strings of one event, raw (unnormalized) and in passage
    /// order.
    pub fn gold_context(&self, event_id: &str) -> ContextSet {
        let mut set = ContextSet::default();
        for m in self.related_mentions(event_id) {
            set.get_mut(m.ctype).push(m.span.text.clone());
        }
        set
    }

    /// Fills in missing offsets by locating each span's first occurrence in
    /// the text. Spans that cannot be found keep `None`.
    pub fn resolve_offsets(&mut self) {
        let text = self.text.clone();
        let spans = self
            .events
            .iter_mut()
            .map(|e| &mut e.span)
            .chain(self.mentions.iter_mut().map(|m| &mut m.span));
        for span in spans {
            if span.offsets().is_none() {
                if let Some(start) = find_chars(&text, &span.text, 0) {
                    span.char_start = Some(start);
                    span.char_end = Some(start + span.text.chars().count());
                }
            }
        }
    }

    /// Structural invariant violations; empty when the passage is well formed.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut ids = HashSet::new();
        for id in self
            .events
            .iter()
            .map(|e| &e.id)
            .chain(self.mentions.iter().map(|m| &m.id))
        {
            if id.is_empty() {
                out.push("empty span id".to_owned());
            } else if !ids.insert(id.as_str()) {
                out.push(format!("duplicate span id '{id}'"));
            }
        }
        let mut event_offsets = HashSet::new();
        for e in &self.events {
            if let Some(off) = e.span.offsets() {
                if !event_offsets.insert(off) {
                    out.push(format!("duplicate event span at {}..{}", off.0, off.1));
                }
            }
        }
        let spans = self
            .events
            .iter()
            .map(|e| (&e.id, &e.span))
            .chain(self.mentions.iter().map(|m| (&m.id, &m.span)));
        for (id, span) in spans {
            if span.text.is_empty() {
                out.push(format!("span '{id}' has empty text"));
            }
            match (span.char_start, span.char_end) {
                (None, None) => {}
                (Some(s), Some(e)) => {
                    if s >= e {
                        out.push(format!("span '{id}' has start {s} >= end {e}"));
                    } else if char_slice(&self.text, s, e) != Some(span.text.as_str()) {
                        out.push(format!("span '{id}' text does not match passage at {s}..{e}"));
                    }
                }
                _ => out.push(format!("span '{id}' has only one offset")),
            }
        }
        let mut pairs = HashSet::new();
        for r in &self.relations {
            if self.event(&r.event_id).is_none() {
                out.push(format!("relation references unknown event '{}'", r.event_id));
            }
            match self.mention(&r.mention_id) {
                None => out.push(format!(
                    "relation references unknown mention '{}'",
                    r.mention_id
                )),
                Some(m) => {
                    if m.ctype != r.ctype {
                        out.push(format!(
                            "relation type {} differs from mention '{}' type {}",
                            r.ctype, m.id, m.ctype
                        ));
                    }
                    if m.distractor {
                        out.push(format!("distractor mention '{}' is related", m.id));
                    }
                }
            }
            if !pairs.insert((&r.event_id, &r.mention_id)) {
                out.push(format!(
                    "duplicate relation {} -> {}",
                    r.event_id, r.mention_id
                ));
            }
        }
        out
    }
}
