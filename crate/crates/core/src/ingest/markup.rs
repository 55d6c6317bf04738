//! Parser for the inline tag markup used in generated passages:
//! `<evt>`, `<loc>`, `<nloc>`, `<tmp>` and `<ntmp>`.

use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{
    AnnotatedPassage, ContextMention, ContextType, EventAnchor, Provenance, ScenarioRelation,
    TextSpan,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    Event,
    Location,
    DistractorLocation,
    Time,
    DistractorTime,
}

impl Tag {
    pub fn name(self) -> &'static str {
        match self {
            Tag::Event => "evt",
            Tag::Location => "loc",
            Tag::DistractorLocation => "nloc",
            Tag::Time => "tmp",
            Tag::DistractorTime => "ntmp",
        }
    }

    fn from_name(name: &str) -> Option<Tag> {
        Some(match name {
            "evt" => Tag::Event,
            "loc" => Tag::Location,
            "nloc" => Tag::DistractorLocation,
            "tmp" => Tag::Time,
            "ntmp" => Tag::DistractorTime,
            _ => return None,
        })
    }

    /// Context type and distractor flag for mention tags.
    fn mention_kind(self) -> Option<(ContextType, bool)> {
        match self {
            Tag::Event => None,
            Tag::Location => Some((ContextType::Location, false)),
            Tag::DistractorLocation => Some((ContextType::Location, true)),
            Tag::Time => Some((ContextType::Temporal, false)),
            Tag::DistractorTime => Some((ContextType::Temporal, true)),
        }
    }

    fn for_mention(m: &ContextMention) -> Tag {
        match (m.ctype, m.distractor) {
            (ContextType::Location, false) => Tag::Location,
            (ContextType::Location, true) => Tag::DistractorLocation,
            (ContextType::Temporal, false) => Tag::Time,
            (ContextType::Temporal, true) => Tag::DistractorTime,
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MarkupErrorKind {
    Unclosed(Tag),
    UnknownTag(String),
    /// A closing tag that does not match the innermost open tag.
    Overlapping { expected: Tag, found: Tag },
    UnexpectedClose(Tag),
    EmptyTag(Tag),
    DuplicateEvent,
}

/// Markup error; `position` is a char offset into the tagged input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct MarkupError {
    pub kind: MarkupErrorKind,
    pub position: usize,
}

impl fmt::Display for MarkupError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pos = self.position;
        match &self.kind {
            MarkupErrorKind::Unclosed(t) => write!(f, "unclosed tag at position {pos} ({t})"),
            MarkupErrorKind::UnknownTag(n) => write!(f, "unknown tag <{n}> at position {pos}"),
            MarkupErrorKind::Overlapping { expected, found } => write!(
                f,
                "overlapping tags at position {pos}: expected closing {expected}, found {found}"
            ),
            MarkupErrorKind::UnexpectedClose(t) => {
                write!(f, "closing tag {t} without opening tag at position {pos}")
            }
            MarkupErrorKind::EmptyTag(t) => write!(f, "empty {t} tag at position {pos}"),
            MarkupErrorKind::DuplicateEvent => {
                write!(f, "duplicate event span at position {pos}")
            }
        }
    }
}

struct TagToken {
    tag: Tag,
    closing: bool,
    /// Length of the token in chars.
    len: usize,
}

/// Recognizes `<name>` / `</name>` with an ASCII-alphabetic name at the
/// start of `rest`. Anything else is literal text.
fn scan_tag(rest: &[char]) -> Option<Result<TagToken, String>> {
    if rest.first() != Some(&'<') {
        return None;
    }
    let closing = rest.get(1) == Some(&'/');
    let name_start = if closing { 2 } else { 1 };
    let name_len = rest[name_start..]
        .iter()
        .take_while(|c| c.is_ascii_alphabetic())
        .count();
    if name_len == 0 || rest.get(name_start + name_len) != Some(&'>') {
        return None;
    }
    let name: String = rest[name_start..name_start + name_len].iter().collect();
    Some(match Tag::from_name(&name) {
        Some(tag) => Ok(TagToken {
            tag,
            closing,
            len: name_start + name_len + 1,
        }),
        None => Err(name),
    })
}

/// Parses tagged text into a synthetic passage with a content-derived id.
///
/// Every `<evt>` span becomes an event; `<loc>`/`<tmp>` spans become
/// mentions related to every event; `<nloc>`/`<ntmp>` become unrelated
/// distractor mentions.
pub fn parse_markup_passage(text: &str) -> Result<AnnotatedPassage, MarkupError> {
    parse_markup_with_ids(text, &content_id(text), "synthetic")
}

pub fn parse_markup_with_ids(
    text: &str,
    passage_id: &str,
    doc_id: &str,
) -> Result<AnnotatedPassage, MarkupError> {
    let chars: Vec<char> = text.chars().collect();
    let mut stripped = String::with_capacity(text.len());
    let mut stripped_len = 0usize;
    // (tag, position in input, start in stripped text)
    let mut open: Vec<(Tag, usize, usize)> = Vec::new();
    // (input position, tag, start, end); sorted by input position below.
    let mut spans: Vec<(usize, Tag, usize, usize)> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        match scan_tag(&chars[i..]) {
            None => {
                stripped.push(chars[i]);
                stripped_len += 1;
                i += 1;
            }
            Some(Err(name)) => {
                return Err(MarkupError {
                    kind: MarkupErrorKind::UnknownTag(name),
                    position: i,
                })
            }
            Some(Ok(tok)) => {
                if !tok.closing {
                    open.push((tok.tag, i, stripped_len));
                } else {
                    match open.pop() {
                        None => {
                            return Err(MarkupError {
                                kind: MarkupErrorKind::UnexpectedClose(tok.tag),
                                position: i,
                            })
                        }
                        Some((tag, _, _)) if tag != tok.tag => {
                            let kind = if open.iter().any(|(t, _, _)| *t == tok.tag) {
                                MarkupErrorKind::Overlapping {
                                    expected: tag,
                                    found: tok.tag,
                                }
                            } else {
                                MarkupErrorKind::UnexpectedClose(tok.tag)
                            };
                            return Err(MarkupError { kind, position: i });
                        }
                        Some((tag, pos, start)) => {
                            if start == stripped_len {
                                return Err(MarkupError {
                                    kind: MarkupErrorKind::EmptyTag(tag),
                                    position: pos,
                                });
                            }
                            spans.push((pos, tag, start, stripped_len));
                        }
                    }
                }
                i += tok.len;
            }
        }
    }
    if let Some((tag, pos, _)) = open.first() {
        return Err(MarkupError {
            kind: MarkupErrorKind::Unclosed(*tag),
            position: *pos,
        });
    }
    spans.sort_by_key(|s| s.0);

    let slice = |s: usize, e: usize| -> String { stripped.chars().skip(s).take(e - s).collect() };
    let mut events: Vec<EventAnchor> = Vec::new();
    let mut mentions = Vec::new();
    for &(pos, tag, start, end) in &spans {
        let span = TextSpan::with_offsets(slice(start, end), start, end);
        match tag.mention_kind() {
            None => {
                if events.iter().any(|e| e.span.offsets() == Some((start, end))) {
                    return Err(MarkupError {
                        kind: MarkupErrorKind::DuplicateEvent,
                        position: pos,
                    });
                }
                events.push(EventAnchor {
                    id: format!("e{}", events.len()),
                    span,
                });
            }
            Some((ctype, distractor)) => mentions.push(ContextMention {
                id: format!("m{}", mentions.len()),
                span,
                ctype,
                distractor,
            }),
        }
    }
    let relations = events
        .iter()
        .flat_map(|e| {
            mentions
                .iter()
                .filter(|m| !m.distractor)
                .map(move |m| ScenarioRelation {
                    event_id: e.id.clone(),
                    mention_id: m.id.clone(),
                    ctype: m.ctype,
                })
        })
        .collect();
    Ok(AnnotatedPassage {
        passage_id: passage_id.to_owned(),
        doc_id: doc_id.to_owned(),
        text: stripped,
        events,
        mentions,
        relations,
        provenance: Provenance::Synthetic,
    })
}

/// Re-inserts tags at the recorded span offsets. Spans without offsets are
/// skipped.
///
/// When an event and a mention cover the identical range, the event tag is
/// written outermost.
pub fn render_markup(passage: &AnnotatedPassage) -> String {
    // (start, end, tag, rank) where rank orders identical ranges.
    let mut spans: Vec<(usize, usize, Tag, usize)> = Vec::new();
    for e in &passage.events {
        if let Some((s, t)) = e.span.offsets() {
            spans.push((s, t, Tag::Event, 0));
        }
    }
    for m in &passage.mentions {
        if let Some((s, t)) = m.span.offsets() {
            spans.push((s, t, Tag::for_mention(m), 1));
        }
    }
    let mut opens: Vec<Vec<(usize, usize, Tag)>> = Vec::new();
    let mut closes: Vec<Vec<(usize, usize, Tag)>> = Vec::new();
    let len = passage.text.chars().count();
    opens.resize_with(len + 1, Vec::new);
    closes.resize_with(len + 1, Vec::new);
    for &(s, e, tag, rank) in &spans {
        if e <= len {
            opens[s].push((e, rank, tag));
            closes[e].push((s, rank, tag));
        }
    }
    let mut out = String::with_capacity(passage.text.len() + spans.len() * 12);
    let chars: Vec<char> = passage.text.chars().collect();
    for pos in 0..=len {
        // Inner spans close first: later start, then higher rank.
        let mut c = std::mem::take(&mut closes[pos]);
        c.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)));
        for (_, _, tag) in c {
            out.push_str("</");
            out.push_str(tag.name());
            out.push('>');
        }
        // Outer spans open first: later end, then lower rank.
        let mut o = std::mem::take(&mut opens[pos]);
        o.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for (_, _, tag) in o {
            out.push('<');
            out.push_str(tag.name());
            out.push('>');
        }
        if pos < len {
            out.push(chars[pos]);
        }
    }
    out
}

/// Splits a markup file into passages separated by blank lines.
pub fn split_markup_file(content: &str) -> Vec<String> {
    let mut passages = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in content.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                passages.push(current.join("\n"));
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        passages.push(current.join("\n"));
    }
    passages
}

fn content_id(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    format!("syn-{hex}")
}
