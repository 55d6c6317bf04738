//! Reference systems: zero-shot LLM prompting and matching of semantic role
//! labeling (SRL) modifier arguments.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::chat::{map_bounded, ChatClient, ChatRequest, ChatSettings, RetryPolicy};
use crate::error::{Error, Result};
use crate::eval::{PredictionRecord, PRF};
use crate::model::{AnnotatedPassage, ContextSet, ContextType, PerType};
use crate::promptgen::ParsedOutput;
use crate::prompts::{render, PromptTemplates};
use crate::text::{char_slice, normalize};

/// Fills the LLM baseline template with the event wrapped in triple
/// backticks between its left and right context.
pub fn build_llm_baseline_prompt(
    template: &str,
    event_text: &str,
    pre_context: &str,
    post_context: &str,
) -> Result<String> {
    if event_text.is_empty() {
        return Err(Error::InvalidInput("event text is empty".into()));
    }
    Ok(render(
        template,
        &[
            ("pre_context", pre_context),
            ("event", event_text),
            ("post_context", post_context),
        ],
    ))
}

/// Reads the first JSON object in `raw`, tolerating prose and code fences
/// around it. `locations` and `time periods` may hold a string or an array
/// of strings. Never fails; without a JSON object the result is empty and
/// invalid.
pub fn parse_llm_baseline_output(raw: &str) -> ParsedOutput {
    let object = raw.match_indices('{').find_map(|(i, _)| {
        let mut stream = serde_json::Deserializer::from_str(&raw[i..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Object(map))) => Some(map),
            _ => None,
        }
    });
    let Some(object) = object else {
        return ParsedOutput::default();
    };
    let strings = |key: &str| -> Vec<String> {
        let values: Vec<&Value> = match object.get(key) {
            Some(Value::Array(items)) => items.iter().collect(),
            Some(v) => vec![v],
            None => Vec::new(),
        };
        values
            .into_iter()
            .filter_map(Value::as_str)
            .map(normalize)
            .filter(|s| !s.is_empty())
            .collect()
    };
    ParsedOutput {
        context: ContextSet::new(strings("locations"), strings("time periods")),
        valid: true,
    }
}

#[derive(Debug, Clone, Default)]
pub struct LlmBaselineConfig {
    pub settings: ChatSettings,
    pub retry: RetryPolicy,
    pub templates: PromptTemplates,
    pub parallelism: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BaselineFailure {
    pub passage_id: String,
    pub event_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct LlmBaselineRun {
    /// Exactly one record per gold event, in gold order. Events whose
    /// request failed have an empty prediction and `valid_parse == false`.
    pub records: Vec<PredictionRecord>,
    pub failures: Vec<BaselineFailure>,
}

/// Prompts the model once per gold event with the passage split around the
/// event span.
pub fn run_llm_baseline(
    gold: &[AnnotatedPassage],
    client: &dyn ChatClient,
    config: &LlmBaselineConfig,
) -> LlmBaselineRun {
    let mut jobs = Vec::new();
    for p in gold {
        let mut p = p.clone();
        p.resolve_offsets();
        let len = p.text.chars().count();
        for e in &p.events {
            let prompt = e
                .span
                .offsets()
                .and_then(|(s, end)| Some((char_slice(&p.text, 0, s)?, char_slice(&p.text, end, len)?)))
                .ok_or_else(|| "event span has no offsets in the passage".to_owned())
                .and_then(|(pre, post)| {
                    build_llm_baseline_prompt(&config.templates.llm_baseline, &e.span.text, pre, post)
                        .map_err(|err| err.to_string())
                });
            jobs.push((p.passage_id.clone(), e.id.clone(), prompt));
        }
    }
    let replies = map_bounded(&jobs, config.parallelism, |(_, _, prompt)| {
        let prompt = prompt.as_ref().map_err(Clone::clone)?;
        config
            .retry
            .complete(client, &ChatRequest::new(prompt.as_str(), &config.settings))
            .map_err(|e| e.to_string())
    });

    let mut run = LlmBaselineRun::default();
    for ((passage_id, event_id, _), reply) in jobs.into_iter().zip(replies) {
        let parsed = match reply {
            Ok(raw) => parse_llm_baseline_output(&raw),
            Err(error) => {
                run.failures.push(BaselineFailure {
                    passage_id: passage_id.clone(),
                    event_id: event_id.clone(),
                    error,
                });
                ParsedOutput::default()
            }
        };
        run.records.push(PredictionRecord {
            passage_id,
            event_id,
            predicted: parsed.context,
            valid_parse: parsed.valid,
        });
    }
    run
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrlArgument {
    pub label: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrlFrame {
    pub predicate_text: String,
    pub arguments: Vec<SrlArgument>,
    pub sentence_index: usize,
}

impl SrlFrame {
    pub fn new(predicate: &str, arguments: &[(&str, &str)]) -> Self {
        SrlFrame {
            predicate_text: predicate.to_owned(),
            arguments: arguments
                .iter()
                .map(|(label, text)| SrlArgument {
                    label: (*label).to_owned(),
                    text: (*text).to_owned(),
                })
                .collect(),
            sentence_index: 0,
        }
    }
}

/// Label of the modifier argument carrying a context type.
pub fn modifier_label(ctype: ContextType) -> &'static str {
    match ctype {
        ContextType::Location => "ARGM-LOC",
        ContextType::Temporal => "ARGM-TMP",
    }
}

/// Predicate pseudo-argument used by common SRL output to mark the verb's
/// position among the arguments.
const VERB_LABEL: &str = "V";

#[derive(Deserialize)]
struct ParseLine {
    passage_id: String,
    sentences: Vec<ParseSentence>,
}

#[derive(Deserialize)]
struct ParseSentence {
    index: usize,
    frames: Vec<ParseFrame>,
}

#[derive(Deserialize)]
struct ParseFrame {
    predicate: String,
    arguments: Vec<SrlArgument>,
}

/// Reads an SRL parse file: one
/// `{passage_id, sentences: [{index, frames: [{predicate, arguments}]}]}`
/// object per line.
pub fn parse_srl_file(input: &str, name: &str) -> Result<BTreeMap<String, Vec<SrlFrame>>> {
    let lines: Vec<ParseLine> = crate::jsonl::parse(input, name)?;
    let mut out = BTreeMap::new();
    for line in lines {
        let mut frames = Vec::new();
        for sentence in line.sentences {
            for f in sentence.frames {
                if f.predicate.trim().is_empty() {
                    return Err(Error::InvalidInput(format!(
                        "{name}: empty predicate in passage {}",
                        line.passage_id
                    )));
                }
                frames.push(SrlFrame {
                    predicate_text: f.predicate,
                    arguments: f.arguments,
                    sentence_index: sentence.index,
                });
            }
        }
        if out.insert(line.passage_id.clone(), frames).is_some() {
            return Err(Error::InvalidInput(format!(
                "{name}: passage {} parsed twice",
                line.passage_id
            )));
        }
    }
    Ok(out)
}

/// Whether some argument of `frame` other than `skip` covers the event when
/// joined with the predicate.
fn covers_event(frame: &SrlFrame, skip: usize, event: &str) -> bool {
    let event = normalize(event);
    let predicate = normalize(&frame.predicate_text);
    let verb = frame.arguments.iter().position(|a| a.label == VERB_LABEL);
    frame.arguments.iter().enumerate().any(|(i, a)| {
        if i == skip || a.label == VERB_LABEL {
            return false;
        }
        let arg = normalize(&a.text);
        let before = format!("{arg} {predicate}");
        let after = format!("{predicate} {arg}");
        match verb {
            Some(v) if i < v => before.contains(&event),
            Some(_) => after.contains(&event),
            None => before.contains(&event) || after.contains(&event),
        }
    })
}

fn modifiers(frame: &SrlFrame, ctype: ContextType) -> impl Iterator<Item = (usize, String)> + '_ {
    let label = modifier_label(ctype);
    frame
        .arguments
        .iter()
        .enumerate()
        .filter(move |(_, a)| a.label == label)
        .map(|(i, a)| (i, normalize(&a.text)))
}

/// True iff a frame has a modifier of the relation's type containing the
/// context, and another argument which, joined with the predicate in
/// document order, contains the event. Without a `V` argument to fix the
/// predicate position both orders are tried.
pub fn srl_match(event_text: &str, context_text: &str, ctype: ContextType, frames: &[SrlFrame]) -> bool {
    let context = normalize(context_text);
    frames.iter().any(|f| {
        modifiers(f, ctype).any(|(i, text)| text.contains(&context) && covers_event(f, i, event_text))
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SrlCounts {
    pub true_positives: usize,
    pub false_negatives: usize,
    pub false_positives: usize,
}

impl SrlCounts {
    pub fn prf(&self) -> PRF {
        PRF::from_counts(
            self.true_positives,
            self.true_positives + self.false_positives,
            self.true_positives + self.false_negatives,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SrlScore {
    pub counts: PerType<SrlCounts>,
    pub prf: PerType<PRF>,
}

/// Micro-averaged scores of SRL modifier matching against gold relations.
///
/// A gold relation is a true positive when [`srl_match`] holds on its
/// passage's frames, else a false negative. A (frame, modifier) pair is a
/// false positive when the frame covers some event of the passage but the
/// modifier contains none of that event's gold contexts of the type; each
/// pair counts at most once.
pub fn score_srl_baseline(
    gold: &[AnnotatedPassage],
    parses: &BTreeMap<String, Vec<SrlFrame>>,
) -> Result<SrlScore> {
    let mut counts = PerType::<SrlCounts>::default();
    for p in gold {
        if p.events.is_empty() {
            continue;
        }
        let frames = parses
            .get(&p.passage_id)
            .ok_or_else(|| Error::MissingParse(p.passage_id.clone()))?;
        for r in &p.relations {
            let (Some(e), Some(m)) = (p.event(&r.event_id), p.mention(&r.mention_id)) else {
                continue;
            };
            let c = counts.get_mut(r.ctype);
            if srl_match(&e.span.text, &m.span.text, r.ctype, frames) {
                c.true_positives += 1;
            } else {
                c.false_negatives += 1;
            }
        }
        for ctype in ContextType::ALL {
            let contexts: Vec<(&str, HashSet<String>)> = p
                .events
                .iter()
                .map(|e| {
                    let ctx = p.gold_context(&e.id);
                    let set = ctx.get(ctype).iter().map(|s| normalize(s)).collect();
                    (e.span.text.as_str(), set)
                })
                .collect();
            for f in frames {
                for (i, text) in modifiers(f, ctype) {
                    let spurious = contexts.iter().any(|(event, ctx)| {
                        covers_event(f, i, event) && !ctx.iter().any(|c| text.contains(c.as_str()))
                    });
                    if spurious {
                        counts.get_mut(ctype).false_positives += 1;
                    }
                }
            }
        }
    }
    Ok(SrlScore {
        prf: counts.map(|_, c| c.prf()),
        counts,
    })
}
