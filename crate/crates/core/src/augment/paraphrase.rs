use std::collections::{BTreeMap, HashSet};

use crate::chat::{map_bounded, ChatClient, ChatError, ChatRequest, ChatSettings, RetryPolicy};
use crate::error::{Error, Result};
use crate::model::{AnnotatedPassage, ContextType, Provenance, TextSpan};
use crate::prompts::{render, PromptTemplates};
use crate::text::{char_slice, normalize};

use super::{clean_short_reply, reanchor, validate_augmented, AugmentOutcome, Discard, Failure};

#[derive(Debug, Clone)]
pub struct ParaphraseConfig {
    /// Swap each related location/time for a similar one.
    pub substitute_contexts: bool,
    /// One rephrasing per related event, keeping that event's text fixed.
    pub fixed_phrase: bool,
    /// Number of free rephrasings per passage.
    pub free_rephrasings: usize,
    /// (word, replacement) pairs tried on passages containing the word
    /// outside any annotated span.
    pub word_replacements: Vec<(String, String)>,
    pub settings: ChatSettings,
    pub retry: RetryPolicy,
    pub templates: PromptTemplates,
}

impl Default for ParaphraseConfig {
    fn default() -> Self {
        ParaphraseConfig {
            substitute_contexts: true,
            fixed_phrase: true,
            free_rephrasings: 1,
            word_replacements: Vec::new(),
            settings: ChatSettings::default(),
            retry: RetryPolicy::default(),
            templates: PromptTemplates::default(),
        }
    }
}

enum Variant<'a> {
    Substitute,
    Fixed { event_id: &'a str, phrase: &'a str },
    Free(usize),
    Replace { word: &'a str, replacement: &'a str },
}

impl Variant<'_> {
    fn label(&self) -> String {
        match self {
            Variant::Substitute => "substitute-context".into(),
            Variant::Fixed { event_id, .. } => format!("fixed-phrase:{event_id}"),
            Variant::Free(i) => format!("rephrase:{i}"),
            Variant::Replace { word, .. } => format!("replace-word:{word}"),
        }
    }
}

/// Paraphrase variants of one gold passage.
///
/// Variant ids are `{passage_id}-para-{k}` with `k` the variant's index in
/// the attempted sequence (substitution, fixed-phrase per related event,
/// free rephrasings, word replacements), so ids are stable whether or not
/// earlier variants were discarded.
pub fn paraphrase_passage(
    p: &AnnotatedPassage,
    client: &dyn ChatClient,
    config: &ParaphraseConfig,
) -> Result<AugmentOutcome> {
    if p.provenance != Provenance::Gold {
        return Err(Error::InvalidInput(format!(
            "passage {} is not gold; only gold passages are paraphrased",
            p.passage_id
        )));
    }
    let mut seed = p.clone();
    seed.resolve_offsets();

    let related_events: Vec<&str> = seed
        .events
        .iter()
        .filter(|e| seed.relations.iter().any(|r| r.event_id == e.id))
        .map(|e| e.id.as_str())
        .collect();

    let mut variants = Vec::new();
    if config.substitute_contexts {
        variants.push(Variant::Substitute);
    }
    if config.fixed_phrase {
        for e in &seed.events {
            if related_events.contains(&e.id.as_str()) {
                variants.push(Variant::Fixed {
                    event_id: &e.id,
                    phrase: &e.span.text,
                });
            }
        }
    }
    for i in 0..config.free_rephrasings {
        variants.push(Variant::Free(i));
    }
    for (word, replacement) in &config.word_replacements {
        if replaceable(&seed, word) {
            variants.push(Variant::Replace { word, replacement });
        }
    }

    let mut out = AugmentOutcome::default();
    for (k, variant) in variants.iter().enumerate() {
        let id = format!("{}-para-{k}", seed.passage_id);
        let discard = |reason: String| Discard {
            source: seed.passage_id.clone(),
            variant: id.clone(),
            reason,
        };
        let result = match variant {
            Variant::Substitute => substitute_contexts(&seed, client, config, id.clone()),
            Variant::Fixed { event_id, phrase } => {
                let prompt = render(
                    &config.templates.rephrase_fixed_phrase,
                    &[("phrase", phrase), ("text", &seed.text)],
                );
                rephrase(&seed, client, config, &prompt, &[event_id], id.clone())
            }
            Variant::Free(_) => {
                let prompt = render(&config.templates.rephrase_free, &[("text", &seed.text)]);
                rephrase(&seed, client, config, &prompt, &related_events, id.clone())
            }
            Variant::Replace { word, replacement } => {
                let prompt = render(
                    &config.templates.replace_word,
                    &[("word", word), ("replacement", replacement), ("text", &seed.text)],
                );
                rephrase(&seed, client, config, &prompt, &related_events, id.clone())
            }
        };
        match result {
            Ok(candidate) => {
                let violations = validate_augmented(&candidate);
                if !violations.is_empty() {
                    let reasons: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
                    out.discarded.push(discard(reasons.join("; ")));
                } else if candidate.text == seed.text {
                    out.discarded.push(discard("text unchanged".into()));
                } else {
                    out.passages.push(candidate);
                }
            }
            Err(VariantError::Invalid(reason)) => out.discarded.push(discard(reason)),
            Err(VariantError::Chat(e)) => {
                out.failures
                    .push(Failure::new(&seed.passage_id, &variant.label(), &e))
            }
        }
    }
    if out.passages.is_empty() && !variants.is_empty() {
        log::warn!("passage {}: no valid paraphrase variant", seed.passage_id);
    }
    Ok(out)
}

/// Paraphrases every gold passage; non-gold passages are skipped with a
/// discard record. Output is ordered by seed passage id, then variant
/// index, and exact-duplicate texts are dropped.
pub fn paraphrase_corpus(
    passages: &[AnnotatedPassage],
    client: &dyn ChatClient,
    config: &ParaphraseConfig,
    parallelism: usize,
) -> AugmentOutcome {
    let results = map_bounded(passages, parallelism, |p| {
        paraphrase_passage(p, client, config).unwrap_or_else(|e| AugmentOutcome {
            discarded: vec![Discard {
                source: p.passage_id.clone(),
                variant: String::new(),
                reason: e.to_string(),
            }],
            ..Default::default()
        })
    });
    let mut ordered: BTreeMap<&str, Vec<AugmentOutcome>> = BTreeMap::new();
    for (p, r) in passages.iter().zip(results) {
        ordered.entry(&p.passage_id).or_default().push(r);
    }
    let mut out = AugmentOutcome::default();
    for r in ordered.into_values().flatten() {
        out.extend(r);
    }
    let mut seen: HashSet<String> = passages.iter().map(|p| p.text.clone()).collect();
    out.dedup(&mut seen);
    out
}

enum VariantError {
    Invalid(String),
    Chat(ChatError),
}

impl From<ChatError> for VariantError {
    fn from(e: ChatError) -> Self {
        VariantError::Chat(e)
    }
}

fn ask(client: &dyn ChatClient, config: &ParaphraseConfig, prompt: String) -> Result<String, ChatError> {
    config
        .retry
        .complete(client, &ChatRequest::new(prompt, &config.settings))
}

fn rephrase(
    seed: &AnnotatedPassage,
    client: &dyn ChatClient,
    config: &ParaphraseConfig,
    prompt: &str,
    required: &[&str],
    id: String,
) -> Result<AnnotatedPassage, VariantError> {
    let reply = ask(client, config, prompt.to_owned())?;
    let text = reply.trim();
    if text.is_empty() {
        return Err(VariantError::Invalid("empty reply".into()));
    }
    reanchor(seed, text, required, id).map_err(VariantError::Invalid)
}

/// True when `word` occurs in the text as a whole word but not inside any
/// annotated span.
fn replaceable(p: &AnnotatedPassage, word: &str) -> bool {
    let w = word.to_lowercase();
    let has_word = |s: &str| {
        s.to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .any(|t| t == w)
    };
    !w.is_empty()
        && has_word(&p.text)
        && !p
            .events
            .iter()
            .map(|e| &e.span.text)
            .chain(p.mentions.iter().map(|m| &m.span.text))
            .any(|s| has_word(s))
}

/// Replaces every related mention with an LLM-suggested similar location
/// or date, shifting all other spans accordingly.
fn substitute_contexts(
    seed: &AnnotatedPassage,
    client: &dyn ChatClient,
    config: &ParaphraseConfig,
    id: String,
) -> Result<AnnotatedPassage, VariantError> {
    let related: HashSet<&str> = seed.relations.iter().map(|r| r.mention_id.as_str()).collect();
    let mut replacements: BTreeMap<(ContextType, String), String> = BTreeMap::new();
    for m in seed.mentions.iter().filter(|m| related.contains(m.id.as_str())) {
        let key = (m.ctype, m.span.text.clone());
        if replacements.contains_key(&key) {
            continue;
        }
        let prompt = match m.ctype {
            ContextType::Location => render(
                &config.templates.paraphrase_location,
                &[("location", &m.span.text)],
            ),
            ContextType::Temporal => {
                render(&config.templates.paraphrase_date, &[("date", &m.span.text)])
            }
        };
        let reply = clean_short_reply(&ask(client, config, prompt)?);
        // A substitute equal to any existing or already chosen string would
        // merge distinct mentions.
        let norm = normalize(&reply);
        let taken = seed.mentions.iter().any(|o| normalize(&o.span.text) == norm)
            || replacements.values().any(|r| normalize(r) == norm);
        if !norm.is_empty() && !taken {
            replacements.insert(key, reply);
        }
    }
    if replacements.is_empty() {
        return Err(VariantError::Invalid("no usable substitution".into()));
    }

    // Edits on related mentions, skipping any that would cut through
    // another span.
    let spans: Vec<(usize, usize)> = seed
        .events
        .iter()
        .map(|e| &e.span)
        .chain(seed.mentions.iter().map(|m| &m.span))
        .filter_map(TextSpan::offsets)
        .collect();
    let mut edits: Vec<(usize, usize, String)> = Vec::new();
    for m in seed.mentions.iter().filter(|m| related.contains(m.id.as_str())) {
        let (Some((s, e)), Some(new)) = (
            m.span.offsets(),
            replacements.get(&(m.ctype, m.span.text.clone())),
        ) else {
            continue;
        };
        let crosses = spans
            .iter()
            .any(|&(a, b)| a < e && s < b && !(a <= s && e <= b) && !(s <= a && b <= e));
        let clashes = edits.iter().any(|&(a, b, _)| a < e && s < b);
        if !crosses && !clashes {
            edits.push((s, e, new.clone()));
        }
    }
    if edits.is_empty() {
        return Err(VariantError::Invalid("no substitutable mention".into()));
    }
    edits.sort_by_key(|e| e.0);
    Ok(apply_edits(seed, &edits, id))
}

/// Applies non-overlapping char-range replacements and remaps every span.
fn apply_edits(seed: &AnnotatedPassage, edits: &[(usize, usize, String)], id: String) -> AnnotatedPassage {
    let mut text = String::new();
    let mut last = 0;
    let len = seed.text.chars().count();
    for (s, e, new) in edits {
        text.push_str(char_slice(&seed.text, last, *s).unwrap_or_default());
        text.push_str(new);
        last = *e;
    }
    text.push_str(char_slice(&seed.text, last, len).unwrap_or_default());

    // Shift of an offset: sum of length deltas of edits ending at or before
    // it.
    let shift = |pos: usize, inclusive_end: bool| -> isize {
        edits
            .iter()
            .filter(|(s, e, _)| if inclusive_end { *e <= pos } else { *e <= pos && *s < pos })
            .map(|(s, e, new)| new.chars().count() as isize - (e - s) as isize)
            .sum()
    };
    let remap = |span: &TextSpan| -> TextSpan {
        match span.offsets() {
            Some((s, e)) => {
                let ns = (s as isize + shift(s, true)) as usize;
                let ne = (e as isize + shift(e, false)) as usize;
                let t = char_slice(&text, ns, ne).unwrap_or_default().to_owned();
                TextSpan::with_offsets(t, ns, ne)
            }
            None => span.clone(),
        }
    };
    let mut out = seed.clone();
    out.passage_id = id;
    out.provenance = Provenance::Paraphrase;
    for ev in &mut out.events {
        ev.span = remap(&ev.span);
    }
    for m in &mut out.mentions {
        m.span = remap(&m.span);
    }
    out.text = text;
    out
}
