use std::collections::HashSet;

use crate::chat::{map_bounded, ChatClient, ChatError, ChatRequest, ChatSettings, RetryPolicy};
use crate::error::{Error, Result};
use crate::ingest::parse_markup_with_ids;
use crate::model::{AnnotatedPassage, ContextType};
use crate::prompts::{render, PromptTemplates};
use crate::text::normalize;

use super::{validate_augmented, AugmentOutcome, Discard, Failure};

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GenerationPlan {
    pub event_types: Vec<String>,
    pub names_per_type: usize,
    pub roles_per_type: usize,
    /// Length phrases such as "one paragraph" or "three sentences".
    pub lengths: Vec<String>,
    pub loc_distractors: usize,
    pub tmp_distractors: usize,
}

impl Default for GenerationPlan {
    fn default() -> Self {
        GenerationPlan {
            event_types: vec![
                "public health emergencies".into(),
                "tech conferences".into(),
                "international summits".into(),
            ],
            names_per_type: 10,
            roles_per_type: 5,
            lengths: vec!["one paragraph".into()],
            loc_distractors: 1,
            tmp_distractors: 1,
        }
    }
}

impl GenerationPlan {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(format!("generation plan: {what}")));
        if self.event_types.is_empty() || self.event_types.iter().any(|t| t.trim().is_empty()) {
            return bad("event_types must be non-empty strings");
        }
        if self.lengths.is_empty() || self.lengths.iter().any(|t| t.trim().is_empty()) {
            return bad("lengths must be non-empty strings");
        }
        if self.names_per_type == 0 || self.roles_per_type == 0 {
            return bad("names_per_type and roles_per_type must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct SyntheticConfig {
    pub settings: ChatSettings,
    pub retry: RetryPolicy,
    pub templates: PromptTemplates,
    pub parallelism: usize,
}

/// Splits a list reply on commas and newlines, dropping numbering, bullets
/// and quotes.
pub fn parse_list_reply(reply: &str) -> Vec<String> {
    reply
        .split([',', '\n'])
        .map(|item| {
            let item = item.trim();
            let item = item.trim_start_matches(|c: char| c.is_ascii_digit());
            let item = item
                .strip_prefix(['.', ')'])
                .unwrap_or(item)
                .trim_start_matches(['-', '*', '•', ' ']);
            let item = item.trim().trim_matches(['"', '\'', '`']).trim();
            item.strip_suffix('.').unwrap_or(item).trim().to_owned()
        })
        .filter(|item| !item.is_empty())
        .collect()
}

struct Job {
    id: String,
    event_type: String,
    name: String,
    role: String,
    length: String,
}

/// Runs the three-stage pipeline: event names and narrator roles per event
/// type, then one tagged narration per (name, role, length).
///
/// A narration is kept when it parses, has at least one event, exactly one
/// distinct location and time context, the planned number of distractors
/// of each type, and passes [`validate_augmented`]. Passage ids are
/// `syn-{type}-{name}-{role}-{length}` indices, so output order is fixed.
pub fn generate_synthetic(
    plan: &GenerationPlan,
    client: &dyn ChatClient,
    config: &SyntheticConfig,
) -> Result<AugmentOutcome> {
    plan.validate()?;
    let mut out = AugmentOutcome::default();
    let ask = |system: Option<String>, user: String| -> Result<String, ChatError> {
        let mut req = ChatRequest::new(user, &config.settings);
        if let Some(s) = system {
            req = req.with_system(s);
        }
        config.retry.complete(client, &req)
    };

    let mut jobs = Vec::new();
    for (t, event_type) in plan.event_types.iter().enumerate() {
        let list = |template: &str, count: usize, stage: &str| -> Result<Vec<String>, Failure> {
            let prompt = render(
                template,
                &[("count", &count.to_string()), ("event_type", event_type)],
            );
            let reply = ask(None, prompt).map_err(|e| Failure::new(event_type, stage, &e))?;
            let mut items = parse_list_reply(&reply);
            let mut seen = HashSet::new();
            items.retain(|i| seen.insert(normalize(i)));
            items.truncate(count);
            Ok(items)
        };
        let names = list(&config.templates.synthetic_event_names, plan.names_per_type, "names");
        let roles = list(&config.templates.synthetic_narrator_roles, plan.roles_per_type, "roles");
        let (names, roles) = match (names, roles) {
            (Ok(n), Ok(r)) => (n, r),
            (n, r) => {
                out.failures.extend(n.err());
                out.failures.extend(r.err());
                continue;
            }
        };
        if names.len() < plan.names_per_type || roles.len() < plan.roles_per_type {
            log::warn!(
                "{event_type}: got {} names and {} roles, planned {} and {}",
                names.len(),
                roles.len(),
                plan.names_per_type,
                plan.roles_per_type
            );
        }
        for (n, name) in names.iter().enumerate() {
            for (r, role) in roles.iter().enumerate() {
                for (l, length) in plan.lengths.iter().enumerate() {
                    jobs.push(Job {
                        id: format!("syn-{t}-{n}-{r}-{l}"),
                        event_type: event_type.clone(),
                        name: name.clone(),
                        role: role.clone(),
                        length: length.clone(),
                    });
                }
            }
        }
    }

    let results = map_bounded(&jobs, config.parallelism, |job| {
        let system = render(
            &config.templates.synthetic_generation_system,
            &[("role", &job.role), ("event_type", &job.event_type)],
        );
        let user = render(
            &config.templates.synthetic_generation_user,
            &[
                ("length", &job.length),
                ("event", &job.name),
                ("loc_distractors", &plan.loc_distractors.to_string()),
                ("tmp_distractors", &plan.tmp_distractors.to_string()),
            ],
        );
        ask(Some(system), user)
    });
    for (job, result) in jobs.iter().zip(results) {
        let discard = |reason: String| Discard {
            source: job.name.clone(),
            variant: job.id.clone(),
            reason,
        };
        match result {
            Err(e) => out.failures.push(Failure::new(&job.name, &job.id, &e)),
            Ok(reply) => match check_narration(reply.trim(), &job.id, &job.event_type, plan) {
                Ok(p) => out.passages.push(p),
                Err(reason) => {
                    log::info!("discarding {}: {reason}", job.id);
                    out.discarded.push(discard(reason));
                }
            },
        }
    }
    out.dedup(&mut HashSet::new());
    Ok(out)
}

fn check_narration(
    reply: &str,
    id: &str,
    event_type: &str,
    plan: &GenerationPlan,
) -> Result<AnnotatedPassage, String> {
    let p = parse_markup_with_ids(reply, id, event_type).map_err(|e| e.to_string())?;
    if p.events.is_empty() {
        return Err("no <evt> tag".into());
    }
    for (ctype, planned) in [
        (ContextType::Location, plan.loc_distractors),
        (ContextType::Temporal, plan.tmp_distractors),
    ] {
        let of_type = || p.mentions.iter().filter(move |m| m.ctype == ctype);
        let contexts: HashSet<String> = of_type()
            .filter(|m| !m.distractor)
            .map(|m| normalize(&m.span.text))
            .collect();
        if contexts.len() != 1 {
            return Err(format!("expected one {ctype} context, found {}", contexts.len()));
        }
        let distractors = of_type().filter(|m| m.distractor).count();
        if distractors != planned {
            return Err(format!(
                "expected {planned} {ctype} distractors, found {distractors}"
            ));
        }
    }
    let violations = validate_augmented(&p);
    if !violations.is_empty() {
        let reasons: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(reasons.join("; "));
    }
    Ok(p)
}
