//! Zero-shot LLM baseline: prompts a chat model once per gold event and
//! scores the parsed JSON answers.
//!
//! Runs against a scripted offline model by default. Pass a provider URL to
//! query a real chat-completions API (key from SCK_LLM_API_KEY):
//!
//!     cargo run --example llm_baseline -- https://api.openai.com/v1

use std::path::Path;

use scenario_context::baselines::{run_llm_baseline, LlmBaselineConfig};
use scenario_context::chat::{ChatClient, ChatRequest, ChatSettings, FnClient, HttpChatClient};
use scenario_context::eval::{score_dataset, ScoreOptions};
use scenario_context::{jsonl, AnnotatedPassage};

const MONTHS: [&str; 4] = ["March", "July", "October", "December"];

/// Answers with every capitalized non-month word after "in" as a location,
/// and every four-digit number as a time period.
fn offline_answer(request: &ChatRequest) -> String {
    let phrase = request.user.rsplit("Phrase:\n").next().unwrap_or_default();
    let words: Vec<&str> = phrase
        .split(|c: char| c.is_whitespace() || c == '`')
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .collect();
    let locations: Vec<&str> = words
        .windows(2)
        .filter(|w| w[0] == "in" && w[1].starts_with(char::is_uppercase) && !MONTHS.contains(&w[1]))
        .map(|w| w[1])
        .collect();
    let times: Vec<&str> = words
        .iter()
        .copied()
        .filter(|w| w.len() == 4 && w.chars().all(|c| c.is_ascii_digit()))
        .collect();
    format!(
        "Here is the result:\n```json\n{}\n```",
        serde_json::json!({"locations": locations, "time periods": times})
    )
}

fn main() -> scenario_context::Result<()> {
    let gold: Vec<AnnotatedPassage> =
        jsonl::read(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/data/gold_sample.jsonl")))?;
    let offline = FnClient(|r: &ChatRequest| Ok(offline_answer(r)));
    let live = std::env::args().nth(1).map(|url| HttpChatClient::from_env(&url));
    let client: &dyn ChatClient = match &live {
        Some(c) => c,
        None => &offline,
    };

    let config = LlmBaselineConfig {
        settings: ChatSettings {
            model_name: "gpt-4o".into(),
            ..ChatSettings::default()
        },
        parallelism: 4,
        ..LlmBaselineConfig::default()
    };
    let run = run_llm_baseline(&gold, client, &config);
    for f in &run.failures {
        println!("failed {}/{}: {}", f.passage_id, f.event_id, f.error);
    }
    for r in &run.records {
        println!("{:<16} {:?}", r.event_id, r.predicted);
    }
    println!("\n{}", score_dataset(&gold, &run.records, ScoreOptions::default())?.report);
    Ok(())
}
