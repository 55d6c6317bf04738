//! Paraphrase augmentation of gold passages, with every variant checked to
//! still contain its annotated spans.
//!
//! Uses a scripted offline model by default; pass a provider URL to use a
//! real chat-completions API (key from SCK_LLM_API_KEY).

use std::path::Path;

use scenario_context::augment::{paraphrase_corpus, ParaphraseConfig};
use scenario_context::chat::{ChatClient, ChatRequest, FnClient, HttpChatClient};
use scenario_context::{jsonl, AnnotatedPassage};

fn offline_answer(request: &ChatRequest) -> String {
    let prompt = &request.user;
    let text = prompt.split_once("\n\n").map_or("", |(_, t)| t);
    let similar = [
        ("Guinea", "Mali"),
        ("Liberia", "Ghana"),
        ("Sierra Leone", "Senegal"),
        ("Kyoto", "Osaka"),
        ("mid-2014", "early 2015"),
        ("December 1997", "\"November 1998.\""),
    ];
    if prompt.starts_with("Please give me") {
        return similar
            .iter()
            .find(|(from, _)| prompt.contains(&format!("`{from}`")))
            .map_or("Unknown", |(_, to)| to)
            .to_owned();
    }
    if prompt.contains("fixed:`") {
        // Moves the first sentence to the end.
        return match text.split_once(". ") {
            Some((first, rest)) => format!("{rest} {first}."),
            None => text.to_owned(),
        };
    }
    if prompt.starts_with("Please replace word") {
        return text.replace("declared", "announced");
    }
    format!("Reportedly, {text}")
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

    let config = ParaphraseConfig {
        word_replacements: vec![("declared".into(), "announced".into())],
        ..ParaphraseConfig::default()
    };
    let outcome = paraphrase_corpus(&gold[..2], client, &config, 4);
    for p in &outcome.passages {
        println!("{}: {}", p.passage_id, p.text);
        for e in &p.events {
            let ctx = p.gold_context(&e.id);
            println!("    {:?} -> {:?} / {:?}", e.span.text, ctx.locations, ctx.times);
        }
    }
    for d in &outcome.discarded {
        println!("discarded {}: {}", d.variant, d.reason);
    }
    println!(
        "\n{} variants, {} new relations, {} failed requests",
        outcome.passages.len(),
        outcome.relation_count(),
        outcome.failures.len()
    );
    Ok(())
}
