//! Three-stage synthetic generation: event names, narrator roles, then a
//! tagged narration per (name, role, length), parsed and validated.
//!
//! Uses a scripted offline model by default; pass a provider URL to use a
//! real chat-completions API (key from SCK_LLM_API_KEY).

use scenario_context::augment::{generate_synthetic, GenerationPlan, SyntheticConfig};
use scenario_context::chat::{ChatClient, ChatRequest, FnClient, HttpChatClient};

fn offline_answer(request: &ChatRequest) -> String {
    if request.user.contains("fictional") {
        return "1. Lumen Tech Summit\n2. Orbit DevCon".into();
    }
    if request.user.contains("narrator roles") {
        return "historian, conference blogger".into();
    }
    let event = request
        .user
        .split_once(" about ")
        .and_then(|(_, rest)| rest.split_once(".\n"))
        .map_or("the event", |(e, _)| e);
    if request.system.as_deref().is_some_and(|s| s.contains("blogger")) {
        // Forgets the distractor times: discarded by validation.
        return format!("<evt>{event}</evt> took over <loc>New Harbor</loc> in <tmp>May 2042</tmp>.");
    }
    format!(
        "<evt>{event}</evt> was held in <loc>New Harbor</loc> in <tmp>March 2042</tmp>. \
         Plans to host <evt>it</evt> in <nloc>Port Ellis</nloc> during <ntmp>2039</ntmp> fell through."
    )
}

fn main() -> scenario_context::Result<()> {
    let offline = FnClient(|r: &ChatRequest| Ok(offline_answer(r)));
    let live = std::env::args().nth(1).map(|url| HttpChatClient::from_env(&url));
    let client: &dyn ChatClient = match &live {
        Some(c) => c,
        None => &offline,
    };

    let plan = GenerationPlan {
        event_types: vec!["tech conferences".into()],
        names_per_type: 2,
        roles_per_type: 2,
        lengths: vec!["one paragraph".into()],
        loc_distractors: 1,
        tmp_distractors: 1,
    };
    let outcome = generate_synthetic(&plan, client, &SyntheticConfig::default())?;
    for p in &outcome.passages {
        println!("{}: {}", p.passage_id, p.text);
    }
    for d in &outcome.discarded {
        println!("discarded {}: {}", d.variant, d.reason);
    }
    println!("{} passages, {} relations", outcome.passages.len(), outcome.relation_count());
    Ok(())
}
