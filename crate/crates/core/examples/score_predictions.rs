//! Scores decoded model output against gold at span and token level.

use std::fs;
use std::path::Path;

use scenario_context::eval::{parse_predictions, score_dataset, token_score_event, ScoreOptions};
use scenario_context::{jsonl, AnnotatedPassage, ContextSet, ContextType};

fn main() -> scenario_context::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let gold: Vec<AnnotatedPassage> = jsonl::read(&data.join("gold_sample.jsonl"))?;
    let preds = parse_predictions(
        &fs::read_to_string(data.join("decoded_sample.jsonl"))?,
        "decoded_sample.jsonl",
    )?;

    let outcome = score_dataset(&gold, &preds, ScoreOptions::default())?;
    println!("{}", outcome.report);
    let typed = score_dataset(&gold, &preds, ScoreOptions { only_gold_typed: true })?;
    println!("only events with gold context of the type:\n{}", typed.report);

    let gold_ctx = ContextSet::new(vec!["Western and Northern Europe, United Kingdom".into()], vec![]);
    let pred_ctx = ContextSet::new(vec!["Western and Northern Europe".into()], vec![]);
    println!(
        "partial location match: {}",
        token_score_event(&gold_ctx, &pred_ctx, ContextType::Location)
    );
    Ok(())
}
