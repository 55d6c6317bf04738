//! Builds model input/target pairs and decodes model output strings.

use std::path::Path;

use scenario_context::promptgen::{emit_training_pairs, parse_model_output};
use scenario_context::{jsonl, AnnotatedPassage};

fn main() -> scenario_context::Result<()> {
    let gold: Vec<AnnotatedPassage> =
        jsonl::read(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/data/gold_sample.jsonl")))?;
    let (pairs, skipped) = emit_training_pairs(&gold);
    println!("{} pairs, {} skipped", pairs.len(), skipped.len());
    let pair = &pairs[2];
    println!("input:\n{}\n\ntarget: {}\n", pair.input, pair.target);

    for decoded in [
        pair.target.as_str(),
        "time: 2011; location: thailand",
        "bangkok; time: october",
        "I am not sure.",
    ] {
        let parsed = parse_model_output(decoded);
        println!("{decoded:?}\n  -> {:?} valid={}", parsed.context, parsed.valid);
    }
    Ok(())
}
