//! Cohen's kappa between two annotators of the same passages.

use std::path::Path;

use scenario_context::analysis::{agreement_items, cohens_kappa};
use scenario_context::{jsonl, AnnotatedPassage};

fn main() -> scenario_context::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let a: Vec<AnnotatedPassage> = jsonl::read(&data.join("gold_sample.jsonl"))?;
    let b: Vec<AnnotatedPassage> = jsonl::read(&data.join("annotator_b.jsonl"))?;
    let items = agreement_items(&a, &b);
    for item in items.iter().filter(|i| i.rater_a != i.rater_b) {
        println!("disagree on {}: {} vs {}", item.item_id, item.rater_a, item.rater_b);
    }
    println!("kappa over {} candidate pairs: {:.4}", items.len(), cohens_kappa(&items)?);
    Ok(())
}
