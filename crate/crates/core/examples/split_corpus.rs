//! Seeded train/test split that balances relation counts, and the
//! sentence-distance histogram of the gold corpus.

use std::path::Path;

use scenario_context::analysis::distance_histogram;
use scenario_context::ingest::split_dataset;
use scenario_context::{jsonl, AnnotatedPassage};

fn main() -> scenario_context::Result<()> {
    let gold: Vec<AnnotatedPassage> =
        jsonl::read(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/data/gold_sample.jsonl")))?;
    for seed in [1, 2] {
        let split = split_dataset(&gold, seed, 0.3)?;
        let ids: Vec<&str> = split.test.iter().map(|p| p.doc_id.as_str()).collect();
        println!("seed {seed}: test = {ids:?} ({} relations)", split.test_relations());
    }

    let hist = distance_histogram(&gold);
    print!("\n{}", hist.to_csv());
    println!("inter-sentential fraction: {:.3}", hist.intersentential_fraction());
    Ok(())
}
