//! Converts a LabelStudio export into canonical passages and prints corpus
//! statistics.
//!
//!     cargo run --example ingest_labelstudio [-- export.json]

use std::fs;

use scenario_context::ingest::{corpus_stats, parse_labelstudio_export, IngestConfig};
use scenario_context::jsonl;

fn main() -> scenario_context::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/labelstudio_sample.json").into());
    let import = parse_labelstudio_export(&fs::read(&path)?, &IngestConfig::default())?;
    for d in &import.skipped {
        println!("skipped task {}: {}", d.task_id, d.message);
    }

    let first = &import.passages[0];
    println!("passage {} ({}): {:?}", first.passage_id, first.doc_id, first.text);
    for e in &first.events {
        let ctx = first.gold_context(&e.id);
        println!("  event {:?}: locations {:?}, times {:?}", e.span.text, ctx.locations, ctx.times);
    }
    println!("\n{}", corpus_stats(&import.passages));
    print!("{}", jsonl::to_string(&import.passages[..1]));
    Ok(())
}
