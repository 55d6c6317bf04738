//! Parses tagged synthetic text into passages and renders the tags back.

use scenario_context::ingest::{parse_markup_passage, render_markup, split_markup_file};

const SAMPLE: &str = include_str!("../data/synthetic_sample.txt");

fn main() {
    for tagged in split_markup_file(SAMPLE) {
        let p = parse_markup_passage(&tagged).expect("sample is well formed");
        println!("{} ({} events)", p.passage_id, p.events.len());
        println!("  text: {}", p.text);
        for m in &p.mentions {
            let role = if m.distractor { "distractor" } else { "context" };
            println!("  {:<8} {:<10} {:?}", m.ctype, role, m.span.text);
        }
        println!("  relations: {}", p.relations.len());
        assert_eq!(render_markup(&p), tagged);
    }

    match parse_markup_passage("<evt>The fair</evt> opened in <loc>Oslo.") {
        Ok(_) => unreachable!(),
        Err(e) => println!("\nrejected: {e}"),
    }
}
