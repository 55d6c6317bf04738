//! Scores SRL modifier arguments (ARGM-LOC / ARGM-TMP) as context
//! predictions, reading parses produced by an external SRL tool.

use std::fs;
use std::path::Path;

use scenario_context::baselines::{parse_srl_file, score_srl_baseline, srl_match, SrlFrame};
use scenario_context::{jsonl, AnnotatedPassage, ContextType};

fn main() -> scenario_context::Result<()> {
    let frame = SrlFrame::new(
        "spread",
        &[("ARG1", "the outbreak"), ("V", "spread"), ("ARGM-TMP", "in March 2020")],
    );
    println!(
        "matches 'the outbreak spread' / 'March 2020': {}",
        srl_match("the outbreak spread", "March 2020", ContextType::Temporal, &[frame])
    );

    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let gold: Vec<AnnotatedPassage> = jsonl::read(&data.join("gold_sample.jsonl"))?;
    let parses = parse_srl_file(&fs::read_to_string(data.join("srl_sample.jsonl"))?, "srl_sample.jsonl")?;
    let score = score_srl_baseline(&gold, &parses)?;
    for ctype in ContextType::ALL {
        let c = score.counts.get(ctype);
        println!(
            "{ctype:<9} TP={} FP={} FN={}  {}",
            c.true_positives,
            c.false_positives,
            c.false_negatives,
            score.prf.get(ctype)
        );
    }
    Ok(())
}
