//! Classifies prediction errors into the taxonomy used for manual analysis.

use std::fs;
use std::path::Path;

use scenario_context::analysis::{classify_error, error_report};
use scenario_context::eval::parse_predictions;
use scenario_context::{jsonl, AnnotatedPassage, ContextSet, ContextType};

fn main() -> scenario_context::Result<()> {
    let cases = [
        ("between 2009 and 2014", "2009", ContextType::Temporal),
        ("Lima", "Lima, Peru", ContextType::Location),
        ("Western Europe", "Europe and Asia", ContextType::Location),
        ("Kyoto", "Osaka", ContextType::Location),
    ];
    for (gold, pred, ctype) in cases {
        let set = |s: &str| match ctype {
            ContextType::Location => ContextSet::new(vec![s.into()], vec![]),
            ContextType::Temporal => ContextSet::new(vec![], vec![s.into()]),
        };
        println!("{gold:>22} vs {pred:<16} -> {}", classify_error(&set(gold), &set(pred), ctype).as_str());
    }

    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let gold: Vec<AnnotatedPassage> = jsonl::read(&data.join("gold_sample.jsonl"))?;
    let preds = parse_predictions(&fs::read_to_string(data.join("decoded_sample.jsonl"))?, "decoded")?;
    println!("\n{}", error_report(&gold, &preds)?);
    Ok(())
}
