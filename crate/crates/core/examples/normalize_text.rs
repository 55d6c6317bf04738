//! Normalization, tokenization and sentence lookup used by every comparison
//! in the crate.

use scenario_context::text::{normalize, sentence_index, tokenize, SentenceIndex};

fn main() -> scenario_context::Result<()> {
    for raw in ["  Western and Northern Europe, United Kingdom ", "Dec.  1997", "Zürich,  CH"] {
        println!("{raw:?} -> {:?} -> {:?}", normalize(raw), tokenize(raw));
    }

    let text = "Dr. Ruiz arrived. The outbreak began in Lima! Cases rose?  Yes.";
    let index = SentenceIndex::new(text);
    println!("\n{} sentences in {text:?}", index.sentence_count());
    for (offset, ch) in text.char_indices().filter(|(_, c)| c.is_uppercase()) {
        println!("  {ch:?} at char {offset}: sentence {}", sentence_index(text, offset)?);
    }
    Ok(())
}
