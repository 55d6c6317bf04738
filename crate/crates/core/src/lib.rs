//! Toolkit for scenario-context extraction data: the location and time
//! relevant to a specific event mentioned in text.
//!
//! The crate covers the whole data path around a text-to-text extraction
//! model:
//!
//! - [`ingest`]: LabelStudio exports and tagged synthetic text into
//!   canonical [`AnnotatedPassage`] records, train/test splits, corpus
//!   statistics.
//! - [`promptgen`]: model input prompts, target sequences and decoding of
//!   model output.
//! - [`augment`]: LLM paraphrasing and procedural generation of passages.
//! - [`eval`]: span-level and token-level precision/recall/F1.
//! - [`baselines`]: zero-shot LLM prompting and SRL argument matching.
//! - [`analysis`]: error taxonomy, Cohen's kappa, sentence distances.
//! - [`cli`]: the `sck` command line.
//!
//! Runnable walkthroughs of each capability live in `examples/`.

pub mod analysis;
pub mod augment;
pub mod baselines;
pub mod chat;
pub mod cli;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod jsonl;
pub mod model;
pub mod promptgen;
pub mod prompts;
pub mod text;

pub use error::{Error, Result};
pub use model::{
    AnnotatedPassage, ContextMention, ContextSet, ContextType, EventAnchor, PerType, Provenance,
    ScenarioRelation, TextSpan,
};
