//! Conversion of external annotation sources into canonical passages, plus
//! dataset splitting and corpus statistics.

mod labelstudio;
mod markup;
mod split;
mod stats;

pub use labelstudio::{
    parse_labelstudio_export, IngestConfig, LabelStudioImport, OffsetUnit, TaskDiagnostic,
    DEFAULT_CONFIG,
};
pub use markup::{
    parse_markup_passage, parse_markup_with_ids, render_markup, split_markup_file, MarkupError,
    MarkupErrorKind, Tag,
};
pub use split::{split_dataset, DatasetSplit};
pub use stats::{corpus_stats, CorpusStats};
