use std::io;

use thiserror::Error;

use crate::chat::ChatError;
use crate::ingest::MarkupError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed JSON at byte {offset}: {message}")]
    Json { offset: usize, message: String },

    #[error("{path}:{line}: {message}")]
    JsonLine {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Markup(#[from] MarkupError),

    #[error(transparent)]
    Chat(#[from] ChatError),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("character offset {offset} out of range for text of length {len}")]
    OffsetOutOfRange { offset: usize, len: usize },

    #[error("duplicate prediction for passage {passage_id}, event {event_id}")]
    DuplicatePrediction { passage_id: String, event_id: String },

    #[error("no SRL parse for passage {0}")]
    MissingParse(String),
}

impl Error {
    /// Wraps a serde_json error, converting its line/column into a byte
    /// offset within `source`.
    pub(crate) fn json(err: serde_json::Error, source: &str) -> Self {
        let offset = byte_offset(source, err.line(), err.column());
        Error::Json {
            offset,
            message: err.to_string(),
        }
    }
}

fn byte_offset(source: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = source
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    // serde_json columns are 1-based and count bytes.
    (line_start + column.saturating_sub(1)).min(source.len())
}
