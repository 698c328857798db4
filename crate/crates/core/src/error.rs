use std::ops::Range;

use thiserror::Error;

/// Errors raised while splitting a SMILES string into pre-tokens or glyphs.
///
/// Spans are half-open character ranges into the input string.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("unterminated bracket atom at {}..{}", .span.start, .span.end)]
    UnterminatedBracket { span: Range<usize> },
    #[error("empty bracket atom at {}..{}", .span.start, .span.end)]
    EmptyBracket { span: Range<usize> },
    #[error("unrecognized character {text:?} at {}..{}", .span.start, .span.end)]
    Unmatched { text: String, span: Range<usize> },
    #[error("cannot decompose bracket atom {atom:?}: unexpected input at {}..{}", .span.start, .span.end)]
    Decompose { atom: String, span: Range<usize> },
}

impl LexError {
    pub fn span(&self) -> Range<usize> {
        match self {
            LexError::UnterminatedBracket { span }
            | LexError::EmptyBracket { span }
            | LexError::Unmatched { span, .. }
            | LexError::Decompose { span, .. } => span.clone(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("out-of-vocabulary unit {unit:?} at {}..{}", .span.start, .span.end)]
    OutOfVocabulary { unit: String, span: Range<usize> },
    #[error("token id {id} is out of range for a vocabulary of {size} tokens")]
    InvalidId { id: u32, size: usize },
    #[error("duplicate token {0:?} in vocabulary")]
    DuplicateToken(String),
    #[error("vocabulary has no [UNK] token")]
    MissingUnk,
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("{path}: line {line}: {message}")]
    Corpus {
        path: String,
        line: usize,
        message: String,
    },
    #[error("malformed n-gram model: {0}")]
    ModelFormat(String),
    #[error("degenerate regression input: {0}")]
    Degenerate(String),
    #[error("missing data table: {0}")]
    MissingTable(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
