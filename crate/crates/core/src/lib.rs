//! Open-vocabulary SMILES tokenization.
//!
//! The [`lexer`] splits SMILES into atom-level pre-tokens and glyphs, [`tokenizer`]
//! maps them onto a [`Vocabulary`], and [`gpe`] learns pair merges over glyph ids.
//! The remaining modules evaluate tokenizers: vocabulary [`coverage`], n-gram
//! language models ([`ngram`]) and usage statistics ([`metrics`]).

pub mod corpus;
pub mod coverage;
pub mod elements;
pub mod error;
pub mod gpe;
pub mod lexer;
pub mod metrics;
pub mod ngram;
pub mod synth;
pub mod tokenizer;
pub mod vocab;

pub use corpus::{Corpus, SplitSpec};
pub use coverage::{AuditReport, ProbeSet};
pub use error::{Error, LexError, Result};
pub use gpe::{GpeTrainConfig, MergeTable, StopReason, TrainOutcome};
pub use lexer::{Glyph, GlyphKind, Mode, PreToken, PreTokenClass};
pub use metrics::{RegressionFit, TokenStats};
pub use ngram::{Boundary, MaskSpec, NGramModel};
pub use tokenizer::{Encoding, Tokenizer};
pub use vocab::{MergeRule, Scheme, Special, Vocabulary};
