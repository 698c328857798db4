//! Add-one smoothed n-gram language models over token ids.

mod bidir;
mod io;
mod model;

pub use bidir::{log_odds, mask_from_tokenizer, MaskSpec, WindowMask};
pub use model::{Boundary, NGramCounter, NGramModel, MAX_ORDER};
