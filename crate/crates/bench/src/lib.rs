//! Shared fixtures for the benchmarks.

use smirk_core::gpe::{train, GpeTrainConfig};
use smirk_core::synth::desk_corpus;
use smirk_core::{Boundary, NGramModel, Scheme, Tokenizer, Vocabulary};

pub const SEED: u64 = 7;

/// Synthetic molecules, the same for every run.
pub fn molecules(n: usize) -> Vec<String> {
    desk_corpus(n, SEED)
}

/// A gpe tokenizer trained on `corpus` with up to `merges` merges.
pub fn gpe_tokenizer(corpus: &[String], merges: usize) -> Tokenizer {
    let base = Vocabulary::smirk();
    let config = GpeTrainConfig {
        target_vocab_size: base.len() + merges,
        min_pair_frequency: 2,
    };
    let vocab = train(corpus, &config, &base)
        .expect("desk corpus trains")
        .vocabulary;
    Tokenizer::with_scheme(Scheme::Gpe, vocab, false).expect("gpe vocabulary")
}

pub fn encode_all(tok: &Tokenizer, corpus: &[String]) -> Vec<Vec<u32>> {
    corpus
        .iter()
        .map(|s| tok.encode(s).expect("desk molecules encode").ids)
        .collect()
}

/// An order-`n` model of `corpus` under `tok`.
pub fn model(tok: &Tokenizer, corpus: &[String], n: usize) -> NGramModel {
    let seqs = encode_all(tok, corpus);
    NGramModel::fit_par(&seqs, n, Boundary::for_vocabulary(tok.vocabulary())).expect("valid order")
}
