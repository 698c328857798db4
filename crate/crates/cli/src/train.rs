use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use smirk_core::gpe::{train_from_counts, WordCounts};
use smirk_core::{GpeTrainConfig, Vocabulary};

use crate::input::{for_each_chunk, load_vocab, output};

/// Learn glyph pair merges over a corpus.
///
/// Writes the vocabulary (base tokens plus merges) as JSON to --out and prints
/// {"merges": N, "vocab_size": V, "stop_reason": "..."} to stdout, where the
/// stop reason is "target reached", "merges exhausted" or "frequency floor".
#[derive(clap::Args)]
pub struct Args {
    /// Training corpus, one SMILES per line (`.gz` allowed).
    #[arg(long)]
    pub corpus: PathBuf,
    /// Base glyph vocabulary; the built-in smirk roster by default.
    #[arg(long)]
    pub base_vocab: Option<PathBuf>,
    /// Total vocabulary size to stop at, base tokens included.
    #[arg(long, default_value_t = 50_000)]
    pub target_size: usize,
    /// Stop once the most frequent pair occurs fewer times than this.
    #[arg(long, default_value_t = 2)]
    pub min_freq: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let base = match &args.base_vocab {
        Some(p) => load_vocab(p)?,
        None => Vocabulary::smirk(),
    };
    let mut counts = WordCounts::new();
    for_each_chunk(Some(&args.corpus), |start, chunk| {
        let part = WordCounts::from_corpus_par(&base, &chunk)
            .with_context(|| format!("in molecules {}..{}", start + 1, start + chunk.len()))?;
        counts.merge(part);
        Ok(())
    })?;
    log::info!(
        "{} molecules, {} distinct words",
        counts.molecules(),
        counts.distinct_words()
    );
    let config = GpeTrainConfig {
        target_vocab_size: args.target_size,
        min_pair_frequency: args.min_freq,
    };
    let outcome = train_from_counts(&counts, &config, &base)?;
    outcome
        .vocabulary
        .save(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let mut out = output(None)?;
    writeln!(
        out,
        "{}",
        serde_json::json!({
            "merges": outcome.vocabulary.merges().len(),
            "vocab_size": outcome.vocabulary.len(),
            "stop_reason": outcome.stop_reason.to_string(),
        })
    )?;
    out.flush()?;
    Ok(())
}
