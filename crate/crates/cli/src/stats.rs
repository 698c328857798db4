use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use rayon::prelude::*;
use smirk_core::corpus::split_corpus;
use smirk_core::synth::SyntheticCorpus;
use smirk_core::{Corpus, SplitSpec, TokenStats};

use crate::input::{for_each_chunk, output, TokenizerArgs};
use crate::usage;

/// Token usage over a corpus.
///
/// Writes a CSV with columns rank, token, count, frequency, information_nats
/// (`-ln p`), most frequent token first, unused tokens omitted. Prints a JSON
/// summary {"entropy", "normalized_entropy", "tokens_used", "V",
/// "total_tokens", "fertility", "molecules", "rare_threshold_nats"} to stderr,
/// or to stdout when the CSV goes to a file.
#[derive(clap::Args)]
pub struct Args {
    #[command(flatten)]
    pub tokenizer: TokenizerArgs,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Occurrence count behind the reported rare-token threshold.
    #[arg(long, default_value_t = 100)]
    pub rare_min: u64,
}

pub fn run(args: Args) -> Result<()> {
    let tok = args.tokenizer.build(false)?;
    let mut counts = vec![0u64; tok.vocabulary().len()];
    let mut molecules = 0usize;
    for_each_chunk(Some(&args.corpus), |start, chunk| {
        let part = smirk_core::metrics::token_stats(&tok, &chunk)
            .with_context(|| format!("in molecules {}..{}", start + 1, start + chunk.len()))?;
        counts
            .par_iter_mut()
            .zip(part.counts)
            .for_each(|(a, b)| *a += b);
        molecules += chunk.len();
        Ok(())
    })?;
    let stats = TokenStats::from_counts(counts);
    let mut out = output(args.out.as_deref())?;
    stats.write_csv(&tok, &mut out)?;
    out.flush()?;

    let mut summary: serde_json::Value = serde_json::from_str(&stats.summary_json())?;
    summary["molecules"] = molecules.into();
    summary["fertility"] = if molecules == 0 {
        serde_json::Value::Null
    } else {
        (stats.total as f64 / molecules as f64).into()
    };
    summary["rare_threshold_nats"] = if stats.total == 0 {
        serde_json::Value::Null
    } else {
        stats.rare_token_threshold(args.rare_min).into()
    };
    if args.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

/// Seeded train/validation/test split of a corpus file.
///
/// Writes `<stem>.train.smi`, `<stem>.validation.smi` and `<stem>.test.smi`
/// plus `<stem>.split.json`, a manifest {"seed", "fractions", "counts",
/// "hash_version", "files"} that is also printed to stdout. A molecule's split
/// depends only on the seed and its position in the file.
#[derive(clap::Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Train, validation and test fractions.
    #[arg(long, value_delimiter = ',', default_value = "0.8,0.1,0.1")]
    pub fractions: Vec<f64>,
    /// Output directory; the corpus directory by default.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// File name stem; the corpus name without extensions by default.
    #[arg(long)]
    pub stem: Option<String>,
}

pub fn split(args: SplitArgs) -> Result<()> {
    let fractions: [f64; 3] = args.fractions.as_slice().try_into().map_err(|_| {
        usage(format!(
            "--fractions needs three values, got {}",
            args.fractions.len()
        ))
    })?;
    let spec = SplitSpec::new(fractions, args.seed)?;
    let corpus = Corpus::open(&args.corpus)
        .with_context(|| format!("opening corpus {}", args.corpus.display()))?;
    let out_dir = match args.out_dir {
        Some(d) => d,
        None => args
            .corpus
            .parent()
            .map_or_else(|| PathBuf::from("."), |p| p.to_path_buf()),
    };
    std::fs::create_dir_all(&out_dir)?;
    let stem = args.stem.unwrap_or_else(|| {
        let name = args
            .corpus
            .file_name()
            .map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        name.split('.')
            .next()
            .filter(|s| !s.is_empty())
            .unwrap_or("corpus")
            .to_string()
    });
    let (manifest, _) = split_corpus(&corpus, &spec, &out_dir, &stem)?;
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(
        out_dir.join(format!("{stem}.split.json")),
        format!("{json}\n"),
    )?;
    println!("{json}");
    Ok(())
}

/// Seeded synthetic drug-like SMILES, one per line.
#[derive(clap::Args)]
pub struct SynthArgs {
    #[arg(long, short, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let mut gen = SyntheticCorpus::new(args.seed);
    let mut out = output(args.out.as_deref())?;
    for _ in 0..args.n {
        writeln!(out, "{}", gen.molecule())?;
    }
    out.flush()?;
    Ok(())
}
