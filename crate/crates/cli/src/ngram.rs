use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use smirk_core::ngram::{mask_from_tokenizer, NGramCounter};
use smirk_core::{Boundary, MaskSpec, NGramModel, Tokenizer};

use crate::input::{for_each_chunk, named_tokenizer, output, TokenizerArgs};
use crate::usage;

#[derive(clap::Subcommand)]
pub enum Command {
    /// Count n-grams over a tokenized corpus and write NGM1 model files.
    ///
    /// With several orders, --out must contain `{order}`, which is replaced by
    /// each order in turn. Prints one TSV line per model: order, path and the
    /// distinct n-gram counts of orders 1..N, comma-separated.
    Train(TrainArgs),
    /// Held-out cross-entropy, in nats per molecule.
    ///
    /// Output: TSV with columns order, model, molecules, nats_per_molecule.
    Eval(EvalArgs),
    /// Information lost when another tokenizer's unknown tokens are masked out.
    ///
    /// Output: TSV with columns index, tokens, masked, kl_nats, one row per
    /// molecule, where index is the 1-based molecule number and masked counts
    /// the positions covered by the other tokenizer's [UNK]. A JSON summary
    /// {"molecules", "masked_molecules", "mean_kl", "mean_kl_masked"} goes to
    /// stderr. --log-odds writes one JSON object per position of every masked
    /// molecule: {"index", "position", "token", "masked", "log_odds"}, the log
    /// odds of the observed token with and without the mask.
    InfoLoss(InfoLossArgs),
}

#[derive(clap::Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub tokenizer: TokenizerArgs,
    /// Model orders, e.g. `3` or `1,2,3,4,5`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub order: Vec<usize>,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: String,
    /// Also write a JSON dump next to each model (for inspection).
    #[arg(long)]
    pub json: bool,
}

#[derive(clap::Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub tokenizer: TokenizerArgs,
    /// NGM1 model files; repeat for several orders.
    #[arg(long, required = true)]
    pub model: Vec<PathBuf>,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct InfoLossArgs {
    /// Tokenizer the model was trained with.
    #[command(flatten)]
    pub tokenizer: TokenizerArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Tokenizer whose [UNK] spans define the mask: smirk, char, moses,
    /// `name=vocab.json` or a vocabulary file.
    #[arg(long)]
    pub mask_tokenizer: String,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Per-position log odds as JSON lines.
    #[arg(long)]
    pub log_odds: Option<PathBuf>,
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::InfoLoss(a) => info_loss(a),
    }
}

fn encode_chunk(tok: &Tokenizer, start: usize, chunk: &[String]) -> Result<Vec<Vec<u32>>> {
    chunk
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            tok.encode(s)
                .map(|e| e.ids)
                .with_context(|| format!("molecule {} ({s:?})", start + i + 1))
        })
        .collect()
}

fn model_path(template: &str, order: usize, several: bool) -> Result<PathBuf> {
    if several && !template.contains("{order}") {
        return Err(usage(
            "--out must contain {order} when training several orders",
        ));
    }
    Ok(PathBuf::from(
        template.replace("{order}", &order.to_string()),
    ))
}

fn train(args: TrainArgs) -> Result<()> {
    let tok = args.tokenizer.build(false)?;
    let boundary = Boundary::for_vocabulary(tok.vocabulary());
    let several = args.order.len() > 1;
    let paths: Vec<PathBuf> = args
        .order
        .iter()
        .map(|&n| model_path(&args.out, n, several))
        .collect::<Result<_>>()?;
    let mut counters: Vec<NGramCounter> = args
        .order
        .iter()
        .map(|&n| NGramCounter::new(n, boundary))
        .collect::<smirk_core::Result<_>>()?;
    for_each_chunk(Some(&args.corpus), |start, chunk| {
        let seqs = encode_chunk(&tok, start, &chunk)?;
        for counter in &mut counters {
            let (n, b) = (counter.order(), boundary);
            let part = seqs
                .par_chunks(1024)
                .map(|shard| {
                    let mut c = NGramCounter::new(n, b)?;
                    for s in shard {
                        c.add(s)?;
                    }
                    Ok(c)
                })
                .try_reduce_with(|mut a, b| {
                    a.merge(b);
                    Ok::<_, smirk_core::Error>(a)
                });
            if let Some(part) = part {
                counter.merge(part?);
            }
        }
        Ok(())
    })?;
    let mut out = output(None)?;
    for (counter, path) in counters.into_iter().zip(paths) {
        let model = counter.finish();
        model
            .save(&path)
            .with_context(|| format!("writing {}", path.display()))?;
        if args.json {
            let json = path.with_extension("json");
            std::fs::write(&json, model.to_json())
                .with_context(|| format!("writing {}", json.display()))?;
        }
        writeln!(
            out,
            "{}\t{}\t{}",
            model.order(),
            path.display(),
            (1..=model.order())
                .map(|k| model.distinct(k).to_string())
                .collect::<Vec<_>>()
                .join(",")
        )?;
    }
    out.flush()?;
    Ok(())
}

fn load_model(path: &Path, boundary: Boundary) -> Result<NGramModel> {
    NGramModel::load(path, boundary).with_context(|| format!("loading model {}", path.display()))
}

fn eval(args: EvalArgs) -> Result<()> {
    let tok = args.tokenizer.build(false)?;
    let boundary = Boundary::for_vocabulary(tok.vocabulary());
    let models: Vec<NGramModel> = args
        .model
        .iter()
        .map(|p| load_model(p, boundary))
        .collect::<Result<_>>()?;
    let mut sums = vec![0.0f64; models.len()];
    let mut molecules = 0usize;
    for_each_chunk(Some(&args.corpus), |start, chunk| {
        let seqs = encode_chunk(&tok, start, &chunk)?;
        for (model, sum) in models.iter().zip(&mut sums) {
            *sum += seqs.par_iter().map(|s| model.sequence_nll(s)).sum::<f64>();
        }
        molecules += seqs.len();
        Ok(())
    })?;
    if molecules == 0 {
        return Err(smirk_core::Error::EmptyCorpus.into());
    }
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "order\tmodel\tmolecules\tnats_per_molecule")?;
    for ((model, path), sum) in models.iter().zip(&args.model).zip(sums) {
        writeln!(
            out,
            "{}\t{}\t{molecules}\t{:.6}",
            model.order(),
            path.display(),
            sum / molecules as f64
        )?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct LogOddsRow<'a> {
    index: usize,
    position: usize,
    token: &'a str,
    masked: bool,
    log_odds: f64,
}

struct MoleculeLoss {
    tokens: usize,
    masked: usize,
    kl: f64,
    log_odds: Vec<String>,
}

fn info_loss(args: InfoLossArgs) -> Result<()> {
    let tok = args.tokenizer.build(false)?;
    let boundary = Boundary::for_vocabulary(tok.vocabulary());
    let model = load_model(&args.model, boundary)?;
    let (_, evaluated) = named_tokenizer(&args.mask_tokenizer)?;
    let want_odds = args.log_odds.is_some();

    let molecule = |index: usize, s: &str| -> Result<MoleculeLoss> {
        let ids = tok.encode(s)?.ids;
        let mask: MaskSpec = mask_from_tokenizer(s, &evaluated, &tok)?;
        let kl = model.info_loss(&ids, &mask)?;
        let mut log_odds = Vec::new();
        if want_odds && !mask.is_empty() {
            for (i, &x) in ids.iter().enumerate() {
                log_odds.push(serde_json::to_string(&LogOddsRow {
                    index,
                    position: i,
                    token: tok.surface(x)?,
                    masked: mask.contains(i),
                    log_odds: model.log_odds(&ids, &mask, i, x)?,
                })?);
            }
        }
        Ok(MoleculeLoss {
            tokens: ids.len(),
            masked: mask.len(),
            kl,
            log_odds,
        })
    };

    let mut out = output(args.out.as_deref())?;
    let mut odds_out = match &args.log_odds {
        Some(p) => Some(output(Some(p))?),
        None => None,
    };
    writeln!(out, "index\ttokens\tmasked\tkl_nats")?;
    let (mut n, mut n_masked, mut total) = (0usize, 0usize, 0.0f64);
    for_each_chunk(Some(&args.corpus), |start, chunk| {
        let rows: Vec<Result<MoleculeLoss>> = chunk
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                molecule(start + i + 1, s)
                    .with_context(|| format!("molecule {} ({s:?})", start + i + 1))
            })
            .collect();
        for (i, row) in rows.into_iter().enumerate() {
            let row = row?;
            writeln!(
                out,
                "{}\t{}\t{}\t{:.9}",
                start + i + 1,
                row.tokens,
                row.masked,
                row.kl
            )?;
            if let Some(w) = odds_out.as_mut() {
                for line in &row.log_odds {
                    writeln!(w, "{line}")?;
                }
            }
            n += 1;
            total += row.kl;
            n_masked += usize::from(row.masked > 0);
        }
        Ok(())
    })?;
    out.flush()?;
    if let Some(mut w) = odds_out {
        w.flush()?;
    }
    let mean = |d: usize| if d == 0 { 0.0 } else { total / d as f64 };
    eprintln!(
        "{}",
        serde_json::json!({
            "molecules": n,
            "masked_molecules": n_masked,
            "mean_kl": mean(n),
            "mean_kl_masked": mean(n_masked),
        })
    );
    Ok(())
}
