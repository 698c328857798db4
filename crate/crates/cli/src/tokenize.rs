use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use smirk_core::{Encoding, Tokenizer};

use crate::input::{for_each_chunk, output, TokenizerArgs};

/// Tokenize one molecule per line.
///
/// Default output: the token surfaces of each molecule separated by tabs, one
/// line per molecule. With --json, one object per line:
/// {"index": N, "ids": [..], "tokens": [..], "offsets": [[start, end], ..],
/// "unk_spans": [[start, end], ..]} where N is the 1-based molecule number and
/// offsets are byte ranges into the molecule.
#[derive(clap::Args)]
pub struct Args {
    #[command(flatten)]
    pub tokenizer: TokenizerArgs,
    /// Fail with exit code 2 on the first out-of-vocabulary unit instead of
    /// emitting [UNK].
    #[arg(long)]
    pub strict: bool,
    /// Emit JSON lines with ids and offsets.
    #[arg(long)]
    pub json: bool,
    /// Output file; stdout by default.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Input corpus (`.gz` allowed); stdin if absent or `-`.
    pub input: Option<PathBuf>,
}

#[derive(Serialize)]
struct JsonLine<'a> {
    index: usize,
    ids: &'a [u32],
    tokens: Vec<&'a str>,
    offsets: Vec<[usize; 2]>,
    unk_spans: Vec<[usize; 2]>,
}

fn render(tok: &Tokenizer, enc: &Encoding, line: usize, json: bool) -> Result<String> {
    let tokens = tok.surfaces(&enc.ids)?;
    if !json {
        return Ok(tokens.join("\t"));
    }
    let span = |r: &std::ops::Range<usize>| [r.start, r.end];
    Ok(serde_json::to_string(&JsonLine {
        index: line,
        ids: &enc.ids,
        tokens,
        offsets: enc.offsets.iter().map(span).collect(),
        unk_spans: enc.unk_spans.iter().map(span).collect(),
    })?)
}

pub fn run(args: Args) -> Result<()> {
    let tok = args.tokenizer.build(args.strict)?;
    let mut out = output(args.out.as_deref())?;
    for_each_chunk(args.input.as_deref(), |start, chunk| {
        // par_iter keeps input order, so output order matches the input
        let rendered: Vec<Result<String>> = chunk
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let enc = tok
                    .encode(s)
                    .with_context(|| format!("molecule {} ({s:?})", start + i + 1))?;
                render(&tok, &enc, start + i + 1, args.json)
            })
            .collect();
        for r in rendered {
            writeln!(out, "{}", r?)?;
        }
        Ok(())
    })?;
    out.flush()?;
    Ok(())
}
