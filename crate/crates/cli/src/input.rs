//! Tokenizer selection and chunked corpus reading shared by the subcommands.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use smirk_core::corpus::CorpusLines;
use smirk_core::{Corpus, Scheme, Tokenizer, Vocabulary};

use crate::usage;

/// Molecules handed to the worker pool at a time.
pub const CHUNK: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    /// Glyph-level tokenizer with the fixed 165-token vocabulary.
    Smirk,
    /// One token per printable ASCII character.
    Char,
    /// The 26-token atom-wise baseline vocabulary.
    Moses,
    /// Atom-wise pre-tokens; needs --vocab.
    Atomwise,
    /// Glyph pair encoding; needs --vocab.
    Gpe,
}

/// `--scheme` / `--vocab` pair selecting a tokenizer.
#[derive(Debug, Clone, clap::Args)]
pub struct TokenizerArgs {
    #[arg(long, value_enum, default_value = "smirk")]
    pub scheme: SchemeArg,
    /// Vocabulary JSON file; overrides the built-in roster of the scheme.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

impl TokenizerArgs {
    pub fn build(&self, strict: bool) -> Result<Tokenizer> {
        let scheme = match self.scheme {
            SchemeArg::Smirk => Scheme::Smirk,
            SchemeArg::Char => Scheme::Char,
            SchemeArg::Moses | SchemeArg::Atomwise => Scheme::Atomwise,
            SchemeArg::Gpe => Scheme::Gpe,
        };
        let vocab = match (&self.vocab, self.scheme) {
            (Some(path), _) => load_vocab(path)?,
            (None, SchemeArg::Smirk) => Vocabulary::smirk(),
            (None, SchemeArg::Char) => Vocabulary::char_ascii(),
            (None, SchemeArg::Moses) => Vocabulary::moses_like(),
            (None, s) => {
                return Err(usage(
                    format!("--scheme {s:?} needs --vocab").to_lowercase(),
                ))
            }
        };
        Tokenizer::with_scheme(scheme, vocab, strict).map_err(|e| usage(e.to_string()))
    }
}

pub fn load_vocab(path: &Path) -> Result<Vocabulary> {
    Vocabulary::load(path).with_context(|| format!("reading vocabulary {}", path.display()))
}

/// A named tokenizer from `name`, `name=PATH` or a vocabulary file path.
pub fn named_tokenizer(spec: &str) -> Result<(String, Tokenizer)> {
    let builtin = |name: &str| match name {
        "smirk" => Some(Vocabulary::smirk()),
        "char" => Some(Vocabulary::char_ascii()),
        "moses" => Some(Vocabulary::moses_like()),
        _ => None,
    };
    let (name, vocab) = match spec.split_once('=') {
        Some((name, path)) => (name.to_string(), load_vocab(Path::new(path))?),
        None => match builtin(spec) {
            Some(v) => (spec.to_string(), v),
            None => {
                let path = Path::new(spec);
                if !path.exists() {
                    return Err(usage(format!(
                        "{spec:?} is neither a built-in tokenizer (smirk, char, moses) nor a file"
                    )));
                }
                let name = path
                    .file_stem()
                    .map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
                (name, load_vocab(path)?)
            }
        },
    };
    Ok((name, Tokenizer::new(vocab, false)))
}

/// Streams a corpus file (or stdin for `None` / `-`) in chunks of `CHUNK`
/// molecules; `f` receives the index of the first molecule and the chunk.
pub fn for_each_chunk(
    input: Option<&Path>,
    mut f: impl FnMut(usize, Vec<String>) -> Result<()>,
) -> Result<()> {
    let lines: Box<dyn Iterator<Item = smirk_core::Result<String>>> = match input {
        Some(p) if p != Path::new("-") => Box::new(
            Corpus::open(p)
                .with_context(|| format!("opening corpus {}", p.display()))?
                .lines()?,
        ),
        _ => Box::new(CorpusLines::new(io::stdin().lock(), "<stdin>")),
    };
    let mut start = 0;
    let mut chunk = Vec::with_capacity(CHUNK);
    for line in lines {
        chunk.push(line?);
        if chunk.len() == CHUNK {
            let n = chunk.len();
            f(
                start,
                std::mem::replace(&mut chunk, Vec::with_capacity(CHUNK)),
            )?;
            start += n;
        }
    }
    if !chunk.is_empty() {
        f(start, chunk)?;
    }
    Ok(())
}

/// Buffered writer to a file, or stdout for `None` / `-`.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        _ => Box::new(BufWriter::new(io::stdout().lock())),
    })
}
