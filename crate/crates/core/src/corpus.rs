//! Line-oriented SMILES corpora: streaming reads and seeded splits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A corpus file, one SMILES per line. Files ending in `.gz` are decompressed
/// on the fly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    path: PathBuf,
}

impl Corpus {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        File::open(&path)?;
        Ok(Corpus { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn is_gzip(&self) -> bool {
        self.path.extension().is_some_and(|e| e == "gz")
    }

    /// Streams trimmed, non-empty lines in file order.
    pub fn lines(&self) -> Result<CorpusLines<Box<dyn BufRead>>> {
        let file = File::open(&self.path)?;
        let reader: Box<dyn BufRead> = if self.is_gzip() {
            Box::new(BufReader::new(MultiGzDecoder::new(file)))
        } else {
            Box::new(BufReader::new(file))
        };
        Ok(CorpusLines::new(reader, self.path.display().to_string()))
    }

    pub fn read_all(&self) -> Result<Vec<String>> {
        self.lines()?.collect()
    }

    pub fn count(&self) -> Result<usize> {
        self.lines()?.try_fold(0, |n, line| line.map(|_| n + 1))
    }
}

/// Iterator over the molecules of a line reader.
pub struct CorpusLines<R> {
    reader: R,
    name: String,
    line: usize,
    blank: usize,
    buf: Vec<u8>,
    done: bool,
}

impl<R: BufRead> CorpusLines<R> {
    pub fn new(reader: R, name: impl Into<String>) -> Self {
        CorpusLines {
            reader,
            name: name.into(),
            line: 0,
            blank: 0,
            buf: Vec::new(),
            done: false,
        }
    }

    /// Blank or whitespace-only lines skipped so far.
    pub fn skipped_blank(&self) -> usize {
        self.blank
    }
}

impl<R: BufRead> Iterator for CorpusLines<R> {
    type Item = Result<String>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => {
                    self.done = true;
                    if self.blank > 0 {
                        log::warn!("{}: skipped {} blank lines", self.name, self.blank);
                    }
                    return None;
                }
                Ok(_) => self.line += 1,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
            let text = match std::str::from_utf8(&self.buf) {
                Ok(t) => t.trim(),
                Err(e) => {
                    self.done = true;
                    return Some(Err(Error::Corpus {
                        path: self.name.clone(),
                        line: self.line,
                        message: format!("invalid UTF-8: {e}"),
                    }));
                }
            };
            if text.is_empty() {
                self.blank += 1;
                continue;
            }
            return Some(Ok(text.to_string()));
        }
    }
}

/// Version of the hash behind [`SplitSpec::assign`]. Bumped whenever the
/// assignment of any molecule could change.
pub const SPLIT_HASH_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Train, validation and test fractions.
    pub fractions: [f64; 3],
    pub seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SplitSpec {
    pub fn new(fractions: [f64; 3], seed: u64) -> Result<Self> {
        if fractions.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "split fractions must be non-negative, got {fractions:?}"
            )));
        }
        let sum: f64 = fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "split fractions must sum to 1, got {sum}"
            )));
        }
        Ok(SplitSpec { fractions, seed })
    }

    /// Split of the molecule at `index`, from a hash of `(seed, index)`.
    pub fn assign(&self, index: u64) -> Split {
        let h = splitmix64(self.seed ^ splitmix64(index));
        let u = (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        if u < self.fractions[0] {
            Split::Train
        } else if u < self.fractions[0] + self.fractions[1] {
            Split::Validation
        } else {
            Split::Test
        }
    }

    /// Partitions `items` by position.
    pub fn split_vec<T>(&self, items: Vec<T>) -> [Vec<T>; 3] {
        let mut out = [Vec::new(), Vec::new(), Vec::new()];
        for (i, item) in items.into_iter().enumerate() {
            out[self.assign(i as u64) as usize].push(item);
        }
        out
    }
}

/// Record of a split written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub fractions: [f64; 3],
    /// Molecules in train, validation and test.
    pub counts: [usize; 3],
    pub hash_version: u32,
    pub files: [PathBuf; 3],
}

/// Streams `corpus` into `<out_dir>/<stem>.{train,validation,test}.smi`.
pub fn split_corpus(
    corpus: &Corpus,
    spec: &SplitSpec,
    out_dir: impl AsRef<Path>,
    stem: &str,
) -> Result<(SplitManifest, [Corpus; 3])> {
    let files = Split::ALL.map(|s| out_dir.as_ref().join(format!("{stem}.{}.smi", s.name())));
    let mut writers = Vec::with_capacity(3);
    for f in &files {
        writers.push(BufWriter::new(File::create(f)?));
    }
    let mut counts = [0usize; 3];
    for (i, line) in corpus.lines()?.enumerate() {
        let line = line?;
        let k = spec.assign(i as u64) as usize;
        writeln!(writers[k], "{line}")?;
        counts[k] += 1;
    }
    for w in &mut writers {
        w.flush()?;
    }
    let handles = [
        Corpus::open(&files[0])?,
        Corpus::open(&files[1])?,
        Corpus::open(&files[2])?,
    ];
    Ok((
        SplitManifest {
            seed: spec.seed,
            fractions: spec.fractions,
            counts,
            hash_version: SPLIT_HASH_VERSION,
            files,
        },
        handles,
    ))
}
