//! Glyph pair encoding: byte-pair-style merges learned over smirk glyph ids.
//!
//! Merges operate on token ids, not strings, so merging `C` with `n` yields a new
//! meta-token that is distinct from the element `Cn` even though both print the same.
//! Molecules are first cut into words (ring-closure digits, parentheses, dots and
//! whole bracket atoms are word boundaries) and merges never cross a word boundary.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::ops::Range;

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::lexer::{lex_smirk, Glyph, GlyphKind, Mode};
use crate::vocab::{MergeRule, Vocabulary};

type Pair = (u32, u32);

/// Splits a glyph sequence into words. Returns index ranges into `glyphs`.
pub fn word_ranges(glyphs: &[Glyph<'_>]) -> Vec<Range<usize>> {
    let n = glyphs.len();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < n {
        let end = match glyphs[i].kind {
            GlyphKind::BracketOpen => glyphs[i..]
                .iter()
                .position(|g| g.kind == GlyphKind::BracketClose)
                .map_or(n, |p| i + p + 1),
            GlyphKind::RingMarker => {
                let mut j = i + 1;
                while j < n && j < i + 3 && glyphs[j].kind == GlyphKind::Digit {
                    j += 1;
                }
                j
            }
            GlyphKind::Digit
            | GlyphKind::ParenOpen
            | GlyphKind::ParenClose
            | GlyphKind::Dot
            | GlyphKind::Unmatched => i + 1,
            _ => {
                i += 1;
                continue;
            }
        };
        if start < i {
            out.push(start..i);
        }
        out.push(i..end);
        i = end;
        start = end;
    }
    if start < n {
        out.push(start..n);
    }
    out
}

/// Splits a SMILES string into the glyph-id words used for merge training.
pub fn split_training_words(base: &Vocabulary, input: &str) -> Result<Vec<Vec<u32>>> {
    let glyphs = lex_smirk(input, Mode::Strict)?;
    let ids = glyphs
        .iter()
        .map(|g| {
            base.unit_id(g.text).ok_or_else(|| Error::OutOfVocabulary {
                unit: g.text.to_string(),
                span: g.span.clone(),
            })
        })
        .collect::<Result<Vec<u32>>>()?;
    Ok(word_ranges(&glyphs)
        .into_iter()
        .map(|r| ids[r].to_vec())
        .collect())
}

/// Merge rules indexed for encoding.
#[derive(Debug, Clone, Default)]
pub struct MergeTable {
    ranks: FxHashMap<Pair, (u32, u32)>,
}

impl MergeTable {
    pub fn new(rules: &[MergeRule]) -> Self {
        let ranks = rules
            .iter()
            .enumerate()
            .map(|(rank, r)| ((r.left, r.right), (rank as u32, r.result)))
            .collect();
        MergeTable { ranks }
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Applies the rules to one word, merging the lowest-ranked adjacent pair
    /// (all its non-overlapping occurrences, left to right) until none applies.
    ///
    /// This is equivalent to applying every rule once in priority order: a pair
    /// created by merging rule `r` involves the new id, and any rule on that id
    /// was learned after `r`.
    pub fn apply(&self, ids: &[u32]) -> Vec<u32> {
        let mut pieces: Vec<(u32, Range<usize>)> = ids.iter().map(|&id| (id, 0..0)).collect();
        self.apply_pieces(&mut pieces);
        pieces.into_iter().map(|(id, _)| id).collect()
    }

    /// Same as [`MergeTable::apply`] but carries a span per piece; merged pieces
    /// cover the union of their parts.
    pub(crate) fn apply_pieces(&self, pieces: &mut Vec<(u32, Range<usize>)>) {
        if self.ranks.is_empty() {
            return;
        }
        loop {
            let best = pieces
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].0, w[1].0)))
                .min_by_key(|(rank, _)| *rank)
                .copied();
            let Some((rank, result)) = best else { break };
            let mut out = Vec::with_capacity(pieces.len());
            let mut i = 0;
            while i < pieces.len() {
                if i + 1 < pieces.len()
                    && self.ranks.get(&(pieces[i].0, pieces[i + 1].0)).map(|r| r.0) == Some(rank)
                {
                    out.push((result, pieces[i].1.start..pieces[i + 1].1.end));
                    i += 2;
                } else {
                    out.push(pieces[i].clone());
                    i += 1;
                }
            }
            *pieces = out;
        }
    }
}

/// Applies `rules` to a single word of ids.
pub fn apply_merges(ids: &[u32], rules: &[MergeRule]) -> Vec<u32> {
    MergeTable::new(rules).apply(ids)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GpeTrainConfig {
    pub target_vocab_size: usize,
    pub min_pair_frequency: u64,
}

impl Default for GpeTrainConfig {
    fn default() -> Self {
        GpeTrainConfig {
            target_vocab_size: 50_000,
            min_pair_frequency: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TargetReached,
    MergesExhausted,
    FrequencyFloor,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::TargetReached => "target reached",
            StopReason::MergesExhausted => "merges exhausted",
            StopReason::FrequencyFloor => "frequency floor",
        })
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub vocabulary: Vocabulary,
    pub stop_reason: StopReason,
}

/// Multiset of training words. Counts from separate shards merge by addition,
/// so any sharding of a corpus yields the same table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordCounts {
    counts: FxHashMap<Vec<u32>, u64>,
    molecules: u64,
}

impl WordCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_smiles(&mut self, base: &Vocabulary, smiles: &str) -> Result<()> {
        for word in split_training_words(base, smiles)? {
            *self.counts.entry(word).or_insert(0) += 1;
        }
        self.molecules += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: WordCounts) {
        for (word, count) in other.counts {
            *self.counts.entry(word).or_insert(0) += count;
        }
        self.molecules += other.molecules;
    }

    /// Counts words of `corpus` in parallel shards.
    pub fn from_corpus_par<S: AsRef<str> + Sync>(base: &Vocabulary, corpus: &[S]) -> Result<Self> {
        let shards: Vec<Result<WordCounts>> = corpus
            .par_chunks(2048)
            .map(|chunk| {
                let mut counts = WordCounts::new();
                for smiles in chunk {
                    counts.add_smiles(base, smiles.as_ref())?;
                }
                Ok(counts)
            })
            .collect();
        let mut total = WordCounts::new();
        for shard in shards {
            total.merge(shard?);
        }
        Ok(total)
    }

    pub fn distinct_words(&self) -> usize {
        self.counts.len()
    }

    pub fn molecules(&self) -> u64 {
        self.molecules
    }

    pub fn get(&self, word: &[u32]) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }
}

/// Learns merge rules from a corpus of SMILES strings.
pub fn train<I, S>(corpus: I, config: &GpeTrainConfig, base: &Vocabulary) -> Result<TrainOutcome>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts = WordCounts::new();
    for smiles in corpus {
        counts.add_smiles(base, smiles.as_ref())?;
    }
    train_from_counts(&counts, config, base)
}

/// Learns merge rules from pre-counted words.
///
/// Each step merges the most frequent adjacent pair, breaking ties by the lowest
/// `(left, right)` id pair. Training stops when the vocabulary reaches the target
/// size, when the best pair is rarer than `min_pair_frequency`, or when no pairs are
/// left.
pub fn train_from_counts(
    counts: &WordCounts,
    config: &GpeTrainConfig,
    base: &Vocabulary,
) -> Result<TrainOutcome> {
    if counts.molecules == 0 {
        return Err(Error::EmptyCorpus);
    }
    if config.target_vocab_size <= base.len() {
        return Err(Error::InvalidConfig(format!(
            "target vocabulary size {} must exceed the base size {}",
            config.target_vocab_size,
            base.len()
        )));
    }
    if config.min_pair_frequency == 0 {
        return Err(Error::InvalidConfig(
            "min_pair_frequency must be positive".into(),
        ));
    }

    let mut entries: Vec<(&Vec<u32>, &u64)> = counts.counts.iter().collect();
    entries.sort_unstable();
    let mut words: Vec<Vec<u32>> = entries.iter().map(|(w, _)| (*w).clone()).collect();
    let weights: Vec<u64> = entries.iter().map(|(_, c)| **c).collect();

    let mut pair_counts: FxHashMap<Pair, u64> = FxHashMap::default();
    let mut pair_words: FxHashMap<Pair, Vec<usize>> = FxHashMap::default();
    for (i, word) in words.iter().enumerate() {
        for w in word.windows(2) {
            let pair = (w[0], w[1]);
            *pair_counts.entry(pair).or_insert(0) += weights[i];
            let list = pair_words.entry(pair).or_default();
            if list.last() != Some(&i) {
                list.push(i);
            }
        }
    }
    let mut heap: BinaryHeap<(u64, Reverse<Pair>)> =
        pair_counts.iter().map(|(&p, &c)| (c, Reverse(p))).collect();

    let base_len = base.len();
    let mut merges: Vec<Pair> = Vec::new();
    let mut visited = vec![usize::MAX; words.len()];
    let stop_reason = loop {
        if base_len + merges.len() >= config.target_vocab_size {
            break StopReason::TargetReached;
        }
        let Some((count, Reverse(pair))) = heap.pop() else {
            break StopReason::MergesExhausted;
        };
        if pair_counts.get(&pair) != Some(&count) {
            continue;
        }
        if count < config.min_pair_frequency {
            break StopReason::FrequencyFloor;
        }

        let step = merges.len();
        let new_id = (base_len + step) as u32;
        merges.push(pair);

        let mut delta: FxHashMap<Pair, i64> = FxHashMap::default();
        for i in pair_words.remove(&pair).unwrap_or_default() {
            if visited[i] == step {
                continue;
            }
            visited[i] = step;
            let word = &words[i];
            if !word.windows(2).any(|w| (w[0], w[1]) == pair) {
                continue;
            }
            let weight = weights[i] as i64;
            for w in word.windows(2) {
                *delta.entry((w[0], w[1])).or_insert(0) -= weight;
            }
            let merged = merge_word(word, pair, new_id);
            for w in merged.windows(2) {
                let p = (w[0], w[1]);
                *delta.entry(p).or_insert(0) += weight;
                if p.0 == new_id || p.1 == new_id {
                    let list = pair_words.entry(p).or_default();
                    if list.last() != Some(&i) {
                        list.push(i);
                    }
                }
            }
            words[i] = merged;
        }

        let mut changed: Vec<(Pair, i64)> = delta.into_iter().filter(|(_, d)| *d != 0).collect();
        changed.sort_unstable();
        for (p, d) in changed {
            let entry = pair_counts.entry(p).or_insert(0);
            *entry = (*entry as i64 + d) as u64;
            if *entry == 0 {
                pair_counts.remove(&p);
                pair_words.remove(&p);
            } else {
                heap.push((*entry, Reverse(p)));
            }
        }
    };

    Ok(TrainOutcome {
        vocabulary: base.with_merges(&merges)?,
        stop_reason,
    })
}

fn merge_word(word: &[u32], pair: Pair, new_id: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if i + 1 < word.len() && (word[i], word[i + 1]) == pair {
            out.push(new_id);
            i += 2;
        } else {
            out.push(word[i]);
            i += 1;
        }
    }
    out
}
