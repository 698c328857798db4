use std::sync::OnceLock;

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::vocab::{Special, Vocabulary};

/// Highest supported model order.
pub const MAX_ORDER: usize = 5;

/// Fixed-width n-gram key; slots past the gram's length are zero.
pub(crate) type Gram = [u32; MAX_ORDER];

pub(crate) fn gram(ids: &[u32]) -> Gram {
    let mut g = [0; MAX_ORDER];
    g[..ids.len()].copy_from_slice(ids);
    g
}

/// Sequence boundary ids and the model vocabulary size.
///
/// When a tokenizer vocabulary has no `[BOS]`/`[EOS]` tokens,
/// [`Boundary::for_vocabulary`] allocates them just past its last id, so the
/// model's `V` is larger than the vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Boundary {
    pub bos: u32,
    pub eos: u32,
    pub vocab_size: u64,
}

impl Boundary {
    pub fn new(bos: u32, eos: u32, vocab_size: u64) -> Result<Self> {
        if bos == eos || u64::from(bos.max(eos)) >= vocab_size || vocab_size >= u64::from(u32::MAX)
        {
            return Err(Error::InvalidConfig(format!(
                "bad boundary ids bos={bos} eos={eos} for V={vocab_size}"
            )));
        }
        Ok(Boundary {
            bos,
            eos,
            vocab_size,
        })
    }

    pub fn for_vocabulary(vocab: &Vocabulary) -> Self {
        let mut next = vocab.len() as u32;
        let mut take = |s: Special| {
            vocab.special(s).unwrap_or_else(|| {
                next += 1;
                next - 1
            })
        };
        let bos = take(Special::Bos);
        let eos = take(Special::Eos);
        Boundary {
            bos,
            eos,
            vocab_size: u64::from(next),
        }
    }
}

/// Accumulates order-N counts. Counters over disjoint shards of a corpus can be
/// merged in any order with identical results.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramCounter {
    order: usize,
    boundary: Boundary,
    counts: FxHashMap<Gram, u64>,
}

impl NGramCounter {
    pub fn new(order: usize, boundary: Boundary) -> Result<Self> {
        check_order(order)?;
        Ok(NGramCounter {
            order,
            boundary,
            counts: FxHashMap::default(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Counts the windows of `BOS^(N-1) ids EOS`, one per predicted token.
    pub fn add(&mut self, ids: &[u32]) -> Result<()> {
        let n = self.order;
        let b = self.boundary;
        if let Some(&bad) = ids.iter().find(|&&id| u64::from(id) >= b.vocab_size) {
            return Err(Error::InvalidId {
                id: bad,
                size: b.vocab_size as usize,
            });
        }
        let mut window = [b.bos; MAX_ORDER];
        for &x in ids.iter().chain(std::iter::once(&b.eos)) {
            window.copy_within(1..n, 0);
            window[n - 1] = x;
            *self.counts.entry(gram(&window[..n])).or_insert(0) += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: NGramCounter) {
        debug_assert_eq!((self.order, self.boundary), (other.order, other.boundary));
        if self.counts.len() < other.counts.len() {
            let mine = std::mem::replace(&mut self.counts, other.counts);
            for (g, c) in mine {
                *self.counts.entry(g).or_insert(0) += c;
            }
        } else {
            for (g, c) in other.counts {
                *self.counts.entry(g).or_insert(0) += c;
            }
        }
    }

    pub fn finish(self) -> NGramModel {
        NGramModel::from_top(self.order, self.boundary, self.counts)
    }
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::InvalidConfig(format!(
            "n-gram order must be between 1 and {MAX_ORDER}, got {order}"
        )));
    }
    Ok(())
}

/// Add-one smoothed n-gram model over token ids.
///
/// Only order-N windows are counted. The lower-order tables hold continuation
/// sums, `C(w) = Σ_x C(w·x)`, which makes every conditional distribution sum to
/// exactly one.
#[derive(Debug)]
pub struct NGramModel {
    pub(crate) order: usize,
    pub(crate) boundary: Boundary,
    /// `tables[k - 1]` holds the order-k counts.
    pub(crate) tables: Vec<FxHashMap<Gram, u64>>,
    pub(crate) total: u64,
    /// Wildcard projections of the right-padded table, one slot per mask shape.
    pub(crate) projections: Vec<OnceLock<FxHashMap<Gram, u64>>>,
}

impl Clone for NGramModel {
    fn clone(&self) -> Self {
        NGramModel::from_top(
            self.order,
            self.boundary,
            self.tables[self.order - 1].clone(),
        )
    }
}

impl PartialEq for NGramModel {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order && self.boundary == other.boundary && self.tables == other.tables
    }
}

impl NGramModel {
    pub(crate) fn from_top(order: usize, boundary: Boundary, top: FxHashMap<Gram, u64>) -> Self {
        let mut tables = vec![FxHashMap::default(); order];
        tables[order - 1] = top;
        for k in (1..order).rev() {
            let mut lower: FxHashMap<Gram, u64> = FxHashMap::default();
            for (g, &c) in &tables[k] {
                *lower.entry(gram(&g[..k])).or_insert(0) += c;
            }
            tables[k - 1] = lower;
        }
        let total = tables[0].values().sum();
        NGramModel {
            order,
            boundary,
            tables,
            total,
            projections: (0..1usize << order).map(|_| OnceLock::new()).collect(),
        }
    }

    /// Fits a model sequentially.
    pub fn fit<I, S>(corpus: I, order: usize, boundary: Boundary) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u32]>,
    {
        let mut counter = NGramCounter::new(order, boundary)?;
        for seq in corpus {
            counter.add(seq.as_ref())?;
        }
        Ok(counter.finish())
    }

    /// Fits a model with counting sharded across threads.
    pub fn fit_par<S: AsRef<[u32]> + Sync>(
        corpus: &[S],
        order: usize,
        boundary: Boundary,
    ) -> Result<Self> {
        let empty = NGramCounter::new(order, boundary)?;
        let counter = corpus
            .par_chunks(1024)
            .map(|chunk| {
                let mut c = empty.clone();
                for seq in chunk {
                    c.add(seq.as_ref())?;
                }
                Ok::<_, Error>(c)
            })
            .try_reduce(
                || empty.clone(),
                |mut a, b| {
                    a.merge(b);
                    Ok(a)
                },
            )?;
        Ok(counter.finish())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn vocab_size(&self) -> u64 {
        self.boundary.vocab_size
    }

    /// Count of `ids` (length 0..=N); the empty gram counts every window.
    pub fn count(&self, ids: &[u32]) -> u64 {
        match ids.len() {
            0 => self.total,
            k if k <= self.order => self.tables[k - 1].get(&gram(ids)).copied().unwrap_or(0),
            _ => 0,
        }
    }

    /// Number of distinct stored grams of order `k`.
    pub fn distinct(&self, k: usize) -> usize {
        self.tables.get(k.wrapping_sub(1)).map_or(0, |t| t.len())
    }

    /// `(C(context·x) + 1) / (C(context) + V)`.
    ///
    /// # Panics
    /// If `context` is not exactly `N - 1` ids long.
    pub fn prob_next(&self, context: &[u32], x: u32) -> f64 {
        self.ln_prob_next(context, x).exp()
    }

    pub fn ln_prob_next(&self, context: &[u32], x: u32) -> f64 {
        assert_eq!(context.len(), self.order - 1, "context must hold N-1 ids");
        let mut full = [0u32; MAX_ORDER];
        full[..context.len()].copy_from_slice(context);
        full[context.len()] = x;
        let num = self.count(&full[..self.order]) as f64 + 1.0;
        let den = self.count(context) as f64 + self.vocab_size() as f64;
        num.ln() - den.ln()
    }

    /// Negative log-likelihood of one sequence, including its end marker.
    pub fn sequence_nll(&self, ids: &[u32]) -> f64 {
        let n = self.order;
        let mut window = [self.boundary.bos; MAX_ORDER];
        let mut nll = 0.0;
        for &x in ids.iter().chain(std::iter::once(&self.boundary.eos)) {
            nll -= self.ln_prob_next(&window[..n - 1], x);
            if n > 1 {
                window.copy_within(1..n - 1, 0);
                window[n - 2] = x;
            }
        }
        nll
    }

    /// Mean per-sequence cross-entropy in nats.
    pub fn cross_entropy<S: AsRef<[u32]> + Sync>(&self, corpus: &[S]) -> Result<f64> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let per: Vec<f64> = corpus
            .par_iter()
            .map(|s| self.sequence_nll(s.as_ref()))
            .collect();
        Ok(per.iter().sum::<f64>() / per.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const C: u32 = 0;
    const O: u32 = 1;

    fn boundary() -> Boundary {
        Boundary::new(2, 3, 4).unwrap()
    }

    #[test]
    fn unigram_counts() {
        let m = NGramModel::fit([[C, C]], 1, boundary()).unwrap();
        assert_eq!(m.count(&[C]), 2);
        assert_eq!(m.count(&[3]), 1);
        assert_eq!(m.count(&[]), 3);
        let p = m.prob_next(&[], C);
        assert!((p - 3.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn bigram_counts() {
        let m = NGramModel::fit([[C, O], [C, O]], 2, boundary()).unwrap();
        assert_eq!(m.count(&[C, O]), 2);
        assert_eq!(m.count(&[2, C]), 2);
        assert_eq!(m.count(&[O, 3]), 2);
        // continuation sums: the end marker is never a context
        assert_eq!(m.count(&[3]), 0);
        assert_eq!(m.count(&[C]), 2);
    }

    #[test]
    fn empty_corpus_is_uniform() {
        let empty: [Vec<u32>; 0] = [];
        let m = NGramModel::fit(empty, 3, boundary()).unwrap();
        for x in 0..4 {
            assert_eq!(m.prob_next(&[2, 2], x), 0.25);
        }
        let ce = m.cross_entropy(&[vec![C, O, C]]).unwrap();
        assert!((ce - 4.0 * 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn self_cross_entropy() {
        let m = NGramModel::fit([[C]], 1, boundary()).unwrap();
        let want = -2.0 * (2.0f64 / 6.0).ln();
        assert!((m.cross_entropy(&[[C]]).unwrap() - want).abs() < 1e-12);
        let none: [[u32; 1]; 0] = [];
        assert!(matches!(m.cross_entropy(&none), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn normalizes() {
        let corpus = [vec![C, O, C, C], vec![O, O], vec![C]];
        for n in 1..=MAX_ORDER {
            let m = NGramModel::fit(&corpus, n, boundary()).unwrap();
            for ctx in [[C, O, C, C], [2, 2, 2, C], [O, O, O, O]] {
                let s: f64 = (0..4).map(|x| m.prob_next(&ctx[..n - 1], x)).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(NGramModel::fit([[C]], 0, boundary()).is_err());
        assert!(NGramModel::fit([[C]], 6, boundary()).is_err());
        assert!(matches!(
            NGramModel::fit([[9]], 2, boundary()),
            Err(Error::InvalidId { id: 9, .. })
        ));
        assert!(Boundary::new(1, 1, 4).is_err());
    }

    #[test]
    fn boundary_from_vocabulary() {
        let b = Boundary::for_vocabulary(&Vocabulary::smirk());
        assert_eq!((b.bos, b.eos, b.vocab_size), (2, 3, 165));
        let b = Boundary::for_vocabulary(&Vocabulary::moses_like());
        assert_eq!((b.bos, b.eos, b.vocab_size), (26, 27, 28));
    }

    #[test]
    fn parallel_fit_matches() {
        let corpus: Vec<Vec<u32>> = (0..5000u32).map(|i| vec![i % 2, (i / 3) % 2, 0]).collect();
        for n in 1..=3 {
            let a = NGramModel::fit(&corpus, n, boundary()).unwrap();
            let b = NGramModel::fit_par(&corpus, n, boundary()).unwrap();
            assert_eq!(a, b);
        }
    }
}
