//! Bidirectional estimates, mask marginalization and the information lost to
//! unknown tokens.
//!
//! A position's distribution combines the forward window ending at it and the
//! window starting at it:
//!
//! ```text
//! B(x) ∝ (C(left·x) + 1) / (C(left) + V) · (C(x·right) + 1) / (C(right) + V)
//! ```
//!
//! The denominators do not depend on `x` and cancel under normalization. Windows
//! running past the end of a sequence are padded with `N - 1` end markers; their
//! counts follow exactly from the stored windows ending at the first marker.
//! Masked positions are wildcards: a count with masked slots is the sum over every
//! id at those slots.

use std::collections::BTreeSet;

use rustc_hash::FxHashMap;

use super::model::{gram, Gram, NGramModel, MAX_ORDER};
use crate::error::{Error, Result};
use crate::tokenizer::Tokenizer;

const WILD: u32 = u32::MAX;

/// Masked slots of a context window. Bit `j` of `left` masks `left[j]`, bit `j`
/// of `right` masks `right[j]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WindowMask {
    pub left: u32,
    pub right: u32,
}

impl WindowMask {
    pub fn is_empty(&self) -> bool {
        self.left == 0 && self.right == 0
    }

    /// Masks every context slot of an order-`n` window.
    pub fn full(n: usize) -> Self {
        let bits = (1u32 << (n - 1)) - 1;
        WindowMask {
            left: bits,
            right: bits,
        }
    }
}

/// Positions of a sequence whose tokens are unknown to an evaluated tokenizer.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MaskSpec {
    indices: BTreeSet<usize>,
}

impl MaskSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, index: usize) -> bool {
        self.indices.insert(index)
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.contains(&index)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn max(&self) -> Option<usize> {
        self.indices.last().copied()
    }
}

impl FromIterator<usize> for MaskSpec {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        MaskSpec {
            indices: iter.into_iter().collect(),
        }
    }
}

/// Marks the positions of `reference`'s tokenization of `subject` that overlap
/// an `[UNK]` emitted by `evaluated` (run permissively).
pub fn mask_from_tokenizer(
    subject: &str,
    evaluated: &Tokenizer,
    reference: &Tokenizer,
) -> Result<MaskSpec> {
    let unk = evaluated.encode_permissive(subject)?.unk_spans;
    let reference = reference.encode_permissive(subject)?;
    Ok(reference
        .offsets
        .iter()
        .enumerate()
        .filter(|(_, span)| unk.iter().any(|u| u.start < span.end && span.start < u.end))
        .map(|(i, _)| i)
        .collect())
}

impl NGramModel {
    /// Count of an order-N gram over right-padded sequences, with the slots in
    /// `shape` summed over all ids.
    fn padded_count(&self, g: &Gram, shape: u32) -> u64 {
        let table = self.projections[shape as usize].get_or_init(|| self.build_projection(shape));
        let mut key = *g;
        for (j, slot) in key.iter_mut().enumerate().take(self.order) {
            if shape & (1 << j) != 0 {
                *slot = WILD;
            }
        }
        table.get(&key).copied().unwrap_or(0)
    }

    fn build_projection(&self, shape: u32) -> FxHashMap<Gram, u64> {
        if shape != 0 {
            let base = self.projections[0].get_or_init(|| self.build_projection(0));
            let mut out: FxHashMap<Gram, u64> = FxHashMap::default();
            for (g, &c) in base {
                let mut key = *g;
                for (j, slot) in key.iter_mut().enumerate().take(self.order) {
                    if shape & (1 << j) != 0 {
                        *slot = WILD;
                    }
                }
                *out.entry(key).or_insert(0) += c;
            }
            return out;
        }
        // Stored windows end at the first end marker; the windows ending at the
        // further padding markers are those windows shifted left.
        let n = self.order;
        let eos = self.boundary.eos;
        let mut out = self.tables[n - 1].clone();
        for (g, &c) in &self.tables[n - 1] {
            if g[n - 1] != eos {
                continue;
            }
            for s in 1..n.saturating_sub(1) {
                let mut shifted = [eos; MAX_ORDER];
                shifted[..n - s].copy_from_slice(&g[s..n]);
                *out.entry(gram(&shifted[..n])).or_insert(0) += c;
            }
        }
        out
    }

    fn check_window(&self, left: &[u32], right: &[u32]) {
        assert_eq!(left.len(), self.order - 1, "left context must hold N-1 ids");
        assert_eq!(
            right.len(),
            self.order - 1,
            "right context must hold N-1 ids"
        );
    }

    /// Distribution over all `V` ids for the position between `left` and
    /// `right`, with the masked slots marginalized.
    pub fn marginalized_distribution(
        &self,
        left: &[u32],
        right: &[u32],
        mask: WindowMask,
    ) -> Vec<f64> {
        self.check_window(left, right);
        let n = self.order;
        let mut fwd = [0u32; MAX_ORDER];
        fwd[..n - 1].copy_from_slice(left);
        let mut bwd = [0u32; MAX_ORDER];
        bwd[1..n].copy_from_slice(right);
        let fwd_shape = mask.left;
        let bwd_shape = mask.right << 1;

        let v = self.vocab_size() as u32;
        let mut weights: Vec<f64> = (0..v)
            .map(|x| {
                fwd[n - 1] = x;
                bwd[0] = x;
                let f = self.padded_count(&fwd, fwd_shape) as f64 + 1.0;
                let b = self.padded_count(&bwd, bwd_shape) as f64 + 1.0;
                f * b
            })
            .collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        weights
    }

    pub fn bidirectional_distribution(&self, left: &[u32], right: &[u32]) -> Vec<f64> {
        self.marginalized_distribution(left, right, WindowMask::default())
    }

    pub fn prob_bidirectional(&self, left: &[u32], right: &[u32], x: u32) -> f64 {
        self.bidirectional_distribution(left, right)[x as usize]
    }

    pub fn prob_marginalized(&self, left: &[u32], right: &[u32], mask: WindowMask, x: u32) -> f64 {
        self.marginalized_distribution(left, right, mask)[x as usize]
    }

    /// Context window of position `i`, padded with start and end markers.
    pub fn window(&self, ids: &[u32], i: usize) -> (Vec<u32>, Vec<u32>) {
        let n = self.order;
        let b = self.boundary;
        let left = (0..n - 1)
            .map(|j| (i + j).checked_sub(n - 1).map_or(b.bos, |p| ids[p]))
            .collect();
        let right = (1..n)
            .map(|j| ids.get(i + j).copied().unwrap_or(b.eos))
            .collect();
        (left, right)
    }

    /// Mask slots of position `i`'s window, excluding `i` itself.
    pub fn window_mask(&self, i: usize, mask: &MaskSpec) -> WindowMask {
        let n = self.order;
        let mut out = WindowMask::default();
        for j in 0..n - 1 {
            if let Some(p) = (i + j).checked_sub(n - 1) {
                if mask.contains(p) {
                    out.left |= 1 << j;
                }
            }
            if mask.contains(i + j + 1) {
                out.right |= 1 << j;
            }
        }
        out
    }

    fn check_mask(ids: &[u32], mask: &MaskSpec) -> Result<()> {
        match mask.max() {
            Some(m) if m >= ids.len() => Err(Error::InvalidConfig(format!(
                "mask position {m} is outside a sequence of {} tokens",
                ids.len()
            ))),
            _ => Ok(()),
        }
    }

    /// Per-position `D_KL(B ‖ B′)` in nats. Positions whose window holds no
    /// masked slot are exactly zero.
    pub fn position_losses(&self, ids: &[u32], mask: &MaskSpec) -> Result<Vec<f64>> {
        Self::check_mask(ids, mask)?;
        Ok((0..ids.len())
            .map(|i| {
                let wm = self.window_mask(i, mask);
                if wm.is_empty() {
                    return 0.0;
                }
                let (left, right) = self.window(ids, i);
                let b = self.bidirectional_distribution(&left, &right);
                let bm = self.marginalized_distribution(&left, &right, wm);
                b.iter().zip(&bm).map(|(p, q)| p * (p.ln() - q.ln())).sum()
            })
            .collect())
    }

    /// Information lost to the masked positions: the sum of
    /// [`NGramModel::position_losses`].
    pub fn info_loss(&self, ids: &[u32], mask: &MaskSpec) -> Result<f64> {
        Ok(self.position_losses(ids, mask)?.iter().sum())
    }

    /// `ln[B(1 - B′) / (B′(1 - B))]` for every candidate id at position `i`.
    pub fn log_odds_row(&self, ids: &[u32], mask: &MaskSpec, i: usize) -> Result<Vec<f64>> {
        Self::check_mask(ids, mask)?;
        if i >= ids.len() {
            return Err(Error::InvalidConfig(format!(
                "position {i} is outside a sequence of {} tokens",
                ids.len()
            )));
        }
        let (left, right) = self.window(ids, i);
        let wm = self.window_mask(i, mask);
        let b = self.bidirectional_distribution(&left, &right);
        if wm.is_empty() {
            return Ok(vec![0.0; b.len()]);
        }
        let bm = self.marginalized_distribution(&left, &right, wm);
        Ok(b.iter().zip(&bm).map(|(&p, &q)| log_odds(p, q)).collect())
    }

    pub fn log_odds(&self, ids: &[u32], mask: &MaskSpec, i: usize, x: u32) -> Result<f64> {
        let row = self.log_odds_row(ids, mask, i)?;
        row.get(x as usize).copied().ok_or(Error::InvalidId {
            id: x,
            size: row.len(),
        })
    }
}

/// Log odds ratio of `b` against `b_marg`.
pub fn log_odds(b: f64, b_marg: f64) -> f64 {
    (b.ln() - (1.0 - b).ln()) - (b_marg.ln() - (1.0 - b_marg).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ngram::Boundary;

    const A: u32 = 0;
    const B: u32 = 1;

    fn boundary() -> Boundary {
        Boundary::new(2, 3, 4).unwrap()
    }

    /// Counts `g` by scanning each padded sequence.
    fn scan_count(corpus: &[Vec<u32>], n: usize, g: &[u32]) -> u64 {
        let b = boundary();
        corpus
            .iter()
            .map(|s| {
                let mut padded = vec![b.bos; n - 1];
                padded.extend(s);
                padded.extend(vec![b.eos; n - 1]);
                padded.windows(n).filter(|w| *w == g).count() as u64
            })
            .sum()
    }

    #[test]
    fn empty_model_is_uniform() {
        let empty: [Vec<u32>; 0] = [];
        let m = NGramModel::fit(empty, 2, boundary()).unwrap();
        for x in 0..4 {
            assert_eq!(m.prob_bidirectional(&[A], &[B], x), 0.25);
        }
    }

    #[test]
    fn symmetric_corpus_by_hand() {
        // C O C → A B A
        let corpus = vec![vec![A, B, A]];
        let m = NGramModel::fit(&corpus, 2, boundary()).unwrap();
        let w: Vec<f64> = (0..4)
            .map(|x| {
                let f = scan_count(&corpus, 2, &[A, x]) as f64 + 1.0;
                let b = scan_count(&corpus, 2, &[x, A]) as f64 + 1.0;
                f * b
            })
            .collect();
        let z: f64 = w.iter().sum();
        // B follows and precedes A; the start marker precedes it and the end
        // marker follows it
        assert_eq!(w, vec![1.0, 4.0, 2.0, 2.0]);
        for x in 0..4 {
            assert!((m.prob_bidirectional(&[A], &[A], x) - w[x as usize] / z).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_mask_is_bitwise_identical() {
        let corpus = vec![vec![A, B], vec![A, A]];
        let m = NGramModel::fit(&corpus, 3, boundary()).unwrap();
        assert_eq!(
            m.marginalized_distribution(&[2, A], &[B, 3], WindowMask::default()),
            m.bidirectional_distribution(&[2, A], &[B, 3])
        );
    }

    #[test]
    fn masked_right_neighbour_matches_enumeration() {
        let corpus = vec![vec![A, B], vec![A, A]];
        let m = NGramModel::fit(&corpus, 2, boundary()).unwrap();
        let mask = WindowMask { left: 0, right: 1 };
        let got = m.marginalized_distribution(&[2], &[B], mask);
        let w: Vec<f64> = (0..4)
            .map(|x| {
                let f = scan_count(&corpus, 2, &[2, x]) as f64 + 1.0;
                let b: u64 = (0..4).map(|y| scan_count(&corpus, 2, &[x, y])).sum();
                f * (b as f64 + 1.0)
            })
            .collect();
        let z: f64 = w.iter().sum();
        for x in 0..4 {
            assert!((got[x] - w[x] / z).abs() < 1e-12);
        }
    }

    #[test]
    fn fully_masked_window_is_positional_marginal() {
        let corpus = vec![vec![A, B, B], vec![B], vec![A, A, B, A]];
        let m = NGramModel::fit(&corpus, 3, boundary()).unwrap();
        let got = m.marginalized_distribution(&[A, A], &[A, A], WindowMask::full(3));
        let last: Vec<u64> = (0..4)
            .map(|x| {
                (0..16)
                    .map(|c| scan_count(&corpus, 3, &[c / 4, c % 4, x]))
                    .sum()
            })
            .collect();
        let first: Vec<u64> = (0..4)
            .map(|x| {
                (0..16)
                    .map(|c| scan_count(&corpus, 3, &[x, c / 4, c % 4]))
                    .sum()
            })
            .collect();
        let w: Vec<f64> = (0..4)
            .map(|x| (last[x] as f64 + 1.0) * (first[x] as f64 + 1.0))
            .collect();
        let z: f64 = w.iter().sum();
        for x in 0..4 {
            assert!((got[x] - w[x] / z).abs() < 1e-12);
        }
    }

    #[test]
    fn info_loss_basics() {
        let corpus = vec![vec![A, B, A], vec![B, B, A], vec![A, A]];
        let m = NGramModel::fit(&corpus, 2, boundary()).unwrap();
        let seq = [A, B, A];
        assert_eq!(m.info_loss(&seq, &MaskSpec::new()).unwrap(), 0.0);
        let mask: MaskSpec = [1].into_iter().collect();
        let losses = m.position_losses(&seq, &mask).unwrap();
        // position 1's window holds no other masked slot
        assert_eq!(losses[1], 0.0);
        assert!(losses[0] > 0.0 && losses[2] > 0.0);
        assert!(m.info_loss(&seq, &[5].into_iter().collect()).is_err());
    }

    #[test]
    fn log_odds_signs() {
        assert_eq!(log_odds(0.3, 0.3), 0.0);
        assert!((log_odds(0.2, 0.6) + log_odds(0.6, 0.2)).abs() < 1e-15);
        assert!(log_odds(0.6, 0.2) > 0.0);
        let corpus = vec![vec![A, B, A]];
        let m = NGramModel::fit(&corpus, 2, boundary()).unwrap();
        let row = m.log_odds_row(&[A, B, A], &MaskSpec::new(), 1).unwrap();
        assert!(row.iter().all(|&v| v == 0.0));
        // masking the neighbours hides the evidence for B in the middle
        let mask: MaskSpec = [0, 2].into_iter().collect();
        assert!(m.log_odds(&[A, B, A], &mask, 1, B).unwrap() > 0.0);
    }

    #[test]
    fn masks_from_tokenizers() {
        use crate::vocab::Vocabulary;
        let chars = Tokenizer::char_ascii();
        let moses = Tokenizer::new(Vocabulary::moses_like(), true);
        let mask = mask_from_tokenizer("[F-]", &moses, &chars).unwrap();
        assert_eq!(mask.iter().collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        let mask = mask_from_tokenizer("C[Cu+3]C", &moses, &chars).unwrap();
        assert_eq!(mask.iter().collect::<Vec<_>>(), vec![1, 2, 3, 4, 5, 6]);
        assert!(mask_from_tokenizer("[Cu+3]", &Tokenizer::smirk(), &chars)
            .unwrap()
            .is_empty());
        assert!(mask_from_tokenizer("CC#N", &chars, &chars)
            .unwrap()
            .is_empty());
    }
}
