//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::HashMap;

use smirk_core::gpe::split_training_words;
use smirk_core::ngram::Boundary;
use smirk_core::Vocabulary;

/// Pair-merge training that recounts every pair of every word occurrence on
/// every iteration. Returns the learned `(left, right)` pairs.
pub fn naive_gpe(
    corpus: &[String],
    base: &Vocabulary,
    target: usize,
    min_freq: u64,
) -> Vec<(u32, u32)> {
    let mut words: Vec<Vec<u32>> = corpus
        .iter()
        .flat_map(|s| split_training_words(base, s).unwrap())
        .collect();
    let mut merges = Vec::new();
    while base.len() + merges.len() < target {
        let mut counts: HashMap<(u32, u32), u64> = HashMap::new();
        for w in &words {
            for p in w.windows(2) {
                *counts.entry((p[0], p[1])).or_default() += 1;
            }
        }
        let Some((&pair, &count)) = counts.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        else {
            break;
        };
        if count < min_freq {
            break;
        }
        let id = (base.len() + merges.len()) as u32;
        merges.push(pair);
        for w in &mut words {
            let mut out = Vec::with_capacity(w.len());
            let mut i = 0;
            while i < w.len() {
                if i + 1 < w.len() && (w[i], w[i + 1]) == pair {
                    out.push(id);
                    i += 2;
                } else {
                    out.push(w[i]);
                    i += 1;
                }
            }
            *w = out;
        }
    }
    merges
}

/// Order-`n` window counts over sequences padded with `n-1` start and `n-1` end
/// markers, by direct scanning.
pub fn padded_windows(corpus: &[Vec<u32>], n: usize, b: Boundary) -> HashMap<Vec<u32>, u64> {
    let mut out = HashMap::new();
    for s in corpus {
        let mut padded = vec![b.bos; n - 1];
        padded.extend(s);
        padded.extend(vec![b.eos; n - 1]);
        for w in padded.windows(n) {
            *out.entry(w.to_vec()).or_insert(0) += 1;
        }
    }
    out
}

/// All ways of filling the `slots` positions of `pattern` with ids below `v`.
fn fill(pattern: &[u32], slots: &[usize], v: u32, f: &mut dyn FnMut(&[u32])) {
    match slots.split_first() {
        None => f(pattern),
        Some((&s, rest)) => {
            let mut p = pattern.to_vec();
            for id in 0..v {
                p[s] = id;
                fill(&p, rest, v, f);
            }
        }
    }
}

/// Marginalized bidirectional distribution by enumerating every assignment
/// of the masked context slots.
pub fn enumerate_marginal(
    windows: &HashMap<Vec<u32>, u64>,
    v: u32,
    left: &[u32],
    right: &[u32],
    left_mask: &[bool],
    right_mask: &[bool],
) -> Vec<f64> {
    let lslots: Vec<usize> = (0..left.len()).filter(|&j| left_mask[j]).collect();
    let rslots: Vec<usize> = (0..right.len())
        .filter(|&j| right_mask[j])
        .map(|j| j + 1)
        .collect();
    let w: Vec<f64> = (0..v)
        .map(|x| {
            let mut fwd = left.to_vec();
            fwd.push(x);
            let mut bwd = vec![x];
            bwd.extend(right);
            let mut f = 0u64;
            fill(&fwd, &lslots, v, &mut |g| {
                f += windows.get(g).copied().unwrap_or(0)
            });
            let mut b = 0u64;
            fill(&bwd, &rslots, v, &mut |g| {
                b += windows.get(g).copied().unwrap_or(0)
            });
            (f as f64 + 1.0) * (b as f64 + 1.0)
        })
        .collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}
