//! Tokenizer usage statistics and the fertility/loss regression.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::tokenizer::Tokenizer;

/// Mean number of tokens per molecule, unknown tokens included.
pub fn fertility<S: AsRef<str> + Sync>(tok: &Tokenizer, corpus: &[S]) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let lengths: Vec<usize> = corpus
        .par_iter()
        .map(|s| tok.encode(s.as_ref()).map(|e| e.len()))
        .collect::<Result<_>>()?;
    Ok(lengths.iter().sum::<usize>() as f64 / corpus.len() as f64)
}

/// Token frequencies over a corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TokenStats {
    /// Occurrences per token id.
    pub counts: Vec<u64>,
    pub total: u64,
    /// `−Σ p ln p` over the used tokens, in nats.
    pub entropy: f64,
    /// Entropy divided by `ln V`.
    pub normalized_entropy: f64,
    pub tokens_used: usize,
    pub vocab_size: usize,
}

/// One row of the rank/frequency curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UsageRow {
    pub rank: usize,
    pub id: u32,
    pub count: u64,
    pub frequency: f64,
    pub information_nats: f64,
}

impl TokenStats {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total: u64 = counts.iter().sum();
        let entropy = if total == 0 {
            0.0
        } else {
            let t = total as f64;
            -counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / t;
                    p * p.ln()
                })
                .sum::<f64>()
        };
        let vocab_size = counts.len();
        let normalized_entropy = if vocab_size > 1 {
            entropy / (vocab_size as f64).ln()
        } else {
            0.0
        };
        TokenStats {
            tokens_used: counts.iter().filter(|&&c| c > 0).count(),
            counts,
            total,
            entropy,
            normalized_entropy,
            vocab_size,
        }
    }

    pub fn frequency(&self, id: u32) -> f64 {
        match self.total {
            0 => 0.0,
            t => self
                .counts
                .get(id as usize)
                .map_or(0.0, |&c| c as f64 / t as f64),
        }
    }

    /// `−ln p`; infinite for unused tokens.
    pub fn information(&self, id: u32) -> f64 {
        -self.frequency(id).ln()
    }

    /// Used tokens from most to least frequent (ties by id).
    pub fn usage_curve(&self) -> Vec<UsageRow> {
        let mut used: Vec<(u32, u64)> = self
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i as u32, c))
            .collect();
        used.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        used.into_iter()
            .enumerate()
            .map(|(rank, (id, count))| UsageRow {
                rank: rank + 1,
                id,
                count,
                frequency: self.frequency(id),
                information_nats: self.information(id),
            })
            .collect()
    }

    /// Surprise of a token seen `min_occurrences` times in this corpus.
    pub fn rare_token_threshold(&self, min_occurrences: u64) -> f64 {
        rare_token_threshold(min_occurrences, self.total)
    }

    /// CSV with columns rank, token, count, frequency, information_nats.
    pub fn write_csv<W: Write>(&self, tok: &Tokenizer, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row<'a> {
            rank: usize,
            token: &'a str,
            count: u64,
            frequency: f64,
            information_nats: f64,
        }
        let mut w = csv::Writer::from_writer(out);
        for r in self.usage_curve() {
            w.serialize(Row {
                rank: r.rank,
                token: tok.surface(r.id)?,
                count: r.count,
                frequency: r.frequency,
                information_nats: r.information_nats,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// JSON summary: entropy, normalized_entropy, tokens_used, V.
    pub fn summary_json(&self) -> String {
        serde_json::json!({
            "entropy": self.entropy,
            "normalized_entropy": self.normalized_entropy,
            "tokens_used": self.tokens_used,
            "V": self.vocab_size,
            "total_tokens": self.total,
        })
        .to_string()
    }
}

pub fn token_stats<S: AsRef<str> + Sync>(tok: &Tokenizer, corpus: &[S]) -> Result<TokenStats> {
    let v = tok.vocabulary().len();
    let counts = corpus
        .par_iter()
        .try_fold(
            || vec![0u64; v],
            |mut acc, s| {
                for id in tok.encode(s.as_ref())?.ids {
                    acc[id as usize] += 1;
                }
                Ok::<_, Error>(acc)
            },
        )
        .try_reduce(
            || vec![0u64; v],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    Ok(TokenStats::from_counts(counts))
}

/// `−ln(min_occurrences / total_tokens)`: the surprise below which a token has
/// been seen at least `min_occurrences` times.
pub fn rare_token_threshold(min_occurrences: u64, total_tokens: u64) -> f64 {
    (total_tokens as f64).ln() - (min_occurrences as f64).ln()
}

/// Ordinary least squares fit of `y = intercept + slope · x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub standard_error: f64,
    /// Two-sided p-value for a zero slope.
    pub p_value: f64,
    pub n: usize,
}

/// Fits cross-entropy against fertility over `(fertility, loss)` points.
pub fn fit_fertility_loss(points: &[(f64, f64)]) -> Result<RegressionFit> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Degenerate(format!(
            "need at least 3 points, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all x values are equal".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let df = nf - 2.0;
    let standard_error = (ssr / df / sxx).sqrt();
    let p_value = if standard_error == 0.0 {
        if slope == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        let t = (slope / standard_error).abs();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        2.0 * dist.sf(t)
    };
    Ok(RegressionFit {
        slope,
        intercept,
        standard_error,
        p_value,
        n,
    })
}
