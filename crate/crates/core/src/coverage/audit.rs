use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::ProbeSet;
use crate::error::Result;
use crate::tokenizer::Tokenizer;

/// Failing molecules kept per report row.
pub const MAX_FAILING_EXAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub tokenizer: String,
    pub probe_set: String,
    pub total: usize,
    pub oov_count: usize,
    pub oov_percent: f64,
    /// First molecules, in probe order, whose encoding held `[UNK]`.
    pub failing: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    tokenizer: &'a str,
    probe_set: &'a str,
    total: usize,
    oov_count: usize,
    oov_percent: String,
}

impl AuditReport {
    /// CSV with columns tokenizer, probe_set, total, oov_count, oov_percent.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(CsvRow {
                tokenizer: &r.tokenizer,
                probe_set: &r.probe_set,
                total: r.total,
                oov_count: r.oov_count,
                oov_percent: format!("{:.2}", r.oov_percent),
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn row(&self, tokenizer: &str, probe_set: &str) -> Option<&AuditRow> {
        self.rows
            .iter()
            .find(|r| r.tokenizer == tokenizer && r.probe_set == probe_set)
    }
}

/// Encodes every probe with every tokenizer (permissively) and tabulates the
/// molecules that produced an unknown token. Input the lexer rejects outright
/// counts as out of vocabulary.
pub fn audit(tokenizers: &[(String, Tokenizer)], sets: &[ProbeSet]) -> AuditReport {
    let mut rows = Vec::with_capacity(tokenizers.len() * sets.len());
    for (name, tok) in tokenizers {
        for set in sets {
            let oov: Vec<bool> = set
                .molecules
                .par_iter()
                .map(|m| tok.encode_permissive(m).map_or(true, |e| e.unk_count() > 0))
                .collect();
            let oov_count = oov.iter().filter(|&&b| b).count();
            let failing = set
                .molecules
                .iter()
                .zip(&oov)
                .filter(|(_, &b)| b)
                .take(MAX_FAILING_EXAMPLES)
                .map(|(m, _)| m.clone())
                .collect();
            let total = set.molecules.len();
            rows.push(AuditRow {
                tokenizer: name.clone(),
                probe_set: set.name.clone(),
                total,
                oov_count,
                oov_percent: if total == 0 {
                    0.0
                } else {
                    100.0 * oov_count as f64 / total as f64
                },
                failing,
            });
        }
    }
    AuditReport { rows }
}
