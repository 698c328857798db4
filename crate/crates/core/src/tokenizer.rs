//! Dictionary tokenizers sharing one encode/decode interface.

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gpe::{word_ranges, MergeTable};
use crate::lexer::{lex_smirk, pretokenize_atomwise, GlyphKind, Mode};
use crate::vocab::{Scheme, Vocabulary};

/// Token ids with the character span each token covers in the source string.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Encoding {
    pub ids: Vec<u32>,
    pub offsets: Vec<Range<usize>>,
    /// Spans covered by `[UNK]` tokens, in order.
    pub unk_spans: Vec<Range<usize>>,
}

impl Encoding {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn unk_count(&self) -> usize {
        self.unk_spans.len()
    }
}

/// A vocabulary plus the lexing policy for its scheme.
///
/// Strict tokenizers reject input outside the vocabulary; lenient ones emit one
/// `[UNK]` per unknown unit.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    vocab: Vocabulary,
    strict: bool,
    merges: MergeTable,
}

impl Tokenizer {
    pub fn new(vocab: Vocabulary, strict: bool) -> Self {
        let merges = MergeTable::new(vocab.merges());
        Tokenizer {
            vocab,
            strict,
            merges,
        }
    }

    /// Builds a tokenizer that must run under `scheme`.
    pub fn with_scheme(scheme: Scheme, vocab: Vocabulary, strict: bool) -> Result<Self> {
        if vocab.scheme() != scheme {
            return Err(Error::InvalidConfig(format!(
                "vocabulary is for the {} scheme, not {scheme}",
                vocab.scheme()
            )));
        }
        Ok(Self::new(vocab, strict))
    }

    pub fn smirk() -> Self {
        Self::new(Vocabulary::smirk(), false)
    }

    pub fn char_ascii() -> Self {
        Self::new(Vocabulary::char_ascii(), false)
    }

    pub fn scheme(&self) -> Scheme {
        self.vocab.scheme()
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn set_strict(&mut self, strict: bool) {
        self.strict = strict;
    }

    pub fn encode(&self, input: &str) -> Result<Encoding> {
        self.encode_with(input, self.strict)
    }

    /// Encodes without strictness, whatever this tokenizer's setting.
    pub fn encode_permissive(&self, input: &str) -> Result<Encoding> {
        self.encode_with(input, false)
    }

    fn encode_with(&self, input: &str, strict: bool) -> Result<Encoding> {
        let mode = if strict {
            Mode::Strict
        } else {
            Mode::Permissive
        };
        let mut enc = Encoding::default();
        match self.scheme() {
            Scheme::Char => {
                for (i, c) in input.chars().enumerate() {
                    let mut buf = [0u8; 4];
                    self.push_unit(&mut enc, c.encode_utf8(&mut buf), i..i + 1, false, strict)?;
                }
            }
            Scheme::Atomwise => {
                for pt in pretokenize_atomwise(input, mode)? {
                    self.push_unit(&mut enc, pt.text, pt.span, pt.unmatched, strict)?;
                }
            }
            Scheme::Smirk => {
                for g in lex_smirk(input, mode)? {
                    let unmatched = g.kind == GlyphKind::Unmatched;
                    self.push_unit(&mut enc, g.text, g.span, unmatched, strict)?;
                }
            }
            Scheme::Gpe => {
                let glyphs = lex_smirk(input, mode)?;
                let mut base = Encoding::default();
                for g in &glyphs {
                    let unmatched = g.kind == GlyphKind::Unmatched;
                    self.push_unit(&mut base, g.text, g.span.clone(), unmatched, strict)?;
                }
                enc.unk_spans = base.unk_spans;
                for word in word_ranges(&glyphs) {
                    let mut pieces: Vec<(u32, Range<usize>)> = word
                        .map(|i| (base.ids[i], base.offsets[i].clone()))
                        .collect();
                    self.merges.apply_pieces(&mut pieces);
                    for (id, span) in pieces {
                        enc.ids.push(id);
                        enc.offsets.push(span);
                    }
                }
            }
        }
        Ok(enc)
    }

    fn push_unit(
        &self,
        enc: &mut Encoding,
        unit: &str,
        span: Range<usize>,
        unmatched: bool,
        strict: bool,
    ) -> Result<()> {
        let id = if unmatched {
            None
        } else {
            self.vocab.unit_id(unit)
        };
        let id = match id {
            Some(id) => id,
            None if strict => {
                return Err(Error::OutOfVocabulary {
                    unit: unit.to_string(),
                    span,
                })
            }
            None => {
                enc.unk_spans.push(span.clone());
                self.vocab.unk()
            }
        };
        enc.ids.push(id);
        enc.offsets.push(span);
        Ok(())
    }

    /// Concatenates token surfaces. Merge tokens expand to their glyphs and
    /// specials render as their surface form.
    pub fn decode(&self, ids: &[u32]) -> Result<String> {
        let mut out = String::with_capacity(ids.len() * 2);
        for &id in ids {
            out.push_str(self.surface(id)?);
        }
        Ok(out)
    }

    pub fn surface(&self, id: u32) -> Result<&str> {
        self.vocab.token(id).ok_or(Error::InvalidId {
            id,
            size: self.vocab.len(),
        })
    }

    pub fn surfaces(&self, ids: &[u32]) -> Result<Vec<&str>> {
        ids.iter().map(|&id| self.surface(id)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpe::{train, GpeTrainConfig};

    fn texts(tok: &Tokenizer, s: &str) -> Vec<String> {
        let enc = tok.encode(s).unwrap();
        tok.surfaces(&enc.ids)
            .unwrap()
            .into_iter()
            .map(str::to_string)
            .collect()
    }

    #[test]
    fn smirk_example() {
        let tok = Tokenizer::smirk();
        assert_eq!(
            texts(&tok, "OC[C@@H][OH]"),
            ["O", "C", "[", "C", "@@", "H", "]", "[", "O", "H", "]"]
        );
        let enc = tok.encode("OC[C@@H][OH]").unwrap();
        assert_eq!(enc.offsets[4], 4..6);
        assert!(enc.unk_spans.is_empty());
    }

    #[test]
    fn empty_input() {
        for tok in [Tokenizer::smirk(), Tokenizer::char_ascii()] {
            assert!(tok.encode("").unwrap().is_empty());
            assert_eq!(tok.decode(&[]).unwrap(), "");
        }
    }

    #[test]
    fn moses_like_fluoride_is_unknown() {
        let tok = Tokenizer::new(Vocabulary::moses_like(), false);
        let enc = tok.encode("[F-]").unwrap();
        assert_eq!(enc.ids, vec![tok.vocabulary().unk()]);
        assert_eq!(enc.unk_spans, vec![0..4]);
        assert_eq!(tok.decode(&enc.ids).unwrap(), "[UNK]");
        assert_eq!(texts(&tok, "CF"), ["C", "F"]);
    }

    #[test]
    fn strict_rejects_unknown() {
        let tok = Tokenizer::new(Vocabulary::moses_like(), true);
        match tok.encode("C[F-]") {
            Err(Error::OutOfVocabulary { unit, span }) => {
                assert_eq!(unit, "[F-]");
                assert_eq!(span, 1..5);
            }
            other => panic!("{other:?}"),
        }
        let smirk = Tokenizer::new(Vocabulary::smirk(), true);
        assert!(matches!(smirk.encode("C[te]"), Err(Error::Lex(_))));
    }

    #[test]
    fn permissive_smirk_emits_one_unk_per_bad_atom() {
        let tok = Tokenizer::smirk();
        let enc = tok.encode("OCc1cc[te]c1").unwrap();
        assert_eq!(enc.unk_spans, vec![6..10]);
        assert_eq!(enc.unk_count(), 1);
    }

    #[test]
    fn char_scheme() {
        let tok = Tokenizer::char_ascii();
        let enc = tok.encode("C[é]").unwrap();
        assert_eq!(enc.len(), 4);
        assert_eq!(enc.unk_spans, vec![2..3]);
        let enc = tok.encode("Cl").unwrap();
        assert_eq!(tok.decode(&enc.ids).unwrap(), "Cl");
    }

    #[test]
    fn round_trips() {
        let inputs = [
            "COC(=O)OC",
            "[Ga+]$[As-]",
            "c%12ccccc%12",
            "[13CH3:12]C.[Na+]",
        ];
        for tok in [Tokenizer::smirk(), Tokenizer::char_ascii()] {
            for s in inputs {
                let enc = tok.encode(s).unwrap();
                assert_eq!(tok.decode(&enc.ids).unwrap(), s);
            }
        }
    }

    #[test]
    fn invalid_id() {
        let tok = Tokenizer::smirk();
        assert!(matches!(
            tok.decode(&[9999]),
            Err(Error::InvalidId { id: 9999, .. })
        ));
    }

    #[test]
    fn gpe_offsets_cover_merged_glyphs() {
        let base = Vocabulary::smirk();
        let config = GpeTrainConfig {
            target_vocab_size: base.len() + 4,
            min_pair_frequency: 2,
        };
        let out = train(["CCO", "CCO", "CCN", "CC(=O)O"], &config, &base).unwrap();
        let tok = Tokenizer::with_scheme(Scheme::Gpe, out.vocabulary, true).unwrap();
        let enc = tok.encode("CCO").unwrap();
        assert!(enc.len() < 3);
        assert_eq!(enc.offsets.first().unwrap().start, 0);
        assert_eq!(enc.offsets.last().unwrap().end, 3);
        for w in enc.offsets.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
        assert_eq!(tok.decode(&enc.ids).unwrap(), "CCO");
        assert!(Tokenizer::with_scheme(Scheme::Gpe, base, true).is_err());
    }
}
