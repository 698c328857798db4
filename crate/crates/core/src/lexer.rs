//! Lexical decomposition of SMILES strings.
//!
//! Two layers are provided:
//!
//! * [`pretokenize_atomwise`] splits a string into atom-level pre-tokens with the
//!   regular expression used by most atom-wise chemistry tokenizers. Bracket atoms
//!   such as `[C@@H]` stay whole.
//! * [`lex_smirk`] additionally breaks every bracket atom into its constituent
//!   glyphs (`[`, `C`, `@@`, `H`, `]`) and splits `%NN` ring closures digit-wise, so
//!   the output is drawn from a small, fixed alphabet.
//!
//! All spans are half-open character ranges into the input. Joining the emitted
//! texts always reproduces the input exactly.

use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;

use crate::elements;
use crate::error::LexError;

static ATOMWISE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"\[[^\]]+]|Br?|Cl?|N|O|S|P|F|I|b|c|n|o|s|p|\(|\)|\.|=|#|-|\+|\\|/|:|~|@|\?|>|\*|\$|%[0-9]{2}|[0-9]",
    )
    .expect("atom-wise pattern is valid")
});

/// Chirality class markers that follow a single `@` inside brackets.
pub const CHIRAL_CLASSES: [&str; 5] = ["TH", "AL", "SP", "TB", "OH"];

/// How characters that match no lexical rule are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Unmatched input is an error.
    #[default]
    Strict,
    /// Unmatched input becomes a sentinel unit that tokenizers map to `[UNK]`.
    Permissive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreTokenClass {
    BracketAtom,
    OrganicAtom,
    Bond,
    RingClosure,
    Structural,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreToken<'a> {
    pub text: &'a str,
    pub span: Range<usize>,
    pub class: PreTokenClass,
    /// Set for characters no rule matched (permissive mode only).
    pub unmatched: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlyphKind {
    Element,
    AromaticElement,
    Digit,
    Bond,
    RingMarker,
    BracketOpen,
    BracketClose,
    ParenOpen,
    ParenClose,
    Chirality,
    ChargeSign,
    Hydrogen,
    Wildcard,
    Dot,
    Special,
    /// Input outside the glyph alphabet (permissive mode only).
    Unmatched,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Glyph<'a> {
    pub text: &'a str,
    pub kind: GlyphKind,
    pub span: Range<usize>,
}

/// Byte offset to character index conversion.
struct CharIndex {
    starts: Option<Vec<usize>>,
}

impl CharIndex {
    fn new(input: &str) -> Self {
        let starts = (!input.is_ascii()).then(|| input.char_indices().map(|(i, _)| i).collect());
        CharIndex { starts }
    }

    fn at(&self, byte: usize) -> usize {
        match &self.starts {
            None => byte,
            Some(starts) => match starts.binary_search(&byte) {
                Ok(i) | Err(i) => i,
            },
        }
    }

    fn span(&self, bytes: Range<usize>) -> Range<usize> {
        self.at(bytes.start)..self.at(bytes.end)
    }
}

fn classify(text: &str) -> PreTokenClass {
    match text.as_bytes()[0] {
        b'[' => PreTokenClass::BracketAtom,
        b'%' | b'0'..=b'9' => PreTokenClass::RingClosure,
        b'-' | b'=' | b'#' | b'$' | b':' | b'/' | b'\\' | b'~' => PreTokenClass::Bond,
        b'(' | b')' | b'.' | b'+' | b'@' | b'?' | b'>' => PreTokenClass::Structural,
        _ => PreTokenClass::OrganicAtom,
    }
}

/// Splits `input` into atom-level pre-tokens.
///
/// In strict mode any character outside the pattern is an error; in permissive mode
/// it becomes a one-character structural pre-token flagged `unmatched`. An opening
/// bracket without a matching close is reported as [`LexError::UnterminatedBracket`]
/// in strict mode.
pub fn pretokenize_atomwise(input: &str, mode: Mode) -> Result<Vec<PreToken<'_>>, LexError> {
    let index = CharIndex::new(input);
    let mut out = Vec::new();
    let mut cursor = 0;
    for m in ATOMWISE.find_iter(input) {
        gap(input, cursor..m.start(), &index, mode, &mut out)?;
        out.push(PreToken {
            text: m.as_str(),
            span: index.span(m.range()),
            class: classify(m.as_str()),
            unmatched: false,
        });
        cursor = m.end();
    }
    gap(input, cursor..input.len(), &index, mode, &mut out)?;
    Ok(out)
}

fn gap<'a>(
    input: &'a str,
    range: Range<usize>,
    index: &CharIndex,
    mode: Mode,
    out: &mut Vec<PreToken<'a>>,
) -> Result<(), LexError> {
    for (offset, ch) in input[range.clone()].char_indices() {
        let start = range.start + offset;
        let end = start + ch.len_utf8();
        if mode == Mode::Strict {
            return Err(if ch == '[' {
                match input[end..].find(']') {
                    Some(0) => LexError::EmptyBracket {
                        span: index.span(start..end + 1),
                    },
                    _ => LexError::UnterminatedBracket {
                        span: index.span(start..input.len()),
                    },
                }
            } else {
                LexError::Unmatched {
                    text: ch.to_string(),
                    span: index.span(start..end),
                }
            });
        }
        out.push(PreToken {
            text: &input[start..end],
            span: index.span(start..end),
            class: PreTokenClass::Structural,
            unmatched: true,
        });
    }
    Ok(())
}

/// Scans the inside of a bracket atom following OpenSMILES order:
/// isotope, symbol, chirality, hydrogen count, charge, atom class.
///
/// Returns byte ranges relative to `text` with their kinds, or the byte offset at
/// which no rule applied.
fn scan_bracket(text: &str) -> Result<Vec<(Range<usize>, GlyphKind)>, usize> {
    let bytes = text.as_bytes();
    let n = bytes.len();
    let mut out = Vec::with_capacity(8);
    let mut pos = 0;
    let digits = |pos: &mut usize, out: &mut Vec<(Range<usize>, GlyphKind)>| {
        while *pos < n && bytes[*pos].is_ascii_digit() {
            out.push((*pos..*pos + 1, GlyphKind::Digit));
            *pos += 1;
        }
    };

    if bytes.first() != Some(&b'[') {
        return Err(0);
    }
    out.push((0..1, GlyphKind::BracketOpen));
    pos += 1;

    digits(&mut pos, &mut out);

    // Symbol, longest match first.
    match text.get(pos..pos + 2) {
        Some(sym) if elements::is_element(sym) => {
            out.push((pos..pos + 2, GlyphKind::Element));
            pos += 2;
        }
        Some("se" | "as") => {
            out.push((pos..pos + 2, GlyphKind::AromaticElement));
            pos += 2;
        }
        _ => {
            match text.get(pos..pos + 1) {
                Some("*") => out.push((pos..pos + 1, GlyphKind::Wildcard)),
                Some(s) if elements::is_element(s) => out.push((pos..pos + 1, GlyphKind::Element)),
                Some(s) if elements::is_aromatic(s) => {
                    out.push((pos..pos + 1, GlyphKind::AromaticElement))
                }
                _ => return Err(pos),
            }
            pos += 1;
        }
    }

    if pos < n && bytes[pos] == b'@' {
        if pos + 1 < n && bytes[pos + 1] == b'@' {
            out.push((pos..pos + 2, GlyphKind::Chirality));
            pos += 2;
        } else {
            out.push((pos..pos + 1, GlyphKind::Chirality));
            pos += 1;
            if let Some(class) = text.get(pos..pos + 2) {
                if CHIRAL_CLASSES.contains(&class) {
                    out.push((pos..pos + 2, GlyphKind::Chirality));
                    pos += 2;
                    digits(&mut pos, &mut out);
                }
            }
        }
    }

    if pos < n && bytes[pos] == b'H' {
        out.push((pos..pos + 1, GlyphKind::Hydrogen));
        pos += 1;
        digits(&mut pos, &mut out);
    }

    let mut signed = false;
    while pos < n && matches!(bytes[pos], b'+' | b'-') {
        out.push((pos..pos + 1, GlyphKind::ChargeSign));
        pos += 1;
        signed = true;
    }
    if signed {
        digits(&mut pos, &mut out);
    }

    if pos < n && bytes[pos] == b':' {
        out.push((pos..pos + 1, GlyphKind::Special));
        pos += 1;
        digits(&mut pos, &mut out);
    }

    if pos + 1 == n && bytes[pos] == b']' {
        out.push((pos..pos + 1, GlyphKind::BracketClose));
        Ok(out)
    } else {
        Err(pos)
    }
}

/// Decomposes a bracket-atom pre-token into glyphs.
///
/// Digits (isotope, hydrogen count, charge magnitude, atom class) are emitted one
/// glyph per digit.
pub fn decompose_bracket<'a>(pretoken: &PreToken<'a>) -> Result<Vec<Glyph<'a>>, LexError> {
    let text = pretoken.text;
    let index = CharIndex::new(text);
    let base = pretoken.span.start;
    match scan_bracket(text) {
        Ok(parts) => Ok(parts
            .into_iter()
            .map(|(range, kind)| {
                let span = index.span(range.clone());
                Glyph {
                    text: &text[range],
                    kind,
                    span: base + span.start..base + span.end,
                }
            })
            .collect()),
        Err(at) => {
            let end = text[at..]
                .chars()
                .next()
                .map_or(text.len(), |c| at + c.len_utf8());
            let span = index.span(at..end);
            Err(LexError::Decompose {
                atom: text.to_string(),
                span: base + span.start..base + span.end,
            })
        }
    }
}

fn simple_kind(text: &str) -> Option<GlyphKind> {
    Some(match text {
        "b" | "c" | "n" | "o" | "p" | "s" => GlyphKind::AromaticElement,
        "*" => GlyphKind::Wildcard,
        "(" => GlyphKind::ParenOpen,
        ")" => GlyphKind::ParenClose,
        "." => GlyphKind::Dot,
        "@" => GlyphKind::Chirality,
        "+" => GlyphKind::ChargeSign,
        ">" => GlyphKind::Special,
        "%" => GlyphKind::RingMarker,
        "-" | "=" | "#" | "$" | ":" | "/" | "\\" | "~" => GlyphKind::Bond,
        t if t.len() == 1 && t.as_bytes()[0].is_ascii_digit() => GlyphKind::Digit,
        t if elements::is_element(t) => GlyphKind::Element,
        _ => return None,
    })
}

/// Splits `input` into smirk glyphs: atom-wise pre-tokenization followed by
/// bracket decomposition and digit-wise splitting of `%NN` ring closures.
///
/// In permissive mode, characters outside the alphabet become single
/// [`GlyphKind::Unmatched`] glyphs and a bracket atom that cannot be decomposed
/// becomes one unmatched glyph covering the whole atom.
pub fn lex_smirk(input: &str, mode: Mode) -> Result<Vec<Glyph<'_>>, LexError> {
    let pretokens = pretokenize_atomwise(input, mode)?;
    let mut out = Vec::with_capacity(pretokens.len() + 4);
    for pt in pretokens {
        if pt.unmatched {
            out.push(Glyph {
                text: pt.text,
                kind: GlyphKind::Unmatched,
                span: pt.span,
            });
            continue;
        }
        match pt.class {
            PreTokenClass::BracketAtom => match decompose_bracket(&pt) {
                Ok(glyphs) => out.extend(glyphs),
                Err(err) if mode == Mode::Strict => return Err(err),
                Err(_) => out.push(Glyph {
                    text: pt.text,
                    kind: GlyphKind::Unmatched,
                    span: pt.span,
                }),
            },
            PreTokenClass::RingClosure if pt.text.len() == 3 => {
                let s = pt.span.start;
                out.push(Glyph {
                    text: &pt.text[..1],
                    kind: GlyphKind::RingMarker,
                    span: s..s + 1,
                });
                out.push(Glyph {
                    text: &pt.text[1..2],
                    kind: GlyphKind::Digit,
                    span: s + 1..s + 2,
                });
                out.push(Glyph {
                    text: &pt.text[2..],
                    kind: GlyphKind::Digit,
                    span: s + 2..s + 3,
                });
            }
            _ => match simple_kind(pt.text) {
                Some(kind) => out.push(Glyph {
                    text: pt.text,
                    kind,
                    span: pt.span,
                }),
                None if mode == Mode::Strict => {
                    return Err(LexError::Unmatched {
                        text: pt.text.to_string(),
                        span: pt.span,
                    })
                }
                None => out.push(Glyph {
                    text: pt.text,
                    kind: GlyphKind::Unmatched,
                    span: pt.span,
                }),
            },
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atomwise(s: &str) -> Vec<&str> {
        pretokenize_atomwise(s, Mode::Strict)
            .unwrap()
            .into_iter()
            .map(|p| p.text)
            .collect()
    }

    fn smirk(s: &str) -> Vec<&str> {
        let glyphs = lex_smirk(s, Mode::Strict).unwrap();
        let texts: Vec<&str> = glyphs.iter().map(|g| g.text).collect();
        assert_eq!(texts.concat(), s);
        texts
    }

    #[test]
    fn atomwise_examples() {
        assert_eq!(
            atomwise("COC(=O)OC"),
            ["C", "O", "C", "(", "=", "O", ")", "O", "C"]
        );
        assert_eq!(atomwise("[Ga+]$[As-]"), ["[Ga+]", "$", "[As-]"]);
        assert!(atomwise("").is_empty());
        assert_eq!(atomwise("ClCBr"), ["Cl", "C", "Br"]);
        assert_eq!(atomwise("Cn"), ["C", "n"]);
        assert_eq!(
            atomwise("c%12ccccc%12"),
            ["c", "%12", "c", "c", "c", "c", "c", "%12"]
        );
    }

    #[test]
    fn atomwise_classes_and_spans() {
        let pts = pretokenize_atomwise("C[NH4+]=1", Mode::Strict).unwrap();
        let classes: Vec<_> = pts.iter().map(|p| p.class).collect();
        assert_eq!(
            classes,
            [
                PreTokenClass::OrganicAtom,
                PreTokenClass::BracketAtom,
                PreTokenClass::Bond,
                PreTokenClass::RingClosure
            ]
        );
        assert_eq!(pts[1].span, 1..7);
        assert_eq!(pts[3].span, 8..9);
    }

    #[test]
    fn unterminated_bracket() {
        let err = pretokenize_atomwise("CC[C@@H", Mode::Strict).unwrap_err();
        assert_eq!(err, LexError::UnterminatedBracket { span: 2..7 });
        let err = pretokenize_atomwise("C[]C", Mode::Strict).unwrap_err();
        assert_eq!(err, LexError::EmptyBracket { span: 1..3 });
    }

    #[test]
    fn permissive_flags_unmatched() {
        let pts = pretokenize_atomwise("CKC", Mode::Permissive).unwrap();
        assert_eq!(pts.len(), 3);
        assert!(pts[1].unmatched);
        assert_eq!(pts[1].text, "K");
        assert!(pretokenize_atomwise("CKC", Mode::Strict).is_err());

        let pts = pretokenize_atomwise("C[C", Mode::Permissive).unwrap();
        assert_eq!(
            pts.iter().map(|p| p.text).collect::<Vec<_>>(),
            ["C", "[", "C"]
        );
        assert!(pts[1].unmatched);
    }

    #[test]
    fn bracket_decomposition() {
        assert_eq!(smirk("[C@@H]"), ["[", "C", "@@", "H", "]"]);
        assert_eq!(smirk("[12C]"), ["[", "1", "2", "C", "]"]);
        assert_eq!(smirk("[Cn]"), ["[", "Cn", "]"]);
        assert_eq!(smirk("Cn"), ["C", "n"]);
        assert_eq!(
            smirk("[13CH3:12]"),
            ["[", "1", "3", "C", "H", "3", ":", "1", "2", "]"]
        );
        assert_eq!(smirk("[Fe+++]"), ["[", "Fe", "+", "+", "+", "]"]);
        assert_eq!(smirk("[Cu+2]"), ["[", "Cu", "+", "2", "]"]);
        assert_eq!(smirk("[C@OH1]"), ["[", "C", "@", "OH", "1", "]"]);
        assert_eq!(smirk("[Co@TB12]"), ["[", "Co", "@", "TB", "1", "2", "]"]);
        assert_eq!(smirk("[OH]"), ["[", "O", "H", "]"]);
        assert_eq!(smirk("[se]"), ["[", "se", "]"]);
        assert_eq!(smirk("[as+]"), ["[", "as", "+", "]"]);
        assert_eq!(smirk("[nH]"), ["[", "n", "H", "]"]);
        assert_eq!(smirk("[*]"), ["[", "*", "]"]);
        assert_eq!(smirk("[H+]"), ["[", "H", "+", "]"]);
        assert_eq!(smirk("[2H]"), ["[", "2", "H", "]"]);
        assert_eq!(smirk("[Sc]"), ["[", "Sc", "]"]);
    }

    #[test]
    fn glyph_kinds() {
        let glyphs = lex_smirk("[C@@H2-]", Mode::Strict).unwrap();
        let kinds: Vec<_> = glyphs.iter().map(|g| g.kind).collect();
        assert_eq!(
            kinds,
            [
                GlyphKind::BracketOpen,
                GlyphKind::Element,
                GlyphKind::Chirality,
                GlyphKind::Hydrogen,
                GlyphKind::Digit,
                GlyphKind::ChargeSign,
                GlyphKind::BracketClose
            ]
        );
        let glyphs = lex_smirk("C-c.%10", Mode::Strict).unwrap();
        let kinds: Vec<_> = glyphs.iter().map(|g| g.kind).collect();
        assert_eq!(
            kinds,
            [
                GlyphKind::Element,
                GlyphKind::Bond,
                GlyphKind::AromaticElement,
                GlyphKind::Dot,
                GlyphKind::RingMarker,
                GlyphKind::Digit,
                GlyphKind::Digit
            ]
        );
    }

    #[test]
    fn smirk_examples() {
        assert_eq!(
            smirk("c%12ccccc%12"),
            ["c", "%", "1", "2", "c", "c", "c", "c", "c", "%", "1", "2"]
        );
        assert_eq!(smirk("C$C"), ["C", "$", "C"]);
        assert_eq!(smirk("C"), ["C"]);
        assert_eq!(
            smirk("OC[C@@H][OH]"),
            ["O", "C", "[", "C", "@@", "H", "]", "[", "O", "H", "]"]
        );
        assert_eq!(
            smirk("[Ga+]$[As-]"),
            ["[", "Ga", "+", "]", "$", "[", "As", "-", "]"]
        );
    }

    #[test]
    fn longest_match() {
        assert_eq!(smirk("ClCl"), ["Cl", "Cl"]);
        assert_eq!(smirk("[C@@]"), ["[", "C", "@@", "]"]);
    }

    #[test]
    fn decomposition_errors() {
        let err = lex_smirk("C[te]C", Mode::Strict).unwrap_err();
        assert_eq!(
            err,
            LexError::Decompose {
                atom: "[te]".into(),
                span: 2..3
            }
        );
        let glyphs = lex_smirk("C[te]C", Mode::Permissive).unwrap();
        assert_eq!(glyphs.len(), 3);
        assert_eq!(glyphs[1].kind, GlyphKind::Unmatched);
        assert_eq!(glyphs[1].text, "[te]");

        // Two-letter aromatics are bracket-only.
        assert!(lex_smirk("se", Mode::Strict).is_err());
        let glyphs = lex_smirk("se", Mode::Permissive).unwrap();
        assert_eq!(glyphs[0].text, "s");
        assert_eq!(glyphs[1].kind, GlyphKind::Unmatched);

        assert!(lex_smirk("C?C", Mode::Strict).is_err());
        assert!(lex_smirk("[C@@H", Mode::Strict).is_err());
    }

    #[test]
    fn non_ascii_spans_are_character_indices() {
        let glyphs = lex_smirk("Cé[Na+]", Mode::Permissive).unwrap();
        assert_eq!(glyphs[1].kind, GlyphKind::Unmatched);
        assert_eq!(glyphs[1].span, 1..2);
        assert_eq!(glyphs[2].span, 2..3);
        assert_eq!(glyphs.last().unwrap().span, 6..7);
    }
}
