//! Token vocabularies and their on-disk JSON form.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::elements::{AROMATIC, ELEMENTS};
use crate::error::{Error, Result};
use crate::lexer::CHIRAL_CLASSES;

/// Tokenization scheme a vocabulary is meant for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Smirk,
    Atomwise,
    Char,
    Gpe,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Smirk => "smirk",
            Scheme::Atomwise => "atomwise",
            Scheme::Char => "char",
            Scheme::Gpe => "gpe",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smirk" => Ok(Scheme::Smirk),
            "atomwise" => Ok(Scheme::Atomwise),
            "char" => Ok(Scheme::Char),
            "gpe" => Ok(Scheme::Gpe),
            other => Err(Error::InvalidConfig(format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Special {
    Unk,
    Pad,
    Bos,
    Eos,
    Mask,
}

impl Special {
    pub const ALL: [Special; 5] = [
        Special::Unk,
        Special::Pad,
        Special::Bos,
        Special::Eos,
        Special::Mask,
    ];

    /// Default surface form, e.g. `[UNK]`.
    pub fn surface(self) -> &'static str {
        match self {
            Special::Unk => "[UNK]",
            Special::Pad => "[PAD]",
            Special::Bos => "[BOS]",
            Special::Eos => "[EOS]",
            Special::Mask => "[MASK]",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// A learned pair-merge: `left` followed by `right` becomes `result`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MergeRule {
    pub left: u32,
    pub right: u32,
    pub result: u32,
}

/// Bijection between token strings and ids, with named specials and, for
/// pair-encoded vocabularies, an ordered list of merge rules.
///
/// Merge results are allocated ids directly above the base tokens. Their surface
/// strings are the concatenation of the glyphs they cover; those strings are for
/// display only and do not take part in lookups, so they may repeat (the merge of
/// `C` and `n` and the element `Cn` share a surface).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    scheme: Scheme,
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    specials: [Option<u32>; 5],
    merges: Vec<MergeRule>,
}

/// Structural glyphs of the smirk alphabet, besides elements, aromatics and digits.
const SMIRK_STRUCTURAL: [&str; 19] = [
    "-", "=", "#", "$", ":", "/", "\\", "~", ".", "(", ")", "[", "]", "%", "*", "@", "@@", "+", ">",
];

/// Number of tokens in the vocabulary returned by [`Vocabulary::smirk`].
pub const SMIRK_VOCAB_SIZE: usize = 165;

impl Vocabulary {
    /// Builds a vocabulary whose specials are recognized by their default surface
    /// forms (`[UNK]`, `[PAD]`, ...).
    pub fn new(scheme: Scheme, tokens: Vec<String>) -> Result<Self> {
        let specials = Special::ALL
            .iter()
            .filter(|s| tokens.iter().any(|t| t == s.surface()))
            .map(|&s| (s, s.surface().to_string()))
            .collect();
        Self::from_parts(scheme, tokens, specials, Vec::new())
    }

    /// Builds a vocabulary from its serialized parts.
    ///
    /// For [`Scheme::Gpe`] the last `merges.len()` tokens are the merge results, in
    /// rule order. For other schemes `merges` must be empty.
    pub fn from_parts(
        scheme: Scheme,
        tokens: Vec<String>,
        specials: Vec<(Special, String)>,
        merges: Vec<(u32, u32)>,
    ) -> Result<Self> {
        if merges.len() > tokens.len() {
            return Err(Error::InvalidVocabulary(format!(
                "{} merges but only {} tokens",
                merges.len(),
                tokens.len()
            )));
        }
        if scheme != Scheme::Gpe && !merges.is_empty() {
            return Err(Error::InvalidVocabulary(format!(
                "merge rules are only valid for the gpe scheme, not {scheme}"
            )));
        }
        let base_len = tokens.len() - merges.len();
        let mut index = HashMap::with_capacity(base_len);
        for (i, token) in tokens[..base_len].iter().enumerate() {
            if token.is_empty() {
                return Err(Error::InvalidVocabulary(format!("empty token at id {i}")));
            }
            if index.insert(token.clone(), i as u32).is_some() {
                return Err(Error::DuplicateToken(token.clone()));
            }
        }
        let mut slots = [None; 5];
        for (special, surface) in specials {
            let id = *index.get(&surface).ok_or_else(|| {
                Error::InvalidVocabulary(format!(
                    "special {special:?} maps to unknown token {surface:?}"
                ))
            })?;
            slots[special.slot()] = Some(id);
        }
        if slots[Special::Unk.slot()].is_none() {
            return Err(Error::MissingUnk);
        }

        let mut rules = Vec::with_capacity(merges.len());
        for (k, (left, right)) in merges.into_iter().enumerate() {
            let result = (base_len + k) as u32;
            for id in [left, right] {
                if id >= result {
                    return Err(Error::InvalidVocabulary(format!(
                        "merge {k} references id {id}, which is not defined before it"
                    )));
                }
                if slots.contains(&Some(id)) {
                    return Err(Error::InvalidVocabulary(format!(
                        "merge {k} references special token id {id}"
                    )));
                }
            }
            let expected = format!("{}{}", tokens[left as usize], tokens[right as usize]);
            if tokens[result as usize] != expected {
                return Err(Error::InvalidVocabulary(format!(
                    "merge {k} result token {:?} should read {expected:?}",
                    tokens[result as usize]
                )));
            }
            rules.push(MergeRule {
                left,
                right,
                result,
            });
        }

        Ok(Vocabulary {
            scheme,
            tokens,
            index,
            specials: slots,
            merges: rules,
        })
    }

    /// The fixed smirk glyph vocabulary: specials, the 118 elements, the aromatic
    /// symbols, digits, bond and structural glyphs and the chirality classes.
    pub fn smirk() -> Self {
        let tokens: Vec<String> = Special::ALL
            .iter()
            .map(|s| s.surface())
            .chain(ELEMENTS)
            .chain(AROMATIC)
            .chain(["0", "1", "2", "3", "4", "5", "6", "7", "8", "9"])
            .chain(SMIRK_STRUCTURAL)
            .chain(CHIRAL_CLASSES)
            .map(str::to_string)
            .collect();
        debug_assert_eq!(tokens.len(), SMIRK_VOCAB_SIZE);
        Self::new(Scheme::Smirk, tokens).expect("smirk roster is valid")
    }

    /// Character vocabulary over printable ASCII (`!` through `~`) plus specials.
    pub fn char_ascii() -> Self {
        let tokens = Special::ALL
            .iter()
            .map(|s| s.surface().to_string())
            .chain((b'!'..=b'~').map(|b| (b as char).to_string()))
            .collect();
        Self::new(Scheme::Char, tokens).expect("ascii roster is valid")
    }

    /// A 26-token atom-wise vocabulary in the style of small closed-vocabulary
    /// generative models trained on drug-like sets. It lacks charged atoms, `.`,
    /// `:` and `$`.
    pub fn moses_like() -> Self {
        let tokens = [
            "[UNK]", "[PAD]", "#", "(", ")", "-", "1", "2", "3", "4", "5", "6", "=", "Br", "C",
            "Cl", "F", "N", "O", "S", "[H]", "[nH]", "c", "n", "o", "s",
        ];
        Self::new(
            Scheme::Atomwise,
            tokens.iter().map(|t| t.to_string()).collect(),
        )
        .expect("moses-like roster is valid")
    }

    /// Returns a pair-encoded vocabulary extending `self` with merge rules.
    pub fn with_merges(&self, pairs: &[(u32, u32)]) -> Result<Self> {
        if !self.merges.is_empty() {
            return Err(Error::InvalidVocabulary(
                "base vocabulary already carries merges".into(),
            ));
        }
        let mut tokens = self.tokens.clone();
        for &(left, right) in pairs {
            let (l, r) = (
                self.token_or_err(left, &tokens)?,
                self.token_or_err(right, &tokens)?,
            );
            tokens.push(format!("{l}{r}"));
        }
        Self::from_parts(Scheme::Gpe, tokens, self.special_surfaces(), pairs.to_vec())
    }

    fn token_or_err<'a>(&self, id: u32, tokens: &'a [String]) -> Result<&'a str> {
        tokens
            .get(id as usize)
            .map(String::as_str)
            .ok_or(Error::InvalidId {
                id,
                size: tokens.len(),
            })
    }

    fn special_surfaces(&self) -> Vec<(Special, String)> {
        Special::ALL
            .iter()
            .filter_map(|&s| {
                self.special(s)
                    .map(|id| (s, self.tokens[id as usize].clone()))
            })
            .collect()
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of tokens that are not merge results.
    pub fn base_len(&self) -> usize {
        self.tokens.len() - self.merges.len()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Id of a base token, specials included.
    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    /// Id of a unit of molecule text. Special tokens never match.
    pub fn unit_id(&self, unit: &str) -> Option<u32> {
        self.id(unit).filter(|id| !self.is_special(*id))
    }

    pub fn special(&self, special: Special) -> Option<u32> {
        self.specials[special.slot()]
    }

    pub fn is_special(&self, id: u32) -> bool {
        self.specials.contains(&Some(id))
    }

    pub fn unk(&self) -> u32 {
        self.specials[Special::Unk.slot()].expect("UNK is always present")
    }

    pub fn merges(&self) -> &[MergeRule] {
        &self.merges
    }

    /// Canonical JSON form: keys in fixed order, no whitespace, trailing LF.
    pub fn to_json(&self) -> String {
        let mut specials = SpecialsFile::default();
        for s in Special::ALL {
            let surface = self.special(s).map(|id| self.tokens[id as usize].clone());
            match s {
                Special::Unk => specials.unk = surface,
                Special::Pad => specials.pad = surface,
                Special::Bos => specials.bos = surface,
                Special::Eos => specials.eos = surface,
                Special::Mask => specials.mask = surface,
            }
        }
        let file = VocabFile {
            version: 1,
            scheme: self.scheme,
            tokens: self.tokens.clone(),
            specials,
            merges: (self.scheme == Scheme::Gpe)
                .then(|| self.merges.iter().map(|m| [m.left, m.right]).collect()),
        };
        let mut out = serde_json::to_string(&file).expect("vocabulary serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: VocabFile = serde_json::from_str(text)?;
        if file.version != 1 {
            return Err(Error::InvalidVocabulary(format!(
                "unsupported version {}",
                file.version
            )));
        }
        let specials: Vec<(Special, String)> = [
            (Special::Unk, file.specials.unk),
            (Special::Pad, file.specials.pad),
            (Special::Bos, file.specials.bos),
            (Special::Eos, file.specials.eos),
            (Special::Mask, file.specials.mask),
        ]
        .into_iter()
        .filter_map(|(s, t)| t.map(|t| (s, t)))
        .collect();
        if !specials.iter().any(|(s, _)| *s == Special::Unk) {
            return Err(Error::MissingUnk);
        }
        let mut merges: Vec<(u32, u32)> = file
            .merges
            .unwrap_or_default()
            .into_iter()
            .map(|[l, r]| (l, r))
            .collect();
        if file.scheme != Scheme::Gpe && !merges.is_empty() {
            log::warn!(
                "ignoring {} merge rules in a {} vocabulary",
                merges.len(),
                file.scheme
            );
            merges.clear();
        }
        Self::from_parts(file.scheme, file.tokens, specials, merges)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabFile {
    version: u32,
    scheme: Scheme,
    tokens: Vec<String>,
    specials: SpecialsFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    merges: Option<Vec<[u32; 2]>>,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecialsFile {
    #[serde(rename = "UNK", default, skip_serializing_if = "Option::is_none")]
    unk: Option<String>,
    #[serde(rename = "PAD", default, skip_serializing_if = "Option::is_none")]
    pad: Option<String>,
    #[serde(rename = "BOS", default, skip_serializing_if = "Option::is_none")]
    bos: Option<String>,
    #[serde(rename = "EOS", default, skip_serializing_if = "Option::is_none")]
    eos: Option<String>,
    #[serde(rename = "MASK", default, skip_serializing_if = "Option::is_none")]
    mask: Option<String>,
}
