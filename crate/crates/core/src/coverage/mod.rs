//! OpenSMILES probe sets and out-of-vocabulary auditing.

mod audit;
mod tables;

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::elements::{AROMATIC, AROMATIC_ORGANIC, ELEMENTS};
use crate::error::Result;

pub use audit::{audit, AuditReport, AuditRow, MAX_FAILING_EXAMPLES};
pub use tables::{charge_suffix, IsotopeTable, OxidationTable};

/// A named list of SMILES strings exercising one feature of the grammar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProbeSet {
    pub name: String,
    pub description: String,
    pub molecules: Vec<String>,
}

impl ProbeSet {
    pub fn new(name: &str, description: &str, molecules: Vec<String>) -> Self {
        ProbeSet {
            name: name.to_string(),
            description: description.to_string(),
            molecules,
        }
    }

    /// Reads one SMILES per line, skipping blank lines.
    pub fn from_lines<R: BufRead>(name: &str, input: R) -> Result<Self> {
        let mut molecules = Vec::new();
        for line in input.lines() {
            let line = line?;
            let line = line.trim();
            if !line.is_empty() {
                molecules.push(line.to_string());
            }
        }
        Ok(ProbeSet::new(name, "user-supplied molecules", molecules))
    }

    pub fn write_lines<W: Write>(&self, mut out: W) -> Result<()> {
        for m in &self.molecules {
            writeln!(out, "{m}")?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.molecules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.molecules.is_empty()
    }
}

/// Names of the generated probe sets, in report order.
pub const PROBE_SET_NAMES: [&str; 7] = [
    "elements", "isotopes", "charges", "chiral", "combined", "rings", "bonds",
];

/// Every element in brackets plus the aromatic symbols, 126 entries.
pub fn gen_elements() -> ProbeSet {
    let molecules = ELEMENTS
        .iter()
        .map(|e| format!("[{e}]"))
        .chain(AROMATIC.iter().map(|a| {
            if AROMATIC_ORGANIC.contains(a) {
                a.to_string()
            } else {
                format!("[{a}]")
            }
        }))
        .collect();
    ProbeSet::new(
        "elements",
        "single-atom strings for each element and aromatic symbol",
        molecules,
    )
}

pub fn gen_isotopes(table: &IsotopeTable) -> ProbeSet {
    let molecules = ELEMENTS
        .iter()
        .flat_map(|e| {
            table
                .window(e)
                .into_iter()
                .map(move |a| format!("[{a}{e}]"))
        })
        .collect();
    ProbeSet::new(
        "isotopes",
        "isotopes around each element's reference mass number",
        molecules,
    )
}

pub fn gen_charges(table: &OxidationTable) -> ProbeSet {
    let molecules = ELEMENTS
        .iter()
        .flat_map(|e| {
            table
                .states(e)
                .iter()
                .map(move |&c| format!("[{e}{}]", charge_suffix(c)))
        })
        .collect();
    ProbeSet::new("charges", "ions for each listed oxidation state", molecules)
}

pub fn gen_chiral() -> ProbeSet {
    let molecules = ELEMENTS
        .iter()
        .flat_map(|e| ["@", "@@"].map(|c| format!("[{e}{c}]")))
        .collect();
    ProbeSet::new(
        "chiral",
        "tetrahedral chirality markers on every element",
        molecules,
    )
}

/// Product of the isotope, chirality and charge axes for each element.
pub fn gen_combined(isotopes: &IsotopeTable, charges: &OxidationTable) -> ProbeSet {
    let mut molecules = Vec::new();
    for e in ELEMENTS {
        for a in isotopes.window(e) {
            for chiral in ["@", "@@"] {
                for &c in charges.states(e) {
                    molecules.push(format!("[{a}{e}{chiral}{}]", charge_suffix(c)));
                }
            }
        }
    }
    ProbeSet::new(
        "combined",
        "isotope x chirality x charge per element",
        molecules,
    )
}

/// Benzene closed with every single-digit and `%NN` ring label, 109 entries.
pub fn gen_rings() -> ProbeSet {
    let molecules = (1..=9)
        .map(|d| format!("c{d}ccccc{d}"))
        .chain((0..=99).map(|d| format!("c%{d:02}ccccc%{d:02}")))
        .collect();
    ProbeSet::new(
        "rings",
        "benzene with single and double digit ring closures",
        molecules,
    )
}

/// Two carbons joined by each bond symbol, plus the disconnected pair.
pub fn gen_bonds() -> ProbeSet {
    let molecules = ["-", "=", "#", "$", ":", "/", "\\", "~", "."]
        .iter()
        .map(|b| format!("C{b}C"))
        .collect();
    ProbeSet::new("bonds", "two carbons joined by each bond symbol", molecules)
}

/// All generated probe sets, in [`PROBE_SET_NAMES`] order.
pub fn standard_probe_sets(isotopes: &IsotopeTable, charges: &OxidationTable) -> Vec<ProbeSet> {
    vec![
        gen_elements(),
        gen_isotopes(isotopes),
        gen_charges(charges),
        gen_chiral(),
        gen_combined(isotopes, charges),
        gen_rings(),
        gen_bonds(),
    ]
}

/// Number of distinct bracket-atom tokens needed to spell every combination of
/// the given feature counts as whole tokens. `None` on overflow.
pub fn bracket_combinations(
    isotopes: u64,
    oxidation_states: u64,
    aromaticity: u64,
    chirality: u64,
    hydrogens: u64,
) -> Option<u64> {
    [oxidation_states, aromaticity, chirality, hydrogens]
        .into_iter()
        .try_fold(isotopes, |acc, x| acc.checked_mul(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexer::{lex_smirk, Mode};

    #[test]
    fn element_set() {
        let set = gen_elements();
        assert_eq!(set.len(), 126);
        assert!(set.molecules.contains(&"[Au]".to_string()));
        assert!(set.molecules.contains(&"c".to_string()));
        assert!(set.molecules.contains(&"[se]".to_string()));
    }

    #[test]
    fn ring_and_bond_sets() {
        let rings = gen_rings();
        assert_eq!(rings.len(), 109);
        assert_eq!(rings.molecules[0], "c1ccccc1");
        assert!(rings.molecules.contains(&"c%00ccccc%00".to_string()));
        let bonds = gen_bonds();
        assert!(bonds.molecules.contains(&"C:C".to_string()));
        assert!(bonds.molecules.contains(&"C$C".to_string()));
        assert!(bonds.molecules.iter().all(|m| m.matches('C').count() == 2));
    }

    #[test]
    fn feature_sets() {
        let iso = IsotopeTable::builtin();
        let ox = OxidationTable::builtin();
        assert!(gen_charges(&ox).molecules.contains(&"[Cu+3]".to_string()));
        assert!(gen_charges(&ox).molecules.contains(&"[F-]".to_string()));
        assert!(gen_isotopes(&iso).molecules.contains(&"[13C]".to_string()));
        let chiral = gen_chiral();
        assert_eq!(chiral.len(), 236);
        assert!(chiral.molecules.iter().all(|m| m.contains('@')));
        let combined = gen_combined(&iso, &ox);
        let carbon = combined
            .molecules
            .iter()
            .filter(|m| {
                m[1..]
                    .trim_start_matches(|c: char| c.is_ascii_digit())
                    .starts_with("C@")
            })
            .count();
        assert_eq!(carbon, 5 * 2 * 8);
        assert!(combined.molecules.contains(&"[13C@+]".to_string()));
    }

    #[test]
    fn all_probes_lex() {
        let sets = standard_probe_sets(&IsotopeTable::builtin(), &OxidationTable::builtin());
        assert_eq!(
            sets.iter().map(|s| s.name.as_str()).collect::<Vec<_>>(),
            PROBE_SET_NAMES
        );
        for set in &sets {
            for m in &set.molecules {
                let glyphs = lex_smirk(m, Mode::Strict).unwrap();
                assert_eq!(glyphs.iter().map(|g| g.text).collect::<String>(), *m);
            }
        }
    }

    #[test]
    fn combinations() {
        assert_eq!(bracket_combinations(14, 9, 2, 60, 5), Some(75_600));
        assert_eq!(bracket_combinations(1, 1, 1, 1, 1), Some(1));
        assert_eq!(bracket_combinations(2, 2, 2, 2, 2), Some(32));
        assert_eq!(bracket_combinations(u64::MAX, 2, 1, 1, 1), None);
    }

    #[test]
    fn line_files() {
        let set = ProbeSet::from_lines("extra", "C\n\n  CC \n".as_bytes()).unwrap();
        assert_eq!(set.molecules, vec!["C", "CC"]);
        let mut out = Vec::new();
        set.write_lines(&mut out).unwrap();
        assert_eq!(out, b"C\nCC\n");
    }
}
