//! Curated per-element data behind the isotope and charge probe sets.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::elements::{atomic_number, ELEMENTS};
use crate::error::{Error, Result};

const ISOTOPES: &str = include_str!("../../data/isotopes.tsv");
const OXIDATION_STATES: &str = include_str!("../../data/oxidation_states.tsv");

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .comment(Some(b'#'))
        .from_reader(input)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingTable(path.display().to_string()),
        _ => Error::Io(e),
    })
}

fn element_slot(symbol: &str) -> Result<usize> {
    atomic_number(symbol)
        .map(|z| z as usize - 1)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown element {symbol:?} in data table")))
}

/// Reference mass number per element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsotopeTable {
    mass: [Option<u32>; 118],
}

#[derive(Deserialize)]
struct IsotopeRow {
    symbol: String,
    mass_number: u32,
}

impl IsotopeTable {
    pub fn builtin() -> Self {
        Self::from_reader(ISOTOPES.as_bytes()).expect("bundled isotope table is valid")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(open(path.as_ref())?)
    }

    pub fn from_reader<R: Read>(input: R) -> Result<Self> {
        let mut mass = [None; 118];
        for row in reader(input).deserialize() {
            let row: IsotopeRow = row?;
            let slot = element_slot(&row.symbol)?;
            if row.mass_number <= slot as u32 {
                return Err(Error::InvalidConfig(format!(
                    "mass number {} of {} is below its atomic number",
                    row.mass_number, row.symbol
                )));
            }
            mass[slot] = Some(row.mass_number);
        }
        Ok(IsotopeTable { mass })
    }

    pub fn reference(&self, symbol: &str) -> Option<u32> {
        atomic_number(symbol).and_then(|z| self.mass[z as usize - 1])
    }

    /// Mass numbers probed for `symbol`: `A-2..=A+2`, floored at the atomic number.
    pub fn window(&self, symbol: &str) -> Vec<u32> {
        match (atomic_number(symbol), self.reference(symbol)) {
            (Some(z), Some(a)) => (a.saturating_sub(2).max(z)..=a + 2).collect(),
            _ => Vec::new(),
        }
    }
}

/// Non-zero oxidation states per element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OxidationTable {
    states: Vec<Vec<i32>>,
}

#[derive(Deserialize)]
struct OxidationRow {
    symbol: String,
    states: String,
}

impl OxidationTable {
    pub fn builtin() -> Self {
        Self::from_reader(OXIDATION_STATES.as_bytes()).expect("bundled oxidation table is valid")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(open(path.as_ref())?)
    }

    pub fn from_reader<R: Read>(input: R) -> Result<Self> {
        let mut states = vec![Vec::new(); ELEMENTS.len()];
        for row in reader(input).deserialize() {
            let row: OxidationRow = row?;
            let slot = element_slot(&row.symbol)?;
            if row.states.trim() == "-" {
                continue;
            }
            let mut parsed = row
                .states
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<i32>()
                        .ok()
                        .filter(|&v| v != 0)
                        .ok_or_else(|| {
                            Error::InvalidConfig(format!(
                                "bad oxidation state {s:?} for {}",
                                row.symbol
                            ))
                        })
                })
                .collect::<Result<Vec<i32>>>()?;
            parsed.sort_unstable();
            parsed.dedup();
            states[slot] = parsed;
        }
        Ok(OxidationTable { states })
    }

    pub fn states(&self, symbol: &str) -> &[i32] {
        atomic_number(symbol).map_or(&[], |z| &self.states[z as usize - 1])
    }
}

/// SMILES charge suffix: `+`/`-` for unit charges, sign plus digits otherwise.
pub fn charge_suffix(charge: i32) -> String {
    match charge {
        0 => String::new(),
        1 => "+".into(),
        -1 => "-".into(),
        c if c > 0 => format!("+{c}"),
        c => format!("-{}", -c),
    }
}
