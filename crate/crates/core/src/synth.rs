//! Seeded generator of drug-like SMILES for desk-scale experiments.
//!
//! Molecules are assembled from a fixed fragment library (rings, linkers,
//! substituents, counter-ions), so the corpus has the repetitive local structure
//! of real screening libraries while staying fully reproducible from a seed. The
//! strings are syntactically plausible but not chemically validated.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Ring templates; `R` and `S` stand for the first and second ring label.
const RINGS: &[&str] = &[
    "cRccccR",
    "cRccccR",
    "cRccccR",
    "cRccncR",
    "cRcccnR",
    "CRCCNCCR",
    "CRCCOCCR",
    "CRCCCCR",
    "CRCCR",
    "CRCCNR",
    "cRcc[nH]cR",
    "cRccscR",
    "cRccocR",
    "cRncncR",
    "cRccSccccSR",
    "cRccSncccSR",
    "cRnSccccSnR",
    "OCRCCCNR",
    "CRCNCCNR",
    "cRcnnR",
    "cRcn[nH]cR",
    "cRcncsR",
];

const LINKERS: &[&str] = &[
    "",
    "",
    "C",
    "CC",
    "C(=O)N",
    "NC(=O)",
    "O",
    "OC",
    "S(=O)(=O)N",
    "C(=O)",
    "N",
    "CCN",
    "C(=O)O",
    "/C=C/",
    "C#C",
    "[C@@H](C)",
    "[C@H](O)",
    "CN(C)",
    "NC(=O)N",
    "S",
];

const SUBSTITUENTS: &[&str] = &[
    "C",
    "C",
    "CC",
    "F",
    "F",
    "Cl",
    "Br",
    "O",
    "OC",
    "N",
    "N(C)C",
    "C(F)(F)F",
    "C#N",
    "C(=O)O",
    "C(=O)N",
    "[N+](=O)[O-]",
    "C(C)C",
    "OCC",
    "S(C)(=O)=O",
    "I",
    "[O-]",
    "C(=O)OC",
    "NC(C)=O",
    "[2H]",
    "[13CH3]",
    "[NH3+]",
    "OC(F)(F)F",
    "C=O",
];

const COUNTER_IONS: &[&str] = &[".[Na+]", ".Cl", ".[Cl-]", ".[K+]", ".O", ".[Br-]", ".[Li+]"];

/// Deterministic SMILES generator.
pub struct SyntheticCorpus {
    rng: ChaCha8Rng,
}

impl SyntheticCorpus {
    pub fn new(seed: u64) -> Self {
        SyntheticCorpus {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn label(n: usize) -> String {
        if n < 10 {
            n.to_string()
        } else {
            format!("%{n}")
        }
    }

    pub fn molecule(&mut self) -> String {
        let rng = &mut self.rng;
        let mut out = String::new();
        if rng.random_bool(0.5) {
            out.push_str(SUBSTITUENTS.choose(rng).unwrap());
        }
        // occasionally start numbering past nine to exercise %NN closures
        let mut next_label = if rng.random_bool(0.02) { 10 } else { 1 };
        let rings = *[1, 1, 2, 2, 2, 3, 3, 4].choose(rng).unwrap();
        for i in 0..rings {
            if i > 0 || !out.is_empty() {
                out.push_str(LINKERS.choose(rng).unwrap());
            }
            let (r, s) = (Self::label(next_label), Self::label(next_label + 1));
            let template = RINGS.choose(rng).unwrap();
            next_label += if template.contains('S') { 2 } else { 1 };
            let ring = template.replace('R', &r).replace('S', &s);
            out.push_str(&ring);
            if rng.random_bool(0.4) {
                out.push('(');
                out.push_str(SUBSTITUENTS.choose(rng).unwrap());
                out.push(')');
                out.push_str(if rng.random_bool(0.5) { "C" } else { "CC" });
            }
        }
        if rng.random_bool(0.7) {
            out.push_str(SUBSTITUENTS.choose(rng).unwrap());
        }
        if rng.random_bool(0.08) {
            out.push_str(COUNTER_IONS.choose(rng).unwrap());
        }
        out
    }

    pub fn generate(&mut self, n: usize) -> Vec<String> {
        (0..n).map(|_| self.molecule()).collect()
    }
}

/// `n` molecules from `seed`.
pub fn desk_corpus(n: usize, seed: u64) -> Vec<String> {
    SyntheticCorpus::new(seed).generate(n)
}
