//! Periodic table symbols and the OpenSMILES aromatic subset.

/// The 118 element symbols, ordered by atomic number.
pub const ELEMENTS: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk",
    "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh",
    "Fl", "Mc", "Lv", "Ts", "Og",
];

/// Aromatic symbols. `se` and `as` are only legal inside brackets.
pub const AROMATIC: [&str; 8] = ["b", "c", "n", "o", "p", "s", "se", "as"];

/// Aromatic symbols that may appear without brackets.
pub const AROMATIC_ORGANIC: [&str; 6] = ["b", "c", "n", "o", "p", "s"];

/// Atomic number (1-based) of an element symbol.
pub fn atomic_number(symbol: &str) -> Option<u32> {
    ELEMENTS
        .iter()
        .position(|&s| s == symbol)
        .map(|i| i as u32 + 1)
}

pub fn is_element(symbol: &str) -> bool {
    atomic_number(symbol).is_some()
}

pub fn is_aromatic(symbol: &str) -> bool {
    AROMATIC.contains(&symbol)
}
