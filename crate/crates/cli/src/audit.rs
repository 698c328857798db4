use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use smirk_core::coverage::{self, IsotopeTable, OxidationTable, PROBE_SET_NAMES};
use smirk_core::{ProbeSet, Tokenizer};

use crate::input::{named_tokenizer, output};
use crate::usage;

/// Out-of-vocabulary rates of tokenizers over the coverage probe sets.
///
/// CSV columns: tokenizer, probe_set, total, oov_count, oov_percent (two
/// decimals). --json writes the full report instead, including up to ten
/// failing molecules per row. Findings never change the exit code.
#[derive(clap::Args)]
pub struct Args {
    /// Tokenizers: built-in names (smirk, char, moses), `name=vocab.json`,
    /// vocabulary files, or a directory of vocabulary files.
    #[arg(long, value_delimiter = ',', default_value = "smirk,char,moses")]
    pub vocabs: Vec<String>,
    /// `all`, or a comma-separated subset of the generated sets.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    pub probe_sets: Vec<String>,
    /// Additional probe set files, one SMILES per line; named by file stem.
    #[arg(long)]
    pub extra_set: Vec<PathBuf>,
    #[command(flatten)]
    pub tables: TableArgs,
    /// Report file; stdout by default.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(clap::Args)]
pub struct TableArgs {
    /// Isotope table (TSV: symbol, mass_number) replacing the built-in one.
    #[arg(long)]
    pub isotopes: Option<PathBuf>,
    /// Oxidation-state table (TSV: symbol, states) replacing the built-in one.
    #[arg(long)]
    pub oxidation_states: Option<PathBuf>,
}

impl TableArgs {
    fn load(&self) -> Result<(IsotopeTable, OxidationTable)> {
        let iso = match &self.isotopes {
            Some(p) => IsotopeTable::from_path(p)?,
            None => IsotopeTable::builtin(),
        };
        let ox = match &self.oxidation_states {
            Some(p) => OxidationTable::from_path(p)?,
            None => OxidationTable::builtin(),
        };
        Ok((iso, ox))
    }
}

fn tokenizers(specs: &[String]) -> Result<Vec<(String, Tokenizer)>> {
    let mut out = Vec::new();
    for spec in specs {
        let path = Path::new(spec);
        if path.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            files.retain(|f| f.extension().is_some_and(|e| e == "json"));
            files.sort();
            for f in files {
                out.push(named_tokenizer(&f.to_string_lossy())?);
            }
        } else {
            out.push(named_tokenizer(spec)?);
        }
    }
    if out.is_empty() {
        return Err(usage("no tokenizers selected"));
    }
    Ok(out)
}

fn probe_sets(args: &Args) -> Result<Vec<ProbeSet>> {
    let (iso, ox) = args.tables.load()?;
    let mut sets = Vec::new();
    let names: Vec<&str> = args
        .probe_sets
        .iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .collect();
    if !names.is_empty() {
        let all = coverage::standard_probe_sets(&iso, &ox);
        if names == ["all"] {
            sets = all;
        } else {
            for name in names {
                let set = all.iter().find(|s| s.name == name).ok_or_else(|| {
                    usage(format!(
                        "unknown probe set {name:?}; expected one of {PROBE_SET_NAMES:?}"
                    ))
                })?;
                sets.push(set.clone());
            }
        }
    }
    for path in &args.extra_set {
        let name = path
            .file_stem()
            .map_or_else(|| "extra".into(), |s| s.to_string_lossy().into_owned());
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        sets.push(ProbeSet::from_lines(&name, BufReader::new(file))?);
    }
    if sets.is_empty() {
        return Err(usage("no probe sets selected"));
    }
    Ok(sets)
}

pub fn run(args: Args) -> Result<()> {
    let toks = tokenizers(&args.vocabs)?;
    let sets = probe_sets(&args)?;
    let report = coverage::audit(&toks, &sets);
    let mut out = output(args.out.as_deref())?;
    if args.json {
        writeln!(out, "{}", report.to_json())?;
    } else {
        report.write_csv(&mut out)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(clap::Args)]
pub struct ProbesArgs {
    /// Directory receiving `<set>.smi` files.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub tables: TableArgs,
}

pub fn probes(args: ProbesArgs) -> Result<()> {
    let (iso, ox) = args.tables.load()?;
    std::fs::create_dir_all(&args.out_dir)?;
    for set in coverage::standard_probe_sets(&iso, &ox) {
        let path = args.out_dir.join(format!("{}.smi", set.name));
        let mut out = output(Some(&path))?;
        set.write_lines(&mut out)?;
        out.flush()?;
        println!("{}\t{}", set.name, set.len());
    }
    Ok(())
}
