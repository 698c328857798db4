//! Model persistence.
//!
//! Binary layout, all fields little-endian:
//!
//! ```text
//! "NGM1" | version u32 | N u32 | V u64
//! for k in 1..=N: entries u64, then per entry k × u32 ids and a u64 count
//! ```
//!
//! Entries are sorted by id sequence, so equal models serialize to equal bytes.
//! Start and end marker ids are not stored; readers supply them.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::model::{gram, Boundary, Gram, NGramModel, MAX_ORDER};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"NGM1";
const VERSION: u32 = 1;

fn sorted(table: &FxHashMap<Gram, u64>) -> Vec<(&Gram, u64)> {
    let mut entries: Vec<(&Gram, u64)> = table.iter().map(|(g, &c)| (g, c)).collect();
    entries.sort_unstable();
    entries
}

fn bad(msg: impl Into<String>) -> Error {
    Error::ModelFormat(msg.into())
}

impl NGramModel {
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.order as u32).to_le_bytes())?;
        w.write_all(&self.vocab_size().to_le_bytes())?;
        for (k, table) in self.tables.iter().enumerate() {
            w.write_all(&(table.len() as u64).to_le_bytes())?;
            for (g, c) in sorted(table) {
                for id in &g[..=k] {
                    w.write_all(&id.to_le_bytes())?;
                }
                w.write_all(&c.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_binary(&mut out).expect("writing to memory");
        out
    }

    pub fn read_binary<R: Read>(mut r: R, boundary: Boundary) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("not an NGM1 file"));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let order = read_u32(&mut r)? as usize;
        let vocab_size = read_u64(&mut r)?;
        let mut tables = Vec::with_capacity(order.min(MAX_ORDER));
        check_header(order, vocab_size, boundary)?;
        for k in 1..=order {
            let len = read_u64(&mut r)?;
            let mut table = FxHashMap::default();
            let mut prev: Option<Gram> = None;
            let mut ids = [0u32; MAX_ORDER];
            for _ in 0..len {
                for id in ids.iter_mut().take(k) {
                    *id = read_u32(&mut r)?;
                }
                let count = read_u64(&mut r)?;
                let g = gram(&ids[..k]);
                insert_entry(&mut table, &mut prev, g, count, vocab_size)?;
            }
            tables.push(table);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(bad("trailing bytes after the last table"));
        }
        assemble(order, boundary, tables)
    }

    pub fn from_bytes(bytes: &[u8], boundary: Boundary) -> Result<Self> {
        Self::read_binary(bytes, boundary)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_binary(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>, boundary: Boundary) -> Result<Self> {
        Self::read_binary(BufReader::new(File::open(path)?), boundary)
    }

    /// Debug JSON mirroring the binary layout.
    pub fn to_json(&self) -> String {
        let file = JsonModel {
            version: VERSION,
            order: self.order as u32,
            vocab_size: self.vocab_size(),
            tables: self
                .tables
                .iter()
                .enumerate()
                .map(|(k, t)| {
                    sorted(t)
                        .into_iter()
                        .map(|(g, c)| JsonEntry {
                            ids: g[..=k].to_vec(),
                            count: c,
                        })
                        .collect()
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, boundary: Boundary) -> Result<Self> {
        let file: JsonModel = serde_json::from_str(text)?;
        if file.version != VERSION {
            return Err(bad(format!("unsupported version {}", file.version)));
        }
        let order = file.order as usize;
        check_header(order, file.vocab_size, boundary)?;
        if file.tables.len() != order {
            return Err(bad(format!(
                "{} tables for order {order}",
                file.tables.len()
            )));
        }
        let mut tables = Vec::with_capacity(order);
        for (k, entries) in file.tables.into_iter().enumerate() {
            let mut table = FxHashMap::default();
            let mut prev = None;
            for e in entries {
                if e.ids.len() != k + 1 {
                    return Err(bad(format!(
                        "order-{} table holds a {}-gram",
                        k + 1,
                        e.ids.len()
                    )));
                }
                insert_entry(
                    &mut table,
                    &mut prev,
                    gram(&e.ids),
                    e.count,
                    file.vocab_size,
                )?;
            }
            tables.push(table);
        }
        assemble(order, boundary, tables)
    }
}

fn check_header(order: usize, vocab_size: u64, boundary: Boundary) -> Result<()> {
    if order == 0 || order > MAX_ORDER {
        return Err(bad(format!("unsupported order {order}")));
    }
    if vocab_size != boundary.vocab_size {
        return Err(bad(format!(
            "model vocabulary size {vocab_size} does not match the tokenizer's {}",
            boundary.vocab_size
        )));
    }
    Ok(())
}

fn insert_entry(
    table: &mut FxHashMap<Gram, u64>,
    prev: &mut Option<Gram>,
    g: Gram,
    count: u64,
    vocab_size: u64,
) -> Result<()> {
    if prev.is_some_and(|p| p >= g) {
        return Err(bad("entries are not strictly sorted"));
    }
    if count == 0 {
        return Err(bad("zero count entry"));
    }
    if g.iter().any(|&id| u64::from(id) >= vocab_size) {
        return Err(bad(format!("id out of range in {g:?}")));
    }
    *prev = Some(g);
    table.insert(g, count);
    Ok(())
}

/// Rebuilds a model from its top table and checks the stored lower orders.
fn assemble(
    order: usize,
    boundary: Boundary,
    mut tables: Vec<FxHashMap<Gram, u64>>,
) -> Result<NGramModel> {
    let top = tables.pop().expect("order >= 1");
    let model = NGramModel::from_top(order, boundary, top);
    for (k, table) in tables.iter().enumerate() {
        if *table != model.tables[k] {
            return Err(bad(format!(
                "order-{} counts are not the continuation sums of order {}",
                k + 1,
                k + 2
            )));
        }
    }
    Ok(model)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[derive(Serialize, Deserialize)]
struct JsonModel {
    version: u32,
    order: u32,
    vocab_size: u64,
    tables: Vec<Vec<JsonEntry>>,
}

#[derive(Serialize, Deserialize)]
struct JsonEntry {
    ids: Vec<u32>,
    count: u64,
}
