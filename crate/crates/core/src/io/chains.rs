//! Chain store.
//!
//! A store directory holds `fit.json` (the [`FitResult`] with every trace
//! emptied) and the draws of each chain, either as CSV files
//! `chain<c>/<block>.csv` with an `iteration` column followed by the block's
//! columns, or as one binary file `chain<c>.bin` per chain.
//!
//! Binary layout (version 1), all integers little-endian:
//!
//! ```text
//! magic        8 bytes  "GPTCMCH1"
//! n_traces     u32
//! n_draws      u64
//! iterations   n_draws × u64
//! per trace:
//!   name       u32 byte length, UTF-8 bytes
//!   n_cols     u32
//!   columns    n_cols × (u32 byte length, UTF-8 bytes)
//!   values     n_draws × n_cols × f64 (IEEE 754 binary64), row-major
//! ```
//!
//! The per-subject log-likelihood, when recorded, is stored as an extra
//! trace named `pointwise`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fmt_f64, read_table, write_table};
use crate::error::{GptcmError, Result};
use crate::mcmc::{FitResult, Trace};

pub const FIT_FILE: &str = "fit.json";
pub const MAGIC: &[u8; 8] = b"GPTCMCH1";
const POINTWISE: &str = "pointwise";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoreFormat {
    #[default]
    Csv,
    Binary,
}

impl std::str::FromStr for StoreFormat {
    type Err = GptcmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(StoreFormat::Csv),
            "binary" | "bin" => Ok(StoreFormat::Binary),
            _ => Err(GptcmError::Config(format!("unknown chain store format '{s}' (csv or binary)"))),
        }
    }
}

fn all_traces(fit: &FitResult, c: usize) -> Vec<&Trace> {
    let chain = &fit.chains[c];
    let mut out: Vec<&Trace> = chain.traces.iter().collect();
    if let Some(p) = &chain.pointwise {
        out.push(p);
    }
    out
}

/// Writes the store; returns the paths written, relative to `dir`.
pub fn write_fit(fit: &FitResult, dir: &Path, format: StoreFormat) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut meta = fit.clone();
    for chain in &mut meta.chains {
        for t in &mut chain.traces {
            t.values.clear();
        }
        if let Some(p) = &mut chain.pointwise {
            p.values.clear();
        }
    }
    for (c, chain) in fit.chains.iter().enumerate() {
        match format {
            StoreFormat::Csv => {
                for t in all_traces(fit, c) {
                    let rel = format!("chain{c}/{}.csv", t.name);
                    let mut header = vec!["iteration".to_string()];
                    header.extend(t.columns.iter().cloned());
                    let rows: Vec<Vec<String>> = (0..t.len())
                        .map(|i| {
                            let mut r = vec![chain.iterations[i].to_string()];
                            r.extend(t.row(i).iter().map(|&x| fmt_f64(x)));
                            r
                        })
                        .collect();
                    write_table(&dir.join(&rel), &header, &rows)?;
                    written.push(rel);
                }
            }
            StoreFormat::Binary => {
                let rel = format!("chain{c}.bin");
                fs::write(dir.join(&rel), encode_binary(&chain.iterations, &all_traces(fit, c)))?;
                written.push(rel);
            }
        }
    }
    let json = serde_json::to_string_pretty(&StoreMeta { format, fit: meta })? + "\n";
    fs::write(dir.join(FIT_FILE), json)?;
    written.push(FIT_FILE.to_string());
    Ok(written)
}

#[derive(Serialize, Deserialize)]
struct StoreMeta {
    format: StoreFormat,
    fit: FitResult,
}

fn encode_binary(iterations: &[usize], traces: &[&Trace]) -> Vec<u8> {
    let mut buf = Vec::new();
    let put_str = |buf: &mut Vec<u8>, s: &str| {
        buf.extend((s.len() as u32).to_le_bytes());
        buf.extend(s.as_bytes());
    };
    buf.extend(MAGIC);
    buf.extend((traces.len() as u32).to_le_bytes());
    buf.extend((iterations.len() as u64).to_le_bytes());
    for &it in iterations {
        buf.extend((it as u64).to_le_bytes());
    }
    for t in traces {
        put_str(&mut buf, &t.name);
        buf.extend((t.columns.len() as u32).to_le_bytes());
        for c in &t.columns {
            put_str(&mut buf, c);
        }
        for v in &t.values {
            buf.extend(v.to_le_bytes());
        }
    }
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    file: String,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(GptcmError::Parse {
                file: self.file.clone(),
                msg: format!("truncated at byte {}", self.pos),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let file = self.file.clone();
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| GptcmError::Parse { file, msg: e.to_string() })
    }
}

fn decode_binary(bytes: &[u8], file: &str) -> Result<(Vec<usize>, Vec<Trace>)> {
    let mut c = Cursor {
        bytes,
        pos: 0,
        file: file.to_string(),
    };
    if c.take(8)? != MAGIC {
        return Err(GptcmError::Parse {
            file: file.to_string(),
            msg: "not a chain store (bad magic)".into(),
        });
    }
    let n_traces = c.u32()? as usize;
    let n_draws = c.u64()? as usize;
    let mut iterations = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        iterations.push(c.u64()? as usize);
    }
    let mut traces = Vec::with_capacity(n_traces);
    for _ in 0..n_traces {
        let name = c.string()?;
        let n_cols = c.u32()? as usize;
        let mut cols = Vec::with_capacity(n_cols);
        for _ in 0..n_cols {
            cols.push(c.string()?);
        }
        let mut t = Trace::new(&name, cols);
        let raw = c.take(8 * n_draws * n_cols)?;
        t.values = raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect();
        traces.push(t);
    }
    if c.pos != bytes.len() {
        return Err(GptcmError::Parse {
            file: file.to_string(),
            msg: format!("{} trailing bytes", bytes.len() - c.pos),
        });
    }
    Ok((iterations, traces))
}

fn read_csv_trace(path: &Path, expected: &Trace) -> Result<(Vec<usize>, Trace)> {
    let t = read_table(path)?;
    let parse_err = |msg: String| GptcmError::Parse {
        file: t.file.clone(),
        msg,
    };
    if t.header.len() != expected.columns.len() + 1 || t.header[1..] != expected.columns[..] {
        return Err(parse_err(format!(
            "columns do not match the stored block layout (expected iteration,{})",
            expected.columns.join(",")
        )));
    }
    let mut iterations = Vec::with_capacity(t.rows.len());
    let mut trace = Trace::new(&expected.name, expected.columns.clone());
    for (i, r) in t.rows.iter().enumerate() {
        iterations.push(r[0].parse::<usize>().map_err(|_| parse_err(format!("row {i}: bad iteration '{}'", r[0])))?);
        for (j, cell) in r[1..].iter().enumerate() {
            let v = cell
                .parse::<f64>()
                .map_err(|_| parse_err(format!("row {i} column '{}': bad number '{cell}'", expected.columns[j])))?;
            trace.values.push(v);
        }
    }
    Ok((iterations, trace))
}

pub fn read_fit(dir: &Path) -> Result<FitResult> {
    let meta_path = dir.join(FIT_FILE);
    let text = fs::read_to_string(&meta_path)?;
    let StoreMeta { format, mut fit } = serde_json::from_str(&text).map_err(|e| GptcmError::Parse {
        file: meta_path.display().to_string(),
        msg: e.to_string(),
    })?;
    for (c, chain) in fit.chains.iter_mut().enumerate() {
        let mut loaded: Vec<(Vec<usize>, Trace)> = Vec::new();
        match format {
            StoreFormat::Csv => {
                let mut templates = chain.traces.clone();
                if let Some(p) = &chain.pointwise {
                    templates.push(p.clone());
                }
                for t in &templates {
                    loaded.push(read_csv_trace(&dir.join(format!("chain{c}/{}.csv", t.name)), t)?);
                }
            }
            StoreFormat::Binary => {
                let name = format!("chain{c}.bin");
                let mut bytes = Vec::new();
                fs::File::open(dir.join(&name))?.read_to_end(&mut bytes)?;
                let (its, traces) = decode_binary(&bytes, &name)?;
                loaded.extend(traces.into_iter().map(|t| (its.clone(), t)));
            }
        }
        for (its, t) in loaded {
            if its != chain.iterations {
                return Err(GptcmError::Parse {
                    file: format!("chain{c}/{}", t.name),
                    msg: "iteration column disagrees with fit.json".into(),
                });
            }
            if t.name == POINTWISE {
                chain.pointwise = Some(t);
            } else if let Some(slot) = chain.traces.iter_mut().find(|x| x.name == t.name) {
                *slot = t;
            } else {
                return Err(GptcmError::Parse {
                    file: format!("chain{c}"),
                    msg: format!("unexpected block '{}'", t.name),
                });
            }
        }
    }
    Ok(fit)
}

/// Byte-level writer used by tests of the documented layout.
pub fn write_binary_chain(path: &Path, iterations: &[usize], traces: &[&Trace]) -> Result<()> {
    fs::File::create(path)?.write_all(&encode_binary(iterations, traces))?;
    Ok(())
}
