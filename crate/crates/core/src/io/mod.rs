//! File formats: dataset bundles, chain stores, summaries, run manifests
//! and job configuration.

pub mod chains;
pub mod config;
pub mod dataset;
pub mod manifest;
pub mod report;

pub use chains::{read_fit, write_fit, StoreFormat};
pub use config::JobConfig;
pub use dataset::{read_dataset, read_graph, write_dataset, write_graph, DatasetMeta};
pub use manifest::{sha256_file, verify_manifest, FileDigest, RunManifest};
pub use report::{write_brier, write_recovery, write_summary};

use std::fs;
use std::path::Path;

use crate::error::{GptcmError, Result};

/// 17 significant digits; parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV file read as strings.
#[derive(Debug, Clone)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table(path: &Path) -> Result<Table> {
    let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let mut r = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(GptcmError::Parse {
                file,
                msg: format!("row {i} has {} fields, header has {}", rec.len(), header.len()),
            });
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(Table { file, header, rows })
}
