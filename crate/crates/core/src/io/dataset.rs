//! Dataset bundle: a directory with
//!
//! - `survival.csv`: columns `time,event,clinical1..clinicald`, event 0/1;
//! - `X1.csv` … `XL.csv`: one covariate block per cell type, columns `x1..xp`;
//! - `proportions.csv`: columns `type1..typeL`;
//! - `dataset.json`: `{"n", "d", "p": [p_1, …], "n_types"}`;
//! - `graph.csv` (optional): MRF edges `from,to,weight` with 0-based
//!   stacked indices `l·p + j`.
//!
//! Floats are written with 17 significant digits so a write → read → write
//! cycle is byte-identical.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{fmt_f64, read_table, write_table, Table};
use crate::error::{GptcmError, Result};
use crate::model::types::{MrfGraph, SurvivalDataset};

pub const SURVIVAL_FILE: &str = "survival.csv";
pub const PROPORTIONS_FILE: &str = "proportions.csv";
pub const META_FILE: &str = "dataset.json";
pub const GRAPH_FILE: &str = "graph.csv";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub n: usize,
    pub d: usize,
    pub p: Vec<usize>,
    pub n_types: usize,
}

fn block_file(l: usize) -> String {
    format!("X{}.csv", l + 1)
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<String>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect())
        .collect()
}

pub fn write_dataset(ds: &SurvivalDataset, dir: &Path) -> Result<()> {
    ds.validate()?;
    fs::create_dir_all(dir)?;
    let d = ds.d();
    let mut header = vec!["time".to_string(), "event".to_string()];
    header.extend((1..=d).map(|k| format!("clinical{k}")));
    let rows: Vec<Vec<String>> = (0..ds.n())
        .map(|i| {
            let mut r = vec![fmt_f64(ds.time[i]), if ds.event[i] { "1" } else { "0" }.to_string()];
            r.extend((0..d).map(|k| fmt_f64(ds.clinical[(i, k)])));
            r
        })
        .collect();
    write_table(&dir.join(SURVIVAL_FILE), &header, &rows)?;
    for (l, x) in ds.cell_covariates.iter().enumerate() {
        let header: Vec<String> = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        write_table(&dir.join(block_file(l)), &header, &matrix_rows(x))?;
    }
    let header: Vec<String> = (1..=ds.n_types()).map(|l| format!("type{l}")).collect();
    write_table(&dir.join(PROPORTIONS_FILE), &header, &matrix_rows(&ds.proportions))?;
    let meta = DatasetMeta {
        n: ds.n(),
        d,
        p: ds.p_per_type(),
        n_types: ds.n_types(),
    };
    fs::write(dir.join(META_FILE), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

/// Parses every cell, collecting one message per bad cell.
fn numeric(t: &Table, errs: &mut Vec<String>) -> Vec<Vec<f64>> {
    t.rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .enumerate()
                .map(|(j, cell)| match cell.trim().parse::<f64>() {
                    Ok(v) => v,
                    Err(_) => {
                        errs.push(format!(
                            "{} row {i} column '{}': cannot parse '{cell}' as a number",
                            t.file, t.header[j]
                        ));
                        f64::NAN
                    }
                })
                .collect()
        })
        .collect()
}

fn check_header(t: &Table, expected: &[String], errs: &mut Vec<String>) {
    if t.header.len() != expected.len() {
        errs.push(format!(
            "{}: {} columns, expected {} ({})",
            t.file,
            t.header.len(),
            expected.len(),
            expected.join(",")
        ));
        return;
    }
    for (got, want) in t.header.iter().zip(expected) {
        if got.trim() != want {
            errs.push(format!("{}: column '{got}' where '{want}' was expected", t.file));
        }
    }
}

fn to_matrix(rows: &[Vec<f64>], ncols: usize, skip: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i].get(skip + j).copied().unwrap_or(f64::NAN))
}

/// Reads and validates a bundle; all schema problems are reported together.
pub fn read_dataset(dir: &Path) -> Result<SurvivalDataset> {
    let meta_path = dir.join(META_FILE);
    let meta: DatasetMeta = match fs::read_to_string(&meta_path) {
        Ok(s) => serde_json::from_str(&s).map_err(|e| GptcmError::Parse {
            file: meta_path.display().to_string(),
            msg: e.to_string(),
        })?,
        Err(e) => {
            return Err(GptcmError::InvalidData(vec![format!(
                "missing {META_FILE} in {}: {e}",
                dir.display()
            )]))
        }
    };
    let mut errs = Vec::new();
    if meta.p.len() != meta.n_types {
        errs.push(format!(
            "{META_FILE}: {} covariate counts for {} cell types",
            meta.p.len(),
            meta.n_types
        ));
    }
    let load = |name: &str, what: &str, errs: &mut Vec<String>| -> Option<Table> {
        let path = dir.join(name);
        if !path.exists() {
            errs.push(format!("missing {name} ({what})"));
            return None;
        }
        match read_table(&path) {
            Ok(t) => Some(t),
            Err(e) => {
                errs.push(format!("{name}: {e}"));
                None
            }
        }
    };
    let check_rows = |t: &Table, errs: &mut Vec<String>| {
        if t.rows.len() != meta.n {
            errs.push(format!("{}: {} rows, {META_FILE} declares n = {}", t.file, t.rows.len(), meta.n));
        }
    };

    let mut time = Vec::new();
    let mut event = Vec::new();
    let mut clinical = DMatrix::zeros(0, meta.d);
    if let Some(t) = load(SURVIVAL_FILE, "survival times, events and clinical covariates", &mut errs) {
        let mut header = vec!["time".to_string(), "event".to_string()];
        header.extend((1..=meta.d).map(|k| format!("clinical{k}")));
        check_header(&t, &header, &mut errs);
        check_rows(&t, &mut errs);
        let vals = numeric(&t, &mut errs);
        for (i, r) in vals.iter().enumerate() {
            time.push(r.first().copied().unwrap_or(f64::NAN));
            let e = r.get(1).copied().unwrap_or(f64::NAN);
            if e != 0.0 && e != 1.0 {
                errs.push(format!("{SURVIVAL_FILE} row {i} column 'event': {e} is not 0 or 1"));
            }
            event.push(e == 1.0);
        }
        clinical = to_matrix(&vals, meta.d, 2);
    }
    let mut blocks = Vec::new();
    for l in 0..meta.n_types {
        let name = block_file(l);
        let what = format!("covariate block of cell type {}", l + 1);
        if let Some(t) = load(&name, &what, &mut errs) {
            let pl = meta.p.get(l).copied().unwrap_or(t.header.len());
            let header: Vec<String> = (1..=pl).map(|j| format!("x{j}")).collect();
            check_header(&t, &header, &mut errs);
            check_rows(&t, &mut errs);
            let vals = numeric(&t, &mut errs);
            blocks.push(to_matrix(&vals, pl, 0));
        }
    }
    let mut proportions = DMatrix::zeros(0, meta.n_types);
    if let Some(t) = load(PROPORTIONS_FILE, "cell-type proportions", &mut errs) {
        let header: Vec<String> = (1..=meta.n_types).map(|l| format!("type{l}")).collect();
        check_header(&t, &header, &mut errs);
        check_rows(&t, &mut errs);
        proportions = to_matrix(&numeric(&t, &mut errs), meta.n_types, 0);
    }
    if !errs.is_empty() {
        return Err(GptcmError::InvalidData(errs));
    }
    let ds = SurvivalDataset {
        time,
        event,
        clinical,
        cell_covariates: blocks,
        proportions,
    };
    ds.validate()?;
    Ok(ds)
}

pub fn write_graph(g: &MrfGraph, path: &Path) -> Result<()> {
    let header = ["from".to_string(), "to".to_string(), "weight".to_string()];
    let rows: Vec<Vec<String>> = g
        .edges()
        .iter()
        .map(|&(u, v, w)| vec![u.to_string(), v.to_string(), fmt_f64(w)])
        .collect();
    write_table(path, &header, &rows)
}

/// Reads an edge list for a graph over `dim` stacked coefficients.
pub fn read_graph(path: &Path, dim: usize, a: f64, b: f64) -> Result<MrfGraph> {
    let t = read_table(path)?;
    let mut errs = Vec::new();
    check_header(&t, &["from".into(), "to".into(), "weight".into()], &mut errs);
    let mut edges = Vec::new();
    for (i, r) in t.rows.iter().enumerate() {
        let idx = |k: usize, errs: &mut Vec<String>| match r.get(k).map(|c| c.trim().parse::<usize>()) {
            Some(Ok(v)) => Some(v),
            _ => {
                errs.push(format!("{} row {i} column '{}': expected a node index", t.file, t.header[k]));
                None
            }
        };
        let u = idx(0, &mut errs);
        let v = idx(1, &mut errs);
        let w = match r.get(2).map(|c| c.trim().parse::<f64>()) {
            Some(Ok(w)) => Some(w),
            _ => {
                errs.push(format!("{} row {i} column 'weight': expected a number", t.file));
                None
            }
        };
        if let (Some(u), Some(v), Some(w)) = (u, v, w) {
            edges.push((u, v, w));
        }
    }
    if !errs.is_empty() {
        return Err(GptcmError::InvalidData(errs));
    }
    MrfGraph::new(dim, &edges, a, b)
}
