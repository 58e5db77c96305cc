//! Summary and metric tables.
//!
//! Missing values are written as `NA`.

use std::fs;
use std::path::Path;

use super::{fmt_f64, write_table};
use crate::error::Result;
use crate::evaluation::{integrated_brier, BrierPoint, PosteriorSummary, RecoveryReport, SelectionMetrics};

pub const SUMMARY_FILE: &str = "summary.json";
pub const COEFFICIENTS_FILE: &str = "coefficients.csv";
pub const INDICATORS_FILE: &str = "indicators.csv";
pub const BRIER_FILE: &str = "brier.csv";
pub const INTEGRATED_BRIER_FILE: &str = "integrated_brier.csv";
pub const RMSE_FILE: &str = "rmse.csv";
pub const SELECTION_FILE: &str = "selection.csv";

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_else(|| "NA".into())
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// Writes `summary.json`, `coefficients.csv` and `indicators.csv`.
pub fn write_summary(s: &PosteriorSummary, dir: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(SUMMARY_FILE), serde_json::to_string_pretty(s)? + "\n")?;
    let rows: Vec<Vec<String>> = s
        .parameters
        .iter()
        .map(|p| vec![p.name.clone(), fmt_f64(p.mean), fmt_f64(p.sd), fmt_f64(p.lower), fmt_f64(p.upper)])
        .collect();
    write_table(
        &dir.join(COEFFICIENTS_FILE),
        &header(&["name", "mean", "sd", "lower95", "upper95"]),
        &rows,
    )?;
    let rows: Vec<Vec<String>> = s
        .indicators
        .iter()
        .map(|i| {
            vec![
                i.name.clone(),
                fmt_f64(i.mpip),
                u8::from(i.selected).to_string(),
                fmt_f64(i.conditional_mean),
            ]
        })
        .collect();
    write_table(
        &dir.join(INDICATORS_FILE),
        &header(&["name", "mpip", "selected", "mpm_coefficient"]),
        &rows,
    )?;
    Ok(vec![SUMMARY_FILE.into(), COEFFICIENTS_FILE.into(), INDICATORS_FILE.into()])
}

/// Writes `brier.csv` (model, time, score, reliable) and
/// `integrated_brier.csv` (model, integrated score) for labelled models.
pub fn write_brier(models: &[(String, Vec<BrierPoint>)], dir: &Path) -> Result<Vec<String>> {
    let mut rows = Vec::new();
    let mut totals = Vec::new();
    for (label, points) in models {
        for p in points {
            rows.push(vec![label.clone(), fmt_f64(p.time), opt(p.score), u8::from(p.reliable).to_string()]);
        }
        totals.push(vec![label.clone(), opt(integrated_brier(points))]);
    }
    write_table(&dir.join(BRIER_FILE), &header(&["model", "time", "brier", "reliable"]), &rows)?;
    write_table(&dir.join(INTEGRATED_BRIER_FILE), &header(&["model", "integrated_brier"]), &totals)?;
    Ok(vec![BRIER_FILE.into(), INTEGRATED_BRIER_FILE.into()])
}

fn selection_row(model: &str, block: &str, m: &SelectionMetrics) -> Vec<String> {
    vec![
        model.to_string(),
        block.to_string(),
        fmt_f64(m.accuracy),
        opt(m.sensitivity),
        opt(m.specificity),
        m.true_positives.to_string(),
        m.false_positives.to_string(),
        m.true_negatives.to_string(),
        m.false_negatives.to_string(),
    ]
}

/// Writes `rmse.csv` and `selection.csv` for labelled models.
pub fn write_recovery(models: &[(String, RecoveryReport)], dir: &Path) -> Result<Vec<String>> {
    let mut rmse = Vec::new();
    let mut selection = Vec::new();
    for (label, r) in models {
        rmse.push(vec![label.clone(), "beta".to_string(), fmt_f64(r.beta_rmse)]);
        rmse.push(vec![label.clone(), "zeta".to_string(), opt(r.zeta_rmse)]);
        if let Some(g) = &r.gamma {
            selection.push(selection_row(label, "gamma", g));
        }
        if let Some(e) = &r.eta {
            selection.push(selection_row(label, "eta", e));
        }
    }
    write_table(&dir.join(RMSE_FILE), &header(&["model", "block", "scaled_rmse"]), &rmse)?;
    write_table(
        &dir.join(SELECTION_FILE),
        &header(&["model", "block", "accuracy", "sensitivity", "specificity", "tp", "fp", "tn", "fn"]),
        &selection,
    )?;
    Ok(vec![RMSE_FILE.into(), SELECTION_FILE.into()])
}
