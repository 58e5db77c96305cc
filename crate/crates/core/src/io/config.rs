//! Job configuration file.
//!
//! A JSON object; every key is optional and unknown keys are rejected.
//!
//! ```json
//! {
//!   "preset": "low-dim",
//!   "simulation": { "n": 200, "p": 10, "seed": 1, ... },
//!   "replicate": 0,
//!   "variant": "MRF2",
//!   "hyper": { "a_tau": 5.0, "b_tau": 20.0, "s": 0.1, ... },
//!   "mrf_b": 0.2,
//!   "run": { "n_iterations": 25000, "n_warmup": 5000, "n_chains": 1, "seed": 1, ... },
//!   "store_format": "csv",
//!   "prediction": { "mode": "mpm", "grid_points": 50, "grid_quantile": 0.8 },
//!   "mpm_threshold": 0.5
//! }
//! ```
//!
//! `simulation` keys override the chosen `preset` (default `low-dim`);
//! `run` and `hyper` keys override the defaults. Command-line flags are
//! applied on top of the loaded file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::chains::StoreFormat;
use crate::error::{GptcmError, Result};
use crate::evaluation::PredictionMode;
use crate::mcmc::RunConfig;
use crate::model::types::{HyperParams, ModelSpec, MrfGraph, Selection, Variant};
use crate::simulation::SimConfig;

pub const DEFAULT_MRF_B: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictionConfig {
    /// `None` picks MPM for selection variants and posterior means otherwise.
    pub mode: Option<PredictionMode>,
    pub grid_points: usize,
    /// Grid runs from 0 to this quantile of the evaluation times.
    pub grid_quantile: f64,
}

impl Default for PredictionConfig {
    fn default() -> Self {
        Self {
            mode: None,
            grid_points: 50,
            grid_quantile: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobConfig {
    pub preset: Option<String>,
    /// Partial simulation settings merged over the preset.
    pub simulation: Option<serde_json::Value>,
    pub replicate: u64,
    pub variant: Variant,
    pub hyper: HyperParams,
    /// MRF coupling strength; the sparsity term is `logit(hyper.s)`.
    pub mrf_b: f64,
    pub run: RunConfig,
    pub store_format: StoreFormat,
    pub prediction: PredictionConfig,
    pub mpm_threshold: f64,
}

impl Default for JobConfig {
    fn default() -> Self {
        Self {
            preset: None,
            simulation: None,
            replicate: 0,
            variant: Variant::Mrf2,
            hyper: HyperParams::default(),
            mrf_b: DEFAULT_MRF_B,
            run: RunConfig::default(),
            store_format: StoreFormat::Csv,
            prediction: PredictionConfig::default(),
            mpm_threshold: 0.5,
        }
    }
}

impl JobConfig {
    /// Reads a config file, or the `config` entry of a run manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| GptcmError::Config(format!("{}: {e}", path.display())))?;
        let text = match value.get("config_hash").and(value.get("config")) {
            Some(inner) => inner.to_string(),
            None => text,
        };
        Self::from_json(&text).map_err(|e| match e {
            GptcmError::Config(msg) => GptcmError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: JobConfig = serde_json::from_str(text).map_err(|e| GptcmError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        self.run.validate()?;
        let mut errs = Vec::new();
        if !(self.mrf_b >= 0.0 && self.mrf_b.is_finite()) {
            errs.push(format!("mrf_b must be finite and non-negative, got {}", self.mrf_b));
        }
        if !(self.mpm_threshold > 0.0 && self.mpm_threshold < 1.0) {
            errs.push(format!("mpm_threshold must lie in (0, 1), got {}", self.mpm_threshold));
        }
        if self.prediction.grid_points < 2 {
            errs.push("prediction.grid_points must be at least 2".into());
        }
        let q = self.prediction.grid_quantile;
        if !(q > 0.0 && q <= 1.0) {
            errs.push(format!("prediction.grid_quantile must lie in (0, 1], got {q}"));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(GptcmError::Config(errs.join("; ")))
        }
    }

    /// The simulation settings: preset, then `simulation` overrides.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let base = SimConfig::preset(self.preset.as_deref().unwrap_or("low-dim"))?;
        let cfg = match &self.simulation {
            None => base,
            Some(over) => {
                let serde_json::Value::Object(over) = over else {
                    return Err(GptcmError::Config("'simulation' must be a JSON object".into()));
                };
                let mut merged = serde_json::to_value(&base)?;
                let obj = merged.as_object_mut().expect("SimConfig serializes to an object");
                for (k, v) in over {
                    if !obj.contains_key(k) {
                        return Err(GptcmError::Config(format!("unknown simulation key '{k}'")));
                    }
                    obj.insert(k.clone(), v.clone());
                }
                serde_json::from_value(merged).map_err(|e| GptcmError::Config(format!("simulation: {e}")))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Model specification for the configured variant. MRF variants need
    /// the coefficient graph; the variant-2 models reuse it for ζ.
    pub fn spec(&self, graph: Option<&MrfGraph>) -> Result<ModelSpec> {
        let spec = ModelSpec::new(self.variant).with_hyper(self.hyper.clone());
        if self.variant.selection() != Selection::Mrf {
            return Ok(spec);
        }
        let g = graph
            .ok_or_else(|| {
                GptcmError::Config(format!("{} needs an MRF graph (graph.csv in the dataset bundle)", self.variant))
            })?
            .with_scalars(self.hyper.mrf_sparsity(), self.mrf_b);
        let gz = self.variant.has_measurement_error().then(|| g.clone());
        let spec = spec.with_graphs(Some(g), gz);
        spec.validate()?;
        Ok(spec)
    }

    pub fn prediction_mode(&self) -> PredictionMode {
        self.prediction.mode.unwrap_or_else(|| PredictionMode::default_for(self.variant))
    }

    /// SHA-256 of the compact JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex(&Sha256::digest(json.as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
