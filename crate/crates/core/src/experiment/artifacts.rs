//! File names, provenance stamps and (de)serialization of run artifacts.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::abstraction::{AbstractLayout, ErrorModel, Grid};
use crate::model_check::{OptMode, SafetyTable};
use crate::watertank::TankParams;
use crate::{Error, Result};

pub const ERROR_MODEL_JSON: &str = "error_model.json";
pub const ERROR_HISTOGRAM_CSV: &str = "error_histogram.csv";
pub const ABSTRACT_JSON: &str = "abstract_system.json";
pub const ABSTRACT_PA: &str = "abstract_system.pa";
pub const TABLE_CSV: &str = "safety_table.csv";
pub const TABLE_JSON: &str = "safety_table.json";
pub const TRACES_CSV: &str = "traces.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const PER_TRIAL_CSV: &str = "summary_per_trial.csv";
pub const ESTIMATOR_JSON: &str = "estimator_calibration.json";
pub const ESTIMATOR_CSV: &str = "estimator_reliability.csv";
pub const REPORT_MD: &str = "report.md";
pub const PRISM_MODEL: &str = "model.prism";
pub const PRISM_PROPS: &str = "model.props";

pub fn reliability_csv(variant: &str) -> String {
    format!("reliability_{variant}.csv")
}

pub fn roc_csv(variant: &str) -> String {
    format!("roc_{variant}.csv")
}

/// Where an artifact came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(cfg: &ExperimentConfig, command: &str) -> Self {
        Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
        }
    }

    /// First line of every CSV and text artifact.
    pub fn comment(&self, prefix: &str) -> String {
        format!(
            "{prefix} safemon {} {} config_hash={} seed={}\n",
            self.version, self.command, self.config_hash, self.seed
        )
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::Artifact {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorModelArtifact {
    pub provenance: Provenance,
    pub tank: TankParams,
    pub models: Vec<ErrorModel>,
}

/// Grid metadata that lets a reader map concrete states to table rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub dims: usize,
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
    pub cell_counts: Vec<usize>,
}

impl GridMeta {
    pub fn of(grid: &Grid) -> Self {
        let a = &grid.axes[0];
        GridMeta {
            dims: grid.dims(),
            lower: a.lower,
            upper: a.upper,
            width: a.width,
            cell_counts: grid.cell_counts(),
        }
    }
}

/// Sidecar of the safety table CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSidecar {
    pub provenance: Provenance,
    pub horizon: usize,
    pub mode: OptMode,
    pub num_states: usize,
    pub num_actions: usize,
    pub num_transitions: usize,
    pub num_entries: usize,
    pub unsafe_states: usize,
    pub grid: GridMeta,
    /// Action id `i` is configuration `config_names[i]`; state ids are
    /// `flat(cell) * num_configs + config`.
    pub config_names: Vec<String>,
    pub tank: TankParams,
}

impl TableSidecar {
    pub fn layout(&self) -> AbstractLayout {
        AbstractLayout {
            cell_counts: self.grid.cell_counts.clone(),
            config_names: self.config_names.clone(),
        }
    }
}

/// Sidecar path next to a table CSV.
pub fn sidecar_path(table_csv: &Path) -> PathBuf {
    table_csv.with_extension("json")
}

pub fn load_table(table_csv: &Path) -> Result<(SafetyTable, TableSidecar)> {
    let side: TableSidecar = read_json(&sidecar_path(table_csv))?;
    let f = fs::File::open(table_csv).map_err(|e| Error::io(table_csv, e))?;
    let table = SafetyTable::read_csv(BufReader::new(f), side.num_states, side.horizon, side.mode)?;
    if table.len() != side.num_entries {
        return Err(Error::Artifact {
            path: table_csv.to_path_buf(),
            msg: format!("{} entries, sidecar says {}", table.len(), side.num_entries),
        });
    }
    Ok((table, side))
}
