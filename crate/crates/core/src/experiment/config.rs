use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model_check::OptMode;
use crate::watertank::TankParams;
use crate::{Error, Result};

/// Trials used to estimate the perception-error model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSpec {
    pub trials: usize,
    pub length: usize,
    pub bin_width: f64,
    pub initial_low: f64,
    pub initial_high: f64,
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        CalibrationSpec {
            trials: 100,
            length: 50,
            bin_width: 1.0,
            initial_low: 40.0,
            initial_high: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSpec {
    pub mode: OptMode,
}

impl Default for CheckSpec {
    fn default() -> Self {
        CheckSpec { mode: OptMode::Min }
    }
}

/// Monitored trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSpec {
    pub trials: usize,
    pub length: usize,
    pub initial_low: f64,
    pub initial_high: f64,
}

impl Default for CampaignSpec {
    fn default() -> Self {
        CampaignSpec {
            trials: 500,
            length: 50,
            initial_low: 40.0,
            initial_high: 60.0,
        }
    }
}

/// Everything that determines the experiment's results. Output location
/// and worker count are run options and deliberately not part of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub tank: TankParams,
    pub calibration: CalibrationSpec,
    pub check: CheckSpec,
    pub campaign: CampaignSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 2023,
            tank: TankParams::default(),
            calibration: CalibrationSpec::default(),
            check: CheckSpec::default(),
            campaign: CampaignSpec::default(),
        }
    }
}

fn check_range(what: &str, low: f64, high: f64, tank: &TankParams) -> Result<()> {
    if !(low.is_finite() && high.is_finite() && 0.0 < low && low <= high && high < tank.tank_size) {
        return Err(Error::Config(format!(
            "{what} initial range [{low}, {high}] must lie inside (0, {})",
            tank.tank_size
        )));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.tank.validate()?;
        let c = &self.calibration;
        if c.trials == 0 || c.length == 0 {
            return Err(Error::Config("calibration needs at least one step".into()));
        }
        if !(c.bin_width > 0.0 && c.bin_width.is_finite()) {
            return Err(Error::Config(format!("bin width {} must be positive", c.bin_width)));
        }
        check_range("calibration", c.initial_low, c.initial_high, &self.tank)?;
        let r = &self.campaign;
        if r.trials == 0 || r.length == 0 {
            return Err(Error::Config("campaign needs at least one step".into()));
        }
        check_range("campaign", r.initial_low, r.initial_high, &self.tank)?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, in hex.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
