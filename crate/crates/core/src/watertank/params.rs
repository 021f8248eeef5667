use serde::{Deserialize, Serialize};

use crate::abstraction::Axis;
use crate::error::{Error, Result};

/// Which reading of the per-tank range condition makes a state safe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SafetyReading {
    /// Safe iff every tank is strictly inside `(0, TS)`.
    #[default]
    AllTanks,
    /// Safe iff at least one tank is strictly inside `(0, TS)`.
    AnyTank,
}

impl SafetyReading {
    pub fn is_safe(self, in_range: impl IntoIterator<Item = bool>) -> bool {
        let mut it = in_range.into_iter();
        match self {
            SafetyReading::AllTanks => it.all(|b| b),
            SafetyReading::AnyTank => it.any(|b| b),
        }
    }
}

/// Physical and sensing parameters of the J-tank system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TankParams {
    pub tanks: usize,
    pub tank_size: f64,
    pub inflow: f64,
    pub outflow: f64,
    pub lower_threshold: f64,
    pub upper_threshold: f64,
    pub sensor_sigma: f64,
    pub outlier_prob: f64,
    /// Safety look-ahead T, in steps.
    pub horizon: usize,
    pub safety_reading: SafetyReading,
    /// Width of the level cells shared by the filter and the abstraction.
    pub cell_width: f64,
}

impl Default for TankParams {
    fn default() -> Self {
        TankParams {
            tanks: 2,
            tank_size: 100.0,
            inflow: 13.5,
            outflow: 4.3,
            lower_threshold: 10.0,
            upper_threshold: 90.0,
            // chosen so the default campaign sees a few percent of breaches
            sensor_sigma: 8.0,
            outlier_prob: 0.1,
            horizon: 10,
            safety_reading: SafetyReading::AllTanks,
            cell_width: 1.0,
        }
    }
}

impl TankParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.tanks == 0 || self.tanks > 16 {
            return bad(format!("tank count {} must be in 1..=16", self.tanks));
        }
        if !(0.0 < self.lower_threshold
            && self.lower_threshold < self.upper_threshold
            && self.upper_threshold < self.tank_size)
        {
            return bad("thresholds must satisfy 0 < LT < UT < TS".into());
        }
        if !(self.inflow > self.outflow && self.outflow > 0.0) {
            return bad("flows must satisfy inflow > outflow > 0".into());
        }
        if !(self.sensor_sigma > 0.0 && self.sensor_sigma.is_finite()) {
            return bad(format!("sensor sigma {} must be positive", self.sensor_sigma));
        }
        if !(0.0..1.0).contains(&self.outlier_prob) {
            return bad(format!("outlier probability {} must be in [0,1)", self.outlier_prob));
        }
        self.level_axis().validate()
    }

    /// Level strictly between empty and full.
    pub fn in_range(&self, level: f64) -> bool {
        level > 0.0 && level < self.tank_size
    }

    pub fn is_safe(&self, levels: &[f64]) -> bool {
        self.safety_reading
            .is_safe(levels.iter().map(|&w| self.in_range(w)))
    }

    /// Net change of `tank` in one step when `fill` receives the inflow.
    pub fn net_flow(&self, fill: Option<usize>, tank: usize) -> f64 {
        if fill == Some(tank) {
            self.inflow - self.outflow
        } else {
            -self.outflow
        }
    }

    /// The level grid `[0, TS + w)` with cell width `w`; the last cell
    /// starts at TS and so holds only overflow.
    pub fn level_axis(&self) -> Axis {
        Axis {
            lower: 0.0,
            upper: self.tank_size + self.cell_width,
            width: self.cell_width,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        TankParams::default().validate().unwrap();
    }

    #[test]
    fn invalid_params() {
        let p = TankParams {
            lower_threshold: 95.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = TankParams {
            inflow: 1.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = TankParams {
            sensor_sigma: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = TankParams {
            outlier_prob: 1.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = TankParams {
            cell_width: 0.3,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = TankParams {
            cell_width: 0.5,
            ..Default::default()
        };
        assert_eq!(p.level_axis().cells(), 201);
    }

    #[test]
    fn safety_readings() {
        let p = TankParams::default();
        assert!(p.is_safe(&[50.0, 50.0]));
        assert!(!p.is_safe(&[0.0, 50.0]));
        assert!(!p.is_safe(&[50.0, 100.0]));
        let any = TankParams {
            safety_reading: SafetyReading::AnyTank,
            ..Default::default()
        };
        assert!(any.is_safe(&[0.0, 50.0]));
        assert!(!any.is_safe(&[-1.0, 100.0]));
    }
}
