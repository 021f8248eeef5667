//! Discrete Bayesian (histogram) filter over the unit level grid.
//!
//! Cell `k` stands for the true level lying in `[k, k+1)`. The measurement
//! update evaluates the sensor likelihood at cell midpoints; the prediction
//! shifts mass by the known net flow, splitting each cell's mass between the
//! two cells its shifted interval overlaps. Mass pushed past either end of
//! the grid accumulates in the boundary cell.

use crate::abstraction::Axis;
use crate::pa::CategoricalDistribution;

use super::params::TankParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateStatus {
    Updated,
    /// Every cell had zero likelihood; the prior was kept.
    Degenerate,
}

/// Log-likelihood of `reading` when the true level is `level`.
fn log_likelihood(params: &TankParams, level: f64, reading: f64) -> f64 {
    let q = params.outlier_prob;
    let sigma = params.sensor_sigma;
    if reading <= 0.0 {
        let below = normal_cdf((0.0 - level) / sigma);
        (0.5 * q + (1.0 - q) * below).ln()
    } else if reading >= params.tank_size {
        let above = normal_cdf((level - params.tank_size) / sigma);
        (0.5 * q + (1.0 - q) * above).ln()
    } else {
        let z = (reading - level) / sigma;
        (1.0 - q).ln() - 0.5 * z * z - sigma.ln()
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Belief over the level cells of one tank.
#[derive(Debug, Clone, PartialEq)]
pub struct TankFilter {
    axis: Axis,
    probs: Vec<f64>,
}

impl TankFilter {
    pub fn uniform(axis: Axis) -> Self {
        let n = axis.cells();
        TankFilter {
            axis,
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point(axis: Axis, cell: usize) -> Self {
        let mut probs = vec![0.0; axis.cells()];
        probs[cell] = 1.0;
        TankFilter { axis, probs }
    }

    /// Filter with explicit cell probabilities (normalized on entry).
    pub fn from_probs(axis: Axis, probs: Vec<f64>) -> Self {
        assert_eq!(probs.len(), axis.cells());
        let total: f64 = probs.iter().sum();
        TankFilter {
            axis,
            probs: probs.into_iter().map(|p| p / total).collect(),
        }
    }

    pub fn axis(&self) -> &Axis {
        &self.axis
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Bayes rule with the outlier-aware sensor likelihood.
    pub fn measurement_update(&mut self, params: &TankParams, reading: f64) -> UpdateStatus {
        let logs: Vec<f64> = self
            .probs
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                if p > 0.0 {
                    let level = self.axis.midpoint(k).clamp(0.0, params.tank_size);
                    p.ln() + log_likelihood(params, level, reading)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return UpdateStatus::Degenerate;
        }
        let weights: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        for (p, w) in self.probs.iter_mut().zip(weights) {
            *p = w / total;
        }
        UpdateStatus::Updated
    }

    /// Shifts the belief by `delta` level units.
    pub fn predict(&mut self, delta: f64) {
        let steps = delta / self.axis.width;
        let whole = steps.floor();
        let frac = steps - whole;
        let whole = whole as i64;
        let last = self.probs.len() as i64 - 1;
        let mut next = vec![0.0; self.probs.len()];
        for (k, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let lo = (k as i64 + whole).clamp(0, last) as usize;
            next[lo] += p * (1.0 - frac);
            if frac > 0.0 {
                let hi = (k as i64 + whole + 1).clamp(0, last) as usize;
                next[hi] += p * frac;
            }
        }
        let total: f64 = next.iter().sum();
        for p in next.iter_mut() {
            *p /= total;
        }
        self.probs = next;
    }

    /// Mean over cell midpoints, clamped to `[0, TS]`.
    pub fn mean(&self, params: &TankParams) -> f64 {
        let m: f64 = self
            .probs
            .iter()
            .enumerate()
            .map(|(k, p)| p * self.axis.midpoint(k))
            .sum();
        m.clamp(0.0, params.tank_size)
    }

    pub fn distribution(&self) -> CategoricalDistribution<usize> {
        CategoricalDistribution::from_weights(self.probs.iter().copied().enumerate())
            .expect("filter keeps positive mass")
    }
}

/// Beliefs of all tanks.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub tanks: Vec<TankFilter>,
}

impl FilterState {
    pub fn uniform(params: &TankParams) -> Self {
        FilterState {
            tanks: vec![TankFilter::uniform(params.level_axis()); params.tanks],
        }
    }

    pub fn measurement_update(&mut self, params: &TankParams, readings: &[f64]) -> Vec<UpdateStatus> {
        self.tanks
            .iter_mut()
            .zip(readings)
            .map(|(f, &r)| f.measurement_update(params, r))
            .collect()
    }

    pub fn predict(&mut self, params: &TankParams, fill: Option<usize>) {
        for (i, f) in self.tanks.iter_mut().enumerate() {
            f.predict(params.net_flow(fill, i));
        }
    }

    pub fn means(&self, params: &TankParams) -> Vec<f64> {
        self.tanks.iter().map(|f| f.mean(params)).collect()
    }
}

/// Measurement update with `readings` followed by the prediction for `fill`.
pub fn filter_update(
    fs: &FilterState,
    params: &TankParams,
    readings: &[f64],
    fill: Option<usize>,
) -> (FilterState, Vec<UpdateStatus>) {
    let mut next = fs.clone();
    let status = next.measurement_update(params, readings);
    next.predict(params, fill);
    (next, status)
}
