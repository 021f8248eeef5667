use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::watertank::TrialTrace;

/// One histogram bin `[lower, upper)` of estimation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBin {
    /// Bin index: the bin covers `[(index - 1/2) w, (index + 1/2) w)`.
    pub index: i64,
    pub lower: f64,
    pub upper: f64,
    pub probability: f64,
}

impl ErrorBin {
    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Categorical model of the estimation error `X(t) - X̄(t)` of one state
/// dimension, on bins of equal width centred on multiples of the width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub bin_width: f64,
    pub samples: usize,
    pub bins: Vec<ErrorBin>,
}

impl ErrorModel {
    /// Normalized histogram of `errors`; empty bins are dropped.
    pub fn from_errors(errors: impl IntoIterator<Item = f64>, bin_width: f64) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(Error::InvalidParams(format!("bin width {bin_width} must be positive")));
        }
        let mut counts = std::collections::BTreeMap::<i64, usize>::new();
        let mut n = 0usize;
        for e in errors {
            if !e.is_finite() {
                return Err(Error::InvalidParams(format!("non-finite error sample {e}")));
            }
            let idx = (e / bin_width + 0.5).floor() as i64;
            *counts.entry(idx).or_default() += 1;
            n += 1;
        }
        if n == 0 {
            return Err(Error::NoSamples);
        }
        let bins = counts
            .into_iter()
            .map(|(index, c)| ErrorBin {
                index,
                lower: (index as f64 - 0.5) * bin_width,
                upper: (index as f64 + 0.5) * bin_width,
                probability: c as f64 / n as f64,
            })
            .collect();
        Ok(ErrorModel {
            bin_width,
            samples: n,
            bins,
        })
    }

    /// All mass on the zero-error bin.
    pub fn exact(bin_width: f64) -> Self {
        ErrorModel {
            bin_width,
            samples: 0,
            bins: vec![ErrorBin {
                index: 0,
                lower: -0.5 * bin_width,
                upper: 0.5 * bin_width,
                probability: 1.0,
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.bins.iter().map(|b| b.probability).sum();
        if self.bins.is_empty() || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!("error model mass {total}")));
        }
        if self.bins.windows(2).any(|w| w[0].index >= w[1].index) {
            return Err(Error::InvalidParams("error bins must be ordered and disjoint".into()));
        }
        if self.bins.iter().any(|b| b.probability <= 0.0) {
            return Err(Error::InvalidParams("error bins must carry positive mass".into()));
        }
        Ok(())
    }

    /// `(bin centre, probability)` pairs.
    pub fn support(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.bins
            .iter()
            .map(move |b| (b.index as f64 * self.bin_width, b.probability))
    }

    pub fn mean(&self) -> f64 {
        self.support().map(|(c, p)| c * p).sum()
    }
}

/// One error model per tank, estimated from `X(t) - X̄(t)` over every
/// recorded timestep of every trace.
pub fn estimate_error_model(traces: &[TrialTrace], bin_width: f64) -> Result<Vec<ErrorModel>> {
    let tanks = traces
        .iter()
        .find_map(|t| t.records.first().map(|r| r.levels.len()))
        .ok_or(Error::NoSamples)?;
    (0..tanks)
        .map(|i| ErrorModel::from_errors(traces.iter().flat_map(|t| t.estimation_errors(i)), bin_width))
        .collect()
}
