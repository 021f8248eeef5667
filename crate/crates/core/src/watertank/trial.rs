//! Seeded closed-loop simulation of the tank system.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::controller::{control, ControlConfig};
use super::dynamics::{sense, step_dynamics};
use super::filter::{FilterState, UpdateStatus};
use super::params::TankParams;
use crate::pa::CategoricalDistribution;

/// Independent random stream `stream` of the campaign seeded with `master`.
pub fn trial_rng(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// Safety estimates of the three monitor variants at one timestep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorOutputs {
    pub point: f64,
    pub distribution: f64,
    pub true_state: f64,
}

/// Everything observed at timestep `t`, before the dynamics step.
#[derive(Debug, Clone, PartialEq)]
pub struct TimestepRecord {
    pub t: usize,
    pub levels: Vec<f64>,
    pub readings: Vec<f64>,
    /// Filter means after the measurement update; these drive the controller.
    pub estimates: Vec<f64>,
    /// Per-tank filter beliefs over level cells after the measurement update.
    pub beliefs: Vec<CategoricalDistribution<usize>>,
    pub degenerate: bool,
    pub config: ControlConfig,
    pub monitors: Option<MonitorOutputs>,
    /// No breach during steps `t+1 ..= t+T`; `None` when the window runs
    /// past the end of the trial.
    pub safe_next: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    pub length: usize,
    pub horizon: usize,
    pub records: Vec<TimestepRecord>,
    /// Time index of the first unsafe state, if the trial breached.
    pub breach_at: Option<usize>,
}

impl TrialTrace {
    pub fn breached(&self) -> bool {
        self.breach_at.is_some()
    }

    /// `X(t) - X̄(t)` for one tank over all recorded steps.
    pub fn estimation_errors(&self, tank: usize) -> impl Iterator<Item = f64> + '_ {
        self.records
            .iter()
            .map(move |r| r.levels[tank] - r.estimates[tank])
    }

    /// Records whose safety label is known.
    pub fn labelled(&self) -> impl Iterator<Item = (&TimestepRecord, bool)> + '_ {
        self.records
            .iter()
            .filter_map(|r| r.safe_next.map(|s| (r, s)))
    }
}

/// Draws each initial level uniformly from `[low, high]`.
pub fn sample_initial_levels<R: Rng + ?Sized>(
    params: &TankParams,
    low: f64,
    high: f64,
    rng: &mut R,
) -> Vec<f64> {
    (0..params.tanks)
        .map(|_| if high > low { rng.random_range(low..=high) } else { low })
        .collect()
}

/// Runs `length` control steps from `initial`.
///
/// Per step: sense, filter measurement update, control on the filter means,
/// record, then the dynamics step and the filter prediction. The run stops
/// at the first unsafe state.
pub fn run_trial<R: Rng + ?Sized>(
    params: &TankParams,
    initial: &[f64],
    length: usize,
    rng: &mut R,
) -> TrialTrace {
    let mut levels = initial.to_vec();
    let mut filter = FilterState::uniform(params);
    let mut requests = 0u32;
    let mut records = Vec::with_capacity(length);
    let mut breach_at = None;

    for t in 0..length {
        let readings: Vec<f64> = levels.iter().map(|&w| sense(params, w, rng)).collect();
        let status = filter.measurement_update(params, &readings);
        let estimates = filter.means(params);
        let config = control(params, &estimates, requests, rng);
        requests = config.requests;
        records.push(TimestepRecord {
            t,
            levels: levels.clone(),
            readings,
            estimates,
            beliefs: filter.tanks.iter().map(|f| f.distribution()).collect(),
            degenerate: status.contains(&UpdateStatus::Degenerate),
            config,
            monitors: None,
            safe_next: None,
        });

        let step = step_dynamics(params, &levels, config.fill);
        filter.predict(params, config.fill);
        if !params.is_safe(&step.raw_levels) {
            breach_at = Some(t + 1);
            break;
        }
        levels = step.levels;
    }

    let horizon = params.horizon;
    for r in records.iter_mut() {
        r.safe_next = match breach_at {
            Some(b) if b <= r.t + horizon => Some(false),
            _ if r.t + horizon <= length => Some(true),
            _ => None,
        };
    }
    TrialTrace {
        length,
        horizon,
        records,
        breach_at,
    }
}
