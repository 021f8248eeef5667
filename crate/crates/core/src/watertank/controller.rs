//! Local hysteresis controllers and the central fill arbiter.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::TankParams;

/// Request latches of every tank plus the tank chosen for filling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ControlConfig {
    /// Bit `i` set when tank `i` requests water.
    pub requests: u32,
    pub fill: Option<usize>,
}

impl ControlConfig {
    pub const IDLE: ControlConfig = ControlConfig {
        requests: 0,
        fill: None,
    };

    pub fn is_requesting(&self, tank: usize) -> bool {
        self.requests & (1 << tank) != 0
    }

    /// Every configuration the arbiter can produce for `tanks` tanks:
    /// idle, then for each non-empty request set every requesting fill
    /// target. Two tanks give five configurations.
    pub fn enumerate(tanks: usize) -> Vec<ControlConfig> {
        let mut out = vec![ControlConfig::IDLE];
        for requests in 1u32..(1 << tanks) {
            for tank in 0..tanks {
                if requests & (1 << tank) != 0 {
                    out.push(ControlConfig {
                        requests,
                        fill: Some(tank),
                    });
                }
            }
        }
        out
    }

    /// Position within [`ControlConfig::enumerate`].
    pub fn index(&self, tanks: usize) -> Option<usize> {
        ControlConfig::enumerate(tanks).iter().position(|c| c == self)
    }

    /// Short name such as `r10_f1` (requests of tank 1 and 2, fill tank 1).
    pub fn name(&self, tanks: usize) -> String {
        let bits: String = (0..tanks)
            .map(|i| if self.is_requesting(i) { '1' } else { '0' })
            .collect();
        match self.fill {
            Some(t) => format!("r{bits}_f{}", t + 1),
            None => format!("r{bits}_none"),
        }
    }
}

/// Per-tank hysteresis: request below LT, stop at or above UT, otherwise
/// keep the previous latch.
pub fn next_requests(params: &TankParams, estimates: &[f64], prev_requests: u32) -> u32 {
    let mut req = 0;
    for (i, &w) in estimates.iter().enumerate() {
        let bit = 1 << i;
        let on = if w < params.lower_threshold {
            true
        } else if w >= params.upper_threshold {
            false
        } else {
            prev_requests & bit != 0
        };
        if on {
            req |= bit;
        }
    }
    req
}

/// Distribution of the next configuration: the requesting tank with the
/// lowest estimate is filled, ties split uniformly.
pub fn control_outcomes(
    params: &TankParams,
    estimates: &[f64],
    prev_requests: u32,
) -> Vec<(ControlConfig, f64)> {
    let requests = next_requests(params, estimates, prev_requests);
    if requests == 0 {
        return vec![(ControlConfig::IDLE, 1.0)];
    }
    let lowest = (0..estimates.len())
        .filter(|i| requests & (1 << i) != 0)
        .map(|i| estimates[i])
        .fold(f64::INFINITY, f64::min);
    let tied: Vec<usize> = (0..estimates.len())
        .filter(|&i| requests & (1 << i) != 0 && estimates[i] == lowest)
        .collect();
    let p = 1.0 / tied.len() as f64;
    tied.into_iter()
        .map(|t| {
            (
                ControlConfig {
                    requests,
                    fill: Some(t),
                },
                p,
            )
        })
        .collect()
}

/// Samples the controller output; randomness is drawn only on ties.
pub fn control<R: Rng + ?Sized>(
    params: &TankParams,
    estimates: &[f64],
    prev_requests: u32,
    rng: &mut R,
) -> ControlConfig {
    let outcomes = control_outcomes(params, estimates, prev_requests);
    if outcomes.len() == 1 {
        return outcomes[0].0;
    }
    outcomes[rng.random_range(0..outcomes.len())].0
}
