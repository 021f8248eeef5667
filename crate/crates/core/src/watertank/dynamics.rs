use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::params::TankParams;

/// Result of one dynamics step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Levels clamped to `[0, TS]`.
    pub levels: Vec<f64>,
    /// Levels before clamping.
    pub raw_levels: Vec<f64>,
    /// Per tank: the raw level left `(0, TS)`.
    pub breached: Vec<bool>,
}

impl StepOutcome {
    pub fn any_breach(&self) -> bool {
        self.breached.iter().any(|&b| b)
    }
}

/// `w_i[t+1] = w_i[t] - out + in_i[t]`, with `in_i` non-zero only for the
/// filled tank.
pub fn step_dynamics(params: &TankParams, levels: &[f64], fill: Option<usize>) -> StepOutcome {
    let raw_levels: Vec<f64> = levels
        .iter()
        .enumerate()
        .map(|(i, &w)| w + params.net_flow(fill, i))
        .collect();
    let breached = raw_levels.iter().map(|&w| !params.in_range(w)).collect();
    let levels = raw_levels
        .iter()
        .map(|&w| w.clamp(0.0, params.tank_size))
        .collect();
    StepOutcome {
        levels,
        raw_levels,
        breached,
    }
}

/// One noisy sensor reading: with probability `outlier_prob` a saturated
/// value (0 or TS with equal chance), otherwise the level plus Gaussian
/// noise, clamped to `[0, TS]`.
pub fn sense<R: Rng + ?Sized>(params: &TankParams, level: f64, rng: &mut R) -> f64 {
    if params.outlier_prob > 0.0 && rng.random::<f64>() < params.outlier_prob {
        return if rng.random::<bool>() { 0.0 } else { params.tank_size };
    }
    let noise = Normal::new(0.0, params.sensor_sigma)
        .expect("validated sigma")
        .sample(rng);
    (level + noise).clamp(0.0, params.tank_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fill_one_tank() {
        let p = TankParams::default();
        let out = step_dynamics(&p, &[50.0, 50.0], Some(0));
        assert!((out.levels[0] - 59.2).abs() < 1e-12);
        assert!((out.levels[1] - 45.7).abs() < 1e-12);
        assert!(!out.any_breach());
    }

    #[test]
    fn underflow_is_flagged_and_clamped() {
        let p = TankParams::default();
        let out = step_dynamics(&p, &[3.0, 50.0], None);
        assert_eq!(out.breached, vec![true, false]);
        assert_eq!(out.levels[0], 0.0);
        assert!(out.raw_levels[0] < 0.0);
    }

    #[test]
    fn overflow_is_flagged() {
        let p = TankParams::default();
        let out = step_dynamics(&p, &[95.0, 50.0], Some(0));
        assert_eq!(out.breached, vec![true, false]);
        assert_eq!(out.levels[0], 100.0);
        assert!(!p.is_safe(&out.raw_levels));
    }

    #[test]
    fn noiseless_sensor_reads_level() {
        let p = TankParams {
            sensor_sigma: 1e-12,
            outlier_prob: 0.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for level in [0.0, 12.5, 50.0, 99.0] {
            assert!((sense(&p, level, &mut rng) - level).abs() < 1e-9);
        }
    }

    #[test]
    fn outlier_sensor_saturates() {
        let p = TankParams {
            outlier_prob: 1.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut seen = [false; 2];
        for _ in 0..200 {
            let r = sense(&p, 50.0, &mut rng);
            assert!(r == 0.0 || r == 100.0, "{r}");
            seen[(r == 100.0) as usize] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn reading_mean_matches_closed_form() {
        // 0.9 * 50 (symmetric noise, far from clamping) + 0.1 * (0 + 100) / 2 = 50
        let p = TankParams {
            sensor_sigma: 5.0,
            outlier_prob: 0.1,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let readings: Vec<f64> = (0..n).map(|_| sense(&p, 50.0, &mut rng)).collect();
        let mean = readings.iter().sum::<f64>() / n as f64;
        let var = readings.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let half_width = 4.0 * (var / n as f64).sqrt();
        assert!((mean - 50.0).abs() < half_width, "mean {mean} ± {half_width}");
    }
}
