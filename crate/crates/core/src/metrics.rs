//! Calibration and discrimination metrics for probability estimates of a
//! binary event.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const NUM_BINS: usize = 10;
/// Bins with fewer records are not plotted; they still count in ECE/ECCE.
pub const MIN_PLOT_COUNT: usize = 50;
/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// An estimate `p̂` of the probability of an event and whether it occurred.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub estimate: f64,
    pub outcome: bool,
}

impl PredictionRecord {
    pub fn new(estimate: f64, outcome: bool) -> Result<Self> {
        if !(0.0..=1.0).contains(&estimate) {
            return Err(Error::InvalidParams(format!("estimate {estimate} outside [0, 1]")));
        }
        Ok(PredictionRecord { estimate, outcome })
    }
}

/// Bin of `p` among `[0, 0.1), ..., [0.9, 1.0]`.
pub fn bin_index(p: f64) -> usize {
    (1..NUM_BINS)
        .take_while(|&k| p >= k as f64 / NUM_BINS as f64)
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// Mean estimate in the bin, zero when empty.
    pub mean_estimate: f64,
    /// Fraction of records whose event occurred, zero when empty.
    pub frequency: f64,
    pub plottable: bool,
}

impl ReliabilityBin {
    pub fn gap(&self) -> f64 {
        (self.mean_estimate - self.frequency).abs()
    }

    pub fn overconfident(&self) -> bool {
        self.mean_estimate > self.frequency
    }

    pub fn positives(&self) -> usize {
        (self.frequency * self.count as f64).round() as usize
    }
}

/// Compensated sum, so that bin means of repeated values come out exact.
#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.c
    }
}

/// The ten fixed bins; bins under `min_count` records are flagged as not
/// plottable.
pub fn reliability_bins(records: &[PredictionRecord], min_count: usize) -> Vec<ReliabilityBin> {
    let mut sum = [Neumaier::default(); NUM_BINS];
    let mut pos = [0usize; NUM_BINS];
    let mut count = [0usize; NUM_BINS];
    for r in records {
        let b = bin_index(r.estimate);
        sum[b].add(r.estimate);
        pos[b] += r.outcome as usize;
        count[b] += 1;
    }
    (0..NUM_BINS)
        .map(|b| {
            let n = count[b];
            let (mean_estimate, frequency) = if n == 0 {
                (0.0, 0.0)
            } else {
                (sum[b].total() / n as f64, pos[b] as f64 / n as f64)
            };
            ReliabilityBin {
                lower: b as f64 / NUM_BINS as f64,
                upper: (b + 1) as f64 / NUM_BINS as f64,
                count: n,
                mean_estimate,
                frequency,
                plottable: n >= min_count,
            }
        })
        .collect()
}

fn nonempty(records: &[PredictionRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    Ok(())
}

fn weighted_gap(records: &[PredictionRecord], keep: impl Fn(&ReliabilityBin) -> bool) -> Result<f64> {
    nonempty(records)?;
    let n = records.len() as f64;
    Ok(reliability_bins(records, 0)
        .iter()
        .filter(|b| b.count > 0 && keep(b))
        .map(|b| b.count as f64 / n * b.gap())
        .fold(0.0, |acc, x| acc + x))
}

/// Expected calibration error: bin-size-weighted mean of `|mean p̂ - freq|`.
pub fn ece(records: &[PredictionRecord]) -> Result<f64> {
    weighted_gap(records, |_| true)
}

/// Expected conservative calibration error: like [`ece`] but only bins
/// whose mean estimate exceeds the observed frequency contribute.
pub fn ecce(records: &[PredictionRecord]) -> Result<f64> {
    weighted_gap(records, ReliabilityBin::overconfident)
}

/// Mean of `(p̂ - 1_E)²`.
pub fn brier(records: &[PredictionRecord]) -> Result<f64> {
    nonempty(records)?;
    let s: f64 = records
        .iter()
        .map(|r| {
            let y = if r.outcome { 1.0 } else { 0.0 };
            (r.estimate - y).powi(2)
        })
        .sum();
    Ok(s / records.len() as f64)
}

/// A point of the ROC curve; records with `p̂ >= threshold` are predicted
/// to be positive (event occurs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve over every distinct estimate, from `(0, 0)` to `(1, 1)`, and
/// its trapezoid area. Errors when only one class is present.
pub fn roc_auc(records: &[PredictionRecord]) -> Result<(Vec<RocPoint>, f64)> {
    nonempty(records)?;
    let p = records.iter().filter(|r| r.outcome).count();
    let n = records.len() - p;
    if p == 0 || n == 0 {
        return Err(Error::SingleClass);
    }
    let mut sorted: Vec<&PredictionRecord> = records.iter().collect();
    sorted.sort_by(|a, b| b.estimate.total_cmp(&a.estimate));
    let mut curve = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].estimate;
        while i < sorted.len() && sorted[i].estimate == threshold {
            if sorted[i].outcome {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let prev = *curve.last().expect("curve starts with the origin");
        let pt = RocPoint {
            threshold,
            fpr: fp as f64 / n as f64,
            tpr: tp as f64 / p as f64,
        };
        auc += (pt.fpr - prev.fpr) * (pt.tpr + prev.tpr) / 2.0;
        curve.push(pt);
    }
    Ok((curve, auc))
}

/// Wilson score interval for `successes` out of `n` trials.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let f = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (f + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (f * (1.0 - f) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Summary of one estimator over a record set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub count: usize,
    pub bins: Vec<ReliabilityBin>,
    pub ece: f64,
    pub ecce: f64,
    pub brier: f64,
    /// `None` when only one outcome class is present.
    pub auc: Option<f64>,
}

pub fn calibration_report(records: &[PredictionRecord], min_count: usize) -> Result<CalibrationReport> {
    let auc = match roc_auc(records) {
        Ok((_, a)) => Some(a),
        Err(Error::SingleClass) => None,
        Err(e) => return Err(e),
    };
    Ok(CalibrationReport {
        count: records.len(),
        bins: reliability_bins(records, min_count),
        ece: ece(records)?,
        ecce: ecce(records)?,
        brier: brier(records)?,
        auc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(estimate: f64, outcome: bool) -> PredictionRecord {
        PredictionRecord::new(estimate, outcome).unwrap()
    }

    /// `n` records at `p` of which `k` are positive.
    fn block(p: f64, n: usize, k: usize) -> Vec<PredictionRecord> {
        (0..n).map(|i| rec(p, i < k)).collect()
    }

    /// Concordant pairs over comparable pairs, ties counting one half.
    fn pair_auc(records: &[PredictionRecord]) -> f64 {
        let mut score = 0.0;
        let mut pairs = 0.0;
        for a in records.iter().filter(|r| r.outcome) {
            for b in records.iter().filter(|r| !r.outcome) {
                pairs += 1.0;
                if a.estimate > b.estimate {
                    score += 1.0;
                } else if a.estimate == b.estimate {
                    score += 0.5;
                }
            }
        }
        score / pairs
    }

    #[test]
    fn bins_are_half_open_with_closed_top() {
        assert_eq!(bin_index(0.0), 0);
        assert_eq!(bin_index(0.1), 1);
        assert_eq!(bin_index(0.099_999), 0);
        assert_eq!(bin_index(0.3), 3);
        assert_eq!(bin_index(0.95), 9);
        assert_eq!(bin_index(1.0), 9);
    }

    #[test]
    fn ece_examples() {
        assert_eq!(ece(&block(0.9, 10, 9)).unwrap(), 0.0);
        let one_bin = block(0.8, 10, 7);
        assert!((ece(&one_bin).unwrap() - 0.1).abs() < 1e-12);
        // weights 1/4 and 3/4, gaps 0.2 and 0
        let two: Vec<_> = block(0.3, 10, 1).into_iter().chain(block(0.6, 30, 18)).collect();
        assert!((ece(&two).unwrap() - 0.05).abs() < 1e-12);
        assert!(matches!(ece(&[]), Err(Error::EmptyRecords)));
    }

    #[test]
    fn ecce_examples() {
        let under: Vec<_> = block(0.3, 10, 5).into_iter().chain(block(0.8, 10, 10)).collect();
        assert_eq!(ecce(&under).unwrap(), 0.0);
        assert!(ecce(&under).unwrap().is_sign_positive());
        assert!(ece(&under).unwrap() > 0.0);
        let over = block(0.85, 20, 16);
        assert!((ecce(&over).unwrap() - 0.05).abs() < 1e-12);
        assert!(matches!(ecce(&[]), Err(Error::EmptyRecords)));
    }

    #[test]
    fn brier_examples() {
        assert_eq!(brier(&[rec(1.0, true)]).unwrap(), 0.0);
        assert_eq!(brier(&[rec(0.5, true), rec(0.5, false)]).unwrap(), 0.25);
        assert_eq!(brier(&[rec(0.0, true)]).unwrap(), 1.0);
        assert!(matches!(brier(&[]), Err(Error::EmptyRecords)));
    }

    #[test]
    fn auc_examples() {
        let sep = [rec(0.9, true), rec(0.8, true), rec(0.2, false), rec(0.1, false)];
        assert_eq!(roc_auc(&sep).unwrap().1, 1.0);
        let flat = [rec(0.5, true), rec(0.5, false), rec(0.5, true)];
        assert_eq!(roc_auc(&flat).unwrap().1, 0.5);
        let six = [
            rec(0.9, true),
            rec(0.8, true),
            rec(0.7, false),
            rec(0.6, true),
            rec(0.3, false),
            rec(0.2, false),
        ];
        let (curve, auc) = roc_auc(&six).unwrap();
        assert!((auc - 8.0 / 9.0).abs() < 1e-12);
        assert!((auc - pair_auc(&six)).abs() < 1e-9);
        assert_eq!(curve.first().map(|p| (p.fpr, p.tpr)), Some((0.0, 0.0)));
        assert_eq!(curve.last().map(|p| (p.fpr, p.tpr)), Some((1.0, 1.0)));
        assert!(matches!(roc_auc(&[rec(0.4, true)]), Err(Error::SingleClass)));
    }

    #[test]
    fn reliability_examples() {
        let spread: Vec<_> = (0..100).map(|i| rec((i as f64 + 0.5) / 100.0, i % 2 == 0)).collect();
        let bins = reliability_bins(&spread, MIN_PLOT_COUNT);
        assert!(bins.iter().all(|b| b.count == 10 && !b.plottable));
        let top = block(0.95, 60, 57);
        let bins = reliability_bins(&top, MIN_PLOT_COUNT);
        assert_eq!(bins.iter().filter(|b| b.plottable).count(), 1);
        assert!(bins[9].plottable);
    }

    #[test]
    fn wilson_matches_known_values() {
        // 8/10 at 95%: (0.4902, 0.9433)
        let (lo, hi) = wilson_interval(8, 10, Z_95);
        assert!((lo - 0.490_162).abs() < 1e-5, "{lo}");
        assert!((hi - 0.943_318).abs() < 1e-5, "{hi}");
        assert_eq!(wilson_interval(0, 0, Z_95), (0.0, 1.0));
    }

    #[test]
    fn report_without_both_classes() {
        let r = calibration_report(&block(0.9, 10, 10), MIN_PLOT_COUNT).unwrap();
        assert_eq!(r.auc, None);
        assert_eq!(r.count, 10);
    }

    fn records() -> impl Strategy<Value = Vec<PredictionRecord>> {
        prop::collection::vec((0.0f64..=1.0, any::<bool>()), 1..60)
            .prop_map(|v| v.into_iter().map(|(p, o)| rec(p, o)).collect())
    }

    proptest! {
        #[test]
        fn ecce_never_exceeds_ece(r in records()) {
            let (e, c) = (ece(&r).unwrap(), ecce(&r).unwrap());
            prop_assert!(c <= e + 1e-15);
            prop_assert!((0.0..=1.0).contains(&e));
            prop_assert!((0.0..=1.0).contains(&brier(&r).unwrap()));
        }

        #[test]
        fn bin_counts_sum_to_total(r in records()) {
            let bins = reliability_bins(&r, MIN_PLOT_COUNT);
            prop_assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), r.len());
        }

        #[test]
        fn trapezoid_equals_pair_counting(
            v in prop::collection::vec((0u8..8, any::<bool>()), 2..40),
        ) {
            let r: Vec<_> = v.iter().map(|&(k, o)| rec(k as f64 / 8.0, o)).collect();
            match roc_auc(&r) {
                Ok((_, a)) => prop_assert!((a - pair_auc(&r)).abs() < 1e-9),
                Err(e) => prop_assert!(matches!(e, Error::SingleClass)),
            }
        }

        #[test]
        fn permutation_and_monotone_invariance(r in records(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = r.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert!((ece(&r).unwrap() - ece(&shuffled).unwrap()).abs() < 1e-12);
            prop_assert!((ecce(&r).unwrap() - ecce(&shuffled).unwrap()).abs() < 1e-12);
            if let Ok((_, a)) = roc_auc(&r) {
                let squashed: Vec<_> = r.iter().map(|x| rec(x.estimate.powi(3), x.outcome)).collect();
                let (_, b) = roc_auc(&squashed).unwrap();
                // cubing can merge distinct tiny estimates into equal floats
                let distinct = |v: &[PredictionRecord]| {
                    let mut e: Vec<u64> = v.iter().map(|x| x.estimate.to_bits()).collect();
                    e.sort();
                    e.dedup();
                    e.len()
                };
                if distinct(&r) == distinct(&squashed) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }
}
