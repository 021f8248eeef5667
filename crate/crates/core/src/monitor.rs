//! Runtime safety monitors: look up the precomputed table `G(cell, u)` at
//! the estimated state, the estimated distribution, or the true state.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::abstraction::{AbstractLayout, Grid};
use crate::model_check::SafetyTable;
use crate::pa::CategoricalDistribution;
use crate::watertank::{MonitorOutputs, TankParams, TrialTrace};
use crate::{Error, Result};

/// Largest tolerated deviation of a belief's total mass from one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;
/// Joint beliefs keep their most likely cells until this much mass is covered...
pub const JOINT_MASS: f64 = 0.999;
/// ...or this many cells are kept.
pub const JOINT_MAX_CELLS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorVariant {
    Point,
    Distribution,
    TrueState,
}

impl MonitorVariant {
    pub const ALL: [MonitorVariant; 3] = [
        MonitorVariant::Point,
        MonitorVariant::Distribution,
        MonitorVariant::TrueState,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MonitorVariant::Point => "point",
            MonitorVariant::Distribution => "distribution",
            MonitorVariant::TrueState => "true_state",
        }
    }

    pub fn select(self, m: &MonitorOutputs) -> f64 {
        match self {
            MonitorVariant::Point => m.point,
            MonitorVariant::Distribution => m.distribution,
            MonitorVariant::TrueState => m.true_state,
        }
    }
}

impl fmt::Display for MonitorVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyEstimate {
    pub value: f64,
    pub variant: MonitorVariant,
    pub timestep: usize,
    /// Some input lay outside the grid and was clamped to a boundary cell.
    pub clamped: bool,
}

/// The safety table with what is needed to map concrete states to rows.
/// Action ids are control configuration indices.
#[derive(Debug, Clone)]
pub struct MonitorContext {
    table: SafetyTable,
    grid: Grid,
    layout: AbstractLayout,
}

impl MonitorContext {
    /// Checks that the table covers every `(cell, configuration)` pair.
    pub fn new(table: SafetyTable, grid: Grid, layout: AbstractLayout) -> Result<Self> {
        if grid.cell_counts() != layout.cell_counts {
            return Err(Error::InvalidGrid(format!(
                "grid has cells {:?}, layout expects {:?}",
                grid.cell_counts(),
                layout.cell_counts
            )));
        }
        if table.num_states() != layout.num_states() {
            return Err(Error::InvalidGrid(format!(
                "table has {} states, layout expects {}",
                table.num_states(),
                layout.num_states()
            )));
        }
        let n_cfg = layout.num_configs();
        for s in 0..layout.num_states() {
            table.get(s, s % n_cfg)?;
        }
        Ok(MonitorContext {
            table,
            grid,
            layout,
        })
    }

    pub fn table(&self) -> &SafetyTable {
        &self.table
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn layout(&self) -> &AbstractLayout {
        &self.layout
    }

    fn check_config(&self, config: usize) -> Result<()> {
        if config >= self.layout.num_configs() {
            return Err(Error::UnknownAction(config));
        }
        Ok(())
    }

    /// `G(cell, u)`.
    pub fn lookup_cell(&self, cell: &[usize], config: usize) -> Result<f64> {
        self.check_config(config)?;
        if cell.len() != self.layout.cell_counts.len()
            || cell.iter().zip(&self.layout.cell_counts).any(|(k, n)| k >= n)
        {
            return Err(Error::InvalidGrid(format!("cell {cell:?} outside the grid")));
        }
        self.table.get(self.layout.state_id(cell, config), config)
    }

    fn lookup_state(&self, x: &[f64], config: usize) -> Result<(f64, bool)> {
        if x.len() != self.grid.dims() {
            return Err(Error::InvalidParams(format!(
                "state has {} components, grid has {}",
                x.len(),
                self.grid.dims()
            )));
        }
        let (cell, clamped) = self.grid.clamped_cell(x);
        if clamped {
            log::warn!("state {x:?} outside the grid, clamped to cell {cell:?}");
        }
        Ok((self.lookup_cell(&cell, config)?, clamped))
    }

    /// `G(cell(x̄), u)` for the point estimate `x̄`.
    pub fn monitor_point(&self, estimate: &[f64], config: usize, t: usize) -> Result<SafetyEstimate> {
        let (value, clamped) = self.lookup_state(estimate, config)?;
        Ok(SafetyEstimate {
            value,
            variant: MonitorVariant::Point,
            timestep: t,
            clamped,
        })
    }

    /// `Σ_c P(c) · G(c, u)` over a belief on grid cells. The belief must
    /// have non-negative weights summing to one within
    /// [`NORMALIZATION_TOLERANCE`].
    pub fn monitor_distribution(
        &self,
        belief: &[(Vec<usize>, f64)],
        config: usize,
        t: usize,
    ) -> Result<SafetyEstimate> {
        let mut mass = 0.0;
        let mut value = 0.0;
        for (cell, p) in belief {
            if !p.is_finite() || *p < 0.0 {
                return Err(Error::InvalidDistribution(format!("weight {p} for cell {cell:?}")));
            }
            mass += p;
            value += p * self.lookup_cell(cell, config)?;
        }
        if (mass - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::Unnormalized(mass));
        }
        Ok(SafetyEstimate {
            value: value.clamp(0.0, 1.0),
            variant: MonitorVariant::Distribution,
            timestep: t,
            clamped: false,
        })
    }

    /// `G(cell(x), u)` for the true state `x`.
    pub fn monitor_true(&self, state: &[f64], config: usize, t: usize) -> Result<SafetyEstimate> {
        let (value, clamped) = self.lookup_state(state, config)?;
        Ok(SafetyEstimate {
            value,
            variant: MonitorVariant::TrueState,
            timestep: t,
            clamped,
        })
    }
}

/// Joint belief over cell tuples as the product of independent per-dimension
/// beliefs, restricted to the most likely cells (see [`JOINT_MASS`] and
/// [`JOINT_MAX_CELLS`]) and renormalized. Ties in probability are broken by
/// cell order.
pub fn joint_belief(marginals: &[CategoricalDistribution<usize>]) -> Vec<(Vec<usize>, f64)> {
    let mut joint: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), 1.0)];
    for m in marginals {
        let mut next = Vec::with_capacity(joint.len() * m.len());
        for (cell, p) in &joint {
            for (&k, q) in m.iter() {
                let mut c = Vec::with_capacity(marginals.len());
                c.extend_from_slice(cell);
                c.push(k);
                next.push((c, p * q));
            }
        }
        joint = next;
    }
    joint.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut kept = 0;
    let mut mass = 0.0;
    for (_, p) in &joint {
        if kept == JOINT_MAX_CELLS || mass >= JOINT_MASS {
            break;
        }
        mass += p;
        kept += 1;
    }
    joint.truncate(kept);
    for (_, p) in joint.iter_mut() {
        *p /= mass;
    }
    joint.sort_by(|a, b| a.0.cmp(&b.0));
    joint
}

/// Fills in the three monitor outputs of every record. The action is the
/// configuration chosen at that step.
pub fn annotate_trace(ctx: &MonitorContext, params: &TankParams, trace: &mut TrialTrace) -> Result<()> {
    for r in trace.records.iter_mut() {
        let config = r
            .config
            .index(params.tanks)
            .ok_or_else(|| Error::InvalidParams(format!("configuration {:?}", r.config)))?;
        let point = ctx.monitor_point(&r.estimates, config, r.t)?.value;
        let distribution = ctx
            .monitor_distribution(&joint_belief(&r.beliefs), config, r.t)?
            .value;
        let true_state = ctx.monitor_true(&r.levels, config, r.t)?.value;
        r.monitors = Some(MonitorOutputs {
            point,
            distribution,
            true_state,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::Axis;
    use crate::model_check::{OptMode, SafetyEntry};
    use proptest::prelude::*;

    /// One-dimensional context over `values.len()` unit cells with a single
    /// configuration; `G(k, 0) = values[k]`.
    fn ctx(values: &[f64]) -> MonitorContext {
        let n = values.len();
        let grid = Grid::new(vec![Axis::new(0.0, n as f64, 1.0).unwrap()]).unwrap();
        let layout = AbstractLayout {
            cell_counts: vec![n],
            config_names: vec!["u".into()],
        };
        let entries = values
            .iter()
            .enumerate()
            .map(|(state, &probability)| SafetyEntry {
                state,
                action: 0,
                probability,
            })
            .collect();
        let table = SafetyTable::from_entries(n, 10, OptMode::Min, entries).unwrap();
        MonitorContext::new(table, grid, layout).unwrap()
    }

    #[test]
    fn all_safe_table() {
        let c = ctx(&[1.0; 5]);
        for x in [0.0, 2.5, 4.99] {
            assert_eq!(c.monitor_point(&[x], 0, 0).unwrap().value, 1.0);
            assert_eq!(c.monitor_true(&[x], 0, 0).unwrap().value, 1.0);
        }
    }

    #[test]
    fn boundary_goes_to_upper_cell() {
        let c = ctx(&[0.1, 0.2, 0.3]);
        assert_eq!(c.monitor_point(&[1.0], 0, 0).unwrap().value, 0.2);
        assert_eq!(c.monitor_point(&[0.999], 0, 0).unwrap().value, 0.1);
    }

    #[test]
    fn out_of_grid_is_clamped_and_flagged() {
        let c = ctx(&[0.1, 0.2, 0.3]);
        let e = c.monitor_true(&[7.0], 0, 4).unwrap();
        assert_eq!(e.value, 0.3);
        assert!(e.clamped);
        assert_eq!(e.timestep, 4);
        assert!(!c.monitor_true(&[2.0], 0, 4).unwrap().clamped);
    }

    #[test]
    fn distribution_examples() {
        let c = ctx(&[1.0, 0.6, 0.2, 0.4, 0.6, 0.8]);
        let v = c
            .monitor_distribution(&[(vec![0], 0.5), (vec![1], 0.5)], 0, 0)
            .unwrap();
        assert!((v.value - 0.8).abs() < 1e-15);
        let uniform: Vec<_> = (2..6).map(|k| (vec![k], 0.25)).collect();
        assert!((c.monitor_distribution(&uniform, 0, 0).unwrap().value - 0.5).abs() < 1e-15);
        let point = c.monitor_distribution(&[(vec![3], 1.0)], 0, 0).unwrap();
        assert_eq!(point.value, c.monitor_point(&[3.5], 0, 0).unwrap().value);
    }

    #[test]
    fn unnormalized_rejected() {
        let c = ctx(&[1.0, 0.5]);
        let err = c
            .monitor_distribution(&[(vec![0], 0.5), (vec![1], 0.49)], 0, 0)
            .unwrap_err();
        assert!(matches!(err, Error::Unnormalized(_)));
        assert!(c
            .monitor_distribution(&[(vec![0], 0.5), (vec![1], 0.5 + 5e-7)], 0, 0)
            .is_ok());
    }

    #[test]
    fn unknown_config_rejected() {
        let c = ctx(&[1.0, 0.5]);
        assert!(c.monitor_point(&[0.5], 1, 0).is_err());
    }

    #[test]
    fn joint_belief_truncates_and_renormalizes() {
        let a = CategoricalDistribution::new(vec![(3, 0.5), (4, 0.5)]).unwrap();
        let b = CategoricalDistribution::new(vec![(7, 0.9995), (8, 0.0005)]).unwrap();
        let j = joint_belief(&[a, b]);
        let cells: Vec<_> = j.iter().map(|(c, _)| c.clone()).collect();
        assert_eq!(cells, vec![vec![3, 7], vec![4, 7]]);
        assert!(j.iter().all(|(_, p)| (p - 0.5).abs() < 1e-15));
    }

    #[test]
    fn joint_belief_caps_cell_count() {
        let flat = CategoricalDistribution::new((0..100).map(|k| (k, 0.01)).collect()).unwrap();
        let j = joint_belief(&[flat.clone(), flat]);
        assert_eq!(j.len(), JOINT_MAX_CELLS);
        let mass: f64 = j.iter().map(|(_, p)| p).sum();
        assert!((mass - 1.0).abs() < 1e-12);
    }

    fn belief(n: usize) -> impl Strategy<Value = Vec<(Vec<usize>, f64)>> {
        prop::collection::vec(0.0f64..1.0, n).prop_filter_map("positive mass", |w| {
            let s: f64 = w.iter().sum();
            (s > 1e-6).then(|| {
                w.iter()
                    .enumerate()
                    .map(|(k, x)| (vec![k], x / s))
                    .collect()
            })
        })
    }

    proptest! {
        #[test]
        fn distribution_monitor_is_convex(
            g in prop::collection::vec(0.0f64..=1.0, 6),
            d in belief(6),
        ) {
            let c = ctx(&g);
            let v = c.monitor_distribution(&d, 0, 0).unwrap().value;
            let support: Vec<f64> = d.iter().filter(|(_, p)| *p > 0.0).map(|(k, _)| g[k[0]]).collect();
            let lo = support.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = support.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }

        #[test]
        fn distribution_monitor_is_linear(
            g in prop::collection::vec(0.0f64..=1.0, 6),
            d1 in belief(6),
            d2 in belief(6),
            lambda in 0.0f64..=1.0,
        ) {
            let c = ctx(&g);
            let v1 = c.monitor_distribution(&d1, 0, 0).unwrap().value;
            let v2 = c.monitor_distribution(&d2, 0, 0).unwrap().value;
            let mix: Vec<_> = d1
                .iter()
                .zip(&d2)
                .map(|((k, p), (_, q))| (k.clone(), lambda * p + (1.0 - lambda) * q))
                .collect();
            let v = c.monitor_distribution(&mix, 0, 0).unwrap().value;
            prop_assert!((v - (lambda * v1 + (1.0 - lambda) * v2)).abs() < 1e-12);
        }
    }
}
