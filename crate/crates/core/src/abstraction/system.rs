//! The abstract closed-loop system: interval dynamics, a discretised
//! perception error and the controller, combined into one PA whose states
//! are `(cell per dimension, control configuration)`.

use rayon::prelude::*;

use super::dynamics::{cartesian, successor_cells, IntervalDynamics};
use super::error_model::ErrorModel;
use super::grid::Grid;
use crate::pa::{AutomatonBuilder, CategoricalDistribution, ProbabilisticAutomaton, StateId};
use crate::watertank::{control_outcomes, ControlConfig, TankParams};
use crate::{Error, Result};

/// Controller as seen by the abstraction.
pub trait ControllerLogic: Sync {
    fn num_configs(&self) -> usize;
    fn config_name(&self, config: usize) -> String;

    /// Maps a cell representative minus an error to the value the
    /// controller perceives.
    fn perceive(&self, _dim: usize, value: f64) -> f64 {
        value
    }

    /// Distribution over the next configuration.
    fn next_config(&self, perceived: &[f64], current: usize) -> Vec<(usize, f64)>;
}

/// The hysteresis controller of the tank system.
#[derive(Debug, Clone)]
pub struct TankControllerLogic {
    pub params: TankParams,
    pub configs: Vec<ControlConfig>,
}

impl TankControllerLogic {
    pub fn new(params: TankParams) -> Self {
        let configs = ControlConfig::enumerate(params.tanks);
        TankControllerLogic { params, configs }
    }
}

impl ControllerLogic for TankControllerLogic {
    fn num_configs(&self) -> usize {
        self.configs.len()
    }

    fn config_name(&self, config: usize) -> String {
        self.configs[config].name(self.params.tanks)
    }

    fn perceive(&self, _dim: usize, value: f64) -> f64 {
        value.clamp(0.0, self.params.tank_size)
    }

    fn next_config(&self, perceived: &[f64], current: usize) -> Vec<(usize, f64)> {
        let tanks = self.params.tanks;
        control_outcomes(&self.params, perceived, self.configs[current].requests)
            .into_iter()
            .map(|(c, p)| (c.index(tanks).expect("enumerated config"), p))
            .collect()
    }
}

/// State numbering of the abstract system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractLayout {
    pub cell_counts: Vec<usize>,
    pub config_names: Vec<String>,
}

impl AbstractLayout {
    pub fn num_configs(&self) -> usize {
        self.config_names.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cell_counts.iter().product()
    }

    pub fn num_states(&self) -> usize {
        self.num_cells() * self.num_configs()
    }

    pub fn flatten_cell(&self, cell: &[usize]) -> usize {
        cell.iter()
            .zip(&self.cell_counts)
            .fold(0, |acc, (&k, &n)| acc * n + k)
    }

    pub fn state_id(&self, cell: &[usize], config: usize) -> StateId {
        self.flatten_cell(cell) * self.num_configs() + config
    }

    pub fn decode(&self, state: StateId) -> (Vec<usize>, usize) {
        let config = state % self.num_configs();
        let mut flat = state / self.num_configs();
        let mut cell = vec![0; self.cell_counts.len()];
        for (k, &n) in cell.iter_mut().zip(&self.cell_counts).rev() {
            *k = flat % n;
            flat /= n;
        }
        (cell, config)
    }
}

/// The abstract system together with its layout and unsafe states.
#[derive(Debug, Clone)]
pub struct AbstractSystem {
    pub pa: ProbabilisticAutomaton,
    pub layout: AbstractLayout,
    pub unsafe_states: Vec<StateId>,
    /// Number of (cell, configuration) pairs whose successor box was
    /// clipped at the grid boundary.
    pub clipped: usize,
}

/// Builds the abstract system.
///
/// From a safe state `(c, g)` the action `g` applies the configuration in
/// force. Each abstract successor cell tuple `c'` of the interval dynamics
/// is a nondeterministic choice; for it, each dimension draws an error bin
/// independently, the controller sees `perceive(mid(c') - e)` and picks the
/// next configuration. Unsafe states (cells where `is_unsafe_cell` holds)
/// are absorbing.
pub fn build_abstract_system<D, C, U>(
    grid: &Grid,
    dynamics: &D,
    error_models: &[ErrorModel],
    controller: &C,
    is_unsafe_cell: U,
) -> Result<AbstractSystem>
where
    D: IntervalDynamics + Sync + ?Sized,
    C: ControllerLogic + ?Sized,
    U: Fn(&[usize]) -> bool + Sync,
{
    if error_models.len() != grid.dims() {
        return Err(Error::InvalidParams(format!(
            "{} error models for a {}-dimensional grid",
            error_models.len(),
            grid.dims()
        )));
    }
    for m in error_models {
        m.validate()?;
    }
    let n_cfg = controller.num_configs();
    if n_cfg == 0 {
        return Err(Error::InvalidParams("controller has no configurations".into()));
    }
    let layout = AbstractLayout {
        cell_counts: grid.cell_counts(),
        config_names: (0..n_cfg).map(|c| controller.config_name(c)).collect(),
    };
    let n_cells = grid.num_cells();

    // Joint error support, independent across dimensions.
    let mut joint: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for m in error_models {
        joint = joint
            .into_iter()
            .flat_map(|(e, p)| {
                m.support().map(move |(c, q)| {
                    let mut e = e.clone();
                    e.push(c);
                    (e, p * q)
                })
            })
            .collect();
    }

    // Next-configuration distribution for every (landing cell, current config).
    let outcome: Vec<CategoricalDistribution<usize>> = (0..n_cells * n_cfg)
        .into_par_iter()
        .map(|i| {
            let cell = grid.unflatten(i / n_cfg);
            let current = i % n_cfg;
            let mid = grid.midpoint(&cell);
            let mut weights = Vec::new();
            let mut perceived = vec![0.0; mid.len()];
            for (e, p) in &joint {
                for (d, v) in perceived.iter_mut().enumerate() {
                    *v = controller.perceive(d, mid[d] - e[d]);
                }
                for (g, q) in controller.next_config(&perceived, current) {
                    weights.push((g, p * q));
                }
            }
            CategoricalDistribution::from_weights(weights)
        })
        .collect::<Result<_>>()?;

    let unsafe_cell: Vec<bool> = (0..n_cells)
        .into_par_iter()
        .map(|f| is_unsafe_cell(&grid.unflatten(f)))
        .collect();

    // Transitions per state, computed in parallel and added in order.
    type Rows = Vec<CategoricalDistribution<usize>>;
    let rows: Vec<(Rows, bool)> = (0..n_cells * n_cfg)
        .into_par_iter()
        .map(|s| {
            let flat = s / n_cfg;
            let g = s % n_cfg;
            if unsafe_cell[flat] {
                return (vec![CategoricalDistribution::point(s)], false);
            }
            let cell = grid.unflatten(flat);
            let (ranges, escaped) = successor_cells(grid, dynamics, &cell, g);
            let rows = cartesian(&ranges)
                .into_iter()
                .map(|succ| {
                    let f = grid.flatten(&succ);
                    outcome[f * n_cfg + g].map_keys(|&g2| f * n_cfg + g2)
                })
                .collect();
            (rows, escaped)
        })
        .collect();

    let n_rows: usize = rows.iter().map(|(r, _)| r.len()).sum();
    let mut b = AutomatonBuilder::with_capacity(n_cells * n_cfg, n_rows);
    let actions: Vec<_> = layout
        .config_names
        .iter()
        .map(|n| b.add_action(n.clone()))
        .collect();
    let mut unsafe_states = Vec::new();
    for flat in 0..n_cells {
        let cell = grid.unflatten(flat);
        let cells = cell.iter().map(|k| k.to_string()).collect::<Vec<_>>().join("_");
        for g in 0..n_cfg {
            let name = format!("c{cells}_{}", layout.config_names[g]);
            if unsafe_cell[flat] {
                unsafe_states.push(b.add_labelled_state(name, ["unsafe"]));
            } else {
                b.add_state(name);
            }
        }
    }
    let mut clipped = 0;
    for (s, (dists, escaped)) in rows.into_iter().enumerate() {
        clipped += escaped as usize;
        for d in dists {
            b.add_transition(s, actions[s % n_cfg], d)?;
        }
    }
    let pa = b.build()?;
    Ok(AbstractSystem {
        pa,
        layout,
        unsafe_states,
        clipped,
    })
}

/// The tank abstraction with unit cells over `[0, TS + 1)` and boundary
/// cells read as unsafe under the configured safety reading.
pub fn build_tank_system(params: &TankParams, error_models: &[ErrorModel]) -> Result<AbstractSystem> {
    params.validate()?;
    let grid = Grid::uniform(params.tanks, params.level_axis())?;
    let last = grid.axes[0].cells() - 1;
    let dynamics = super::dynamics::TankIntervalDynamics::new(params.clone());
    let controller = TankControllerLogic::new(params.clone());
    let reading = params.safety_reading;
    build_abstract_system(&grid, &dynamics, error_models, &controller, move |cell: &[usize]| {
        !reading.is_safe(cell.iter().map(|&k| k != 0 && k != last))
    })
}
