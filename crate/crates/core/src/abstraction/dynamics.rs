//! Interval abstraction of deterministic controlled dynamics.

use std::ops::RangeInclusive;

use rand::Rng;

use super::grid::Grid;
use crate::pa::{AutomatonBuilder, CategoricalDistribution, ProbabilisticAutomaton};
use crate::watertank::{ControlConfig, TankParams};

/// A half-open interval `[lo, hi)`.
pub type Interval = (f64, f64);

/// Sound one-step reachability for a family of control actions.
pub trait IntervalDynamics {
    /// A box containing `step(x, action)` for every `x` in `cell`.
    fn successor_box(&self, cell: &[Interval], action: usize) -> Vec<Interval>;

    /// The concrete successor, used to validate soundness by sampling.
    fn step(&self, x: &[f64], action: usize) -> Vec<f64>;
}

/// Per-dimension successor cell ranges of `cell` under `action`, and whether
/// the box was clipped at the grid boundary.
pub fn successor_cells<D: IntervalDynamics + ?Sized>(
    grid: &Grid,
    dynamics: &D,
    cell: &[usize],
    action: usize,
) -> (Vec<RangeInclusive<usize>>, bool) {
    let bounds: Vec<Interval> = cell
        .iter()
        .zip(&grid.axes)
        .map(|(&k, a)| a.cell_bounds(k))
        .collect();
    let boxed = dynamics.successor_box(&bounds, action);
    let mut escaped = false;
    let ranges = boxed
        .iter()
        .zip(&grid.axes)
        .map(|(&(lo, hi), a)| {
            let o = a.cells_overlapping(lo, hi);
            escaped |= o.escaped;
            o.cells
        })
        .collect();
    (ranges, escaped)
}

/// Every combination of one cell per range, first dimension slowest.
pub fn cartesian(ranges: &[RangeInclusive<usize>]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::with_capacity(ranges.len())];
    for r in ranges {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                r.clone().map(move |k| {
                    let mut v = prefix.clone();
                    v.push(k);
                    v
                })
            })
            .collect();
    }
    out
}

/// Nondeterministic abstraction of `dynamics` over `grid`: one state per
/// cell, and for each cell and action one point-distribution transition to
/// every cell the successor box overlaps. Boxes leaving the grid are clipped
/// to the boundary cells, which carry the label `boundary`.
pub fn abstract_dynamics<D: IntervalDynamics + ?Sized>(
    grid: &Grid,
    dynamics: &D,
    actions: &[String],
) -> ProbabilisticAutomaton {
    let mut b = AutomatonBuilder::with_capacity(grid.num_cells(), grid.num_cells() * actions.len());
    let counts = grid.cell_counts();
    for flat in 0..grid.num_cells() {
        let cell = grid.unflatten(flat);
        let name = format!(
            "c{}",
            cell.iter().map(|k| k.to_string()).collect::<Vec<_>>().join("_")
        );
        let on_boundary = cell.iter().zip(&counts).any(|(&k, &n)| k == 0 || k + 1 == n);
        if on_boundary {
            b.add_labelled_state(name, ["boundary"]);
        } else {
            b.add_state(name);
        }
    }
    let action_ids: Vec<_> = actions.iter().map(|a| b.add_action(a.clone())).collect();
    for flat in 0..grid.num_cells() {
        let cell = grid.unflatten(flat);
        for (ai, &aid) in action_ids.iter().enumerate() {
            let (ranges, _) = successor_cells(grid, dynamics, &cell, ai);
            for succ in cartesian(&ranges) {
                b.add_transition(flat, aid, CategoricalDistribution::point(grid.flatten(&succ)))
                    .expect("cell ids are valid");
            }
        }
    }
    b.build().expect("abstraction is well formed")
}

/// Samples `samples` concrete `(state, action)` pairs uniformly from the
/// grid and counts successors whose cell is not an abstract successor of
/// the source cell. Successors outside the grid are compared after
/// clipping to the boundary cell.
pub fn count_soundness_violations<D: IntervalDynamics + ?Sized, R: Rng + ?Sized>(
    grid: &Grid,
    dynamics: &D,
    num_actions: usize,
    samples: usize,
    rng: &mut R,
) -> usize {
    let mut violations = 0;
    for _ in 0..samples {
        let x: Vec<f64> = grid
            .axes
            .iter()
            .map(|a| rng.random_range(a.lower..a.upper))
            .collect();
        let action = rng.random_range(0..num_actions);
        let (cell, _) = grid.clamped_cell(&x);
        let (ranges, _) = successor_cells(grid, dynamics, &cell, action);
        let (next, _) = grid.clamped_cell(&dynamics.step(&x, action));
        if !next.iter().zip(&ranges).all(|(k, r)| r.contains(k)) {
            violations += 1;
        }
    }
    violations
}

/// Exact successor boxes of the affine tank dynamics, with the control
/// configuration index selecting the filled tank.
#[derive(Debug, Clone)]
pub struct TankIntervalDynamics {
    pub params: TankParams,
    pub configs: Vec<ControlConfig>,
}

impl TankIntervalDynamics {
    pub fn new(params: TankParams) -> Self {
        let configs = ControlConfig::enumerate(params.tanks);
        TankIntervalDynamics { params, configs }
    }
}

impl IntervalDynamics for TankIntervalDynamics {
    fn successor_box(&self, cell: &[Interval], action: usize) -> Vec<Interval> {
        let fill = self.configs[action].fill;
        cell.iter()
            .enumerate()
            .map(|(i, &(lo, hi))| {
                let d = self.params.net_flow(fill, i);
                (lo + d, hi + d)
            })
            .collect()
    }

    fn step(&self, x: &[f64], action: usize) -> Vec<f64> {
        let fill = self.configs[action].fill;
        x.iter()
            .enumerate()
            .map(|(i, &w)| w + self.params.net_flow(fill, i))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::Axis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Shift(f64);

    impl IntervalDynamics for Shift {
        fn successor_box(&self, cell: &[Interval], _action: usize) -> Vec<Interval> {
            cell.iter().map(|&(lo, hi)| (lo + self.0, hi + self.0)).collect()
        }

        fn step(&self, x: &[f64], _action: usize) -> Vec<f64> {
            x.iter().map(|v| v + self.0).collect()
        }
    }

    fn line(n: f64) -> Grid {
        Grid::new(vec![Axis::new(0.0, n, 1.0).unwrap()]).unwrap()
    }

    #[test]
    fn identity_maps_each_cell_to_itself() {
        let g = line(10.0);
        let pa = abstract_dynamics(&g, &Shift(0.0), &["u".to_string()]);
        assert_eq!(pa.num_transitions(), 10);
        for s in 0..10 {
            let t = pa.transitions_from(s);
            assert_eq!(t.len(), 1);
            assert_eq!(t[0].distribution.prob(&s), 1.0);
        }
    }

    #[test]
    fn fractional_shift_gives_two_successors() {
        let g = line(10.0);
        let pa = abstract_dynamics(&g, &Shift(1.5), &["u".to_string()]);
        let succ: Vec<usize> = pa.transitions_from(0)
            .iter()
            .map(|t| *t.distribution.keys().next().unwrap())
            .collect();
        assert_eq!(succ, vec![1, 2]);
        // top cells clip into the boundary cell
        let succ: Vec<usize> = pa.transitions_from(9)
            .iter()
            .map(|t| *t.distribution.keys().next().unwrap())
            .collect();
        assert_eq!(succ, vec![9]);
        assert!(pa.has_label(9, "boundary"));
    }

    #[test]
    fn tank_cell_fill_successors() {
        let p = TankParams::default();
        let grid = Grid::uniform(2, p.level_axis()).unwrap();
        let dynamics = TankIntervalDynamics::new(p);
        // r10_f1 fills tank 1
        let (ranges, escaped) = successor_cells(&grid, &dynamics, &[50, 50], 1);
        assert_eq!(ranges[0], 59..=60);
        assert_eq!(ranges[1], 45..=46);
        assert!(!escaped);
        let b = dynamics.successor_box(&[(50.0, 51.0)], 1);
        assert!((b[0].0 - 59.2).abs() < 1e-12 && (b[0].1 - 60.2).abs() < 1e-12);
    }

    #[test]
    fn sampled_soundness_of_tank_abstraction() {
        let p = TankParams::default();
        let grid = Grid::uniform(2, p.level_axis()).unwrap();
        let dynamics = TankIntervalDynamics::new(p);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        assert_eq!(count_soundness_violations(&grid, &dynamics, 5, 5000, &mut rng), 0);
    }

    #[test]
    fn cartesian_order() {
        assert_eq!(
            cartesian(&[0..=1, 5..=6]),
            vec![vec![0, 5], vec![0, 6], vec![1, 5], vec![1, 6]]
        );
    }
}
