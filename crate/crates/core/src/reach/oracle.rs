use std::fmt;
use std::sync::Arc;

use crate::error::ReachError;
use crate::model::Time;

use super::grid::{GridSpec, RegionMask};

pub type StepFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
/// Feedback law on the plant state.
pub type Policy = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Discrete-time plant: `state' = step(state, control)` over one tick of
/// `dt`, with a finite sample `controls` of the admissible control set.
#[derive(Clone)]
pub struct DynamicsModel {
    pub dims: usize,
    pub bounds: Vec<(f64, f64)>,
    pub controls: Vec<Vec<f64>>,
    pub step: StepFn,
    pub dt: Time,
}

impl fmt::Debug for DynamicsModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DynamicsModel")
            .field("dims", &self.dims)
            .field("bounds", &self.bounds)
            .field("controls", &self.controls)
            .field("dt", &self.dt)
            .finish_non_exhaustive()
    }
}

impl DynamicsModel {
    /// Number of plant steps covering `t`.
    pub fn steps_for(&self, t: Time) -> usize {
        t.div_ceil(self.dt.max(1)) as usize
    }

    pub fn apply(&self, s: &[f64], u: &[f64]) -> Vec<f64> {
        (self.step)(s, u)
    }
}

/// Successor cells of one cell: every cell hit by the image of a sample
/// point, plus a flag recording whether some image left the grid.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CellSuccessors {
    pub cells: Vec<usize>,
    pub escapes: bool,
}

impl CellSuccessors {
    pub fn all_in(&self, mask: &RegionMask) -> bool {
        !self.escapes && self.cells.iter().all(|&c| mask.contains(c))
    }
}

/// How cell successors are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AbstractionConfig {
    /// Lattice points per axis inside each cell (corners included).
    pub samples_per_axis: usize,
}

impl Default for AbstractionConfig {
    fn default() -> Self {
        Self { samples_per_axis: 3 }
    }
}

/// Set of cells visited by a reachability query.
#[derive(Debug, Clone, PartialEq)]
pub struct Reach {
    pub cells: RegionMask,
    /// Some successor left the grid.
    pub escaped: bool,
}

impl Reach {
    pub fn within(&self, phi: &RegionMask) -> bool {
        !self.escaped && self.cells.is_subset(phi)
    }
}

/// Grid abstraction of a [`DynamicsModel`] with cached unrestricted successors.
#[derive(Clone)]
pub struct GridOracle {
    pub grid: GridSpec,
    pub dynamics: DynamicsModel,
    pub config: AbstractionConfig,
    any_succ: Vec<CellSuccessors>,
}

impl fmt::Debug for GridOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridOracle")
            .field("grid", &self.grid)
            .field("dynamics", &self.dynamics)
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl GridOracle {
    pub fn new(grid: GridSpec, dynamics: DynamicsModel, config: AbstractionConfig) -> Self {
        let mut oracle = Self { grid, dynamics, config, any_succ: Vec::new() };
        let controls = oracle.dynamics.controls.clone();
        oracle.any_succ = (0..oracle.grid.len())
            .map(|c| oracle.image_cells(c, |p| controls.iter().map(|u| oracle.dynamics.apply(p, u)).collect()))
            .collect();
        oracle
    }

    pub fn successors(&self) -> &[CellSuccessors] {
        &self.any_succ
    }

    /// Cells hit by the images of the cell's sample points.
    pub fn image_cells(&self, cell: usize, images: impl Fn(&[f64]) -> Vec<Vec<f64>>) -> CellSuccessors {
        let g = &self.grid;
        let mut out = CellSuccessors::default();
        for p in g.samples(cell, self.config.samples_per_axis) {
            for q in images(&p) {
                match g.cell_of(&q) {
                    Some(c) => out.cells.push(c),
                    None => out.escapes = true,
                }
            }
        }
        out.cells.sort_unstable();
        out.cells.dedup();
        out
    }

    /// Successor cells under a fixed control.
    pub fn control_successors(&self, u: &[f64]) -> Vec<CellSuccessors> {
        (0..self.grid.len())
            .map(|c| self.image_cells(c, |p| vec![self.dynamics.apply(p, u)]))
            .collect()
    }

    /// Successor cells of the closed loop `state' = step(state, policy(state))`.
    pub fn closed_loop_successors(&self, policy: &Policy) -> Vec<CellSuccessors> {
        (0..self.grid.len())
            .map(|c| self.image_cells(c, |p| vec![self.dynamics.apply(p, &policy(p))]))
            .collect()
    }

    /// Cells visited within `steps` layers from `start` over `succ`.
    pub fn reach_cells(&self, start: usize, steps: usize, succ: &[CellSuccessors]) -> (Vec<usize>, bool) {
        let mut seen = vec![start];
        let mut frontier = vec![start];
        let mut escaped = false;
        for _ in 0..steps {
            let mut next = Vec::new();
            for &c in &frontier {
                escaped |= succ[c].escapes;
                for &n in &succ[c].cells {
                    if !seen.contains(&n) {
                        seen.push(n);
                        next.push(n);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        (seen, escaped)
    }

    fn to_reach(&self, cells: Vec<usize>, escaped: bool) -> Reach {
        let mut mask = RegionMask::empty(&self.grid);
        for c in cells {
            mask.set(c, true);
        }
        Reach { cells: mask, escaped }
    }

    /// States reachable within `[0, t]` under every control sequence.
    pub fn reach_star(&self, s: &[f64], t: Time) -> Result<Reach, ReachError> {
        let start = self.grid.cell_of_checked(s)?;
        let (cells, escaped) = self.reach_cells(start, self.dynamics.steps_for(t), &self.any_succ);
        Ok(self.to_reach(cells, escaped))
    }

    /// Cells visited by the closed-loop trajectory from `s` over `[0, t]`.
    pub fn reach_sc(&self, s: &[f64], t: Time, policy: &Policy) -> Result<Reach, ReachError> {
        let start = self.grid.cell_of_checked(s)?;
        let mut cells = vec![start];
        let mut escaped = false;
        let mut x = s.to_vec();
        for _ in 0..self.dynamics.steps_for(t) {
            x = self.dynamics.apply(&x, &policy(&x));
            match self.grid.cell_of(&x) {
                Some(c) if !cells.contains(&c) => cells.push(c),
                Some(_) => {}
                None => {
                    escaped = true;
                    break;
                }
            }
        }
        Ok(self.to_reach(cells, escaped))
    }

    /// `R(phi, t)`: cells of `phi` whose unrestricted `t`-reach stays in `phi`.
    pub fn region_shrink(&self, phi: &RegionMask, t: Time) -> RegionMask {
        let mut cur = phi.clone();
        for _ in 0..self.dynamics.steps_for(t) {
            let next = RegionMask::from_fn(&self.grid, |c| {
                phi.contains(c) && self.any_succ[c].all_in(&cur)
            });
            if next == cur {
                break;
            }
            cur = next;
        }
        cur
    }

    /// Time to failure below `two_delta`: `s` can leave `phi_safe` within it.
    pub fn ttf_grid(&self, s: &[f64], phi_safe: &RegionMask, two_delta: Time) -> Result<bool, ReachError> {
        Ok(!self.reach_star(s, two_delta)?.within(phi_safe))
    }

    /// Cell-level variant of [`ttf_grid`](Self::ttf_grid).
    pub fn ttf_cell(&self, cell: usize, phi_safe: &RegionMask, two_delta: Time) -> bool {
        let (cells, escaped) = self.reach_cells(cell, self.dynamics.steps_for(two_delta), &self.any_succ);
        escaped || cells.iter().any(|c| !phi_safe.contains(*c))
    }

    /// Largest subset of `constraint` in which some fixed control keeps every
    /// successor inside. Also returns, per cell, the indices of the controls
    /// that do so.
    pub fn viability_kernel(&self, constraint: &RegionMask) -> (RegionMask, Vec<Vec<usize>>) {
        let per_control: Vec<Vec<CellSuccessors>> =
            self.dynamics.controls.iter().map(|u| self.control_successors(u)).collect();
        let mut cur = constraint.clone();
        loop {
            let next = RegionMask::from_fn(&self.grid, |c| {
                cur.contains(c) && per_control.iter().any(|s| s[c].all_in(&cur))
            });
            if next == cur {
                break;
            }
            cur = next;
        }
        let viable = (0..self.grid.len())
            .map(|c| {
                if !cur.contains(c) {
                    return Vec::new();
                }
                (0..per_control.len()).filter(|&k| per_control[k][c].all_in(&cur)).collect()
            })
            .collect();
        (cur, viable)
    }

    /// Largest subset of `constraint` closed under `succ`.
    pub fn invariant_kernel(&self, constraint: &RegionMask, succ: &[CellSuccessors]) -> RegionMask {
        let mut cur = constraint.clone();
        loop {
            let next = RegionMask::from_fn(&self.grid, |c| cur.contains(c) && succ[c].all_in(&cur));
            if next == cur {
                return cur;
            }
            cur = next;
        }
    }
}

/// Per-cell Euclidean distance from the cell box to the nearest cell outside
/// `mask` (zero outside the mask, infinite when the mask is the whole grid).
pub fn distance_to_complement(grid: &GridSpec, mask: &RegionMask) -> Vec<f64> {
    let outside: Vec<Vec<usize>> = (0..grid.len()).filter(|&c| !mask.contains(c)).map(|c| grid.coords(c)).collect();
    (0..grid.len())
        .map(|c| {
            if !mask.contains(c) {
                return 0.0;
            }
            let me = grid.coords(c);
            outside
                .iter()
                .map(|o| {
                    (0..grid.dims())
                        .map(|d| {
                            let gap = (me[d] as f64 - o[d] as f64).abs() - 1.0;
                            (gap.max(0.0) * grid.width(d)).powi(2)
                        })
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// x' = x + dt on [0, 1], ten cells.
    fn drift() -> GridOracle {
        let dyn_ = DynamicsModel {
            dims: 1,
            bounds: vec![(0.0, 1.0)],
            controls: vec![vec![0.0]],
            step: Arc::new(|s, _| vec![(s[0] + 0.1).min(1.0)]),
            dt: 1,
        };
        let grid = GridSpec::new(vec![0.0], vec![1.0], vec![10]);
        GridOracle::new(grid, dyn_, AbstractionConfig { samples_per_axis: 2 })
    }

    #[test]
    fn zero_horizon_reach_is_the_cell() {
        let o = drift();
        let r = o.reach_star(&[0.35], 0).unwrap();
        assert_eq!(r.cells.iter_set().collect::<Vec<_>>(), vec![3]);
        let r = o.reach_sc(&[0.35], 0, &(Arc::new(|_: &[f64]| vec![0.0]) as Policy)).unwrap();
        assert_eq!(r.cells.count(), 1);
    }

    #[test]
    fn drift_shrink_drops_last_cells() {
        // phi = [0, 0.6), dt = 0.1: R(phi, 2dt) = [0, 0.4)
        let o = drift();
        let phi = RegionMask::from_fn(&o.grid, |c| c < 6);
        let r = o.region_shrink(&phi, 2);
        assert_eq!(r, RegionMask::from_fn(&o.grid, |c| c < 4));
        // per-cell forward check
        let expected = RegionMask::from_fn(&o.grid, |c| {
            phi.contains(c) && o.reach_star(&o.grid.center(c), 2).unwrap().within(&phi)
        });
        assert_eq!(r, expected);
        assert!(r.is_subset(&phi));
        assert_eq!(o.region_shrink(&phi, 0), phi);
        let full = RegionMask::full(&o.grid);
        assert_eq!(o.region_shrink(&full, 5), full);
    }

    #[test]
    fn out_of_bounds_is_an_error() {
        let o = drift();
        assert!(matches!(o.reach_star(&[2.0], 1), Err(ReachError::OutOfBounds(_))));
    }

    #[test]
    fn distance_transform_1d() {
        let g = GridSpec::new(vec![0.0], vec![1.0], vec![10]);
        let m = RegionMask::from_fn(&g, |c| (2..8).contains(&c));
        let d = distance_to_complement(&g, &m);
        assert!((d[2] - 0.0).abs() < 1e-12);
        assert!((d[4] - 0.2).abs() < 1e-12);
        assert_eq!(d[0], 0.0);
    }
}
