//! Sizing the time grid so a LUT build fits in a slice budget.

use std::time::Instant;

use log::warn;

use super::lut::{DpProblem, TimeGrid};
use crate::error::{Error, Result};
use crate::model::{SpaceId, StorageSpace};

pub const MIN_STEPS: usize = 64;
pub const MAX_STEPS: usize = 1 << 16;
/// Grid steps per weight group along the slowest space.
pub const STEPS_PER_GROUP: usize = 16;
/// Fixed throughput used when the grid must not depend on the host.
pub const NOMINAL_CELLS_PER_SEC: f64 = 1.5e9;

#[derive(Debug, Clone)]
pub struct ResolutionRequest {
    pub weights: u64,
    /// Time-slice length.
    pub slice_ns: f64,
    pub budget_fraction: f64,
    /// Largest per-task time the grid must reach before the LUT saturates.
    pub span_ns: f64,
    /// Spaces in the largest architecture that will be solved on this grid.
    pub spaces: usize,
    pub cells_per_sec: f64,
}

/// Cells touched by one full LUT build: both cluster tables plus the
/// cross-cluster scan.
pub fn predicted_cells(spaces: usize, steps: usize, groups: usize) -> u128 {
    (spaces as u128 + 2) * (steps as u128 + 1) * (groups as u128 + 1)
}

fn grid_for_steps(weights: u64, steps: usize) -> (u64, usize) {
    let target_groups = (steps / STEPS_PER_GROUP).clamp(1, weights.max(1) as usize) as u64;
    let group = weights.max(1).div_ceil(target_groups);
    let groups = weights.div_ceil(group) as usize;
    (group, groups)
}

/// Picks the largest step count whose predicted build time stays within
/// `budget_fraction` of the slice. Weights are grouped so the number of
/// groups grows with the step count; once every group holds a single weight,
/// only the step count keeps growing.
pub fn calibrate_resolution(req: &ResolutionRequest) -> Result<TimeGrid> {
    let positive = |v: f64| v > 0.0 && v.is_finite();
    if req.weights == 0 || !positive(req.slice_ns) || !positive(req.span_ns) || !positive(req.cells_per_sec) {
        return Err(Error::InvalidParameter(format!(
            "resolution needs positive weights, slice, span and throughput: {req:?}"
        )));
    }
    if !(req.budget_fraction > 0.0 && req.budget_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "budget fraction {} outside (0, 1]",
            req.budget_fraction
        )));
    }

    let budget_cells = req.budget_fraction * req.slice_ns * 1e-9 * req.cells_per_sec;
    let fits = |steps: usize| {
        let (_, groups) = grid_for_steps(req.weights, steps);
        predicted_cells(req.spaces, steps, groups) as f64 <= budget_cells
    };

    let steps = if !fits(MIN_STEPS) {
        warn!(
            "a {MIN_STEPS}-step grid exceeds the solver budget of {:.0} cells; using it anyway",
            budget_cells
        );
        MIN_STEPS
    } else {
        let (mut lo, mut hi) = (MIN_STEPS, MAX_STEPS);
        while lo < hi {
            let mid = lo + (hi - lo + 1) / 2;
            if fits(mid) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        lo
    };

    let mut grid = grid_with_steps(req.weights, steps, req.span_ns)?;
    grid.budget_fraction = req.budget_fraction;
    let groups = grid.groups(req.weights);
    grid.predicted_build_ns = predicted_cells(req.spaces, steps, groups) as f64 / req.cells_per_sec * 1e9;
    Ok(grid)
}

/// Grid of exactly `steps` steps whose last point reaches `span_ns`, with
/// weights grouped as [`calibrate_resolution`] would group them.
pub fn grid_with_steps(weights: u64, steps: usize, span_ns: f64) -> Result<TimeGrid> {
    if weights == 0 || steps < STEPS_PER_GROUP || !(span_ns > 0.0 && span_ns.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "cannot lay {weights} weights over {steps} steps spanning {span_ns} ns"
        )));
    }
    let (group, groups) = grid_for_steps(weights, steps);
    // Steps the slowest group occupies; the full span then fits in `steps`.
    let per_group = steps / groups;
    // Slightly widened so the slowest group rounds to exactly `per_group`.
    let unit_ns = group as f64 * span_ns / (weights as f64 * per_group as f64) * (1.0 + 1e-12);
    TimeGrid::new(unit_ns, steps, group)
}

/// Cells per second of a LUT build on this machine, measured on a small
/// synthetic instance (best of a few repeats).
pub fn measure_cell_throughput() -> f64 {
    let spaces: Vec<StorageSpace> = SpaceId::ALL
        .iter()
        .enumerate()
        .map(|(i, &id)| super::oracle::synthetic_space(id, 1.0 + i as f64 * 0.7, 10.0 - i as f64))
        .collect();
    let (steps, groups) = (1024, 64);
    let grid = TimeGrid::new(groups as f64 * 3.1 / steps as f64, steps, 1).expect("valid grid");
    let problem = DpProblem::new(&spaces, groups as u64, grid);
    let cells = predicted_cells(spaces.len(), steps, groups) as f64;
    (0..3)
        .map(|_| {
            let start = Instant::now();
            let lut = problem.solve().expect("synthetic instance solves");
            std::hint::black_box(&lut);
            cells / start.elapsed().as_secs_f64().max(1e-9)
        })
        .fold(0.0, f64::max)
}
