//! Shared setup for comparing architectures on one model.
//!
//! All architectures are solved on the same time grid and simulated with the
//! same slice length. The slice length is derived from the first
//! (reference) architecture: `max_inferences` tasks at its peak speed, plus
//! some headroom and the solver budget, must fit in one slice.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::dp::resolution::{calibrate_resolution, grid_with_steps, ResolutionRequest, NOMINAL_CELLS_PER_SEC};
use crate::dp::{AllocationLut, DpProblem, TimeGrid};
use crate::error::{Error, Result};
use crate::model::{derive_cost_model, ArchitectureSpec, ClusterKind, StorageSpace};
use crate::sim::{PreparedArch, SliceConfig};
use crate::workload::ModelProfile;

pub const DEFAULT_HEADROOM: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelProfile,
    pub max_inferences_per_slice: u32,
    pub slice_count: usize,
    pub budget_fraction: f64,
    /// Extra time per task on top of the reference peak, as a fraction.
    pub headroom: f64,
    /// Throughput assumed when sizing the grid.
    pub cells_per_sec: f64,
    /// Fixed step count instead of the calibrated one.
    pub steps_override: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(model: ModelProfile) -> Self {
        ExperimentConfig {
            model,
            max_inferences_per_slice: 10,
            slice_count: 50,
            budget_fraction: 0.01,
            headroom: DEFAULT_HEADROOM,
            cells_per_sec: NOMINAL_CELLS_PER_SEC,
            steps_override: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub grid: TimeGrid,
    pub slice: SliceConfig,
    /// In input order; the first is the reference.
    pub archs: Vec<PreparedArch>,
}

impl Experiment {
    pub fn reference(&self) -> &PreparedArch {
        &self.archs[0]
    }
}

/// Lower bound on the task time of `spaces` with fractional placement: each
/// cluster streams through its fastest space.
pub fn continuous_peak_ns(spaces: &[StorageSpace], weights: u64) -> f64 {
    let rate: f64 = [ClusterKind::Hp, ClusterKind::Lp]
        .into_iter()
        .filter_map(|c| {
            spaces
                .iter()
                .filter(|s| s.cluster == c)
                .map(|s| s.t_per_weight_ns)
                .min_by(f64::total_cmp)
        })
        .map(|t| 1.0 / t)
        .sum();
    weights as f64 / rate
}

pub fn slice_length_ns(peak_task_ns: f64, cfg: &ExperimentConfig) -> f64 {
    f64::from(cfg.max_inferences_per_slice) * peak_task_ns * (1.0 + cfg.headroom) / (1.0 - cfg.budget_fraction)
}

pub fn prepare(archs: &[ArchitectureSpec], cfg: &ExperimentConfig) -> Result<Experiment> {
    if archs.is_empty() {
        return Err(Error::InvalidParameter("no architectures to prepare".into()));
    }
    cfg.model.validate()?;
    if !(cfg.headroom >= 0.0 && cfg.headroom.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "headroom {} must be >= 0",
            cfg.headroom
        )));
    }
    let weights = cfg.model.param_count;
    let ops = cfg.model.ops_per_weight();
    let spaces: Vec<Vec<StorageSpace>> = archs
        .iter()
        .map(|a| Ok(derive_cost_model(a)?.iter().map(|s| s.scaled(ops)).collect()))
        .collect::<Result<_>>()?;

    let slowest = spaces.iter().flatten().map(|s| s.t_per_weight_ns).fold(0.0, f64::max);
    let span_ns = weights as f64 * slowest;
    let max_spaces = spaces.iter().map(Vec::len).max().unwrap_or(0);
    let estimate_ns = slice_length_ns(continuous_peak_ns(&spaces[0], weights), cfg);

    let mut grid = match cfg.steps_override {
        Some(steps) => grid_with_steps(weights, steps, span_ns)?,
        None => calibrate_resolution(&ResolutionRequest {
            weights,
            slice_ns: estimate_ns,
            budget_fraction: cfg.budget_fraction,
            span_ns,
            spaces: max_spaces,
            cells_per_sec: cfg.cells_per_sec,
        })?,
    };
    grid.budget_fraction = cfg.budget_fraction;

    let luts: Vec<AllocationLut> = spaces
        .iter()
        .map(|s| DpProblem::new(s, weights, grid.clone()).solve())
        .collect::<Result<_>>()?;

    let peak_index = luts[0].peak_index().ok_or(Error::Unattainable {
        t_constraint_ns: grid.span_ns(),
    })?;
    let slice_ns = slice_length_ns(peak_index as f64 * grid.unit_ns, cfg);
    debug!(
        "grid: {} steps of {:.3} ns, groups of {}; slice {:.0} ns (estimate {:.0})",
        grid.steps, grid.unit_ns, grid.weight_group, slice_ns, estimate_ns
    );

    let slice = SliceConfig {
        slice_ns,
        max_inferences_per_slice: cfg.max_inferences_per_slice,
        slice_count: cfg.slice_count,
        budget_fraction: cfg.budget_fraction,
    };
    slice.validate()?;

    let archs = archs
        .iter()
        .zip(spaces)
        .zip(luts)
        .map(|((a, spaces), lut)| PreparedArch {
            name: a.name.clone(),
            spaces,
            lut,
        })
        .collect();
    Ok(Experiment { grid, slice, archs })
}
