//! Slice-by-slice execution of a task stream on one architecture.
//!
//! Tasks that arrive during slice `j` are buffered and run in slice `j + 1`.
//! At the start of each slice the buffered count fixes the per-task time
//! budget, the allocation LUT gives the cheapest placement meeting it, and the
//! weights are migrated before any task runs.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dp::{lookup_allocation, AllocationLut, LutEntry};
use crate::error::{Error, Result};
use crate::migration::{plan_migration, MigrationPlan};
use crate::model::{static_power, PlacementVector, StorageSpace};
use crate::workload::TaskStream;

/// Rounds of re-planning when the migration time changes the time budget.
const MIGRATION_ROUNDS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceConfig {
    pub slice_ns: f64,
    pub max_inferences_per_slice: u32,
    pub slice_count: usize,
    /// Share of every slice reserved for the placement lookup.
    pub budget_fraction: f64,
}

impl SliceConfig {
    pub fn new(slice_ns: f64) -> Self {
        SliceConfig {
            slice_ns,
            max_inferences_per_slice: 10,
            slice_count: 50,
            budget_fraction: 0.01,
        }
    }

    pub fn solver_budget_ns(&self) -> f64 {
        self.budget_fraction * self.slice_ns
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slice_ns > 0.0 && self.slice_ns.is_finite())
            || self.max_inferences_per_slice == 0
            || self.slice_count == 0
            || !(self.budget_fraction > 0.0 && self.budget_fraction < 1.0)
        {
            return Err(Error::InvalidParameter(format!("bad slice configuration {self:?}")));
        }
        Ok(())
    }
}

/// One inference of a model, as seen by the PIM modules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub model: String,
    pub weights: u64,
    pub pim_op_fraction: f64,
}

/// Per-task time budget for `n_tasks` buffered tasks. Infinite when idle.
pub fn derive_t_constraint(n_tasks: u64, slice_ns: f64, migration_ns: f64, solver_budget_ns: f64) -> Result<f64> {
    let overhead_ns = migration_ns + solver_budget_ns;
    if overhead_ns >= slice_ns {
        return Err(Error::SliceOverrun { overhead_ns, slice_ns });
    }
    if n_tasks == 0 {
        return Ok(f64::INFINITY);
    }
    Ok((slice_ns - overhead_ns) / n_tasks as f64)
}

/// An architecture ready to simulate: per-task costs and its LUT.
#[derive(Debug, Clone)]
pub struct PreparedArch {
    pub name: String,
    /// Costs already scaled to one inference.
    pub spaces: Vec<StorageSpace>,
    pub lut: AllocationLut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceTrace {
    pub slice: usize,
    pub arrivals: u32,
    /// Tasks waiting at the start of the slice.
    pub buffered: u64,
    pub executed: u64,
    pub t_constraint_ns: f64,
    pub placement: PlacementVector,
    pub e_task_pj: f64,
    pub migration: MigrationPlan,
    pub dynamic_pj: f64,
    pub static_pj: f64,
    pub total_pj: f64,
    pub deadline_met: bool,
    /// Worst arrival-to-completion latency among tasks finished here.
    pub max_latency_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub arch: String,
    pub slice_ns: f64,
    pub traces: Vec<SliceTrace>,
    pub total_energy_pj: f64,
    pub misses: usize,
    pub max_latency_ns: f64,
}

/// Cheapest placement and migration for `n` tasks, given the placement
/// currently in memory.
fn choose(
    arch: &PreparedArch,
    prev: &PlacementVector,
    n: u64,
    cfg: &SliceConfig,
) -> Result<(LutEntry, MigrationPlan, f64, bool)> {
    let budget = cfg.solver_budget_ns();
    let mut assumed = 0.0;
    for _ in 0..MIGRATION_ROUNDS {
        let Ok(t_c) = derive_t_constraint(n, cfg.slice_ns, assumed, budget) else {
            break;
        };
        let Ok(entry) = lookup_allocation(&arch.lut, t_c) else {
            break;
        };
        let plan = plan_migration(prev, &entry.placement, &arch.spaces)?;
        if plan.time_ns <= assumed {
            return Ok((entry.clone(), plan, t_c, true));
        }
        // With the real migration time the same entry may still fit.
        if let Ok(t_real) = derive_t_constraint(n, cfg.slice_ns, plan.time_ns, budget) {
            if entry.placement.makespan_ns(&arch.spaces) <= t_real {
                return Ok((entry.clone(), plan, t_real, true));
            }
        }
        assumed = plan.time_ns;
    }
    // Overloaded: run as fast as possible and carry the rest over.
    let peak = arch
        .lut
        .peak()
        .ok_or_else(|| Error::Unattainable {
            t_constraint_ns: f64::INFINITY,
        })?
        .clone();
    let plan = plan_migration(prev, &peak.placement, &arch.spaces)?;
    let t_c = (cfg.slice_ns - plan.time_ns - budget) / n.max(1) as f64;
    Ok((peak, plan, t_c, false))
}

pub fn simulate(arch: &PreparedArch, stream: &TaskStream, cfg: &SliceConfig) -> Result<SimulationResult> {
    cfg.validate()?;
    let slice_ns = cfg.slice_ns;
    let budget = cfg.solver_budget_ns();
    let mut queue: VecDeque<(usize, u64)> = VecDeque::new();
    let mut placement = arch.lut.relaxed().placement;
    let mut traces = Vec::with_capacity(cfg.slice_count);

    for slice in 0..cfg.slice_count {
        let buffered: u64 = queue.iter().map(|&(_, c)| c).sum();
        let (entry, migration, t_constraint_ns, fits) = if buffered == 0 {
            let entry = arch.lut.relaxed().clone();
            let plan = plan_migration(&placement, &entry.placement, &arch.spaces)?;
            (entry, plan, f64::INFINITY, true)
        } else {
            choose(arch, &placement, buffered, cfg)?
        };

        let task_ns = entry.placement.makespan_ns(&arch.spaces);
        let available = slice_ns - migration.time_ns - budget;
        let executed = if buffered == 0 {
            0
        } else if fits {
            buffered
        } else if available <= 0.0 {
            0
        } else if task_ns > 0.0 {
            ((available / task_ns * (1.0 + 1e-12)).floor() as u64).min(buffered)
        } else {
            buffered
        };

        let start = slice as f64 * slice_ns + budget + migration.time_ns;
        let mut max_latency_ns: f64 = 0.0;
        let mut done = 0u64;
        while done < executed {
            let (arrived, count) = queue.front_mut().expect("queue holds the buffered tasks");
            let take = (*count).min(executed - done);
            done += take;
            let finish = start + done as f64 * task_ns;
            max_latency_ns = max_latency_ns.max(finish - *arrived as f64 * slice_ns);
            *count -= take;
            if *count == 0 {
                queue.pop_front();
            }
        }

        let arrivals = stream.arrivals.get(slice).copied().unwrap_or(0);
        if arrivals > 0 {
            queue.push_back((slice, u64::from(arrivals)));
        }

        placement = entry.placement;
        let dynamic_pj = executed as f64 * entry.e_task_pj;
        let static_pj = static_power(&placement, &arch.spaces) * slice_ns;
        traces.push(SliceTrace {
            slice,
            arrivals,
            buffered,
            executed,
            t_constraint_ns,
            placement,
            e_task_pj: entry.e_task_pj,
            total_pj: migration.energy_pj + dynamic_pj + static_pj,
            migration,
            dynamic_pj,
            static_pj,
            deadline_met: executed == buffered,
            max_latency_ns,
        });
    }

    Ok(SimulationResult {
        arch: arch.name.clone(),
        slice_ns,
        total_energy_pj: traces.iter().map(|t| t.total_pj).sum(),
        misses: traces.iter().filter(|t| !t.deadline_met).count(),
        max_latency_ns: traces.iter().map(|t| t.max_latency_ns).fold(0.0, f64::max),
        traces,
    })
}

/// `1 - e_a / e_b`: how much less energy `a` uses than `b`.
pub fn energy_savings(e_a: f64, e_b: f64) -> f64 {
    if e_b == 0.0 {
        return 0.0;
    }
    1.0 - e_a / e_b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub results: Vec<SimulationResult>,
    /// `savings[a][b]` is the energy saving of architecture `a` over `b`.
    pub savings: Vec<Vec<f64>>,
}

/// Runs the same stream on every architecture and tabulates pairwise savings.
pub fn compare_architectures(archs: &[PreparedArch], stream: &TaskStream, cfg: &SliceConfig) -> Result<Comparison> {
    let results = archs
        .iter()
        .map(|a| simulate(a, stream, cfg))
        .collect::<Result<Vec<_>>>()?;
    let savings = results
        .iter()
        .map(|a| {
            results
                .iter()
                .map(|b| energy_savings(a.total_energy_pj, b.total_energy_pj))
                .collect()
        })
        .collect();
    Ok(Comparison { results, savings })
}
