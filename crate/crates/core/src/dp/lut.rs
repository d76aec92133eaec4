use std::io::Write;

use serde::{Deserialize, Serialize};

use super::resolution::predicted_cells;
use super::sweep::RowSweep;
use super::table::{best_split, combine_clusters, ClusterSplit, DpItem, DpTable, MAX_TABLE_CELLS};
use crate::error::{Error, Result};
use crate::model::{ClusterKind, PlacementVector, SpaceId, StorageSpace};

/// Quantization of the time axis and of the weight count.
///
/// The DP works on groups of `weight_group` weights; one grid step is
/// `unit_ns`. Per-group times are rounded up to whole steps and lookups round
/// the requested constraint down, so realized times never exceed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub unit_ns: f64,
    pub steps: usize,
    pub weight_group: u64,
    pub budget_fraction: f64,
    /// Predicted LUT build time under the throughput model used to pick the grid.
    pub predicted_build_ns: f64,
}

impl TimeGrid {
    pub fn new(unit_ns: f64, steps: usize, weight_group: u64) -> Result<Self> {
        if !(unit_ns > 0.0 && unit_ns.is_finite()) || steps == 0 || weight_group == 0 {
            return Err(Error::InvalidParameter(format!(
                "bad time grid: unit {unit_ns} ns, {steps} steps, group {weight_group}"
            )));
        }
        Ok(TimeGrid {
            unit_ns,
            steps,
            weight_group,
            budget_fraction: 0.01,
            predicted_build_ns: 0.0,
        })
    }

    pub fn groups(&self, weights: u64) -> usize {
        weights.div_ceil(self.weight_group) as usize
    }

    /// Grid steps needed by one group in `space`, rounded up.
    pub fn units_for(&self, space: &StorageSpace) -> usize {
        let exact = self.weight_group as f64 * space.t_per_weight_ns / self.unit_ns;
        (exact.ceil() as usize).max(1)
    }

    pub fn span_ns(&self) -> f64 {
        self.steps as f64 * self.unit_ns
    }
}

/// Everything needed to solve one placement instance.
#[derive(Debug, Clone)]
pub struct DpProblem<'a> {
    pub spaces: &'a [StorageSpace],
    pub weights: u64,
    pub grid: TimeGrid,
    pub honor_capacity: bool,
}

impl<'a> DpProblem<'a> {
    pub fn new(spaces: &'a [StorageSpace], weights: u64, grid: TimeGrid) -> Self {
        DpProblem {
            spaces,
            weights,
            grid,
            honor_capacity: true,
        }
    }

    /// Quantized DP items of one cluster, in canonical space order.
    pub fn cluster_items(&self, cluster: ClusterKind) -> (Vec<SpaceId>, Vec<DpItem>) {
        self.spaces
            .iter()
            .filter(|s| s.cluster == cluster)
            .map(|s| (s.id, self.item(s)))
            .unzip()
    }

    pub fn item(&self, space: &StorageSpace) -> DpItem {
        let group = self.grid.weight_group;
        DpItem {
            time_units: self.grid.units_for(space),
            energy: group as f64 * space.e_per_weight_pj,
            capacity: self.honor_capacity.then(|| (space.capacity_weights / group) as usize),
        }
    }

    pub fn build_tables(&self) -> Result<(ClusterTable, ClusterTable)> {
        let groups = self.grid.groups(self.weights);
        let build = |cluster| -> Result<ClusterTable> {
            let (ids, items) = self.cluster_items(cluster);
            Ok(ClusterTable {
                ids,
                table: DpTable::build(&items, groups, self.grid.steps)?,
            })
        };
        Ok((build(ClusterKind::Hp)?, build(ClusterKind::Lp)?))
    }

    fn check_capacity(&self) -> Result<()> {
        if self.honor_capacity {
            let capacity = self
                .spaces
                .iter()
                .fold(0u64, |acc, s| acc.saturating_add(s.capacity_weights));
            if capacity < self.weights {
                return Err(Error::InvalidParameter(format!(
                    "{} weights exceed the total capacity of {capacity}",
                    self.weights
                )));
            }
        }
        Ok(())
    }

    /// Builds the LUT. Uses the row sweep when both clusters allow it, which
    /// gives the same result as [`DpProblem::solve_with_tables`] without
    /// materializing the tables.
    pub fn solve(&self) -> Result<AllocationLut> {
        self.check_capacity()?;
        let groups = self.grid.groups(self.weights);
        let (hp_ids, hp_items) = self.cluster_items(ClusterKind::Hp);
        let (lp_ids, lp_items) = self.cluster_items(ClusterKind::Lp);
        let (Some(mut hp), Some(mut lp)) = (RowSweep::new(&hp_items, groups), RowSweep::new(&lp_items, groups)) else {
            return self.solve_with_tables();
        };
        let cells = predicted_cells(self.spaces.len(), self.grid.steps, groups);
        if cells > MAX_TABLE_CELLS * 4 {
            return Err(Error::GridOverflow {
                cells,
                limit: MAX_TABLE_CELLS * 4,
            });
        }
        let trim = self.trim_order();
        let mut entries = Vec::with_capacity(self.grid.steps + 1);
        for t in 0..=self.grid.steps {
            hp.advance(t);
            lp.advance(t);
            let entry = match best_split(hp.best(), lp.best(), groups) {
                None => LutEntry::infeasible(),
                Some(split) => {
                    let hp_counts = hp.reconstruct(split.k_hp);
                    let lp_counts = lp.reconstruct(split.k_lp);
                    self.entry(split, [(&hp_ids, hp_counts), (&lp_ids, lp_counts)], &trim)
                }
            };
            entries.push(entry);
        }
        Ok(self.finish(entries))
    }

    /// Builds both cluster tables in full and combines them.
    pub fn solve_with_tables(&self) -> Result<AllocationLut> {
        self.check_capacity()?;
        let groups = self.grid.groups(self.weights);
        let (hp, lp) = self.build_tables()?;
        let splits = combine_clusters(&hp.table, &lp.table, groups)?;
        let trim = self.trim_order();
        let entries = splits
            .into_iter()
            .enumerate()
            .map(|(t, split)| match split {
                None => LutEntry::infeasible(),
                Some(split) => {
                    let counts =
                        |side: &ClusterTable, k| side.table.reconstruct(t, k).expect("finite entry reconstructs");
                    let sides = [(&hp.ids, counts(&hp, split.k_hp)), (&lp.ids, counts(&lp, split.k_lp))];
                    self.entry(split, sides, &trim)
                }
            })
            .collect();
        Ok(self.finish(entries))
    }

    fn entry(&self, split: ClusterSplit, sides: [(&Vec<SpaceId>, Vec<usize>); 2], trim: &[SpaceId]) -> LutEntry {
        let mut placement = PlacementVector::zero();
        for (ids, counts) in sides {
            for (id, c) in ids.iter().zip(counts) {
                placement[*id] = c as u64 * self.grid.weight_group;
            }
        }
        let mut excess = placement.total() - self.weights;
        for &id in trim {
            let take = excess.min(placement[id]);
            placement[id] -= take;
            excess -= take;
        }
        LutEntry {
            feasible: true,
            objective_pj: split.energy,
            e_task_pj: placement.energy_pj(self.spaces),
            k_hp: placement.cluster_total(ClusterKind::Hp),
            k_lp: placement.cluster_total(ClusterKind::Lp),
            placement,
        }
    }

    fn finish(&self, entries: Vec<LutEntry>) -> AllocationLut {
        AllocationLut {
            grid: self.grid.clone(),
            weights: self.weights,
            spaces: self.spaces.iter().map(|s| s.id).collect(),
            entries,
        }
    }

    /// Order in which the padding of the last partial group is removed: most
    /// expensive space first, lower index on ties.
    fn trim_order(&self) -> Vec<SpaceId> {
        let mut order: Vec<&StorageSpace> = self.spaces.iter().collect();
        order.sort_by(|a, b| b.e_per_weight_pj.total_cmp(&a.e_per_weight_pj).then(a.id.cmp(&b.id)));
        order.into_iter().map(|s| s.id).collect()
    }
}

/// DP table of one cluster plus the space each item row stands for.
#[derive(Debug, Clone)]
pub struct ClusterTable {
    pub ids: Vec<SpaceId>,
    pub table: DpTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LutEntry {
    pub feasible: bool,
    /// The minimized DP objective on grouped weights.
    pub objective_pj: f64,
    /// `Σ e_i x_i` of the stored placement.
    pub e_task_pj: f64,
    pub k_hp: u64,
    pub k_lp: u64,
    pub placement: PlacementVector,
}

impl LutEntry {
    fn infeasible() -> Self {
        LutEntry {
            feasible: false,
            objective_pj: f64::INFINITY,
            e_task_pj: f64::INFINITY,
            k_hp: 0,
            k_lp: 0,
            placement: PlacementVector::zero(),
        }
    }
}

/// Optimal placement for every time index of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationLut {
    pub grid: TimeGrid,
    pub weights: u64,
    pub spaces: Vec<SpaceId>,
    pub entries: Vec<LutEntry>,
}

impl AllocationLut {
    /// Grid index for a per-task constraint: rounded down, clamped to the end.
    pub fn index_for(&self, t_constraint_ns: f64) -> Option<usize> {
        if t_constraint_ns.is_nan() || t_constraint_ns < 0.0 {
            return None;
        }
        let steps = self.grid.steps;
        let idx = t_constraint_ns / self.grid.unit_ns;
        Some(if idx >= steps as f64 {
            steps
        } else {
            idx.floor() as usize
        })
    }

    /// First feasible index: the peak-performance point.
    pub fn peak_index(&self) -> Option<usize> {
        self.entries.iter().position(|e| e.feasible)
    }

    pub fn peak(&self) -> Option<&LutEntry> {
        self.peak_index().map(|i| &self.entries[i])
    }

    /// The fully relaxed entry.
    pub fn relaxed(&self) -> &LutEntry {
        self.entries.last().expect("grid has at least one step")
    }

    pub fn write_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t_index,t_ns,feasible,E_task_pJ,x_1,x_2,x_3,x_4")?;
        for (t, e) in self.entries.iter().enumerate() {
            let x = e.placement.0;
            writeln!(
                out,
                "{t},{:.4},{},{:.4},{},{},{},{}",
                t as f64 * self.grid.unit_ns,
                u8::from(e.feasible),
                e.e_task_pj,
                x[0],
                x[1],
                x[2],
                x[3]
            )?;
        }
        Ok(())
    }
}

/// Looks up the placement for a per-task time budget.
pub fn lookup_allocation(lut: &AllocationLut, t_constraint_ns: f64) -> Result<&LutEntry> {
    let entry = lut.index_for(t_constraint_ns).map(|i| &lut.entries[i]);
    match entry {
        Some(e) if e.feasible => Ok(e),
        _ => Err(Error::Unattainable { t_constraint_ns }),
    }
}
