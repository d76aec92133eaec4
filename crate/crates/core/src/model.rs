//! Hardware description of a PIM processor and the per-weight cost model.
//!
//! A processor is a list of clusters (HP and/or LP). Each cluster has
//! `module_count` identical PIM modules, and each module has up to two memory
//! banks (MRAM, SRAM) plus a processing element. Weights can be placed in any
//! of the four [`SpaceId`]s the architecture exposes.
//!
//! All times are in nanoseconds, powers in milliwatts and energies in
//! picojoules (mW x ns = pJ).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MemoryKind {
    #[serde(rename = "MRAM")]
    Mram,
    #[serde(rename = "SRAM")]
    Sram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClusterKind {
    #[serde(rename = "HP")]
    Hp,
    #[serde(rename = "LP")]
    Lp,
}

impl fmt::Display for ClusterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClusterKind::Hp => "HP",
            ClusterKind::Lp => "LP",
        })
    }
}

/// One of the four placeable storage targets.
///
/// The declaration order is the canonical order used everywhere a placement
/// is written out (`x_1..x_4`) and for tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpaceId {
    #[serde(rename = "HP-MRAM")]
    HpMram,
    #[serde(rename = "HP-SRAM")]
    HpSram,
    #[serde(rename = "LP-MRAM")]
    LpMram,
    #[serde(rename = "LP-SRAM")]
    LpSram,
}

impl SpaceId {
    pub const ALL: [SpaceId; 4] = [SpaceId::HpMram, SpaceId::HpSram, SpaceId::LpMram, SpaceId::LpSram];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn cluster(self) -> ClusterKind {
        match self {
            SpaceId::HpMram | SpaceId::HpSram => ClusterKind::Hp,
            SpaceId::LpMram | SpaceId::LpSram => ClusterKind::Lp,
        }
    }

    pub fn memory(self) -> MemoryKind {
        match self {
            SpaceId::HpMram | SpaceId::LpMram => MemoryKind::Mram,
            SpaceId::HpSram | SpaceId::LpSram => MemoryKind::Sram,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SpaceId::HpMram => "HP-MRAM",
            SpaceId::HpSram => "HP-SRAM",
            SpaceId::LpMram => "LP-MRAM",
            SpaceId::LpSram => "LP-SRAM",
        }
    }
}

impl fmt::Display for SpaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpaceId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SpaceId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown storage space `{s}`")))
    }
}

/// Per-module characteristics of one memory bank type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryTech {
    pub read_latency_ns: f64,
    pub write_latency_ns: f64,
    pub dynamic_read_mw: f64,
    pub dynamic_write_mw: f64,
    pub static_mw: f64,
    pub capacity_bytes: u64,
}

impl MemoryTech {
    pub fn read_energy_pj(&self) -> f64 {
        self.dynamic_read_mw * self.read_latency_ns
    }

    pub fn write_energy_pj(&self) -> f64 {
        self.dynamic_write_mw * self.write_latency_ns
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeSpec {
    /// One MAC over one weight.
    pub op_latency_ns: f64,
    pub dynamic_mw: f64,
    pub static_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub name: ClusterKind,
    pub vdd_volts: f64,
    pub module_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mram: Option<MemoryTech>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sram: Option<MemoryTech>,
    pub pe: PeSpec,
}

impl ClusterSpec {
    pub fn memory(&self, kind: MemoryKind) -> Option<&MemoryTech> {
        match kind {
            MemoryKind::Mram => self.mram.as_ref(),
            MemoryKind::Sram => self.sram.as_ref(),
        }
    }

    /// PE static power of the whole cluster.
    pub fn pe_static_mw(&self) -> f64 {
        f64::from(self.module_count) * self.pe.static_mw
    }

    /// Static power of every memory bank and PE in the cluster, ignoring gating.
    pub fn ungated_static_mw(&self) -> f64 {
        let banks: f64 = [&self.mram, &self.sram]
            .into_iter()
            .flatten()
            .map(|m| m.static_mw)
            .sum();
        f64::from(self.module_count) * banks + self.pe_static_mw()
    }
}

/// Knobs of the per-weight energy attribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostOptions {
    /// Each weight access is charged the static power of the memory it reads
    /// from (and the cluster PEs) for this long. Zero gives a purely dynamic
    /// per-weight energy.
    #[serde(default = "CostOptions::default_window")]
    pub static_window_ns: f64,
    /// Whether a cluster's PEs are power-gated when the cluster holds no data.
    #[serde(default = "CostOptions::default_gate_pe")]
    pub gate_pe_static: bool,
}

impl CostOptions {
    pub const DEFAULT_STATIC_WINDOW_NS: f64 = 16.0;

    fn default_window() -> f64 {
        Self::DEFAULT_STATIC_WINDOW_NS
    }

    fn default_gate_pe() -> bool {
        true
    }
}

impl Default for CostOptions {
    fn default() -> Self {
        CostOptions {
            static_window_ns: Self::DEFAULT_STATIC_WINDOW_NS,
            gate_pe_static: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub name: String,
    pub available_spaces: Vec<SpaceId>,
    #[serde(default = "default_weight_bytes")]
    pub weight_bytes: u32,
    #[serde(default)]
    pub cost: CostOptions,
    pub clusters: Vec<ClusterSpec>,
}

fn default_weight_bytes() -> u32 {
    1
}

impl ArchitectureSpec {
    pub fn cluster(&self, kind: ClusterKind) -> Option<&ClusterSpec> {
        self.clusters.iter().find(|c| c.name == kind)
    }

    fn invalid(&self, reason: impl Into<String>) -> Error {
        Error::InvalidArchitecture {
            arch: self.name.clone(),
            reason: reason.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.clusters.is_empty() || self.clusters.len() > 2 {
            return Err(self.invalid(format!("expected 1 or 2 clusters, found {}", self.clusters.len())));
        }
        if self.clusters.len() == 2 && self.clusters[0].name == self.clusters[1].name {
            return Err(self.invalid("duplicate cluster kind"));
        }
        if self.available_spaces.is_empty() {
            return Err(self.invalid("no available storage spaces"));
        }
        if self.weight_bytes == 0 {
            return Err(self.invalid("weight_bytes must be positive"));
        }
        let window = self.cost.static_window_ns;
        if !(window.is_finite() && window >= 0.0) {
            return Err(self.invalid("static_window_ns must be finite and >= 0"));
        }
        for (i, id) in self.available_spaces.iter().enumerate() {
            if self.available_spaces[..i].contains(id) {
                return Err(self.invalid(format!("{id} listed twice")));
            }
        }
        for cluster in &self.clusters {
            if cluster.module_count == 0 {
                return Err(self.invalid(format!("{} cluster has zero modules", cluster.name)));
            }
            if !(cluster.vdd_volts > 0.0) {
                return Err(self.invalid(format!("{} cluster vdd must be positive", cluster.name)));
            }
            let pe = &cluster.pe;
            if !(pe.op_latency_ns > 0.0) || pe.dynamic_mw < 0.0 || pe.static_mw < 0.0 {
                return Err(self.invalid(format!(
                    "{} PE needs positive latency and non-negative power",
                    cluster.name
                )));
            }
            for (kind, mem) in [(MemoryKind::Mram, &cluster.mram), (MemoryKind::Sram, &cluster.sram)] {
                let Some(mem) = mem else { continue };
                let label = format!("{} {:?}", cluster.name, kind);
                if !(mem.read_latency_ns > 0.0 && mem.write_latency_ns > 0.0) {
                    return Err(self.invalid(format!("{label}: latencies must be positive")));
                }
                if mem.dynamic_read_mw < 0.0 || mem.dynamic_write_mw < 0.0 || mem.static_mw < 0.0 {
                    return Err(self.invalid(format!("{label}: powers must be non-negative")));
                }
            }
        }
        for id in &self.available_spaces {
            let cluster = self
                .cluster(id.cluster())
                .ok_or_else(|| self.invalid(format!("{id} needs a {} cluster", id.cluster())))?;
            let mem = cluster
                .memory(id.memory())
                .ok_or_else(|| self.invalid(format!("{id} has no memory bank defined")))?;
            if mem.capacity_bytes / u64::from(self.weight_bytes) == 0 {
                return Err(self.invalid(format!("{id} holds zero weights")));
            }
        }
        Ok(())
    }
}

/// A (time, energy) pair for moving one weight in or out of a space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveCost {
    /// Cluster-level time, i.e. already divided by the module count.
    pub time_ns: f64,
    pub energy_pj: f64,
}

/// One placeable target together with its derived per-weight costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageSpace {
    pub id: SpaceId,
    pub cluster: ClusterKind,
    /// Serviceable time per weight (`t_i`).
    pub t_per_weight_ns: f64,
    /// Energy per weight (`e_i`), the value the optimizer minimizes.
    pub e_per_weight_pj: f64,
    /// Dynamic part of `e_per_weight_pj` (one read plus one MAC).
    pub e_dynamic_pj: f64,
    /// Static power of this bank type across the whole cluster.
    pub static_mw_when_active: f64,
    /// Static power of the cluster's PEs.
    pub pe_static_mw: f64,
    pub pe_gated: bool,
    pub capacity_weights: u64,
    pub move_read: MoveCost,
    pub move_write: MoveCost,
}

impl StorageSpace {
    /// Costs for one inference that touches every weight `ops_per_weight`
    /// times. Migration costs are per weight moved and stay unscaled.
    pub fn scaled(&self, ops_per_weight: f64) -> StorageSpace {
        StorageSpace {
            t_per_weight_ns: self.t_per_weight_ns * ops_per_weight,
            e_per_weight_pj: self.e_per_weight_pj * ops_per_weight,
            e_dynamic_pj: self.e_dynamic_pj * ops_per_weight,
            ..self.clone()
        }
    }
}

/// Derives one [`StorageSpace`] per available space, in canonical order.
pub fn derive_cost_model(arch: &ArchitectureSpec) -> Result<Vec<StorageSpace>> {
    arch.validate()?;
    let mut ids = arch.available_spaces.clone();
    ids.sort();
    ids.into_iter()
        .map(|id| {
            let cluster = arch.cluster(id.cluster()).expect("validated");
            let mem = cluster.memory(id.memory()).expect("validated");
            let modules = f64::from(cluster.module_count);
            let pe = &cluster.pe;

            let e_dynamic = mem.read_energy_pj() + pe.dynamic_mw * pe.op_latency_ns;
            let static_mw = modules * mem.static_mw;
            let pe_static = cluster.pe_static_mw();
            let window = arch.cost.static_window_ns * (static_mw + pe_static);

            Ok(StorageSpace {
                id,
                cluster: cluster.name,
                t_per_weight_ns: (mem.read_latency_ns + pe.op_latency_ns) / modules,
                e_per_weight_pj: e_dynamic + window,
                e_dynamic_pj: e_dynamic,
                static_mw_when_active: static_mw,
                pe_static_mw: pe_static,
                pe_gated: arch.cost.gate_pe_static,
                capacity_weights: u64::from(cluster.module_count) * mem.capacity_bytes / u64::from(arch.weight_bytes),
                move_read: MoveCost {
                    time_ns: mem.read_latency_ns / modules,
                    energy_pj: mem.read_energy_pj(),
                },
                move_write: MoveCost {
                    time_ns: mem.write_latency_ns / modules,
                    energy_pj: mem.write_energy_pj(),
                },
            })
        })
        .collect()
}

/// Number of weights held by each of the four canonical spaces (`x_1..x_4`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PlacementVector(pub [u64; 4]);

impl PlacementVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(id: SpaceId, count: u64) -> Self {
        let mut x = Self::zero();
        x[id] = count;
        x
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn cluster_total(&self, cluster: ClusterKind) -> u64 {
        SpaceId::ALL
            .into_iter()
            .filter(|id| id.cluster() == cluster)
            .map(|id| self[id])
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SpaceId, u64)> + '_ {
        SpaceId::ALL.into_iter().map(|id| (id, self[id]))
    }

    /// `Σ e_i x_i` over the given spaces.
    pub fn energy_pj(&self, spaces: &[StorageSpace]) -> f64 {
        spaces.iter().map(|s| s.e_per_weight_pj * self[s.id] as f64).sum()
    }

    /// Parallel makespan: clusters run concurrently, spaces within a cluster
    /// serialize.
    pub fn makespan_ns(&self, spaces: &[StorageSpace]) -> f64 {
        [ClusterKind::Hp, ClusterKind::Lp]
            .into_iter()
            .map(|c| {
                spaces
                    .iter()
                    .filter(|s| s.cluster == c)
                    .map(|s| s.t_per_weight_ns * self[s.id] as f64)
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<SpaceId> for PlacementVector {
    type Output = u64;

    fn index(&self, id: SpaceId) -> &u64 {
        &self.0[id.index()]
    }
}

impl std::ops::IndexMut<SpaceId> for PlacementVector {
    fn index_mut(&mut self, id: SpaceId) -> &mut u64 {
        &mut self.0[id.index()]
    }
}

/// Static power (mW) drawn while holding `allocation`. Spaces with no data
/// are power-gated, as are the PEs of an empty cluster when `pe_gated`.
pub fn static_power(allocation: &PlacementVector, spaces: &[StorageSpace]) -> f64 {
    let mut total = 0.0;
    let mut pe_charged: Vec<ClusterKind> = Vec::with_capacity(2);
    for space in spaces {
        let active = allocation[space.id] > 0;
        if active {
            total += space.static_mw_when_active;
        }
        if (active || !space.pe_gated) && !pe_charged.contains(&space.cluster) {
            pe_charged.push(space.cluster);
            total += space.pe_static_mw;
        }
    }
    total
}

/// Per-task energy of the unoptimized reference placement: every weight in
/// MRAM, split evenly between the HP and LP clusters, with nothing gated.
/// Each weight access is charged the static power of its entire cluster over
/// the attribution window. `None` if the architecture lacks either MRAM.
pub fn unoptimized_reference_energy_pj(arch: &ArchitectureSpec, weights: u64) -> Option<f64> {
    let hp = arch.cluster(ClusterKind::Hp)?;
    let lp = arch.cluster(ClusterKind::Lp)?;
    let per_weight = |c: &ClusterSpec| -> Option<f64> {
        let mem = c.mram.as_ref()?;
        Some(
            mem.read_energy_pj()
                + c.pe.dynamic_mw * c.pe.op_latency_ns
                + arch.cost.static_window_ns * c.ungated_static_mw(),
        )
    };
    let hp_weights = weights / 2;
    let lp_weights = weights - hp_weights;
    Some(hp_weights as f64 * per_weight(hp)? + lp_weights as f64 * per_weight(lp)?)
}
