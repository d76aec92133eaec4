//! Minimum-energy weight placement under a per-task time constraint.
//!
//! Each cluster gets a bounded-knapsack style table ([`table`]), the two
//! tables are merged into an [`AllocationLut`] indexed by time ([`lut`]),
//! [`oracle`] brute-forces small instances and [`resolution`] sizes the grid
//! so the whole build fits a fraction of a time slice.

pub mod lut;
pub mod oracle;
pub mod resolution;
mod sweep;
pub mod table;

pub use lut::{lookup_allocation, AllocationLut, ClusterTable, DpProblem, LutEntry, TimeGrid};
pub use oracle::{brute_force_optimal, OracleSolution};
pub use resolution::{calibrate_resolution, measure_cell_throughput, predicted_cells, ResolutionRequest};
pub use table::{best_split, combine_clusters, ClusterSplit, DpItem, DpTable};
