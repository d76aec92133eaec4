//! Exhaustive reference solver for small placement instances.

use super::lut::DpProblem;
use crate::error::{Error, Result};
use crate::model::{ClusterKind, MoveCost, PlacementVector, SpaceId, StorageSpace};

/// Largest number of compositions the oracle will enumerate.
pub const MAX_COMPOSITIONS: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    /// Same grouped objective the DP minimizes.
    pub energy: f64,
    /// Group counts scaled by the group size (not trimmed).
    pub placement: PlacementVector,
}

/// `C(k + n - 1, n - 1)`, saturating.
pub fn composition_count(k: usize, n: usize) -> u128 {
    if n == 0 {
        return u128::from(k == 0);
    }
    let mut c: u128 = 1;
    for j in 1..n as u128 {
        c = c.saturating_mul(k as u128 + j) / j;
    }
    c
}

/// Enumerates every vector of group counts summing to the group total and
/// keeps the cheapest one whose per-cluster quantized time fits `t_index`.
///
/// Uses the same rounded-up item times as the DP, so the two agree exactly.
pub fn brute_force_optimal(problem: &DpProblem<'_>, t_constraint_ns: f64) -> Result<Option<OracleSolution>> {
    let groups = problem.grid.groups(problem.weights);
    let n = problem.spaces.len();
    let compositions = composition_count(groups, n);
    if compositions > MAX_COMPOSITIONS {
        return Err(Error::InstanceTooLarge {
            compositions,
            limit: MAX_COMPOSITIONS,
        });
    }
    if t_constraint_ns.is_nan() || t_constraint_ns < 0.0 {
        return Ok(None);
    }
    let t_units = (t_constraint_ns / problem.grid.unit_ns)
        .floor()
        .min(problem.grid.steps as f64) as usize;

    let items: Vec<_> = problem
        .spaces
        .iter()
        .map(|s| (s.id, s.cluster, problem.item(s)))
        .collect();
    let mut x = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    enumerate(groups, 0, &mut x, &mut |x| {
        let mut time = [0usize; 2];
        let mut energy = 0.0;
        for ((_, cluster, item), &c) in items.iter().zip(x) {
            if item.capacity.is_some_and(|cap| c > cap) {
                return;
            }
            time[(*cluster == ClusterKind::Lp) as usize] += c * item.time_units;
            energy += c as f64 * item.energy;
        }
        if time.iter().all(|&t| t <= t_units) && best.as_ref().map_or(true, |(e, _)| energy < *e) {
            best = Some((energy, x.to_vec()));
        }
    });

    Ok(best.map(|(energy, counts)| {
        let mut placement = PlacementVector::zero();
        for ((id, _, _), c) in items.iter().zip(counts) {
            placement[*id] = c as u64 * problem.grid.weight_group;
        }
        OracleSolution { energy, placement }
    }))
}

fn enumerate(remaining: usize, pos: usize, x: &mut [usize], visit: &mut impl FnMut(&[usize])) {
    if pos + 1 == x.len() {
        x[pos] = remaining;
        visit(x);
        return;
    }
    if x.is_empty() {
        if remaining == 0 {
            visit(x);
        }
        return;
    }
    for c in 0..=remaining {
        x[pos] = c;
        enumerate(remaining - c, pos + 1, x, visit);
    }
}

/// A bare storage space with the given per-weight time and energy, for
/// synthetic instances.
pub fn synthetic_space(id: SpaceId, t_per_weight_ns: f64, e_per_weight_pj: f64) -> StorageSpace {
    let free = MoveCost {
        time_ns: 0.0,
        energy_pj: 0.0,
    };
    StorageSpace {
        id,
        cluster: id.cluster(),
        t_per_weight_ns,
        e_per_weight_pj,
        e_dynamic_pj: e_per_weight_pj,
        static_mw_when_active: 0.0,
        pe_static_mw: 0.0,
        pe_gated: true,
        capacity_weights: u64::MAX,
        move_read: free,
        move_write: free,
    }
}
