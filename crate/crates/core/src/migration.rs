//! Moving weights between storage spaces when the placement changes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClusterKind, PlacementVector, SpaceId, StorageSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub from: SpaceId,
    pub to: SpaceId,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MigrationPlan {
    pub moves: Vec<Move>,
    /// Makespan of the transfer: clusters work in parallel, and within a
    /// cluster every read out and write in is serialized.
    pub time_ns: f64,
    pub energy_pj: f64,
}

impl MigrationPlan {
    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn moved(&self) -> u64 {
        self.moves.iter().map(|m| m.count).sum()
    }

    /// `old` with every move applied.
    pub fn apply(&self, old: &PlacementVector) -> PlacementVector {
        let mut x = *old;
        for m in &self.moves {
            x[m.from] -= m.count;
            x[m.to] += m.count;
        }
        x
    }
}

fn space_of(spaces: &[StorageSpace], id: SpaceId) -> Result<&StorageSpace> {
    spaces
        .iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::InvalidParameter(format!("placement uses {id}, which this architecture lacks")))
}

/// Moves the surplus of each space into the spaces that need more weights.
///
/// Only the net difference moves. The cost of one move is the read at the
/// source plus the write at the destination, so pairing surpluses with
/// deficits cheapest-first is as good as any other matching.
pub fn plan_migration(old: &PlacementVector, new: &PlacementVector, spaces: &[StorageSpace]) -> Result<MigrationPlan> {
    if old.total() != new.total() {
        return Err(Error::CountMismatch(format!(
            "old placement holds {} weights, new holds {}",
            old.total(),
            new.total()
        )));
    }
    let mut surplus: Vec<(SpaceId, u64)> = Vec::new();
    let mut deficit: Vec<(SpaceId, u64)> = Vec::new();
    for id in SpaceId::ALL {
        let (a, b) = (old[id], new[id]);
        if a > 0 || b > 0 {
            space_of(spaces, id)?;
        }
        if a > b {
            surplus.push((id, a - b));
        } else if b > a {
            deficit.push((id, b - a));
        }
    }

    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, (src, _)) in surplus.iter().enumerate() {
        for (j, (dst, _)) in deficit.iter().enumerate() {
            let cost = space_of(spaces, *src)?.move_read.energy_pj + space_of(spaces, *dst)?.move_write.energy_pj;
            pairs.push((cost, i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));

    let mut plan = MigrationPlan::default();
    let mut busy = [0.0f64; 2];
    for (cost, i, j) in pairs {
        let count = surplus[i].1.min(deficit[j].1);
        if count == 0 {
            continue;
        }
        surplus[i].1 -= count;
        deficit[j].1 -= count;
        let (src, dst) = (space_of(spaces, surplus[i].0)?, space_of(spaces, deficit[j].0)?);
        let n = count as f64;
        plan.energy_pj += n * cost;
        busy[cluster_slot(src.cluster)] += n * src.move_read.time_ns;
        busy[cluster_slot(dst.cluster)] += n * dst.move_write.time_ns;
        plan.moves.push(Move {
            from: src.id,
            to: dst.id,
            count,
        });
    }
    plan.time_ns = busy[0].max(busy[1]);
    Ok(plan)
}

fn cluster_slot(c: ClusterKind) -> usize {
    match c {
        ClusterKind::Hp => 0,
        ClusterKind::Lp => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::builtin_architecture;
    use crate::model::derive_cost_model;

    fn hh() -> Vec<StorageSpace> {
        derive_cost_model(&builtin_architecture("hh-pim").unwrap()).unwrap()
    }

    #[test]
    fn identical_placements_need_no_moves() {
        let x = PlacementVector([3, 1, 4, 1]);
        let plan = plan_migration(&x, &x, &hh()).unwrap();
        assert!(plan.is_empty());
        assert_eq!((plan.time_ns, plan.energy_pj), (0.0, 0.0));
    }

    #[test]
    fn hp_sram_to_lp_mram_hand_arithmetic() {
        let k = 1000u64;
        let old = PlacementVector::single(SpaceId::HpSram, k);
        let new = PlacementVector::single(SpaceId::LpMram, k);
        let plan = plan_migration(&old, &new, &hh()).unwrap();
        let kf = k as f64;
        assert!((plan.energy_pj - kf * (508.93 * 1.12 + 47.78 * 14.65)).abs() < 1e-6);
        // LP writes (14.65 ns over 4 modules) dominate the HP reads (1.12 / 4).
        assert!((plan.time_ns - kf * 14.65 / 4.0).abs() < 1e-9);
        assert_eq!(
            plan.moves,
            vec![Move {
                from: SpaceId::HpSram,
                to: SpaceId::LpMram,
                count: k
            }]
        );
    }

    #[test]
    fn count_mismatch_is_an_error() {
        let err = plan_migration(&PlacementVector([1, 0, 0, 0]), &PlacementVector([0, 2, 0, 0]), &hh());
        assert!(matches!(err, Err(Error::CountMismatch(_))));
    }

    #[test]
    fn unknown_space_is_an_error() {
        let spaces = derive_cost_model(&builtin_architecture("baseline-pim").unwrap()).unwrap();
        let err = plan_migration(&PlacementVector([0, 2, 0, 0]), &PlacementVector([0, 0, 2, 0]), &spaces);
        assert!(err.is_err());
    }

    /// Cheapest assignment of every surplus unit to a deficit unit.
    fn brute_force_cost(old: &PlacementVector, new: &PlacementVector, spaces: &[StorageSpace]) -> f64 {
        let mut src = Vec::new();
        let mut dst = Vec::new();
        for s in spaces {
            let (a, b) = (old[s.id], new[s.id]);
            src.extend(std::iter::repeat(s.move_read.energy_pj).take(a.saturating_sub(b) as usize));
            dst.extend(std::iter::repeat(s.move_write.energy_pj).take(b.saturating_sub(a) as usize));
        }
        fn go(src: &[f64], dst: &mut Vec<f64>) -> f64 {
            let Some((&first, rest)) = src.split_first() else {
                return 0.0;
            };
            let mut best = f64::INFINITY;
            for j in 0..dst.len() {
                let w = dst.swap_remove(j);
                best = best.min(first + w + go(rest, dst));
                dst.push(w);
                let last = dst.len() - 1;
                dst.swap(j, last);
            }
            best
        }
        go(&src, &mut dst)
    }

    #[test]
    fn greedy_matches_exhaustive_matching() {
        let spaces = hh();
        let cases = [
            ([3, 0, 0, 0], [0, 1, 1, 1]),
            ([2, 2, 0, 0], [0, 0, 1, 3]),
            ([0, 1, 4, 1], [3, 0, 0, 3]),
            ([1, 1, 1, 3], [2, 2, 2, 0]),
        ];
        for (a, b) in cases {
            let (old, new) = (PlacementVector(a), PlacementVector(b));
            let plan = plan_migration(&old, &new, &spaces).unwrap();
            assert_eq!(plan.apply(&old), new);
            let oracle = brute_force_cost(&old, &new, &spaces);
            assert!((plan.energy_pj - oracle).abs() <= 1e-9 * oracle.max(1.0));
        }
    }
}
