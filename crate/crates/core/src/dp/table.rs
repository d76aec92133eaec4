use crate::error::{Error, Result};

/// Upper bound on `dp` cells per table.
pub const MAX_TABLE_CELLS: u128 = 1 << 26;
/// Upper bound on the unit count a table can track.
pub const MAX_COUNT: usize = u16::MAX as usize;

/// One quantized storage space as seen by the DP: placing one unit of data
/// costs `time_units` grid steps and `energy` picojoules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpItem {
    pub time_units: usize,
    pub energy: f64,
    /// Maximum number of units this item may hold. `None` is unbounded.
    pub capacity: Option<usize>,
}

/// Minimum-energy table for one cluster.
///
/// `energy(i, t, k)` is the least energy needed to place exactly `k` units in
/// the first `i` items with total serial time at most `t` grid steps, or
/// infinity when no such placement exists. `count(i, t, k)` is how many of
/// those units sit in item `i` on the optimal path.
#[derive(Debug, Clone)]
pub struct DpTable {
    items: Vec<DpItem>,
    steps: usize,
    max_count: usize,
    base: Vec<f64>,
    dp: Vec<f64>,
    count: Vec<u16>,
}

impl DpTable {
    pub fn build(items: &[DpItem], max_count: usize, steps: usize) -> Result<Self> {
        let cells = (items.len() as u128 + 1) * (steps as u128 + 1) * (max_count as u128 + 1);
        if cells > MAX_TABLE_CELLS {
            return Err(Error::GridOverflow {
                cells,
                limit: MAX_TABLE_CELLS,
            });
        }
        if max_count > MAX_COUNT {
            return Err(Error::GridOverflow {
                cells: max_count as u128,
                limit: MAX_COUNT as u128,
            });
        }
        if let Some(bad) = items.iter().find(|it| it.time_units == 0 || !(it.energy >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "DP items need time_units >= 1 and energy >= 0, got {bad:?}"
            )));
        }

        let n = items.len();
        let row = max_count + 1;
        let layer = (steps + 1) * row;
        // Layer 0 is implicit: zero energy for k = 0, infeasible otherwise.
        let mut base = vec![f64::INFINITY; row];
        base[0] = 0.0;
        let mut dp = vec![0.0f64; n * layer];
        let mut count = vec![0u16; n * layer];

        for (i, item) in items.iter().enumerate().map(|(i, it)| (i + 1, it)) {
            let ti = item.time_units;
            let bounded = item.capacity.filter(|&cap| cap < max_count);
            for t in 0..=steps {
                let cur = (i - 1) * layer + t * row;
                let (before, rest) = dp.split_at_mut(cur);
                let cur_dp = &mut rest[..row];
                let prev_layer = |t: usize| -> &[f64] {
                    if i == 1 {
                        &base
                    } else {
                        let p = (i - 2) * layer + t * row;
                        &before[p..p + row]
                    }
                };
                cur_dp.copy_from_slice(prev_layer(t));

                let (count_before, count_rest) = count.split_at_mut(cur);
                let cur_count = &mut count_rest[..row];
                cur_count.fill(0);
                if ti > t {
                    continue;
                }

                match bounded {
                    None => {
                        // Take one more unit on top of the best (i, t - ti, k - 1).
                        let src = (i - 1) * layer + (t - ti) * row;
                        let src_dp = &before[src..src + row - 1];
                        let src_count = &count_before[src..src + row - 1];
                        let e = item.energy;
                        for (((d, c), &s), &sc) in cur_dp[1..]
                            .iter_mut()
                            .zip(cur_count[1..].iter_mut())
                            .zip(src_dp)
                            .zip(src_count)
                        {
                            let take = s + e;
                            let better = take < *d;
                            *d = if better { take } else { *d };
                            *c = if better { sc + 1 } else { *c };
                        }
                    }
                    Some(cap) => {
                        for k in 1..row {
                            for c in 1..=cap.min(k) {
                                let Some(rem_t) = t.checked_sub(c * ti) else { break };
                                let take = prev_layer(rem_t)[k - c] + c as f64 * item.energy;
                                if take < cur_dp[k] {
                                    cur_dp[k] = take;
                                    cur_count[k] = c as u16;
                                }
                            }
                        }
                    }
                }
            }
        }

        Ok(DpTable {
            items: items.to_vec(),
            steps,
            max_count,
            base,
            dp,
            count,
        })
    }

    fn index(&self, i: usize, t: usize, k: usize) -> usize {
        assert!(i >= 1 && i <= self.items.len() && t <= self.steps && k <= self.max_count);
        ((i - 1) * (self.steps + 1) + t) * (self.max_count + 1) + k
    }

    pub fn items(&self) -> &[DpItem] {
        &self.items
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn max_count(&self) -> usize {
        self.max_count
    }

    pub fn energy(&self, i: usize, t: usize, k: usize) -> f64 {
        if i == 0 {
            assert!(t <= self.steps && k <= self.max_count);
            return if k == 0 { 0.0 } else { f64::INFINITY };
        }
        self.dp[self.index(i, t, k)]
    }

    pub fn count(&self, i: usize, t: usize, k: usize) -> u32 {
        if i == 0 {
            return 0;
        }
        u32::from(self.count[self.index(i, t, k)])
    }

    /// `energy(n, t, k)` for every `k`.
    pub fn best_row(&self, t: usize) -> &[f64] {
        if self.items.is_empty() {
            return &self.base;
        }
        let start = self.index(self.items.len(), t, 0);
        &self.dp[start..start + self.max_count + 1]
    }

    /// `energy(n, t, k)` over all items.
    pub fn best(&self, t: usize, k: usize) -> f64 {
        self.energy(self.items.len(), t, k)
    }

    /// Per-item unit counts of the optimal placement for `(t, k)`.
    pub fn reconstruct(&self, t: usize, k: usize) -> Option<Vec<usize>> {
        if !self.best(t, k).is_finite() {
            return None;
        }
        let mut counts = vec![0; self.items.len()];
        let (mut t, mut k) = (t, k);
        for i in (1..=self.items.len()).rev() {
            let c = self.count(i, t, k) as usize;
            counts[i - 1] = c;
            t -= c * self.items[i - 1].time_units;
            k -= c;
        }
        debug_assert_eq!(k, 0);
        Some(counts)
    }
}

/// One feasible cross-cluster split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSplit {
    pub energy: f64,
    pub k_hp: usize,
    pub k_lp: usize,
}

/// For each time index, the cheapest split of `k` units between two clusters
/// running in parallel: a split is feasible when both clusters fit in `t`.
///
/// `k_hp` is scanned from 0 to `k` inclusive and only a strictly better
/// energy replaces the incumbent, so ties keep the larger `k_lp`.
pub fn combine_clusters(hp: &DpTable, lp: &DpTable, k: usize) -> Result<Vec<Option<ClusterSplit>>> {
    if hp.steps != lp.steps {
        return Err(Error::GridMismatch(format!("{} vs {} steps", hp.steps, lp.steps)));
    }
    if hp.max_count < k || lp.max_count < k {
        return Err(Error::GridMismatch(format!(
            "tables sized for {} and {} units, {k} requested",
            hp.max_count, lp.max_count
        )));
    }
    Ok((0..=hp.steps)
        .map(|t| best_split(hp.best_row(t), lp.best_row(t), k))
        .collect())
}

/// Cheapest split of `k` units given both clusters' final rows at one `t`.
pub fn best_split(hp_row: &[f64], lp_row: &[f64], k: usize) -> Option<ClusterSplit> {
    const LANES: usize = 4;
    let hp = &hp_row[..=k];
    let lp = &lp_row[..=k];
    // Independent running minima per lane; each keeps its first minimum.
    let mut lane_e = [f64::INFINITY; LANES];
    let mut lane_k = [0usize; LANES];
    let full = (k + 1) / LANES * LANES;
    for base in (0..full).step_by(LANES) {
        for j in 0..LANES {
            let i = base + j;
            let e = hp[i] + lp[k - i];
            let better = e < lane_e[j];
            lane_e[j] = if better { e } else { lane_e[j] };
            lane_k[j] = if better { i } else { lane_k[j] };
        }
    }
    let (mut energy, mut k_hp) = (f64::INFINITY, 0);
    for j in 0..LANES {
        if lane_e[j] < energy || (lane_e[j] == energy && lane_k[j] < k_hp) {
            energy = lane_e[j];
            k_hp = lane_k[j];
        }
    }
    for i in full..=k {
        let e = hp[i] + lp[k - i];
        if e < energy {
            energy = e;
            k_hp = i;
        }
    }
    energy.is_finite().then_some(ClusterSplit {
        energy,
        k_hp,
        k_lp: k - k_hp,
    })
}
