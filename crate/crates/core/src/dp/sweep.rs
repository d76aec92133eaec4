//! Row-at-a-time evaluation of the cluster recurrence.
//!
//! Produces exactly the values and unit counts of [`DpTable`](super::DpTable)
//! for one time index at a time, keeping only the rows the recurrence still
//! needs. Restricted to clusters of at most two unbounded items, which is what
//! every architecture has; reconstruction then needs nothing but the current
//! row.

use super::table::DpItem;

struct Layer {
    item: DpItem,
    /// Ring of the last `time_units + 1` rows.
    dp: Vec<f64>,
    /// Empty for the first item.
    count: Vec<u32>,
    slots: usize,
}

pub(crate) struct RowSweep {
    row: usize,
    base: Vec<f64>,
    layers: Vec<Layer>,
    t: usize,
}

fn row_pair<'a, T>(buf: &'a mut [T], cur: usize, src: usize, row: usize) -> (&'a mut [T], &'a [T]) {
    debug_assert_ne!(cur, src);
    if cur < src {
        let (a, b) = buf.split_at_mut(src * row);
        (&mut a[cur * row..(cur + 1) * row], &b[..row])
    } else {
        let (a, b) = buf.split_at_mut(cur * row);
        (&mut b[..row], &a[src * row..(src + 1) * row])
    }
}

impl RowSweep {
    /// `None` when the items fall outside what the sweep supports.
    pub(crate) fn new(items: &[DpItem], max_count: usize) -> Option<Self> {
        if items.len() > 2 || items.iter().any(|it| it.capacity.is_some_and(|c| c < max_count)) {
            return None;
        }
        let row = max_count + 1;
        let mut base = vec![f64::INFINITY; row];
        base[0] = 0.0;
        let layers = items
            .iter()
            .enumerate()
            .map(|(i, &item)| {
                let slots = item.time_units + 1;
                Layer {
                    item,
                    dp: vec![f64::INFINITY; slots * row],
                    count: if i == 0 { Vec::new() } else { vec![0; slots * row] },
                    slots,
                }
            })
            .collect();
        Some(RowSweep {
            row,
            base,
            layers,
            t: 0,
        })
    }

    /// Computes row `t`; rows must be visited in order starting at 0.
    pub(crate) fn advance(&mut self, t: usize) {
        debug_assert_eq!(t, self.t);
        self.t = t + 1;
        let row = self.row;
        for i in 0..self.layers.len() {
            let (done, rest) = self.layers.split_at_mut(i);
            let layer = &mut rest[0];
            let prev: &[f64] = match done.last() {
                Some(p) => {
                    let slot = t % p.slots;
                    &p.dp[slot * row..(slot + 1) * row]
                }
                None => &self.base,
            };
            let cur = t % layer.slots;
            let ti = layer.item.time_units;
            if ti > t {
                layer.dp[cur * row..(cur + 1) * row].copy_from_slice(prev);
                if i > 0 {
                    layer.count[cur * row..(cur + 1) * row].fill(0);
                }
                continue;
            }
            let src = (t - ti) % layer.slots;
            let (cur_dp, src_dp) = row_pair(&mut layer.dp, cur, src, row);
            cur_dp.copy_from_slice(prev);
            let e = layer.item.energy;
            if i == 0 {
                // The first item's count is always the whole of `k`.
                for (d, &s) in cur_dp[1..].iter_mut().zip(&src_dp[..row - 1]) {
                    let take = s + e;
                    *d = if take < *d { take } else { *d };
                }
                continue;
            }
            let (cur_count, src_count) = row_pair(&mut layer.count, cur, src, row);
            cur_count[0] = 0;
            for (((d, c), &s), &sc) in cur_dp[1..]
                .iter_mut()
                .zip(cur_count[1..].iter_mut())
                .zip(&src_dp[..row - 1])
                .zip(&src_count[..row - 1])
            {
                let take = s + e;
                let better = take < *d;
                *d = if better { take } else { *d };
                *c = if better { sc + 1 } else { 0 };
            }
        }
    }

    /// Final-layer row of the last visited `t`.
    pub(crate) fn best(&self) -> &[f64] {
        match self.layers.last() {
            Some(l) => {
                let slot = (self.t - 1) % l.slots;
                &l.dp[slot * self.row..(slot + 1) * self.row]
            }
            None => &self.base,
        }
    }

    /// Per-item unit counts for `k` units at the last visited `t`.
    pub(crate) fn reconstruct(&self, k: usize) -> Vec<usize> {
        match self.layers.len() {
            0 => Vec::new(),
            1 => vec![k],
            _ => {
                let l = &self.layers[1];
                let slot = (self.t - 1) % l.slots;
                let c = l.count[slot * self.row + k] as usize;
                vec![k - c, c]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::DpTable;

    #[test]
    fn matches_the_full_table() {
        let item = |time_units, energy| DpItem {
            time_units,
            energy,
            capacity: None,
        };
        for items in [
            vec![],
            vec![item(3, 2.5)],
            vec![item(2, 7.0), item(5, 1.5)],
            vec![item(4, 1.0), item(1, 9.0)],
        ] {
            let (k, steps) = (9, 40);
            let table = DpTable::build(&items, k, steps).unwrap();
            let mut sweep = RowSweep::new(&items, k).unwrap();
            for t in 0..=steps {
                sweep.advance(t);
                assert_eq!(sweep.best(), table.best_row(t));
                for kk in 0..=k {
                    if let Some(counts) = table.reconstruct(t, kk) {
                        assert_eq!(sweep.reconstruct(kk), counts, "t={t} k={kk}");
                    }
                }
            }
        }
    }

    #[test]
    fn declines_bounded_or_wide_clusters() {
        let it = DpItem {
            time_units: 1,
            energy: 1.0,
            capacity: Some(2),
        };
        assert!(RowSweep::new(&[it], 5).is_none());
        assert!(RowSweep::new(&[it], 2).is_some());
        let free = DpItem { capacity: None, ..it };
        assert!(RowSweep::new(&[free, free, free], 5).is_none());
    }
}
