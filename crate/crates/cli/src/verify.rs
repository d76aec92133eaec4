//! Randomized DP-vs-exhaustive-search harness plus quick property sweeps over
//! the other modules. Failures are collected, not raised.

use hhpim::dp::oracle::{composition_count, synthetic_space, MAX_COMPOSITIONS};
use hhpim::dp::{brute_force_optimal, lookup_allocation, DpProblem, TimeGrid};
use hhpim::migration::plan_migration;
use hhpim::model::{SpaceId, StorageSpace};
use hhpim::sim::derive_t_constraint;
use hhpim::workload::{generate, Scenario};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub max_n: usize,
    pub max_k: u64,
    pub max_steps: usize,
    pub trials: usize,
    pub seed: u64,
    /// Test hook: scales the DP's view of the first space's energy by
    /// `1 + perturb` while the oracle keeps the true value.
    pub perturb: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            max_n: 4,
            max_k: 8,
            max_steps: 40,
            trials: 500,
            seed: 0,
            perturb: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyReport {
    pub trials: usize,
    /// LUT entries compared against the oracle.
    pub comparisons: usize,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn fail(&mut self, msg: String) {
        if self.failures.len() < 50 {
            self.failures.push(msg);
        } else if self.failures.len() == 50 {
            self.failures.push("further failures suppressed".into());
        }
    }
}

fn rel_close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

struct Instance {
    spaces: Vec<StorageSpace>,
    k: u64,
    steps: usize,
}

fn random_instance(rng: &mut ChaCha8Rng, opts: &VerifyOptions) -> Instance {
    let n = rng.gen_range(1..=opts.max_n.clamp(1, 4));
    let mut ids = SpaceId::ALL.to_vec();
    ids.shuffle(rng);
    ids.truncate(n);
    ids.sort();
    let k = rng.gen_range(0..=opts.max_k);
    let mut spaces: Vec<StorageSpace> = ids
        .into_iter()
        .map(|id| synthetic_space(id, f64::from(rng.gen_range(1..=8u32)), rng.gen_range(1.0..=100.0)))
        .collect();
    // Occasionally bound capacities, keeping the instance feasible somewhere.
    if rng.gen_bool(0.25) {
        for s in &mut spaces {
            s.capacity_weights = rng.gen_range(0..=opts.max_k);
        }
        if spaces.iter().map(|s| s.capacity_weights).sum::<u64>() < k {
            spaces[0].capacity_weights = k;
        }
    }
    Instance {
        spaces,
        k,
        steps: rng.gen_range(1..=opts.max_steps.max(1)),
    }
}

fn check_instance(report: &mut VerifyReport, trial: usize, inst: &Instance, perturb: Option<f64>) {
    let grid = TimeGrid::new(1.0, inst.steps, 1).expect("unit grid");
    let truth = DpProblem::new(&inst.spaces, inst.k, grid.clone());
    let mut seen = inst.spaces.clone();
    if let Some(p) = perturb {
        seen[0].e_per_weight_pj *= 1.0 + p;
    }
    let problem = DpProblem::new(&seen, inst.k, grid);

    let (lut, tabulated) = match (problem.solve(), problem.solve_with_tables()) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return report.fail(format!("trial {trial}: DP failed: {e}")),
    };
    if lut != tabulated {
        report.fail(format!("trial {trial}: streaming and tabulated LUTs differ"));
    }

    for (t, entry) in lut.entries.iter().enumerate() {
        report.comparisons += 1;
        match brute_force_optimal(&truth, t as f64) {
            Err(e) => report.fail(format!("trial {trial} t={t}: oracle failed: {e}")),
            Ok(None) if entry.feasible => report.fail(format!("trial {trial} t={t}: DP feasible, oracle not")),
            Ok(Some(_)) if !entry.feasible => report.fail(format!("trial {trial} t={t}: oracle feasible, DP not")),
            Ok(Some(best)) if !rel_close(entry.objective_pj, best.energy) => report.fail(format!(
                "trial {trial} t={t}: DP E_task {} vs oracle {}",
                entry.objective_pj, best.energy
            )),
            _ => {}
        }
    }

    // LUT shape, rounding safety and lookup.
    let first = lut.peak_index().unwrap_or(lut.entries.len());
    if !lut.entries[first..].iter().all(|e| e.feasible) {
        report.fail(format!("trial {trial}: infeasible region is not a prefix"));
    }
    if lut.entries[first..]
        .windows(2)
        .any(|w| w[1].objective_pj > w[0].objective_pj)
    {
        report.fail(format!("trial {trial}: E_task increases with t_constraint"));
    }
    for (t, e) in lut.entries.iter().enumerate().filter(|(_, e)| e.feasible) {
        if e.placement.total() != inst.k || e.k_hp + e.k_lp != inst.k {
            report.fail(format!(
                "trial {trial} t={t}: placement does not hold all {} weights",
                inst.k
            ));
        }
        if e.placement.makespan_ns(&inst.spaces) > t as f64 {
            report.fail(format!("trial {trial} t={t}: placement overruns its t_constraint"));
        }
        if e.placement
            .iter()
            .any(|(id, x)| x > seen.iter().find(|s| s.id == id).map_or(0, |s| s.capacity_weights))
        {
            report.fail(format!("trial {trial} t={t}: capacity exceeded"));
        }
        match lookup_allocation(&lut, t as f64 + 0.5) {
            Ok(found) if found == e => {}
            _ => report.fail(format!("trial {trial} t={t}: lookup does not round down")),
        }
    }

    // Migration between neighbouring placements conserves weights.
    let feasible: Vec<_> = lut.entries.iter().filter(|e| e.feasible).collect();
    for w in feasible.windows(2) {
        match plan_migration(&w[0].placement, &w[1].placement, &inst.spaces) {
            Ok(plan) => {
                if plan.apply(&w[0].placement) != w[1].placement
                    || plan.is_empty() != (w[0].placement == w[1].placement)
                {
                    report.fail(format!("trial {trial}: migration plan does not reproduce its target"));
                }
            }
            Err(e) => report.fail(format!("trial {trial}: migration planning failed: {e}")),
        }
    }
}

fn check_workloads(report: &mut VerifyReport, rng: &mut ChaCha8Rng) {
    for sc in Scenario::ALL {
        let max = rng.gen_range(0..=20u32);
        let slices = rng.gen_range(1..=60usize);
        let seed = rng.gen();
        match (generate(sc, slices, max, seed), generate(sc, slices, max, seed)) {
            (Ok(a), Ok(b)) => {
                if a != b {
                    report.fail(format!("{sc}: stream is not reproducible for seed {seed}"));
                }
                if a.arrivals.len() != slices || a.arrivals.iter().any(|&n| n > max) {
                    report.fail(format!("{sc}: arrivals outside 0..={max} or wrong length"));
                }
            }
            _ => report.fail(format!("{sc}: generation failed")),
        }
    }
}

fn check_t_constraint(report: &mut VerifyReport, rng: &mut ChaCha8Rng) {
    for _ in 0..100 {
        let n = rng.gen_range(1..=20u64);
        let slice = rng.gen_range(1.0..1e6);
        let mig = rng.gen_range(0.0..slice);
        let solver = rng.gen_range(0.0..slice - mig);
        match derive_t_constraint(n, slice, mig, solver) {
            Ok(t)
                if rel_close(t * n as f64, slice - mig - solver)
                    || (t * n as f64 - (slice - mig - solver)).abs() < 1e-6 => {}
            Ok(t) => report.fail(format!("t_constraint {t} for {n} tasks in {slice} ns")),
            Err(e) => report.fail(format!("t_constraint failed: {e}")),
        }
    }
}

pub fn cmd_verify(opts: &VerifyOptions) -> VerifyReport {
    let mut report = VerifyReport {
        trials: opts.trials,
        ..Default::default()
    };
    if opts.trials == 0 {
        let msg = "no trials requested; the oracle comparison is vacuous".to_string();
        log::warn!("{msg}");
        report.warnings.push(msg);
    }
    if composition_count(opts.max_k as usize, opts.max_n.min(4)) > MAX_COMPOSITIONS {
        report.fail(format!(
            "limits n={} K={} exceed the exhaustive-search guard of {MAX_COMPOSITIONS} compositions",
            opts.max_n, opts.max_k
        ));
        return report;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for trial in 0..opts.trials {
        let inst = random_instance(&mut rng, opts);
        check_instance(&mut report, trial, &inst, opts.perturb);
    }
    check_workloads(&mut report, &mut rng);
    check_t_constraint(&mut report, &mut rng);
    log::info!(
        "verify: {} trials, {} comparisons, {} failures",
        report.trials,
        report.comparisons,
        report.failures.len()
    );
    report
}
