use hhpim::dp::oracle::synthetic_space;
use hhpim::dp::{brute_force_optimal, combine_clusters, lookup_allocation, DpItem, DpProblem, DpTable, TimeGrid};
use hhpim::model::{SpaceId, StorageSpace};
use proptest::prelude::*;

/// Four spaces with whole-unit times on a unit grid, one weight per group.
fn spaces(times: [u32; 4], energies: [f64; 4]) -> Vec<StorageSpace> {
    SpaceId::ALL
        .iter()
        .zip(times.iter().zip(energies))
        .map(|(&id, (&t, e))| synthetic_space(id, f64::from(t), e))
        .collect()
}

fn unit_grid(steps: usize) -> TimeGrid {
    TimeGrid::new(1.0, steps, 1).unwrap()
}

fn instance() -> impl Strategy<Value = (Vec<StorageSpace>, u64, usize)> {
    (
        prop::array::uniform4(1u32..=8),
        prop::array::uniform4(1.0f64..=100.0),
        0u64..=8,
        1usize..=40,
    )
        .prop_map(|(t, e, k, steps)| (spaces(t, e), k, steps))
}

fn rel_close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lut_matches_exhaustive_search((spaces, k, steps) in instance()) {
        let problem = DpProblem::new(&spaces, k, unit_grid(steps));
        let lut = problem.solve_with_tables().unwrap();
        for (t, entry) in lut.entries.iter().enumerate() {
            let oracle = brute_force_optimal(&problem, t as f64).unwrap();
            match oracle {
                None => prop_assert!(!entry.feasible, "t={t}: DP feasible, oracle not"),
                Some(best) => {
                    prop_assert!(entry.feasible, "t={t}: oracle feasible, DP not");
                    prop_assert!(rel_close(entry.objective_pj, best.energy), "t={t}: {} vs {}", entry.objective_pj, best.energy);
                }
            }
        }
    }

    #[test]
    fn capacity_bound_lut_matches_exhaustive_search((mut spaces, k, steps) in instance(), caps in prop::array::uniform4(0u64..=8)) {
        for (s, cap) in spaces.iter_mut().zip(caps) {
            s.capacity_weights = cap;
        }
        prop_assume!(caps.iter().sum::<u64>() >= k);
        let problem = DpProblem::new(&spaces, k, unit_grid(steps));
        let lut = problem.solve().unwrap();
        for (t, entry) in lut.entries.iter().enumerate() {
            let oracle = brute_force_optimal(&problem, t as f64).unwrap();
            prop_assert_eq!(oracle.is_some(), entry.feasible, "t={}", t);
            if let Some(best) = oracle {
                prop_assert!(rel_close(entry.objective_pj, best.energy));
                prop_assert!(entry.placement.iter().all(|(id, x)| x <= spaces[id.index()].capacity_weights));
            }
        }
    }

    #[test]
    fn streaming_and_tabulated_builds_agree((spaces, k, steps) in instance()) {
        let problem = DpProblem::new(&spaces, k, unit_grid(steps));
        prop_assert_eq!(problem.solve().unwrap(), problem.solve_with_tables().unwrap());
    }

    #[test]
    fn lut_shape_invariants((spaces, k, steps) in instance()) {
        let lut = DpProblem::new(&spaces, k, unit_grid(steps)).solve().unwrap();
        let first = lut.peak_index().unwrap_or(lut.entries.len());
        prop_assert!(lut.entries[first..].iter().all(|e| e.feasible), "infeasible region is not a prefix");
        for pair in lut.entries[first..].windows(2) {
            prop_assert!(pair[1].e_task_pj <= pair[0].e_task_pj);
        }
        for (t, e) in lut.entries.iter().enumerate().filter(|(_, e)| e.feasible) {
            prop_assert_eq!(e.placement.total(), k);
            prop_assert_eq!(e.k_hp + e.k_lp, k);
            prop_assert!(e.placement.makespan_ns(&spaces) <= t as f64);
        }
    }

    #[test]
    fn more_layers_never_cost_more(
        items in prop::collection::vec((1usize..=6, 1.0f64..=50.0), 1..=3),
        k in 0usize..=8,
        steps in 1usize..=30,
    ) {
        let items: Vec<DpItem> = items
            .into_iter()
            .map(|(time_units, energy)| DpItem { time_units, energy, capacity: None })
            .collect();
        let table = DpTable::build(&items, k, steps).unwrap();
        for i in 1..=items.len() {
            for t in 0..=steps {
                for kk in 0..=k {
                    prop_assert!(table.energy(i, t, kk) <= table.energy(i - 1, t, kk));
                    if t > 0 {
                        prop_assert!(table.energy(i, t, kk) <= table.energy(i, t - 1, kk));
                    }
                }
                prop_assert_eq!(table.energy(i, t, 0), 0.0);
            }
        }
    }

    #[test]
    fn extra_space_or_capacity_never_costs_more(
        (spaces, k, steps) in instance(),
        dropped in 0usize..4,
        cap in 0u64..=8,
    ) {
        let full = DpProblem::new(&spaces, k, unit_grid(steps)).solve().unwrap();
        let fewer: Vec<StorageSpace> = spaces.iter().enumerate().filter(|(i, _)| *i != dropped).map(|(_, s)| s.clone()).collect();
        let reduced = DpProblem::new(&fewer, k, unit_grid(steps)).solve().unwrap();
        let mut capped_spaces = spaces.clone();
        for s in &mut capped_spaces {
            s.capacity_weights = cap.max(k.div_ceil(4));
        }
        let capped = DpProblem::new(&capped_spaces, k, unit_grid(steps)).solve().unwrap();
        for ((a, b), c) in full.entries.iter().zip(&reduced.entries).zip(&capped.entries) {
            // Summation order differs between the two build paths.
            prop_assert!(a.objective_pj <= b.objective_pj * (1.0 + 1e-12));
            prop_assert!(a.objective_pj <= c.objective_pj * (1.0 + 1e-12));
        }
    }

    #[test]
    fn lookup_rounds_down_and_stays_within_budget(
        (spaces, k, steps) in instance(),
        t_constraint in 0.0f64..60.0,
    ) {
        let lut = DpProblem::new(&spaces, k, unit_grid(steps)).solve().unwrap();
        match lookup_allocation(&lut, t_constraint) {
            Ok(entry) => {
                prop_assert!(entry.placement.makespan_ns(&spaces) <= t_constraint);
                let idx = (t_constraint.floor() as usize).min(steps);
                prop_assert_eq!(entry, &lut.entries[idx]);
            }
            Err(_) => prop_assert!(!lut.entries[(t_constraint.floor() as usize).min(steps)].feasible),
        }
    }
}

#[test]
fn five_hundred_random_instances_match_the_oracle() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..500 {
        let times = [0; 4].map(|_| rng.gen_range(1..=8u32));
        let energies = [0; 4].map(|_| rng.gen_range(1.0..=100.0));
        let k = rng.gen_range(0..=8u64);
        let steps = rng.gen_range(1..=40usize);
        let sp = spaces(times, energies);
        let problem = DpProblem::new(&sp, k, unit_grid(steps));
        let (hp, lp) = problem.build_tables().unwrap();
        let splits = combine_clusters(&hp.table, &lp.table, k as usize).unwrap();
        for (t, split) in splits.iter().enumerate() {
            let oracle = brute_force_optimal(&problem, t as f64).unwrap();
            match (split, oracle) {
                (None, None) => {}
                (Some(s), Some(o)) => assert!(rel_close(s.energy, o.energy), "trial {trial} t={t}"),
                (s, o) => panic!("trial {trial} t={t}: feasibility differs ({s:?} vs {o:?})"),
            }
        }
    }
}

#[test]
fn relaxed_default_lut_is_all_lp_mram() {
    let arch = hhpim::config::builtin_architecture("hh-pim").unwrap();
    let spaces = hhpim::model::derive_cost_model(&arch).unwrap();
    let k = 2_000u64;
    let grid = TimeGrid::new(k as f64 * 3.41 / 400.0 * 1.001, 400, 20).unwrap();
    let lut = DpProblem::new(&spaces, k, grid).solve().unwrap();
    let relaxed = lut.relaxed();
    assert_eq!(relaxed.placement.0, [0, 0, k, 0]);
    let lp_mram = spaces.iter().find(|s| s.id == SpaceId::LpMram).unwrap();
    assert!(rel_close(relaxed.e_task_pj, k as f64 * lp_mram.e_per_weight_pj));
    assert!(!lut.entries[0].feasible);
    assert!(lookup_allocation(&lut, 0.0).is_err());
}
