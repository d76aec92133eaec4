use hhpim::config::builtin_architecture;
use hhpim::experiment::{prepare, Experiment, ExperimentConfig};
use hhpim::model::{static_power, PlacementVector, SpaceId};
use hhpim::sim::{compare_architectures, derive_t_constraint, simulate, SimulationResult, SliceConfig};
use hhpim::workload::{generate, ModelProfile, Scenario, TaskStream};
use hhpim::Error;
use proptest::prelude::*;
use std::sync::OnceLock;

const ARCHS: [&str; 4] = ["hh-pim", "baseline-pim", "hetero-pim", "hybrid-pim"];

/// A small model keeps the LUTs cheap while exercising every code path.
fn experiment() -> &'static Experiment {
    static EXP: OnceLock<Experiment> = OnceLock::new();
    EXP.get_or_init(|| {
        let archs: Vec<_> = ARCHS.iter().map(|n| builtin_architecture(n).unwrap()).collect();
        let model = ModelProfile::new("tiny", 4_000, 40_000, 0.8).unwrap();
        let mut cfg = ExperimentConfig::new(model);
        cfg.steps_override = Some(1_600);
        prepare(&archs, &cfg).unwrap()
    })
}

fn stream(arrivals: Vec<u32>) -> TaskStream {
    TaskStream {
        scenario: Scenario::Case6,
        seed: 0,
        max_per_slice: 10,
        arrivals,
    }
}

fn config(slices: usize) -> SliceConfig {
    SliceConfig {
        slice_count: slices,
        ..experiment().slice.clone()
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn check_accounting(res: &SimulationResult) {
    let mut sum = 0.0;
    for tr in &res.traces {
        assert!(tr.migration.energy_pj >= 0.0 && tr.dynamic_pj >= 0.0 && tr.static_pj >= 0.0);
        assert!(close(
            tr.total_pj,
            tr.migration.energy_pj + tr.dynamic_pj + tr.static_pj
        ));
        sum += tr.total_pj;
    }
    assert!(close(res.total_energy_pj, sum));
    for pair in res.traces.windows(2) {
        assert_eq!(pair[1].migration.apply(&pair[0].placement), pair[1].placement);
    }
}

#[test]
fn t_constraint_arithmetic() {
    assert_eq!(derive_t_constraint(0, 1000.0, 0.0, 0.0).unwrap(), f64::INFINITY);
    assert_eq!(derive_t_constraint(10, 1000.0, 0.0, 0.0).unwrap(), 100.0);
    assert!(close(
        derive_t_constraint(5, 1000.0, 100.0, 0.0).unwrap(),
        0.18 * 1000.0
    ));
    assert!(matches!(
        derive_t_constraint(1, 1000.0, 600.0, 400.0),
        Err(Error::SliceOverrun { .. })
    ));
}

#[test]
fn idle_stream_parks_everything_in_lp_mram() {
    let exp = experiment();
    let hh = exp.reference();
    let cfg = config(6);
    let res = simulate(hh, &stream(vec![0; 6]), &cfg).unwrap();
    let parked = PlacementVector::single(SpaceId::LpMram, 4_000);
    let per_slice = static_power(&parked, &hh.spaces) * cfg.slice_ns;
    for tr in &res.traces {
        assert_eq!(tr.placement, parked);
        assert!(tr.migration.is_empty());
        assert!(close(tr.total_pj, per_slice));
    }
    check_accounting(&res);
}

#[test]
fn single_task_hand_sum() {
    let exp = experiment();
    let hh = exp.reference();
    let cfg = config(2);
    let res = simulate(hh, &stream(vec![1, 0]), &cfg).unwrap();
    let lp_mram = hh.spaces.iter().find(|s| s.id == SpaceId::LpMram).unwrap();
    // A single task has most of the slice, so the relaxed placement stays.
    let parked = PlacementVector::single(SpaceId::LpMram, 4_000);
    let static_pj = static_power(&parked, &hh.spaces) * cfg.slice_ns;
    let expected = 2.0 * static_pj + 4_000.0 * lp_mram.e_per_weight_pj;
    assert!(
        close(res.total_energy_pj, expected),
        "{} vs {expected}",
        res.total_energy_pj
    );
    assert_eq!(res.traces[1].executed, 1);
    assert_eq!(res.misses, 0);
}

#[test]
fn full_load_uses_both_srams() {
    let exp = experiment();
    let case2 = generate(Scenario::Case2, 12, 10, 0).unwrap();
    let res = simulate(exp.reference(), &case2, &config(12)).unwrap();
    assert_eq!(res.misses, 0);
    for tr in &res.traces[1..] {
        assert!(
            tr.placement[SpaceId::HpSram] > 0 && tr.placement[SpaceId::LpSram] > 0,
            "{:?}",
            tr.placement
        );
        assert_eq!(tr.executed, 10);
    }
    check_accounting(&res);
}

#[test]
fn every_scenario_keeps_its_books_and_latency_bound() {
    let exp = experiment();
    let cfg = config(30);
    for sc in Scenario::ALL {
        let s = generate(sc, 30, 10, 11).unwrap();
        let cmp = compare_architectures(&exp.archs, &s, &cfg).unwrap();
        for (i, res) in cmp.results.iter().enumerate() {
            check_accounting(res);
            assert_eq!(cmp.savings[i][i], 0.0);
            if res.misses == 0 {
                assert!(res.max_latency_ns <= 2.0 * cfg.slice_ns, "{} {sc}", res.arch);
            }
            for tr in res.traces.iter().filter(|t| t.deadline_met && t.executed > 0) {
                let task_ns = tr.placement.makespan_ns(&exp.archs[i].spaces);
                let used = tr.executed as f64 * task_ns + tr.migration.time_ns + cfg.solver_budget_ns();
                assert!(used <= cfg.slice_ns * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn overload_is_recorded_not_fatal() {
    let exp = experiment();
    let mut cfg = config(5);
    cfg.slice_ns /= 3.0;
    let res = simulate(exp.reference(), &stream(vec![10; 5]), &cfg).unwrap();
    assert!(res.misses > 0);
    assert!(res.traces.iter().any(|t| t.executed < t.buffered));
    check_accounting(&res);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn more_load_never_costs_less(
        base in prop::collection::vec(0u32..=10, 8),
        extra in prop::collection::vec(0u32..=10, 8),
        arch in 0usize..4,
    ) {
        let exp = experiment();
        let cfg = config(8);
        let more: Vec<u32> = base.iter().zip(&extra).map(|(a, b)| (a + b).min(10)).collect();
        let light = simulate(&exp.archs[arch], &stream(base), &cfg).unwrap();
        let heavy = simulate(&exp.archs[arch], &stream(more), &cfg).unwrap();
        prop_assert!(heavy.total_energy_pj >= light.total_energy_pj * (1.0 - 1e-12),
            "{}: {} < {}", ARCHS[arch], heavy.total_energy_pj, light.total_energy_pj);
    }
}
