use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sglbo::gp::{fit_hyperparams, GpBounds, GpDataset};
use sglbo::sglbo::next_cost_shots;
use sglbo::{
    build_ansatz, line_bo, run_adam, run_nft, run_sglbo, tfim_hamiltonian, AdamConfig,
    CostFunction, LineBoConfig, NftConfig, Objective, ParamCircuit, PauliSum, RunResult,
    SglboConfig, ShotCounter,
};

fn vqe(n: usize, r: usize) -> CostFunction {
    CostFunction::vqe(build_ansatz(n, r).unwrap(), tfim_hamiltonian(n, 1.0, 1.5).unwrap()).unwrap()
}

fn check_trace(r: &RunResult, audited: u64) -> Result<(), TestCaseError> {
    prop_assert_eq!(r.total_shots, audited);
    let rows = &r.trace.rows;
    prop_assert_eq!(rows[0].cumulative_shots, 0);
    prop_assert_eq!(rows.last().unwrap().cumulative_shots, r.total_shots);
    prop_assert!(rows.windows(2).all(|w| w[0].cumulative_shots < w[1].cumulative_shots));
    prop_assert_eq!(r.trace.iterates.len(), rows.len());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sglbo_ledger_is_exact(seed in any::<u64>(), budget in 50_000u64..150_000) {
        let cost = vqe(2, 1);
        let counted = ShotCounter::new(&cost);
        let cfg = SglboConfig { budget, ..SglboConfig::default() };
        let theta0 = vec![0.3; cost.dim()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = run_sglbo(&counted, &cfg, &theta0, &mut rng, &mut |_| {}).unwrap();
        check_trace(&r, counted.shots())?;
        prop_assert!(r.total_shots >= budget);
        let tr = &r.trace;
        for t in 0..tr.s_cost_history.len() {
            let before = if t == 0 { 0 } else { tr.cumulative_shots[t - 1] };
            let grad: u64 = 2 * tr.s_grad_history[t].iter().sum::<u64>();
            let line = 10 * tr.s_cost_history[t];
            prop_assert_eq!(tr.cumulative_shots[t] - before, grad + line);
            if tr.s_cost_history[t] > 0 {
                prop_assert_eq!(
                    tr.s_cost_history[t],
                    next_cost_shots(&tr.s_grad_history[t], cost.operator_norm(), cfg.epsilon)
                );
            }
            prop_assert!(tr.s_grad_history[t].iter().all(|&s| s >= 2));
        }
    }

    #[test]
    fn baseline_ledgers_are_exact(seed in any::<u64>(), ass in any::<bool>(), sa in any::<bool>()) {
        let cost = vqe(2, 1);
        let theta0 = vec![-0.7; cost.dim()];
        let counted = ShotCounter::new(&cost);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let adam = AdamConfig {
            adaptive_shots: ass,
            suffix_average: sa,
            budget: 40_000,
            ..AdamConfig::default()
        };
        let r = run_adam(&counted, &adam, &theta0, &mut rng, &mut |_| {}).unwrap();
        check_trace(&r, counted.shots())?;

        let counted = ShotCounter::new(&cost);
        let nft = NftConfig { budget: 40_000, suffix_average: sa, ..NftConfig::default() };
        let r = run_nft(&counted, &nft, &theta0, &mut rng, &mut |_| {}).unwrap();
        check_trace(&r, counted.shots())?;
        prop_assert!(r.trace.rows[1..].iter().all(|row| row.cumulative_shots % 3000 == 0));
    }

    #[test]
    fn line_search_stays_in_bounds(seed in any::<u64>(), eta_max in 0.05f64..3.0, s_cost in 1u64..200) {
        let cost = vqe(2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta: Vec<f64> = (0..cost.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let g = sglbo::exact_gradient(&cost, &theta).unwrap();
        let r = line_bo(&cost, &theta, &g, eta_max, s_cost, &LineBoConfig::default(), &mut rng).unwrap();
        prop_assert!(r.eta_star.abs() <= eta_max);
        prop_assert_eq!(r.shots_used, 10 * s_cost);
        prop_assert_eq!(r.dataset.len(), 10);
        prop_assert!(r.dataset.points.iter().all(|p| p.abs() <= eta_max));
        let bounds = GpBounds::default();
        prop_assert!(bounds.contains(&r.hyperparams));
    }

    #[test]
    fn gp_fit_respects_bounds(
        pts in prop::collection::vec((-2.0f64..2.0, -3.0f64..3.0), 1..15),
        seed in any::<u64>(),
    ) {
        let mut data = GpDataset::default();
        for (x, y) in pts {
            data.push(x, y);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bounds = GpBounds::default();
        let hp = fit_hyperparams(&data, &bounds, 10, &mut rng).unwrap();
        prop_assert!(bounds.contains(&hp));
    }

    #[test]
    fn circuit_text_roundtrip(n in 2usize..6, r in 0usize..4) {
        let c = build_ansatz(n, r).unwrap();
        prop_assert_eq!(c.num_params(), 2 * n * (r + 1));
        let back = ParamCircuit::parse_text(n, &c.to_text()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn hamiltonian_text_roundtrip(n in 2usize..8, j in -2.0f64..2.0, g in 0.1f64..3.0) {
        let h = tfim_hamiltonian(n, j, g).unwrap();
        let back = PauliSum::parse_text(&h.to_text()).unwrap();
        prop_assert_eq!(back, h);
    }

    #[test]
    fn vqc_cost_in_unit_interval(seed in any::<u64>()) {
        let c = CostFunction::vqc(build_ansatz(3, 1).unwrap(), vec![0.0; 12]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta: Vec<f64> = (0..12).map(|_| rand::Rng::random_range(&mut rng, -PI..PI)).collect();
        let v = c.exact_value(&theta).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        let q = c.noisy_query(&theta, 64, &mut rng).unwrap();
        prop_assert!((0.0..=1.0).contains(&q.value));
        prop_assert_eq!(q.shots_used, 64);
    }
}
