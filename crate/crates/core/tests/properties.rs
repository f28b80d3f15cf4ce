use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use broadcast_core::certify::{BroadcastModel, CertifyOptions, PreparedModel};
use broadcast_core::lp::{relaxed_dual_value, solve, verify, LpOptions, LpProblem, LpStatus};
use broadcast_core::quantum::{random_gaussian, tensor, ComplexMatrix, Isometry, SubsystemShape};
use broadcast_core::scenarios::{
    behaviour_from_strategy, check_no_signalling, singleton_partition, Behaviour, Channel, QuantumStrategy, Scenario,
};

fn density(d: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let g = random_gaussian(d, d, rng);
    let r = g.matmul(&g.adjoint());
    let tr = r.trace().re;
    r.scale_real(1.0 / tr)
}

fn three_party(rho: ComplexMatrix, rng: &mut ChaCha8Rng) -> Behaviour {
    let ch = Channel {
        on: 1,
        isometry: Isometry::random(2, vec![2, 2], rng),
    };
    let s = QuantumStrategy::random_dichotomic(rho, SubsystemShape::qubits(2), vec![ch], &[3, 2, 2], rng).unwrap();
    behaviour_from_strategy(&s, &Scenario::binary(&[3, 2, 2])).unwrap()
}

fn prepared() -> PreparedModel {
    let m = BroadcastModel::broadcast_three(Scenario::binary(&[3, 2, 2])).unwrap();
    PreparedModel::new(&m, &CertifyOptions::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn separable_states_are_broadcast_local(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = tensor(&density(2, &mut rng), &density(2, &mut rng));
        let b = three_party(rho, &mut rng);
        prop_assert!(prepared().membership(&b).unwrap().feasible);
    }

    #[test]
    fn quantum_behaviours_do_not_signal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = three_party(density(4, &mut rng), &mut rng);
        prop_assert!(check_no_signalling(&b, &singleton_partition(3)) <= 1e-10);
    }

    #[test]
    fn mixtures_below_critical_visibility_are_inside(seed in any::<u64>(), t in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = three_party(density(4, &mut rng), &mut rng);
        let prep = prepared();
        let u = Behaviour::uniform(&prep.model.scenario);
        let v = prep.visibility(&b, &u).unwrap().v_star;
        let inside = prep.membership(&b.mix(t * v, &u).unwrap()).unwrap().feasible;
        prop_assert!(inside);
    }

    #[test]
    fn lp_results_certify_themselves(seed in any::<u64>(), m in 2usize..9, extra in 1usize..12, shift in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = m + extra;
        let mut p = LpProblem::new(m, n);
        let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        for j in 0..n {
            for i in 0..m {
                p.set(i, j, rng.random_range(-1.0..1.0));
            }
            p.upper[j] = Some(2.0);
        }
        for i in 0..m {
            p.rhs[i] = (0..n).map(|j| p.get(i, j) * x0[j]).sum::<f64>() + if shift { 40.0 } else { 0.0 };
        }
        p.objective = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = solve(&p).unwrap();
        prop_assert!(verify(&p, &s, &LpOptions::default()).is_ok());
        match s.status {
            LpStatus::Optimal => {
                let g = relaxed_dual_value(&p, &s.duals, 1e-9).unwrap();
                prop_assert!((g - s.objective_value).abs() <= 1e-8 * (1.0 + g.abs()));
            }
            LpStatus::Infeasible => {
                prop_assert!(shift, "a problem built around a feasible point came back infeasible");
                prop_assert!(p.farkas_margin(s.farkas.as_ref().unwrap()).unwrap() > 0.0);
            }
            LpStatus::Unbounded => prop_assert!(false, "boxed problem reported unbounded"),
        }
    }
}
