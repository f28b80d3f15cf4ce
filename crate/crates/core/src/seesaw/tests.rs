use std::f64::consts::SQRT_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::objective::{channel_objective, party_contexts, riemannian_gradient};
use super::*;
use crate::certify::BroadcastModel;
use crate::quantum::{
    hermitian_eig, is_unitary_columns, isotropic, pauli_x, pauli_z, random_gaussian, tensor,
    BellState, ComplexMatrix, Isometry, SubsystemShape, C64,
};
use crate::scenarios::{
    analytic_strategy, behaviour_from_strategy, chsh, i3_broadcast, random_observable, Channel,
    QuantumStrategy, Scenario,
};

fn phi_plus() -> ComplexMatrix {
    BellState::PhiPlus.vector().projector()
}

fn i3_layout() -> ChannelLayout {
    vec![(1, vec![2, 2])]
}

fn value(ineq: &crate::scenarios::Inequality, s: &QuantumStrategy) -> f64 {
    ineq.evaluate(&behaviour_from_strategy(s, &ineq.scenario).unwrap())
        .unwrap()
}

#[test]
fn observable_update_is_the_sign() {
    let a = update_observable(&ComplexMatrix::diag_real(&[2.0, -1.0])).unwrap();
    assert!(a.max_abs_diff(&ComplexMatrix::diag_real(&[1.0, -1.0])) < 1e-15);
    let z = update_observable(&ComplexMatrix::zeros(2, 2)).unwrap();
    assert!(z.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    let mut bad = ComplexMatrix::zeros(2, 2);
    bad[(0, 1)] = C64::new(1.0, 0.0);
    assert!(update_observable(&bad).is_err());
}

#[test]
fn observable_update_beats_random_alternatives() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let g = random_gaussian(3, 3, &mut rng);
        let f = (&g + &g.adjoint()).scale_real(0.5);
        let best = update_observable(&f).unwrap().trace_product(&f).re;
        for _ in 0..100 {
            let a = random_observable(3, &mut rng);
            assert!(a.trace_product(&f).re <= best + 1e-9);
        }
    }
}

#[test]
fn bob_update_recovers_chsh_optimum() {
    let ineq = chsh();
    let tensor = ineq.correlator_tensor().unwrap();
    let mut obs = vec![vec![pauli_z(), pauli_x()], vec![pauli_z(), pauli_z()]];
    let shape = SubsystemShape::qubits(2);
    let ctx = party_contexts(&tensor, &obs, &phi_plus(), &shape, 1).unwrap();
    for (x, f) in ctx.iter().enumerate() {
        obs[1][x] = update_observable(f).unwrap();
    }
    let plus = (&pauli_z() + &pauli_x()).scale_real(1.0 / SQRT_2);
    let minus = (&pauli_z() - &pauli_x()).scale_real(1.0 / SQRT_2);
    assert!(obs[1][0].max_abs_diff(&plus) < 1e-12);
    assert!(obs[1][1].max_abs_diff(&minus) < 1e-12);
    let s = QuantumStrategy::from_observables(phi_plus(), shape, vec![], &obs).unwrap();
    assert!((value(&ineq, &s) - 2.0 * SQRT_2).abs() < 1e-12);
}

#[test]
fn chsh_restarts_reach_tsirelson() {
    let cfg = SeesawConfig {
        restarts: 5,
        seed: 1,
        ..SeesawConfig::default()
    };
    let r = seesaw_restarts(&chsh(), &phi_plus(), &SubsystemShape::qubits(2), &vec![], &cfg).unwrap();
    assert!((r.best_value - 2.0 * SQRT_2).abs() < 1e-6, "{}", r.best_value);
}

#[test]
fn channel_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ineq = i3_broadcast();
    let tensor = ineq.correlator_tensor().unwrap();
    for _ in 0..5 {
        let shape = SubsystemShape::qubits(2);
        let start = random_start(&shape, &i3_layout(), ineq.scenario.inputs(), &mut rng).unwrap();
        let obj = channel_objective(&tensor, &start.observables, &phi_plus(), &shape, &start.channels, 0)
            .unwrap();
        let v = start.channels[0].isometry.matrix().clone();
        let g = obj.gradient(&v);
        let dir = random_gaussian(4, 2, &mut rng);
        let h = 1e-5;
        let mut vp = v.clone();
        vp.add_scaled(&dir, C64::new(h, 0.0));
        let mut vm = v.clone();
        vm.add_scaled(&dir, C64::new(-h, 0.0));
        let fd = (obj.value(&vp) - obj.value(&vm)) / (2.0 * h);
        let an = 2.0 * g.adjoint().matmul(&dir).trace().re;
        assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "{fd} {an}");
    }
}

#[test]
fn paper_channel_is_stationary() {
    let ineq = i3_broadcast();
    let s = analytic_strategy("i3_paper").unwrap();
    let before = value(&ineq, &s);
    assert!((before - 4.0 * 3f64.sqrt()).abs() < 1e-9);
    let (v, _) = update_channel(&ineq, &s, 0, &SeesawConfig::default()).unwrap();
    let mut t = s.clone();
    t.channels[0].isometry = v;
    assert!((value(&ineq, &t) - before).abs() < 1e-8);
    // Gradient norm check.
    let tensor = ineq.correlator_tensor().unwrap();
    let st = Start::from_strategy(&s).unwrap();
    let obj = channel_objective(&tensor, &st.observables, &s.state, &s.shape, &st.channels, 0).unwrap();
    let m = s.channels[0].isometry.matrix();
    assert!(riemannian_gradient(m, &obj.gradient(m)).frobenius_norm() < 1e-8);
}

#[test]
fn unitary_channel_at_optimum_is_kept() {
    // Identity channel on Bob's qubit with optimal CHSH measurements.
    let s = analytic_strategy("chsh").unwrap();
    let mut t = s.clone();
    t.channels = vec![Channel {
        on: 1,
        isometry: Isometry::identity(2),
    }];
    let before = value(&chsh(), &t);
    let (v, _) = update_channel(&chsh(), &t, 0, &SeesawConfig::default()).unwrap();
    assert!(is_unitary_columns(v.matrix(), 1e-10));
    assert_eq!(v.matrix().rows(), v.matrix().cols());
    t.channels[0].isometry = v;
    assert!((value(&chsh(), &t) - before).abs() < 1e-10);
}

#[test]
fn traces_are_monotone_and_iterates_valid() {
    let ineq = i3_broadcast();
    let cfg = SeesawConfig {
        restarts: 3,
        seed: 9,
        ..SeesawConfig::default()
    };
    let shape = SubsystemShape::qubits(2);
    let r = seesaw_restarts(&ineq, &isotropic(0.9).unwrap(), &shape, &i3_layout(), &cfg).unwrap();
    for w in r.trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-12, "{:?}", w);
    }
    for party in &r.best_strategy.measurements {
        for povm in party {
            let a = &povm[0] - &povm[1];
            let e = hermitian_eig(&a).unwrap();
            assert!(e.min() >= -1.0 - 1e-10 && e.max() <= 1.0 + 1e-10);
        }
    }
    for ch in &r.best_strategy.channels {
        assert!(is_unitary_columns(ch.isometry.matrix(), 1e-10));
    }
    assert!((value(&ineq, &r.best_strategy) - r.best_value).abs() < 1e-9);
}

#[test]
fn separable_state_stays_below_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = random_gaussian(2, 2, &mut rng);
    let a = g.matmul(&g.adjoint());
    let a = a.scale_real(1.0 / a.trace().re);
    let rho = tensor(&a, &ComplexMatrix::identity(2).scale_real(0.5));
    let cfg = SeesawConfig {
        restarts: 5,
        seed: 4,
        ..SeesawConfig::default()
    };
    let r = seesaw_restarts(&i3_broadcast(), &rho, &SubsystemShape::qubits(2), &i3_layout(), &cfg).unwrap();
    assert!(r.best_value <= 4.0 + 1e-9, "{}", r.best_value);
}

#[test]
fn same_seed_same_result() {
    let cfg = SeesawConfig {
        restarts: 2,
        seed: 77,
        max_sweeps: 30,
        ..SeesawConfig::default()
    };
    let shape = SubsystemShape::qubits(2);
    let rho = isotropic(1.0).unwrap();
    let a = seesaw_restarts(&i3_broadcast(), &rho, &shape, &i3_layout(), &cfg).unwrap();
    let b = seesaw_restarts(&i3_broadcast(), &rho, &shape, &i3_layout(), &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn global_search_three_parties() {
    let cfg = GlobalConfig {
        seesaw: SeesawConfig {
            restarts: 40,
            seed: 1,
            max_sweeps: 100,
            ..GlobalConfig::default().seesaw
        },
        ..GlobalConfig::default()
    };
    let model = BroadcastModel::broadcast_three(Scenario::binary(&[3, 2, 2])).unwrap();
    let noise = ComplexMatrix::identity(4).scale_real(0.25);
    let shape = SubsystemShape::qubits(2);
    let r = global_visibility_search(&isotropic(1.0).unwrap(), &noise, &shape, &i3_layout(), &model, &cfg)
        .unwrap();
    let v = r.best_visibility.unwrap();
    assert!(v <= 0.5774 + 1e-3, "{v}");
    for w in r.visibility_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-9);
    }
}

#[test]
fn global_search_separable_family() {
    let cfg = GlobalConfig {
        seesaw: SeesawConfig {
            restarts: 2,
            seed: 3,
            max_sweeps: 50,
            ..GlobalConfig::default().seesaw
        },
        max_outer: 5,
        ..GlobalConfig::default()
    };
    let model = BroadcastModel::broadcast_three(Scenario::binary(&[3, 2, 2])).unwrap();
    let sep = tensor(&ComplexMatrix::diag_real(&[0.7, 0.3]), &ComplexMatrix::diag_real(&[0.4, 0.6]));
    let noise = ComplexMatrix::identity(4).scale_real(0.25);
    let r = global_visibility_search(&sep, &noise, &SubsystemShape::qubits(2), &i3_layout(), &model, &cfg)
        .unwrap();
    assert_eq!(r.best_visibility, Some(1.0));
}
