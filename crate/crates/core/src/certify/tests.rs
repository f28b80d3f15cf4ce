use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::polytope::{format_rational, rat};
use crate::quantum::{
    isotropic, random_gaussian, tensor, ComplexMatrix, Isometry, SubsystemShape,
};
use crate::scenarios::{
    analytic_strategy, behaviour_from_strategy, chsh, i3_broadcast, i4_broadcast, Behaviour,
    Channel, QuantumStrategy, Scenario,
};

const INV_SQRT3: f64 = 0.577_350_269_189_625_8;

fn i3_model() -> BroadcastModel {
    BroadcastModel::broadcast_three(Scenario::binary(&[3, 2, 2])).unwrap()
}

fn i3_behaviour(rho: ComplexMatrix) -> Behaviour {
    let s = analytic_strategy("i3_paper").unwrap().with_state(rho).unwrap();
    behaviour_from_strategy(&s, &Scenario::binary(&[3, 2, 2])).unwrap()
}

fn pr_box() -> Behaviour {
    let scen = Scenario::binary(&[2, 2]);
    let mut t = vec![0.0; scen.table_len()];
    for a in 0..2 {
        for b in 0..2 {
            for x in 0..2 {
                for y in 0..2 {
                    if (a ^ b) == (x & y) {
                        t[scen.index(&[a, b], &[x, y])] = 0.5;
                    }
                }
            }
        }
    }
    Behaviour::new(scen, t).unwrap()
}

fn random_density(d: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let g = random_gaussian(d, d, rng);
    let r = g.matmul(&g.adjoint());
    let tr = r.trace().re;
    r.scale_real(1.0 / tr)
}

fn random_three_party(rho: ComplexMatrix, rng: &mut ChaCha8Rng) -> Behaviour {
    let ch = Channel {
        on: 1,
        isometry: Isometry::random(2, vec![2, 2], rng),
    };
    let s = QuantumStrategy::random_dichotomic(rho, SubsystemShape::qubits(2), vec![ch], &[3, 2, 2], rng)
        .unwrap();
    behaviour_from_strategy(&s, &Scenario::binary(&[3, 2, 2])).unwrap()
}

#[test]
fn exact_model_bounds() {
    assert_eq!(model_bound(&i3_broadcast(), &i3_model()).unwrap(), rat(4));
    let four = BroadcastModel::broadcast_four(i4_broadcast().scenario.clone()).unwrap();
    assert_eq!(model_bound(&i4_broadcast(), &four).unwrap(), rat(4));
    let c = chsh();
    assert_eq!(model_bound(&c, &BroadcastModel::local(c.scenario.clone())).unwrap(), rat(2));
    let ns = BroadcastModel::new(c.scenario.clone(), vec![vec![0, 1]], vec![BlockKind::NoSignalling]).unwrap();
    assert_eq!(model_bound(&c, &ns).unwrap(), rat(4));
    assert!((model_bound_f64(&i3_broadcast(), &i3_model()).unwrap() - 4.0).abs() < 1e-12);
}

#[test]
fn i3_bound_is_attained_by_a_local_deterministic_point() {
    let ineq = i3_broadcast();
    let local = BroadcastModel::local(ineq.scenario.clone());
    assert_eq!(model_bound(&ineq, &local).unwrap(), rat(4));
}

#[test]
fn pr_box_is_not_local() {
    let b = pr_box();
    let m = BroadcastModel::local(b.scenario().clone());
    let r = membership_vertex_form(&b, &m).unwrap();
    assert!(!r.feasible && r.weights.is_none());
    let sep = r.separating.unwrap();
    let bound = sep.inequality.bound;
    assert!(sep.value > bound + 1e-7, "{} vs {}", sep.value, bound);
    let again = model_bound(&sep.inequality, &m).unwrap();
    assert_eq!(format_rational(&again), sep.bound_exact);
    let max = sep.inequality.coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    assert!((max - 1.0).abs() < 1e-12);
}

#[test]
fn deterministic_point_has_unit_weight() {
    let scen = Scenario::binary(&[3, 2, 2]);
    let b = Behaviour::deterministic(&scen, &[vec![0, 1, 1], vec![1, 0], vec![0, 0]]).unwrap();
    let r = membership_vertex_form(&b, &BroadcastModel::local(scen)).unwrap();
    assert!(r.feasible && r.separating.is_none());
    let w = r.weights.unwrap();
    let big: Vec<_> = w.iter().filter(|t| t.weight > 1e-9).collect();
    assert_eq!(big.len(), 1);
    assert!((big[0].weight - 1.0).abs() < 1e-9);
}

#[test]
fn i3_membership_both_forms() {
    let m = i3_model();
    for opts in [CertifyOptions::default(), CertifyOptions::hybrid()] {
        let hi = membership(&i3_behaviour(isotropic(1.0).unwrap()), &m, &opts).unwrap();
        assert!(!hi.feasible);
        let sep = hi.separating.unwrap();
        assert!(sep.value > sep.inequality.bound + 1e-7);
        let lo = membership(&i3_behaviour(isotropic(0.5).unwrap()), &m, &opts).unwrap();
        assert!(lo.feasible);
        let u = membership(&Behaviour::uniform(&m.scenario), &m, &opts).unwrap();
        assert!(u.feasible);
    }
}

#[test]
fn i3_critical_visibility() {
    let m = i3_model();
    let ent = i3_behaviour(isotropic(1.0).unwrap());
    let noise = i3_behaviour(ComplexMatrix::identity(4).scale_real(0.25));
    for opts in [CertifyOptions::default(), CertifyOptions::hybrid()] {
        let r = visibility(&ent, &noise, &m, &opts).unwrap();
        assert!((r.v_star - INV_SQRT3).abs() < 1e-6, "{}", r.v_star);
        let sep = r.separating.unwrap();
        let above = ent.mix(r.v_star + 1e-4, &noise).unwrap();
        assert!(sep.inequality.evaluate(&above).unwrap() > sep.inequality.bound);
        let below = ent.mix(r.v_star - 1e-4, &noise).unwrap();
        assert!(membership(&below, &m, &opts).unwrap().feasible);
        assert!(!membership(&above, &m, &opts).unwrap().feasible);
    }
}

#[test]
fn chsh_critical_visibility() {
    let s = analytic_strategy("chsh").unwrap();
    let scen = Scenario::binary(&[2, 2]);
    let ent = behaviour_from_strategy(&s, &scen).unwrap();
    let m = BroadcastModel::local(scen.clone());
    let r = visibility(&ent, &Behaviour::uniform(&scen), &m, &CertifyOptions::default()).unwrap();
    assert!((r.v_star - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
    assert!(r.separating.is_some());
}

#[test]
fn visibility_caps_at_one() {
    let m = i3_model();
    let b = i3_behaviour(isotropic(0.3).unwrap());
    let r = visibility(&b, &Behaviour::uniform(&m.scenario), &m, &CertifyOptions::default()).unwrap();
    assert_eq!(r.v_star, 1.0);
    assert!(r.separating.is_none());
}

#[test]
fn exact_mode_confirms() {
    let m = i3_model();
    let mut opts = CertifyOptions::default();
    opts.lp.exact = true;
    let r = membership(&i3_behaviour(isotropic(1.0).unwrap()), &m, &opts).unwrap();
    assert_eq!(r.exact_confirmed, Some(true));
    let r = membership(&Behaviour::uniform(&m.scenario), &m, &opts).unwrap();
    assert_eq!(r.exact_confirmed, Some(true));
}

#[test]
fn forms_agree_on_random_mixtures() {
    let m = i3_model();
    let vertex = PreparedModel::new(&m, &CertifyOptions::default()).unwrap();
    let hybrid = PreparedModel::new(&m, &CertifyOptions::hybrid()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let uniform = Behaviour::uniform(&m.scenario);
    for _ in 0..8 {
        let rho = random_density(4, &mut rng);
        let b = random_three_party(rho, &mut rng);
        let v1 = vertex.visibility(&b, &uniform).unwrap().v_star;
        let v2 = hybrid.visibility(&b, &uniform).unwrap().v_star;
        assert!((v1 - v2).abs() < 1e-7, "{v1} {v2}");
        let p = b.mix(0.9, &uniform).unwrap();
        assert_eq!(vertex.membership(&p).unwrap().feasible, hybrid.membership(&p).unwrap().feasible);
    }
}

#[test]
fn separable_states_are_feasible() {
    let m = i3_model();
    let prep = PreparedModel::new(&m, &CertifyOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let rho = tensor(&random_density(2, &mut rng), &random_density(2, &mut rng));
        let b = random_three_party(rho, &mut rng);
        assert!(prep.membership(&b).unwrap().feasible);
    }
}

#[test]
fn signalling_behaviour_is_rejected_before_the_lp() {
    let scen = Scenario::binary(&[2, 2]);
    // Bob's outcome copies Alice's setting.
    let mut t = vec![0.0; scen.table_len()];
    for x in 0..2 {
        for y in 0..2 {
            t[scen.index(&[0, x], &[x, y])] = 1.0;
        }
    }
    let b = Behaviour::new(scen.clone(), t).unwrap();
    let r = membership_vertex_form(&b, &BroadcastModel::local(scen)).unwrap();
    assert!(!r.feasible);
    let sep = r.separating.unwrap();
    assert_eq!(sep.bound_exact, "0/1");
    assert!(sep.value > 1e-7);
    assert_eq!(r.lp_iterations, 0);
}

#[test]
fn hybrid_needs_a_no_signalling_block() {
    let m = BroadcastModel::local(Scenario::binary(&[2, 2]));
    assert!(matches!(
        PreparedModel::new(&m, &CertifyOptions::hybrid()),
        Err(crate::Error::UnsupportedModel(_))
    ));
    let mut opts = CertifyOptions::hybrid();
    opts.variable_block = Some(0);
    assert!(PreparedModel::new(&i3_model(), &opts).is_err());
}

#[test]
fn scenario_mismatch_is_an_error() {
    let b = Behaviour::uniform(&Scenario::binary(&[2, 2]));
    assert!(membership_vertex_form(&b, &i3_model()).is_err());
}

#[test]
fn column_budget() {
    let mut opts = CertifyOptions::default();
    opts.max_columns = 10;
    assert!(matches!(
        PreparedModel::new(&i3_model(), &opts),
        Err(crate::Error::Budget(10))
    ));
}
