use std::collections::BTreeSet;

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::scenarios::{tuples, Scenario};

fn half() -> Rational {
    ratio(1, 2)
}

#[test]
fn deterministic_counts() {
    assert_eq!(deterministic_vertices(&[3], &[2]).unwrap().len(), 8);
    assert_eq!(deterministic_vertices(&[2, 2], &[2, 2]).unwrap().len(), 16);
    let one = deterministic_vertices(&[1], &[1]).unwrap();
    assert_eq!(one.vertices, vec![vec![Rational::one()]]);
}

#[test]
fn deterministic_budget() {
    assert!(matches!(
        deterministic_vertices_with(&[4, 4], &[2, 2], 100),
        Err(crate::Error::Budget(100))
    ));
}

#[test]
fn unit_square() {
    let v = enumerate_vertices(&HRepresentation::cube(2, 0, 1)).unwrap();
    assert_eq!(v.len(), 4);
    assert_eq!(v.vertices[3], vec![rat(1), rat(1)]);
}

#[test]
fn cube_methods_agree() {
    let h = HRepresentation::cube(4, -1, 2);
    let a = enumerate_vertices(&h).unwrap();
    let b = enumerate_vertices_brute_force(&h, 1_000_000).unwrap();
    assert_eq!(a.len(), 16);
    assert_eq!(a.vertices, b.vertices);
}

#[test]
fn unbounded_detected() {
    let h = HRepresentation::new(
        2,
        vec![],
        vec![
            Constraint { row: vec![rat(1), rat(0)], rhs: rat(0) },
            Constraint { row: vec![rat(0), rat(1)], rhs: rat(0) },
        ],
    )
    .unwrap();
    assert!(matches!(enumerate_vertices(&h), Err(crate::Error::Unbounded(_))));
    let line = HRepresentation::new(
        2,
        vec![],
        vec![Constraint { row: vec![rat(1), rat(0)], rhs: rat(0) }],
    )
    .unwrap();
    assert!(matches!(enumerate_vertices(&line), Err(crate::Error::Unbounded(_))));
}

#[test]
fn ray_budget() {
    let h = ns_h_representation(&[2, 2], &[2, 2]).unwrap();
    let tight = EnumerationBudget { max_rays: 5, max_vertices: 10 };
    assert!(matches!(enumerate_vertices_with(&h, tight), Err(crate::Error::Budget(5))));
}

#[test]
fn ns_2222() {
    let h = ns_h_representation(&[2, 2], &[2, 2]).unwrap();
    let v = ns_vertices(&[2, 2], &[2, 2]).unwrap();
    assert_eq!(v.len(), 24);
    assert_eq!(v.count(VertexLabel::LocalDeterministic), 16);
    assert_eq!(v.count(VertexLabel::NonlocalExtremal), 8);
    for (x, l) in v.vertices.iter().zip(&v.labels) {
        assert!(h.contains(x));
        if *l == VertexLabel::NonlocalExtremal {
            assert!(x.iter().all(|q| q.is_zero() || *q == half()));
        }
    }
    let brute = enumerate_vertices_brute_force(&h, 10_000_000).unwrap();
    assert_eq!(brute.vertices, v.vertices);
}

#[test]
fn ns_3222_methods_agree() {
    let h = ns_h_representation(&[3, 2], &[2, 2]).unwrap();
    let dd = enumerate_vertices(&h).unwrap();
    let brute = enumerate_vertices_brute_force(&h, 10_000_000).unwrap();
    assert_eq!(dd.vertices, brute.vertices);
    assert_eq!(dd.len(), NS_3222_VERTICES);
    let det = deterministic_vertices(&[3, 2], &[2, 2]).unwrap();
    let all: BTreeSet<_> = dd.vertices.iter().collect();
    assert!(det.vertices.iter().all(|v| all.contains(v)));
    assert_eq!(dd.count(VertexLabel::LocalDeterministic), det.len());
}

const NS_3222_VERTICES: usize = 128;

#[test]
fn deterministic_inside_ns_2222() {
    let ns = ns_vertices(&[2, 2], &[2, 2]).unwrap();
    let all: BTreeSet<_> = ns.vertices.iter().collect();
    for v in deterministic_vertices(&[2, 2], &[2, 2]).unwrap().vertices {
        assert!(all.contains(&v));
    }
}

fn pr_box() -> Vec<Rational> {
    let scen = Scenario::binary(&[2, 2]);
    let mut v = vec![Rational::zero(); 16];
    for x in tuples(&[2, 2]) {
        for a in tuples(&[2, 2]) {
            if (a[0] ^ a[1]) == (x[0] & x[1]) {
                v[scen.index(&a, &x)] = half();
            }
        }
    }
    v
}

#[test]
fn classification() {
    assert_eq!(
        classify_vertex(&pr_box(), &[2, 2], &[2, 2]).unwrap(),
        VertexLabel::NonlocalExtremal
    );
    let det = deterministic_vertices(&[2, 2], &[2, 2]).unwrap();
    for v in &det.vertices {
        assert_eq!(
            classify_vertex(v, &[2, 2], &[2, 2]).unwrap(),
            VertexLabel::LocalDeterministic
        );
    }
    let uniform = vec![ratio(1, 4); 16];
    assert!(matches!(
        classify_vertex(&uniform, &[2, 2], &[2, 2]),
        Err(crate::Error::NotAVertex)
    ));
}

/// Random relabelling of settings and (setting-dependent) outcomes per party.
struct Relabelling {
    settings: Vec<Vec<usize>>,
    outcomes: Vec<Vec<Vec<usize>>>,
}

impl Relabelling {
    fn random(scen: &Scenario, rng: &mut ChaCha8Rng) -> Self {
        let perm = |n: usize, rng: &mut ChaCha8Rng| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(rng);
            p
        };
        let settings = scen.inputs().iter().map(|&m| perm(m, rng)).collect();
        let outcomes = (0..scen.parties())
            .map(|k| (0..scen.inputs()[k]).map(|_| perm(scen.outputs()[k], rng)).collect())
            .collect();
        Self { settings, outcomes }
    }

    fn apply(&self, v: &[Rational], scen: &Scenario) -> Vec<Rational> {
        let n = scen.parties();
        let mut out = vec![Rational::zero(); v.len()];
        for x in tuples(scen.inputs()) {
            for a in tuples(scen.outputs()) {
                let x2: Vec<usize> = (0..n).map(|k| self.settings[k][x[k]]).collect();
                let a2: Vec<usize> = (0..n).map(|k| self.outcomes[k][x[k]][a[k]]).collect();
                out[scen.index(&a2, &x2)] = v[scen.index(&a, &x)].clone();
            }
        }
        out
    }
}

#[test]
fn relabelling_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for inputs in [[2, 2], [3, 2]] {
        let scen = Scenario::binary(&inputs);
        let v = ns_vertices(&inputs, &[2, 2]).unwrap();
        let set: BTreeSet<_> = v.vertices.iter().cloned().collect();
        for _ in 0..5 {
            let r = Relabelling::random(&scen, &mut rng);
            let moved: BTreeSet<_> = v.vertices.iter().map(|x| r.apply(x, &scen)).collect();
            assert_eq!(moved, set);
            for (x, l) in v.vertices.iter().zip(&v.labels).step_by(7) {
                let y = r.apply(x, &scen);
                assert_eq!(classify_vertex(&y, &inputs, &[2, 2]).unwrap(), *l);
            }
        }
    }
}

#[test]
fn json_round_trip() {
    let v = ns_vertices(&[2, 2], &[2, 2]).unwrap();
    let text = v.to_json();
    assert!(text.contains("\"1/2\""));
    assert_eq!(VertexSet::from_json(&text).unwrap(), v);
}
