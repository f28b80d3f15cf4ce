//! Acceptance checks, one line per criterion.
//!
//! Criterion 10 has a second, long part (500 restarts) that only runs with
//! `BROADCAST_EXTENDED=1`.

use std::f64::consts::{FRAC_PI_8, SQRT_2};
use std::time::Instant;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use broadcast_core::certify::{
    fig2_curves, fig2_grid, model_bound, BroadcastModel, CertifyOptions, Fig2Options, PreparedModel,
};
use broadcast_core::lp::{relaxed_dual_value, solve, verify, LpOptions, LpProblem, LpStatus};
use broadcast_core::polytope::{
    deterministic_vertices, enumerate_vertices, enumerate_vertices_brute_force, ns_h_representation, ns_vertices,
    rat, ratio, Rational, VertexLabel,
};
use broadcast_core::quantum::{
    isotropic, polar_isometry, random_gaussian, sign_operator, tensor, ComplexMatrix, Isometry, SubsystemShape,
};
use broadcast_core::scenarios::{
    analytic_strategy, behaviour_from_strategy, check_no_signalling, chsh, i3_broadcast, i4_broadcast, mabk4,
    singleton_partition, Behaviour, BoundKind, Channel, QuantumStrategy, Scenario,
};
use broadcast_core::seesaw::{global_visibility_search, seesaw_restarts, GlobalConfig, SeesawConfig, Start};

const FOUR_SQRT3: f64 = 6.928_203_230_275_509;
const INV_SQRT3: f64 = 0.577_350_269_189_625_8;

type Outcome = Result<String, String>;

fn pass_if(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    format!("error: {e}")
}

fn value_on(s: &QuantumStrategy, rho: ComplexMatrix, ineq: &broadcast_core::scenarios::Inequality) -> Result<f64, String> {
    let b = behaviour_from_strategy(&s.with_state(rho).map_err(err)?, &ineq.scenario).map_err(err)?;
    ineq.evaluate(&b).map_err(err)
}

fn c1() -> Outcome {
    let s = analytic_strategy("chsh").map_err(err)?;
    let v = value_on(&s, isotropic(1.0).map_err(err)?, &chsh())?;
    let bound = model_bound(&chsh(), &BroadcastModel::local(Scenario::binary(&[2, 2]))).map_err(err)?;
    pass_if(
        (v - 2.0 * SQRT_2).abs() < 1e-10 && bound == rat(2),
        format!("CHSH = {v:.12}, local bound = {bound}"),
    )
}

fn c2() -> Outcome {
    let s = analytic_strategy("i3_paper").map_err(err)?;
    let mut worst = 0.0f64;
    for a in [0.25, 0.5, INV_SQRT3, 0.8, 1.0] {
        let v = value_on(&s, isotropic(a).map_err(err)?, &i3_broadcast())?;
        worst = worst.max((v - FOUR_SQRT3 * a).abs());
    }
    pass_if(worst < 1e-9, format!("max |I3 - 4√3·α| = {worst:.2e}"))
}

fn c3() -> Outcome {
    let b3 = model_bound(
        &i3_broadcast(),
        &BroadcastModel::broadcast_three(Scenario::binary(&[3, 2, 2])).map_err(err)?,
    )
    .map_err(err)?;
    let b4 = model_bound(
        &i4_broadcast(),
        &BroadcastModel::broadcast_four(Scenario::binary(&[2, 2, 2, 2])).map_err(err)?,
    )
    .map_err(err)?;
    pass_if(b3 == rat(4) && b4 == rat(4), format!("I3 bound = {b3}, I4 bound = {b4}"))
}

fn c4() -> Outcome {
    let s = analytic_strategy("i3_paper").map_err(err)?;
    let scen = Scenario::binary(&[3, 2, 2]);
    let model = BroadcastModel::broadcast_three(scen.clone()).map_err(err)?;
    let pe = behaviour_from_strategy(&s.with_state(isotropic(1.0).map_err(err)?).map_err(err)?, &scen).map_err(err)?;
    let pn = behaviour_from_strategy(&s.with_state(isotropic(0.0).map_err(err)?).map_err(err)?, &scen).map_err(err)?;
    let mut opts = CertifyOptions::default();
    opts.lp.exact = true;
    let v = PreparedModel::new(&model, &opts).map_err(err)?.visibility(&pe, &pn).map_err(err)?;
    let sep = v.separating.as_ref().ok_or("no separating inequality")?;
    let exact = model_bound(&sep.inequality, &model).map_err(err)?;
    let exact_f = broadcast_core::polytope::to_f64(&exact);
    let above = sep
        .inequality
        .evaluate(&pe.mix(v.v_star + 1e-4, &pn).map_err(err)?)
        .map_err(err)?;
    pass_if(
        (v.v_star - 0.57735027).abs() < 1e-6 && above > exact_f,
        format!(
            "v* = {:.9}, dual value at v*+1e-4 = {above:.3e} > bound {exact_f:.3e}, exact basis {:?}",
            v.v_star, v.exact_confirmed
        ),
    )
}

fn c5() -> Outcome {
    let s = analytic_strategy("i4_paper").map_err(err)?;
    let mut worst = 0.0f64;
    for a in [0.25, 0.5, INV_SQRT3, 0.8, 1.0] {
        let v = value_on(&s, isotropic(a).map_err(err)?, &i4_broadcast())?;
        worst = worst.max((v - FOUR_SQRT3 * a).abs());
    }
    pass_if(worst < 1e-9, format!("max |I4 - 4√3·α| = {worst:.2e}"))
}

fn c6() -> Outcome {
    let s = analytic_strategy("mabk_ghz").map_err(err)?;
    let ineq = mabk4(BoundKind::Biseparable);
    let mut worst = 0.0f64;
    for a in [0.0, 0.3, 0.5, 0.9, 1.0] {
        let v = value_on(&s, isotropic(a).map_err(err)?, &ineq)?;
        worst = worst.max((v - a * 2f64.powf(1.5)).abs());
    }
    let v0 = value_on(&s, isotropic(0.0).map_err(err)?, &ineq)?;
    let v1 = value_on(&s, isotropic(1.0).map_err(err)?, &ineq)?;
    let threshold = (ineq.bound - v0) / (v1 - v0);
    pass_if(
        worst < 1e-9 && (ineq.bound - SQRT_2).abs() < 1e-15 && (threshold - 0.5).abs() < 1e-12,
        format!("max |MABK - α·2^(3/2)| = {worst:.2e}, threshold = {threshold:.15}"),
    )
}

fn c7() -> Outcome {
    let vs = ns_vertices(&[2, 2], &[2, 2]).map_err(err)?;
    let local = vs.count(VertexLabel::LocalDeterministic);
    let half = ratio(1, 2);
    let entries_ok = vs
        .vertices
        .iter()
        .zip(&vs.labels)
        .filter(|(_, l)| **l == VertexLabel::NonlocalExtremal)
        .all(|(v, _)| v.iter().all(|x| x.is_zero() || *x == half));
    let h = ns_h_representation(&[2, 2], &[2, 2]).map_err(err)?;
    let dd = enumerate_vertices(&h).map_err(err)?;
    let brute = enumerate_vertices_brute_force(&h, 10_000_000).map_err(err)?;
    let det = deterministic_vertices(&[2, 2], &[2, 2]).map_err(err)?;
    let mut a: Vec<Vec<Rational>> = dd.vertices.clone();
    let mut b: Vec<Vec<Rational>> = brute.vertices.clone();
    a.sort();
    b.sort();
    pass_if(
        vs.len() == 24 && local == 16 && det.len() == 16 && entries_ok && a == b,
        format!(
            "{} vertices ({local} local, {} nonlocal), double description and basis enumeration agree: {}",
            vs.len(),
            vs.len() - local,
            a == b
        ),
    )
}

fn random_density(d: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let g = random_gaussian(d, d, rng);
    let r = g.matmul(&g.adjoint());
    let tr = r.trace().re;
    r.scale_real(1.0 / tr)
}

fn random_three_party(rho: ComplexMatrix, rng: &mut ChaCha8Rng) -> Result<Behaviour, String> {
    let ch = Channel {
        on: 1,
        isometry: Isometry::random(2, vec![2, 2], rng),
    };
    let s = QuantumStrategy::random_dichotomic(rho, SubsystemShape::qubits(2), vec![ch], &[3, 2, 2], rng)
        .map_err(err)?;
    behaviour_from_strategy(&s, &Scenario::binary(&[3, 2, 2])).map_err(err)
}

/// The I₃ strategy with every observable and the isometry pushed a random
/// distance, on a random isotropic state; about half of these leave the model.
fn perturbed_i3(rng: &mut ChaCha8Rng) -> Result<Behaviour, String> {
    let base = Start::from_strategy(&analytic_strategy("i3_paper").map_err(err)?).map_err(err)?;
    let sigma = rng.random_range(0.0..0.6);
    let observables: Vec<Vec<ComplexMatrix>> = base
        .observables
        .iter()
        .map(|party| {
            party
                .iter()
                .map(|a| {
                    let g = random_gaussian(2, 2, rng);
                    sign_operator(&(a + &(&g + &g.adjoint()).scale_real(0.5 * sigma))).map_err(err)
                })
                .collect()
        })
        .collect::<Result<_, String>>()?;
    let v = base.channels[0].isometry.matrix();
    let u = polar_isometry(&(v + &random_gaussian(4, 2, rng).scale_real(sigma))).map_err(err)?;
    let ch = Channel {
        on: 1,
        isometry: Isometry::new(u, vec![2, 2]).map_err(err)?,
    };
    let alpha = rng.random_range(0.5..1.0);
    let s = QuantumStrategy::from_observables(
        isotropic(alpha).map_err(err)?,
        SubsystemShape::qubits(2),
        vec![ch],
        &observables,
    )
    .map_err(err)?;
    behaviour_from_strategy(&s, &Scenario::binary(&[3, 2, 2])).map_err(err)
}

fn c8() -> Outcome {
    let model = BroadcastModel::broadcast_three(Scenario::binary(&[3, 2, 2])).map_err(err)?;
    let vertex = PreparedModel::new(&model, &CertifyOptions::default()).map_err(err)?;
    let hybrid = PreparedModel::new(&model, &CertifyOptions::hybrid()).map_err(err)?;
    let uniform = Behaviour::uniform(&model.scenario);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut disagreements = 0;
    let mut outside = 0;
    for i in 0..100 {
        let b = if i % 4 == 0 {
            random_three_party(random_density(4, &mut rng), &mut rng)?
        } else {
            perturbed_i3(&mut rng)?
        };
        let v1 = vertex.visibility(&b, &uniform).map_err(err)?.v_star;
        let v2 = hybrid.visibility(&b, &uniform).map_err(err)?.v_star;
        worst = worst.max((v1 - v2).abs());
        let m1 = vertex.membership(&b).map_err(err)?.feasible;
        let m2 = hybrid.membership(&b).map_err(err)?.feasible;
        disagreements += usize::from(m1 != m2);
        outside += usize::from(!m1);
    }
    pass_if(
        worst < 1e-7 && disagreements == 0,
        format!("100 instances ({outside} outside), max |Δv*| = {worst:.2e}, feasibility disagreements = {disagreements}"),
    )
}

fn c9() -> Outcome {
    let cfg = SeesawConfig {
        restarts: 20,
        seed: 9,
        ..SeesawConfig::default()
    };
    let r = seesaw_restarts(
        &i3_broadcast(),
        &isotropic(1.0).map_err(err)?,
        &SubsystemShape::qubits(2),
        &vec![(1, vec![2, 2])],
        &cfg,
    )
    .map_err(err)?;
    pass_if(
        r.best_value >= FOUR_SQRT3 - 1e-5,
        format!("best of 20 = {:.9} (restart {}), target 4√3 = {FOUR_SQRT3:.9}", r.best_value, r.restart),
    )
}

fn four_party_search(restarts: usize, hops: usize) -> Result<(f64, usize), String> {
    let model = BroadcastModel::broadcast_four(Scenario::binary(&[3, 2, 3, 2])).map_err(err)?;
    let u = Isometry::broadcast_beta(FRAC_PI_8);
    let mut cfg = GlobalConfig::default();
    cfg.seesaw.restarts = restarts;
    cfg.seesaw.seed = 0;
    cfg.seesaw.max_sweeps = 100;
    cfg.hops = hops;
    cfg.channels = Some(vec![
        Channel {
            on: 0,
            isometry: u.clone(),
        },
        Channel { on: 1, isometry: u },
    ]);
    let r = global_visibility_search(
        &isotropic(1.0).map_err(err)?,
        &ComplexMatrix::identity(4).scale_real(0.25),
        &SubsystemShape::qubits(2),
        &vec![(0, vec![2, 2]), (1, vec![2, 2])],
        &model,
        &cfg,
    )
    .map_err(err)?;
    Ok((r.best_visibility.unwrap_or(1.0), r.restart))
}

fn c10() -> Outcome {
    let (v, restart) = four_party_search(50, 0)?;
    pass_if(v <= 0.58, format!("50 restarts: best v* = {v:.9} (restart {restart}), target ≤ 0.58"))
}

fn c10_extended() -> Option<Outcome> {
    if std::env::var("BROADCAST_EXTENDED").is_err() {
        return None;
    }
    Some(four_party_search(500, 0).and_then(|(v, restart)| {
        pass_if(v <= 0.565, format!("500 restarts: best v* = {v:.9} (restart {restart}), target ≤ 0.565"))
    }))
}

fn c11() -> Outcome {
    let rows = fig2_curves(&fig2_grid(8), &Fig2Options::default()).map_err(err)?;
    let mut chsh_err = 0.0f64;
    let mut excess = f64::NEG_INFINITY;
    for r in &rows {
        let s = (2.0 * r.theta).sin();
        chsh_err = chsh_err.max((r.v_chsh - 1.0 / (1.0 + s * s).sqrt()).abs());
        excess = excess.max(r.v_broadcast - r.v_chsh);
    }
    let end = rows.last().ok_or("empty grid")?;
    pass_if(
        chsh_err < 1e-6 && (end.v_broadcast - 0.5774).abs() <= 0.002 && excess <= 1e-3,
        format!(
            "max |v_chsh - formula| = {chsh_err:.2e}, v_broadcast(π/4) = {:.6}, max(v_broadcast - v_chsh) = {excess:.4}",
            end.v_broadcast
        ),
    )
}

fn random_box_lp(rng: &mut ChaCha8Rng, m: usize, n: usize, shift: bool) -> LpProblem {
    let mut p = LpProblem::new(m, n);
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    for j in 0..n {
        for i in 0..m {
            p.set(i, j, rng.random_range(-1.0..1.0));
        }
        p.upper[j] = Some(2.0);
    }
    for i in 0..m {
        p.rhs[i] = (0..n).map(|j| p.get(i, j) * x0[j]).sum::<f64>() + if shift { 50.0 } else { 0.0 };
    }
    p.objective = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    p
}

fn c12() -> Outcome {
    let model = BroadcastModel::broadcast_three(Scenario::binary(&[3, 2, 2])).map_err(err)?;
    let prep = PreparedModel::new(&model, &CertifyOptions::default()).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut infeasible = 0;
    let mut ns = 0.0f64;
    for _ in 0..50 {
        let rho = tensor(&random_density(2, &mut rng), &random_density(2, &mut rng));
        let b = random_three_party(rho, &mut rng)?;
        ns = ns.max(check_no_signalling(&b, &singleton_partition(3)));
        infeasible += usize::from(!prep.membership(&b).map_err(err)?.feasible);
    }
    for _ in 0..50 {
        let b = random_three_party(random_density(4, &mut rng), &mut rng)?;
        ns = ns.max(check_no_signalling(&b, &singleton_partition(3)));
    }
    let opts = LpOptions::default();
    let (mut optimal, mut farkas, mut bad) = (0, 0, 0);
    for t in 0..100 {
        let m = 3 + t % 7;
        let p = random_box_lp(&mut rng, m, m + 5 + t % 11, t % 3 == 0);
        let s = solve(&p).map_err(err)?;
        let ok = verify(&p, &s, &opts).is_ok()
            && match s.status {
                LpStatus::Optimal => {
                    optimal += 1;
                    relaxed_dual_value(&p, &s.duals, 1e-9)
                        .is_some_and(|g| (g - s.objective_value).abs() <= 1e-8 * (1.0 + g.abs()))
                }
                LpStatus::Infeasible => {
                    farkas += 1;
                    s.farkas.as_ref().is_some_and(|y| p.farkas_margin(y).is_some_and(|mg| mg > 0.0))
                }
                LpStatus::Unbounded => false,
            };
        bad += usize::from(!ok);
    }
    pass_if(
        infeasible == 0 && ns <= 1e-10 && bad == 0,
        format!(
            "separable infeasible = {infeasible}/50, max NS defect = {ns:.1e}, LP checks failed = {bad}/100 ({optimal} optimal, {farkas} infeasible)"
        ),
    )
}

fn main() {
    let checks: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 CHSH baseline", c1),
        ("2 I3 analytic strategy", c2),
        ("3 broadcast-local bounds", c3),
        ("4 critical visibility LP", c4),
        ("5 I4 analytic strategy", c5),
        ("6 MABK threshold", c6),
        ("7 NS polytope vertices", c7),
        ("8 formulation equivalence", c8),
        ("9 seesaw recovery", c9),
        ("10 four-party search", c10),
        ("11 state-family curves", c11),
        ("12 soundness properties", c12),
    ];
    let mut failed = 0;
    for (name, f) in checks {
        let t = Instant::now();
        let r = f();
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("PASS  criterion {name}: {d} [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL  criterion {name}: {d} [{secs:.1} s]");
            }
        }
    }
    let t = Instant::now();
    match c10_extended() {
        None => println!("SKIP  criterion 10 extended run (set BROADCAST_EXTENDED=1)"),
        Some(Ok(d)) => println!("PASS  criterion 10 extended run: {d} [{:.1} s]", t.elapsed().as_secs_f64()),
        Some(Err(d)) => {
            failed += 1;
            println!("FAIL  criterion 10 extended run: {d} [{:.1} s]", t.elapsed().as_secs_f64());
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
