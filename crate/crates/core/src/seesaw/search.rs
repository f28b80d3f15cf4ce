use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::{ascend_channel, channel_objective, correlator_operators, party_contexts};
use super::{update_observable, SearchResult, SeesawConfig};
use crate::certify::{BroadcastModel, CertifyOptions, PreparedModel};
use crate::error::{Error, Result};
use crate::quantum::{
    apply_isometry, polar_isometry, random_gaussian, sign_operator, ComplexMatrix, Isometry, SubsystemShape, C64,
};
use crate::scenarios::{
    behaviour_from_strategy, random_observable, Channel, CorrelatorTensor, Inequality,
    QuantumStrategy,
};

/// Channel positions on the source and their output factors.
pub type ChannelLayout = Vec<(usize, Vec<usize>)>;

/// Channels and dichotomic observables a seesaw run starts from.
#[derive(Clone, Debug, PartialEq)]
pub struct Start {
    pub channels: Vec<Channel>,
    pub observables: Vec<Vec<ComplexMatrix>>,
}

impl Start {
    /// Observables A = M₀ − M₁ of a dichotomic strategy.
    pub fn from_strategy(s: &QuantumStrategy) -> Result<Self> {
        let observables = s
            .measurements
            .iter()
            .map(|party| {
                party
                    .iter()
                    .map(|povm| match povm.as_slice() {
                        [m0, m1] => Ok(m0 - m1),
                        _ => Err(Error::NonBinary(0, povm.len())),
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            channels: s.channels.clone(),
            observables,
        })
    }
}

/// Counter-derived stream of the master seed.
fn rng_for(seed: u64, stream: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Random isometries for `layout` and random observables, `inputs[k]` per party.
pub fn random_start(
    shape: &SubsystemShape,
    layout: &ChannelLayout,
    inputs: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<Start> {
    let channels: Vec<Channel> = layout
        .iter()
        .map(|(on, outs)| {
            let d_in = *shape
                .dims()
                .get(*on)
                .ok_or_else(|| Error::Dimension(format!("channel on missing factor {on}")))?;
            Ok(Channel {
                on: *on,
                isometry: Isometry::random(d_in, outs.clone(), rng),
            })
        })
        .collect::<Result<_>>()?;
    let fin = final_shape(shape, &channels);
    if fin.len() != inputs.len() {
        return Err(Error::Dimension(format!(
            "{} parties after broadcasting, {} input counts",
            fin.len(),
            inputs.len()
        )));
    }
    let observables = fin
        .dims()
        .iter()
        .zip(inputs)
        .map(|(&d, &m)| (0..m).map(|_| random_observable(d, rng)).collect())
        .collect();
    Ok(Start {
        channels,
        observables,
    })
}

fn final_shape(shape: &SubsystemShape, channels: &[Channel]) -> SubsystemShape {
    let mut order: Vec<&Channel> = channels.iter().collect();
    order.sort_by(|a, b| b.on.cmp(&a.on));
    order
        .iter()
        .fold(shape.clone(), |sh, ch| sh.replace(ch.on, ch.isometry.out_dims()))
}

fn broadcast(
    rho: &ComplexMatrix,
    shape: &SubsystemShape,
    channels: &[Channel],
) -> Result<(ComplexMatrix, SubsystemShape)> {
    let mut order: Vec<&Channel> = channels.iter().collect();
    order.sort_by(|a, b| b.on.cmp(&a.on));
    let mut r = rho.clone();
    let mut sh = shape.clone();
    for ch in order {
        r = apply_isometry(&r, &sh, ch.on, &ch.isometry)?;
        sh = sh.replace(ch.on, ch.isometry.out_dims());
    }
    Ok((r, sh))
}

struct Run {
    start: Start,
    value: f64,
    trace: Vec<f64>,
    sweeps: usize,
    stalled: usize,
}

fn value_of(
    tensor: &CorrelatorTensor,
    obs: &[Vec<ComplexMatrix>],
    rho_f: &ComplexMatrix,
    shape: &SubsystemShape,
) -> f64 {
    let w = correlator_operators(tensor, obs, shape.dims(), None).remove(0);
    rho_f.trace_product(&w).re
}

fn run(
    tensor: &CorrelatorTensor,
    rho: &ComplexMatrix,
    shape: &SubsystemShape,
    mut s: Start,
    cfg: &SeesawConfig,
) -> Result<Run> {
    let (mut rho_f, mut fin) = broadcast(rho, shape, &s.channels)?;
    let mut value = value_of(tensor, &s.observables, &rho_f, &fin);
    let mut trace = vec![value];
    let mut stalled = 0;
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        for k in 0..fin.len() {
            let ctx = party_contexts(tensor, &s.observables, &rho_f, &fin, k)?;
            for (x, f) in ctx.iter().enumerate() {
                s.observables[k][x] = update_observable(f)?;
            }
        }
        if cfg.optimize_channels && !s.channels.is_empty() {
            for c in 0..s.channels.len() {
                let obj = channel_objective(tensor, &s.observables, rho, shape, &s.channels, c)?;
                let step = ascend_channel(&obj, &s.channels[c].isometry, cfg)?;
                stalled += step.stalled as usize;
                s.channels[c].isometry = step.isometry;
            }
            (rho_f, fin) = broadcast(rho, shape, &s.channels)?;
        }
        let next = value_of(tensor, &s.observables, &rho_f, &fin);
        let done = (next - value).abs() < cfg.convergence_eps;
        value = next;
        trace.push(value);
        if done {
            break;
        }
    }
    Ok(Run {
        start: s,
        value,
        trace,
        sweeps,
        stalled,
    })
}

fn strategy_of(rho: &ComplexMatrix, shape: &SubsystemShape, s: &Start) -> Result<QuantumStrategy> {
    QuantumStrategy::from_observables(rho.clone(), shape.clone(), s.channels.clone(), &s.observables)
}

fn result_of(
    run: Run,
    rho: &ComplexMatrix,
    shape: &SubsystemShape,
    restart: usize,
    seed: u64,
) -> Result<SearchResult> {
    Ok(SearchResult {
        best_value: run.value,
        best_strategy: strategy_of(rho, shape, &run.start)?,
        best_visibility: None,
        best_inequality: None,
        trace: run.trace,
        visibility_trace: Vec::new(),
        restart,
        seed,
        sweeps: run.sweeps,
        stalled_steps: run.stalled,
    })
}

/// Seesaw from a given start: alternate closed-form measurement updates and
/// channel ascent until successive sweep values differ by less than the tolerance.
pub fn seesaw_maximize(
    ineq: &Inequality,
    rho: &ComplexMatrix,
    shape: &SubsystemShape,
    start: Start,
    cfg: &SeesawConfig,
) -> Result<SearchResult> {
    cfg.validate()?;
    let tensor = ineq.correlator_tensor()?;
    let r = run(&tensor, rho, shape, start, cfg)?;
    result_of(r, rho, shape, 0, cfg.seed)
}

/// Best of `cfg.restarts` random starts; ties go to the lowest restart index.
pub fn seesaw_restarts(
    ineq: &Inequality,
    rho: &ComplexMatrix,
    shape: &SubsystemShape,
    layout: &ChannelLayout,
    cfg: &SeesawConfig,
) -> Result<SearchResult> {
    restarts(ineq, rho, shape, layout, None, cfg)
}

/// As [`seesaw_restarts`], with every start using `channels` instead of random
/// isometries (set `optimize_channels = false` to keep them fixed).
pub fn seesaw_restarts_with_channels(
    ineq: &Inequality,
    rho: &ComplexMatrix,
    shape: &SubsystemShape,
    channels: &[Channel],
    cfg: &SeesawConfig,
) -> Result<SearchResult> {
    let layout: ChannelLayout = channels
        .iter()
        .map(|c| (c.on, c.isometry.out_dims().to_vec()))
        .collect();
    restarts(ineq, rho, shape, &layout, Some(channels), cfg)
}

fn restarts(
    ineq: &Inequality,
    rho: &ComplexMatrix,
    shape: &SubsystemShape,
    layout: &ChannelLayout,
    fixed: Option<&[Channel]>,
    cfg: &SeesawConfig,
) -> Result<SearchResult> {
    cfg.validate()?;
    let tensor = ineq.correlator_tensor()?;
    let inputs = ineq.scenario.inputs().to_vec();
    let runs: Vec<Run> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(cfg.seed, r);
            let mut start = random_start(shape, layout, &inputs, &mut rng)?;
            if let Some(ch) = fixed {
                start.channels = ch.to_vec();
            }
            run(&tensor, rho, shape, start, cfg)
        })
        .collect::<Result<_>>()?;
    let (best, _) = runs
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, r)| {
            if r.value > bv {
                (i, r.value)
            } else {
                (bi, bv)
            }
        });
    let r = runs.into_iter().nth(best).expect("at least one restart");
    result_of(r, rho, shape, best, cfg.seed)
}

/// One channel update with every measurement and other channel fixed.
/// Returns the new isometry and whether the line search stalled.
pub fn update_channel(
    ineq: &Inequality,
    strategy: &QuantumStrategy,
    channel: usize,
    cfg: &SeesawConfig,
) -> Result<(Isometry, bool)> {
    if channel >= strategy.channels.len() {
        return Err(Error::Parameter(format!("no channel {channel}")));
    }
    let tensor = ineq.correlator_tensor()?;
    let s = Start::from_strategy(strategy)?;
    let obj = channel_objective(
        &tensor,
        &s.observables,
        &strategy.state,
        &strategy.shape,
        &s.channels,
        channel,
    )?;
    let step = ascend_channel(&obj, &s.channels[channel].isometry, cfg)?;
    Ok((step.isometry, step.stalled))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalConfig {
    pub seesaw: SeesawConfig,
    /// Visibility LP / seesaw alternations per restart.
    pub max_outer: usize,
    /// Stop a restart when v* improves by less than this.
    pub visibility_eps: f64,
    /// Random starts tried per restart until one shows a violation.
    pub max_start_attempts: usize,
    /// Channels every start uses instead of random isometries.
    #[serde(skip)]
    pub channels: Option<Vec<Channel>>,
    /// Perturb-and-descend attempts after a restart settles; a hop is kept
    /// only when it lowers v*.
    pub hops: usize,
    /// Size of the hop perturbation.
    pub hop_scale: f64,
    /// Extra random starts for each seesaw phase on the frozen inequality; the
    /// phase keeps whichever run violates it most.
    pub inner_restarts: usize,
    #[serde(skip)]
    pub certify: CertifyOptions,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        Self {
            seesaw: SeesawConfig {
                max_sweeps: 200,
                convergence_eps: 1e-9,
                ..SeesawConfig::default()
            },
            max_outer: 30,
            visibility_eps: 1e-7,
            max_start_attempts: 50,
            channels: None,
            hops: 0,
            hop_scale: 0.1,
            inner_restarts: 0,
            certify: CertifyOptions::default(),
        }
    }
}

fn mix(v: f64, a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut m = a.scale_real(v);
    m.add_scaled(b, C64::new(1.0 - v, 0.0));
    m
}

struct GlobalRun {
    start: Start,
    v_star: f64,
    inequality: Option<Inequality>,
    value: f64,
    v_trace: Vec<f64>,
    trace: Vec<f64>,
    sweeps: usize,
    stalled: usize,
}

#[allow(clippy::too_many_arguments)]
fn global_run(
    prep: &PreparedModel,
    rho_ent: &ComplexMatrix,
    rho_noise: &ComplexMatrix,
    shape: &SubsystemShape,
    layout: &ChannelLayout,
    cfg: &GlobalConfig,
    rng: &mut ChaCha8Rng,
) -> Result<GlobalRun> {
    let scen = prep.model.scenario.clone();
    let fresh = |rng: &mut ChaCha8Rng| -> Result<Start> {
        let mut s = random_start(shape, layout, scen.inputs(), rng)?;
        if let Some(ch) = &cfg.channels {
            s.channels = ch.clone();
        }
        Ok(s)
    };
    let mut best = None;
    for _ in 0..cfg.max_start_attempts.max(1) {
        let s = fresh(rng)?;
        if let Some(r) = descend(prep, rho_ent, rho_noise, shape, cfg, s, rng, &fresh)? {
            best = Some(r);
            break;
        }
    }
    let Some(mut best) = best else {
        return Ok(GlobalRun {
            start: fresh(rng)?,
            v_star: 1.0,
            inequality: None,
            value: 0.0,
            v_trace: Vec::new(),
            trace: Vec::new(),
            sweeps: 0,
            stalled: 0,
        });
    };
    let move_channels = cfg.channels.is_none() || cfg.seesaw.optimize_channels;
    for _ in 0..cfg.hops {
        let s = perturb(&best.start, cfg.hop_scale, move_channels, rng)?;
        let Some(r) = descend(prep, rho_ent, rho_noise, shape, cfg, s, rng, &fresh)? else {
            continue;
        };
        best.sweeps += r.sweeps;
        best.stalled += r.stalled;
        if r.v_star < best.v_star - cfg.visibility_eps {
            let mut v_trace = std::mem::take(&mut best.v_trace);
            v_trace.push(r.v_star);
            let mut trace = std::mem::take(&mut best.trace);
            trace.extend_from_slice(&r.trace);
            best = GlobalRun {
                v_trace,
                trace,
                sweeps: best.sweeps,
                stalled: best.stalled,
                ..r
            };
        }
    }
    Ok(best)
}

/// Random nearby strategy: observables rotated by sign(A + σH), isometries
/// moved to polar(V + σG).
fn perturb(s: &Start, scale: f64, channels: bool, rng: &mut ChaCha8Rng) -> Result<Start> {
    let observables = s
        .observables
        .iter()
        .map(|party| {
            party
                .iter()
                .map(|a| {
                    let g = random_gaussian(a.rows(), a.cols(), rng);
                    let h = (&g + &g.adjoint()).scale_real(0.5 * scale);
                    sign_operator(&(a + &h))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let channels = if channels {
        s.channels
            .iter()
            .map(|ch| {
                let v = ch.isometry.matrix();
                let g = random_gaussian(v.rows(), v.cols(), rng).scale_real(scale);
                Ok(Channel {
                    on: ch.on,
                    isometry: Isometry::new(polar_isometry(&(v + &g))?, ch.isometry.out_dims().to_vec())?,
                })
            })
            .collect::<Result<_>>()?
    } else {
        s.channels.clone()
    };
    Ok(Start {
        channels,
        observables,
    })
}

/// LP / seesaw alternation from `s` until v* stops improving. `None` when `s`
/// shows no violation.
#[allow(clippy::too_many_arguments)]
fn descend(
    prep: &PreparedModel,
    rho_ent: &ComplexMatrix,
    rho_noise: &ComplexMatrix,
    shape: &SubsystemShape,
    cfg: &GlobalConfig,
    mut s: Start,
    rng: &mut ChaCha8Rng,
    fresh: &dyn Fn(&mut ChaCha8Rng) -> Result<Start>,
) -> Result<Option<GlobalRun>> {
    let scen = &prep.model.scenario;
    let mut out: Option<GlobalRun> = None;
    for _ in 0..cfg.max_outer {
        let pe = behaviour_from_strategy(&strategy_of(rho_ent, shape, &s)?, scen)?;
        let pn = behaviour_from_strategy(&strategy_of(rho_noise, shape, &s)?, scen)?;
        let vis = match prep.visibility(&pe, &pn) {
            Ok(v) => v,
            // A numerically hopeless LP ends the descent, keeping what it found.
            Err(Error::Lp(_)) => break,
            Err(e) => return Err(e),
        };
        let Some(sep) = vis.separating else {
            break;
        };
        let v = vis.v_star;
        let o = out.get_or_insert_with(|| GlobalRun {
            start: s.clone(),
            v_star: 1.0,
            inequality: None,
            value: 0.0,
            v_trace: Vec::new(),
            trace: Vec::new(),
            sweeps: 0,
            stalled: 0,
        });
        let improved = o.inequality.is_none() || o.v_star - v > cfg.visibility_eps;
        if o.inequality.is_none() || v < o.v_star {
            o.v_star = v;
            o.start = s.clone();
            o.value = sep.value;
            o.inequality = Some(sep.inequality.clone());
        }
        o.v_trace.push(o.v_star);
        if !improved {
            break;
        }
        let target = mix(v, rho_ent, rho_noise);
        let tensor = sep.inequality.correlator_tensor()?;
        let mut r = run(&tensor, &target, shape, s, &cfg.seesaw)?;
        for _ in 0..cfg.inner_restarts {
            let alt = run(&tensor, &target, shape, fresh(rng)?, &cfg.seesaw)?;
            if alt.value > r.value {
                r = alt;
            }
        }
        o.trace.extend_from_slice(&r.trace);
        o.sweeps += r.sweeps;
        o.stalled += r.stalled;
        s = r.start;
    }
    Ok(out)
}

/// Alternate the visibility LP and seesaw on its frozen dual inequality at the
/// critical state, from `restarts` random starts. Returns the smallest v*; ties
/// go to the lowest restart index. v* = 1 means no violation was found.
pub fn global_visibility_search(
    rho_ent: &ComplexMatrix,
    rho_noise: &ComplexMatrix,
    shape: &SubsystemShape,
    layout: &ChannelLayout,
    model: &BroadcastModel,
    cfg: &GlobalConfig,
) -> Result<SearchResult> {
    cfg.seesaw.validate()?;
    let prep = PreparedModel::new(model, &cfg.certify)?;
    let runs: Vec<GlobalRun> = (0..cfg.seesaw.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(cfg.seesaw.seed, r);
            global_run(&prep, rho_ent, rho_noise, shape, layout, cfg, &mut rng)
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.v_star < runs[best].v_star {
            best = i;
        }
    }
    let r = runs.into_iter().nth(best).expect("at least one restart");
    Ok(SearchResult {
        best_value: r.value,
        best_strategy: strategy_of(rho_ent, shape, &r.start)?,
        best_visibility: Some(r.v_star),
        best_inequality: r.inequality,
        trace: r.trace,
        visibility_trace: r.v_trace,
        restart: best,
        seed: cfg.seesaw.seed,
        sweeps: r.sweeps,
        stalled_steps: r.stalled,
    })
}
