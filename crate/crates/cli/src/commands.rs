use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use broadcast_core::certify::{
    fig2_csv, fig2_curves, fig2_grid, BroadcastModel, CertifyOptions, Fig2Options, PreparedModel,
    Separation,
};
use broadcast_core::json::{format_sig, write_atomic, write_json};
use broadcast_core::polytope::{deterministic_vertices, ns_vertices, VertexLabel};
use broadcast_core::quantum::isotropic;
use broadcast_core::scenario_file::{parse_scenario_file, ScenarioFile};
use broadcast_core::scenarios::{
    analytic_strategy, behaviour_from_strategy, builtin_inequality, check_no_signalling, i3_broadcast,
    i4_broadcast, mabk4, singleton_partition, BoundKind, Inequality, QuantumStrategy, Scenario,
    BUILTIN_INEQUALITIES,
};
use broadcast_core::seesaw::{
    global_visibility_search, seesaw_restarts, seesaw_restarts_with_channels, ChannelLayout,
    GlobalConfig, SeesawConfig,
};
use broadcast_core::{Error, Result};

use crate::report::{digest, RunReport};
use crate::{Command, LpFlags, Reproduce};

/// Exit status for a membership test that finds the behaviour outside the model.
pub const EXIT_OUTSIDE: u8 = 2;

struct Loaded {
    file: ScenarioFile,
    text: Vec<u8>,
}

fn load(path: &Path) -> Result<Loaded> {
    let text = std::fs::read(path)?;
    let utf8 = std::str::from_utf8(&text).map_err(|e| Error::Syntax {
        line: 0,
        msg: format!("not UTF-8: {e}"),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let file = parse_scenario_file(utf8, base)?;
    Ok(Loaded { file, text })
}

fn report(command: &str, args: &[String], inputs: &[&[u8]], seed: Option<u64>, results: Value) -> RunReport {
    RunReport {
        command: command.into(),
        inputs_digest: digest(args, inputs),
        seed,
        wall_time_s: 0.0,
        results,
        artifacts: Vec::new(),
    }
}

fn certify_options(lp: &LpFlags) -> CertifyOptions {
    let mut o = CertifyOptions {
        formulation: lp.formulation,
        ..CertifyOptions::default()
    };
    o.lp.exact = lp.exact;
    o
}

fn separation_json(s: &Separation) -> Value {
    json!({
        "bound": s.inequality.bound,
        "bound_exact": s.bound_exact,
        "value": s.value,
        "coefficients": s.inequality.coefficients,
    })
}

fn layout_of(s: &QuantumStrategy) -> ChannelLayout {
    s.channels
        .iter()
        .map(|c| (c.on, c.isometry.out_dims().to_vec()))
        .collect()
}

fn artifact(r: &mut RunReport, p: &Path) {
    r.artifacts.push(p.display().to_string());
}

pub fn run(cmd: Command, args: &[String]) -> Result<(RunReport, u8)> {
    match cmd {
        Command::Vertices {
            inputs,
            outputs,
            kind,
            out,
        } => vertices(args, &inputs, &outputs, &kind, out),
        Command::Evaluate {
            scenario,
            inequality,
            out,
        } => evaluate(args, &scenario, inequality.as_deref(), out),
        Command::Membership { scenario, lp, out } => membership(args, &scenario, &lp, out),
        Command::Visibility { scenario, lp, out } => visibility(args, &scenario, &lp, out),
        Command::Seesaw {
            scenario,
            random,
            global,
            fixed_channels,
            max_sweeps,
            hops,
            out,
        } => {
            let l = load(&scenario)?;
            let f = &l.file;
            eprintln!("seed = {}", random.seed);
            let mut sc = SeesawConfig {
                seed: random.seed,
                restarts: random.restarts.unwrap_or(20),
                optimize_channels: !fixed_channels,
                ..SeesawConfig::default()
            };
            if let Some(m) = max_sweeps {
                sc.max_sweeps = m;
            }
            let s = &f.strategy;
            let result = if global {
                let mut cfg = GlobalConfig::default();
                cfg.seesaw.seed = sc.seed;
                cfg.seesaw.restarts = sc.restarts;
                cfg.seesaw.optimize_channels = sc.optimize_channels;
                cfg.hops = hops;
                if let Some(m) = max_sweeps {
                    cfg.seesaw.max_sweeps = m;
                }
                if fixed_channels {
                    cfg.channels = Some(s.channels.clone());
                }
                global_visibility_search(&s.state, &f.noise, &s.shape, &layout_of(s), &f.model, &cfg)?
            } else {
                let ineq = f.inequality.as_ref().ok_or_else(|| Error::Semantic {
                    path: "inequality".into(),
                    msg: "seesaw needs an [inequality] section (or use --global)".into(),
                })?;
                if fixed_channels {
                    seesaw_restarts_with_channels(ineq, &s.state, &s.shape, &s.channels, &sc)?
                } else {
                    seesaw_restarts(ineq, &s.state, &s.shape, &layout_of(s), &sc)?
                }
            };
            let mut r = report(
                "seesaw",
                args,
                &[&l.text],
                Some(random.seed),
                json!({
                    "best_value": result.best_value,
                    "best_visibility": result.best_visibility,
                    "visibility_trace": result.visibility_trace,
                    "restart": result.restart,
                    "restarts": sc.restarts,
                    "sweeps": result.sweeps,
                    "stalled_steps": result.stalled_steps,
                }),
            );
            if let Some(p) = out {
                write_json(&p, &result)?;
                artifact(&mut r, &p);
            }
            Ok((r, 0))
        }
        Command::Reproduce { what } => match what {
            Reproduce::Fig2 { steps, random, out } => fig2(args, steps, random.seed, random.restarts, out),
            Reproduce::Isotropic { exact, out } => reproduce_isotropic(args, exact, out),
        },
    }
}

fn vertices(args: &[String], inputs: &[usize], outputs: &[usize], kind: &str, out: Option<PathBuf>) -> Result<(RunReport, u8)> {
    let outputs = if outputs.is_empty() {
        vec![2; inputs.len()]
    } else {
        outputs.to_vec()
    };
    let vs = match kind {
        "ns" => ns_vertices(inputs, &outputs)?,
        "local" => deterministic_vertices(inputs, &outputs)?,
        other => return Err(Error::UnknownName(other.into())),
    };
    let local = vs.count(VertexLabel::LocalDeterministic);
    eprintln!("{} vertices, {local} local deterministic", vs.len());
    let mut r = report(
        "vertices",
        args,
        &[],
        None,
        json!({
            "inputs": inputs,
            "outputs": outputs,
            "kind": kind,
            "vertices": vs.len(),
            "local": local,
            "nonlocal": vs.len() - local,
        }),
    );
    if let Some(p) = out {
        write_atomic(&p, vs.to_json().as_bytes())?;
        artifact(&mut r, &p);
    }
    Ok((r, 0))
}

fn inequalities_for(f: &ScenarioFile, name: Option<&str>) -> Result<Vec<(String, Inequality)>> {
    if let Some(n) = name {
        return Ok(vec![(n.to_string(), builtin_inequality(n)?)]);
    }
    if let Some(i) = &f.inequality {
        return Ok(vec![("file".into(), i.clone())]);
    }
    Ok(BUILTIN_INEQUALITIES
        .iter()
        .filter_map(|n| builtin_inequality(n).ok().map(|i| (n.to_string(), i)))
        .filter(|(_, i)| i.scenario == f.scenario)
        .collect())
}

fn evaluate(args: &[String], path: &Path, name: Option<&str>, out: Option<PathBuf>) -> Result<(RunReport, u8)> {
    let l = load(path)?;
    let f = &l.file;
    let b = behaviour_from_strategy(&f.strategy, &f.scenario)?;
    let mut values = Vec::new();
    for (n, ineq) in inequalities_for(f, name)? {
        if ineq.scenario != f.scenario {
            return Err(Error::ScenarioMismatch(format!("inequality `{n}` is for another scenario")));
        }
        let v = ineq.evaluate(&b)?;
        eprintln!("{n}: {} (bound {})", format_sig(v, 12), format_sig(ineq.bound, 12));
        values.push(json!({"name": n, "value": v, "bound": ineq.bound, "violated": v > ineq.bound + 1e-9}));
    }
    let ns = check_no_signalling(&b, &singleton_partition(f.scenario.parties()));
    let mut r = report(
        "evaluate",
        args,
        &[&l.text],
        None,
        json!({"inequalities": values, "no_signalling_defect": ns}),
    );
    if let Some(p) = out {
        write_json(&p, &b)?;
        artifact(&mut r, &p);
    }
    Ok((r, 0))
}

fn membership(args: &[String], path: &Path, lp: &LpFlags, out: Option<PathBuf>) -> Result<(RunReport, u8)> {
    let l = load(path)?;
    let f = &l.file;
    let b = behaviour_from_strategy(&f.strategy, &f.scenario)?;
    let prep = PreparedModel::new(&f.model, &certify_options(lp))?;
    let m = prep.membership(&b)?;
    eprintln!("{}", if m.feasible { "inside the model" } else { "outside the model" });
    let mut r = report(
        "membership",
        args,
        &[&l.text],
        None,
        json!({
            "feasible": m.feasible,
            "lp_size": prep.lp_size(),
            "lp_iterations": m.lp_iterations,
            "exact_confirmed": m.exact_confirmed,
            "terms": m.weights.as_ref().map(Vec::len),
            "separating": m.separating.as_ref().map(separation_json),
        }),
    );
    if let (Some(p), Some(s)) = (out, &m.separating) {
        write_json(&p, &s.inequality)?;
        artifact(&mut r, &p);
    }
    Ok((r, if m.feasible { 0 } else { EXIT_OUTSIDE }))
}

fn visibility(args: &[String], path: &Path, lp: &LpFlags, out: Option<PathBuf>) -> Result<(RunReport, u8)> {
    let l = load(path)?;
    let f = &l.file;
    let pe = behaviour_from_strategy(&f.strategy, &f.scenario)?;
    let pn = behaviour_from_strategy(&f.strategy.with_state(f.noise.clone())?, &f.scenario)?;
    let prep = PreparedModel::new(&f.model, &certify_options(lp))?;
    let v = prep.visibility(&pe, &pn)?;
    eprintln!("v* = {}", format_sig(v.v_star, 12));
    let mut r = report(
        "visibility",
        args,
        &[&l.text],
        None,
        json!({
            "v_star": v.v_star,
            "lp_size": prep.lp_size(),
            "lp_iterations": v.lp_iterations,
            "exact_confirmed": v.exact_confirmed,
            "separating": v.separating.as_ref().map(separation_json),
        }),
    );
    if let (Some(p), Some(s)) = (out, &v.separating) {
        write_json(&p, &s.inequality)?;
        artifact(&mut r, &p);
    }
    Ok((r, 0))
}

fn fig2(args: &[String], steps: usize, seed: u64, restarts: Option<usize>, out: Option<PathBuf>) -> Result<(RunReport, u8)> {
    if steps == 0 {
        return Err(Error::Parameter("--steps must be positive".into()));
    }
    eprintln!("seed = {seed}");
    let mut opts = Fig2Options::default();
    opts.seesaw.seed = seed;
    if let Some(n) = restarts {
        opts.seesaw.restarts = n;
    }
    let rows = fig2_curves(&fig2_grid(steps), &opts)?;
    let csv = fig2_csv(&rows);
    eprint!("{csv}");
    let unconverged: Vec<f64> = rows.iter().filter(|r| !r.converged).map(|r| r.theta).collect();
    let mut r = report(
        "reproduce fig2",
        args,
        &[],
        Some(seed),
        json!({"steps": steps, "rows": rows, "unconverged_thetas": unconverged}),
    );
    if let Some(p) = out {
        write_atomic(&p, csv.as_bytes())?;
        artifact(&mut r, &p);
    }
    Ok((r, 0))
}

/// Affine fit of an inequality value over the isotropic family.
fn slope(s: &QuantumStrategy, ineq: &Inequality) -> Result<(f64, f64)> {
    let scen = &ineq.scenario;
    let at = |a: f64| -> Result<f64> {
        ineq.evaluate(&behaviour_from_strategy(&s.with_state(isotropic(a)?)?, scen)?)
    };
    let v0 = at(0.0)?;
    Ok((at(1.0)? - v0, v0))
}

fn lp_visibility(s: &QuantumStrategy, model: &BroadcastModel, exact: bool) -> Result<(f64, Option<bool>)> {
    let scen = &model.scenario;
    let pe = behaviour_from_strategy(&s.with_state(isotropic(1.0)?)?, scen)?;
    let pn = behaviour_from_strategy(&s.with_state(isotropic(0.0)?)?, scen)?;
    let mut o = CertifyOptions::default();
    o.lp.exact = exact;
    let v = PreparedModel::new(model, &o)?.visibility(&pe, &pn)?;
    Ok((v.v_star, v.exact_confirmed))
}

fn reproduce_isotropic(args: &[String], exact: bool, out: Option<PathBuf>) -> Result<(RunReport, u8)> {
    let i3s = analytic_strategy("i3_paper")?;
    let i4s = analytic_strategy("i4_paper")?;
    let mabk = analytic_strategy("mabk_ghz")?;
    let chsh = analytic_strategy("chsh")?;
    let (i3_slope, _) = slope(&i3s, &i3_broadcast())?;
    let (i4_slope, _) = slope(&i4s, &i4_broadcast())?;
    let mabk_ineq = mabk4(BoundKind::Biseparable);
    let (m_slope, m_off) = slope(&mabk, &mabk_ineq)?;
    let (v3, v3_exact) = lp_visibility(&i3s, &BroadcastModel::broadcast_three(Scenario::binary(&[3, 2, 2]))?, exact)?;
    let (v4, v4_exact) = lp_visibility(&i4s, &BroadcastModel::broadcast_four(Scenario::binary(&[2, 2, 2, 2]))?, exact)?;
    let (vc, _) = lp_visibility(&chsh, &BroadcastModel::local(Scenario::binary(&[2, 2])), false)?;
    let rows: Vec<(&str, f64)> = vec![
        ("i3_slope", i3_slope),
        ("i3_threshold", i3_broadcast().bound / i3_slope),
        ("v_star_i3_lp", v3),
        ("i4_slope", i4_slope),
        ("v_star_i4_lp", v4),
        ("mabk_slope", m_slope),
        ("mabk_threshold", (mabk_ineq.bound - m_off) / m_slope),
        ("v_star_chsh_lp", vc),
    ];
    let mut table = String::from("quantity,value\n");
    for (k, v) in &rows {
        table.push_str(&format!("{k},{}\n", format_sig(*v, 12)));
    }
    eprint!("{table}");
    let results: serde_json::Map<String, Value> = rows.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let mut results = Value::Object(results);
    results["exact_confirmed"] = json!({"v_star_i3_lp": v3_exact, "v_star_i4_lp": v4_exact});
    let mut r = report("reproduce isotropic", args, &[], None, results);
    if let Some(p) = out {
        write_atomic(&p, table.as_bytes())?;
        artifact(&mut r, &p);
    }
    Ok((r, 0))
}
