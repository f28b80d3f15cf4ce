//! Python bindings. Results come back as plain dicts and lists.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;

use broadcast_core::certify::{
    fig2_curves, fig2_grid, model_bound, BroadcastModel, CertifyOptions, Fig2Options, Formulation,
    PreparedModel,
};
use broadcast_core::polytope::{deterministic_vertices, format_rational, ns_vertices, VertexLabel};
use broadcast_core::quantum::ComplexMatrix;
use broadcast_core::scenario_file::load_scenario_file;
use broadcast_core::scenarios::{
    analytic_strategy, behaviour_from_strategy, builtin_inequality, Behaviour, Scenario, ANALYTIC_STRATEGIES,
    BUILTIN_INEQUALITIES,
};
use broadcast_core::seesaw::{seesaw_restarts, ChannelLayout, SeesawConfig};

fn err(e: broadcast_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn scenario(inputs: Vec<usize>, outputs: Option<Vec<usize>>) -> PyResult<Scenario> {
    let outputs = outputs.unwrap_or_else(|| vec![2; inputs.len()]);
    Scenario::new(inputs, outputs).map_err(err)
}

fn model(preset: &str, scen: Scenario) -> PyResult<BroadcastModel> {
    match preset {
        "local" => Ok(BroadcastModel::local(scen)),
        "broadcast_three" => BroadcastModel::broadcast_three(scen).map_err(err),
        "broadcast_four" => BroadcastModel::broadcast_four(scen).map_err(err),
        other => Err(PyValueError::new_err(format!(
            "unknown model `{other}` (local, broadcast_three, broadcast_four)"
        ))),
    }
}

fn options(formulation: &str, exact: bool) -> PyResult<CertifyOptions> {
    let formulation: Formulation = formulation
        .parse()
        .map_err(|_| PyValueError::new_err(format!("unknown formulation `{formulation}`")))?;
    let mut o = CertifyOptions {
        formulation,
        ..CertifyOptions::default()
    };
    o.lp.exact = exact;
    Ok(o)
}

fn behaviour(scen: &Scenario, table: Vec<f64>) -> PyResult<Behaviour> {
    Behaviour::new(scen.clone(), table).map_err(err)
}

/// Vertices of the no-signalling (`kind="ns"`) or local (`kind="local"`) polytope.
#[pyfunction]
#[pyo3(signature = (inputs, outputs=None, kind="ns"))]
fn vertices<'py>(
    py: Python<'py>,
    inputs: Vec<usize>,
    outputs: Option<Vec<usize>>,
    kind: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let outputs = outputs.unwrap_or_else(|| vec![2; inputs.len()]);
    let vs = match kind {
        "ns" => ns_vertices(&inputs, &outputs),
        "local" => deterministic_vertices(&inputs, &outputs),
        other => return Err(PyValueError::new_err(format!("unknown kind `{other}`"))),
    }
    .map_err(err)?;
    to_py(
        py,
        &serde_json::json!({
            "count": vs.len(),
            "local": vs.count(VertexLabel::LocalDeterministic),
            "vertices": vs.to_f64(),
        }),
    )
}

#[pyfunction]
fn builtin_inequalities() -> Vec<&'static str> {
    BUILTIN_INEQUALITIES.to_vec()
}

#[pyfunction]
fn analytic_strategies() -> Vec<&'static str> {
    ANALYTIC_STRATEGIES.to_vec()
}

/// Behaviour table of a named strategy. With `alpha`, the state is replaced
/// by `alpha·ρ + (1 − alpha)·I/d`.
#[pyfunction]
#[pyo3(signature = (strategy, alpha=None))]
fn analytic_behaviour<'py>(py: Python<'py>, strategy: &str, alpha: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let mut s = analytic_strategy(strategy).map_err(err)?;
    if let Some(a) = alpha {
        let d = s.state.rows();
        let mut rho = s.state.scale_real(a);
        rho.add_scaled(&ComplexMatrix::identity(d), ((1.0 - a) / d as f64).into());
        s = s.with_state(rho).map_err(err)?;
    }
    let inputs: Vec<usize> = s.measurements.iter().map(Vec::len).collect();
    let scen = Scenario::binary(&inputs);
    let b = behaviour_from_strategy(&s, &scen).map_err(err)?;
    to_py(
        py,
        &serde_json::json!({"inputs": inputs, "outputs": scen.outputs(), "table": b.table()}),
    )
}

/// Value of a builtin inequality on a behaviour table in its scenario.
#[pyfunction]
fn evaluate(inequality: &str, table: Vec<f64>) -> PyResult<f64> {
    let ineq = builtin_inequality(inequality).map_err(err)?;
    let b = behaviour(&ineq.scenario, table)?;
    ineq.evaluate(&b).map_err(err)
}

/// Maximum of a builtin inequality over a model, as `(float, "num/den")`.
#[pyfunction]
fn bound_in_model(inequality: &str, preset: &str) -> PyResult<(f64, String)> {
    let ineq = builtin_inequality(inequality).map_err(err)?;
    let m = model(preset, ineq.scenario.clone())?;
    let b = model_bound(&ineq, &m).map_err(err)?;
    Ok((broadcast_core::polytope::to_f64(&b), format_rational(&b)))
}

#[pyfunction]
#[pyo3(signature = (table, preset, inputs, outputs=None, formulation="vertex", exact=false))]
fn membership<'py>(
    py: Python<'py>,
    table: Vec<f64>,
    preset: &str,
    inputs: Vec<usize>,
    outputs: Option<Vec<usize>>,
    formulation: &str,
    exact: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let scen = scenario(inputs, outputs)?;
    let b = behaviour(&scen, table)?;
    let prep = PreparedModel::new(&model(preset, scen)?, &options(formulation, exact)?).map_err(err)?;
    to_py(py, &prep.membership(&b).map_err(err)?)
}

/// Smallest v with v·p_ent + (1 − v)·p_noise outside the model.
#[pyfunction]
#[pyo3(signature = (p_ent, p_noise, preset, inputs, outputs=None, formulation="vertex", exact=false))]
#[allow(clippy::too_many_arguments)]
fn critical_visibility<'py>(
    py: Python<'py>,
    p_ent: Vec<f64>,
    p_noise: Vec<f64>,
    preset: &str,
    inputs: Vec<usize>,
    outputs: Option<Vec<usize>>,
    formulation: &str,
    exact: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let scen = scenario(inputs, outputs)?;
    let e = behaviour(&scen, p_ent)?;
    let n = behaviour(&scen, p_noise)?;
    let prep = PreparedModel::new(&model(preset, scen)?, &options(formulation, exact)?).map_err(err)?;
    to_py(py, &prep.visibility(&e, &n).map_err(err)?)
}

/// Critical visibility of a scenario file against its noise.
#[pyfunction]
#[pyo3(signature = (path, formulation="vertex", exact=false))]
fn scenario_visibility<'py>(
    py: Python<'py>,
    path: PathBuf,
    formulation: &str,
    exact: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let f = load_scenario_file(&path).map_err(err)?;
    let e = behaviour_from_strategy(&f.strategy, &f.scenario).map_err(err)?;
    let noisy = f.strategy.with_state(f.noise.clone()).map_err(err)?;
    let n = behaviour_from_strategy(&noisy, &f.scenario).map_err(err)?;
    let prep = PreparedModel::new(&f.model, &options(formulation, exact)?).map_err(err)?;
    to_py(py, &prep.visibility(&e, &n).map_err(err)?)
}

/// Best of `restarts` seesaw runs of a builtin inequality, starting from the
/// state and channel layout of a named strategy.
#[pyfunction]
#[pyo3(signature = (inequality, strategy, restarts=20, seed=0))]
fn seesaw<'py>(
    py: Python<'py>,
    inequality: &str,
    strategy: &str,
    restarts: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let ineq = builtin_inequality(inequality).map_err(err)?;
    let s = analytic_strategy(strategy).map_err(err)?;
    let layout: ChannelLayout = s
        .channels
        .iter()
        .map(|c| (c.on, c.isometry.out_dims().to_vec()))
        .collect();
    let cfg = SeesawConfig {
        restarts,
        seed,
        ..SeesawConfig::default()
    };
    let r = py
        .detach(|| seesaw_restarts(&ineq, &s.state, &s.shape, &layout, &cfg))
        .map_err(err)?;
    to_py(
        py,
        &serde_json::json!({
            "best_value": r.best_value,
            "restart": r.restart,
            "sweeps": r.sweeps,
            "trace": r.trace,
        }),
    )
}

/// Rows `{theta, v_broadcast, v_chsh, ...}` on θ_i = i·(π/4)/steps.
#[pyfunction]
#[pyo3(signature = (steps=8, seed=0, restarts=None))]
fn fig2<'py>(py: Python<'py>, steps: usize, seed: u64, restarts: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
    let mut opts = Fig2Options::default();
    opts.seesaw.seed = seed;
    if let Some(n) = restarts {
        opts.seesaw.restarts = n;
    }
    let rows = py.detach(|| fig2_curves(&fig2_grid(steps), &opts)).map_err(err)?;
    to_py(py, &rows)
}

#[pymodule]
pub fn broadcast_nonlocality(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(vertices, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_inequalities, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_strategies, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_behaviour, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(bound_in_model, m)?)?;
    m.add_function(wrap_pyfunction!(membership, m)?)?;
    m.add_function(wrap_pyfunction!(critical_visibility, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_visibility, m)?)?;
    m.add_function(wrap_pyfunction!(seesaw, m)?)?;
    m.add_function(wrap_pyfunction!(fig2, m)?)?;
    Ok(())
}
