//! Plain-text scenario files.
//!
//! ```text
//! # comment
//! [scenario]
//! inputs = 3, 2, 2
//! outputs = 2, 2, 2
//!
//! [state]
//! kind = isotropic
//! alpha = 1
//!
//! [channel]
//! on = 1
//! kind = broadcast_beta
//! beta = pi/8
//!
//! [measurements]
//! builtin = i3_paper
//!
//! [model]
//! preset = broadcast_three
//! ```
//!
//! Matrices never appear inline; `file = ...` keys name JSON sidecars resolved
//! relative to the scenario file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::certify::{BlockKind, BroadcastModel};
use crate::error::{Error, Result};
use crate::quantum::{make_state, BellState, ComplexMatrix, Isometry, StateKind, SubsystemShape};
use crate::scenarios::{
    analytic_strategy, builtin_inequality, Channel, Inequality, PartyMeasurements, QuantumStrategy,
    Scenario,
};

/// Everything a scenario file describes.
#[derive(Clone, Debug)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    pub strategy: QuantumStrategy,
    pub model: BroadcastModel,
    /// Parametrized state, when the file used one.
    pub state_kind: Option<StateKind>,
    /// Source state mixed in by visibility runs; defaults to the white-noise
    /// end of the state family, or I/d.
    pub noise: ComplexMatrix,
    pub inequality: Option<Inequality>,
}

struct Section {
    name: String,
    line: usize,
    keys: BTreeMap<String, (usize, String)>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.keys.remove(key)
    }

    fn finish(self) -> Result<()> {
        match self.keys.into_iter().next() {
            Some((k, (line, _))) => Err(Error::Syntax {
                line,
                msg: format!("unknown key `{k}` in [{}]", self.name),
            }),
            None => Ok(()),
        }
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn required(&mut self, key: &str) -> Result<(usize, String)> {
        self.take(key).ok_or_else(|| Error::Semantic {
            path: self.path(key),
            msg: "missing".into(),
        })
    }
}

const SECTIONS: &[&str] = &[
    "scenario",
    "state",
    "channel",
    "measurements",
    "noise",
    "model",
    "inequality",
];

fn tokenize(text: &str) -> Result<Vec<Section>> {
    let mut out: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Syntax {
                    line,
                    msg: "unterminated section header".into(),
                })?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(Error::Syntax {
                    line,
                    msg: format!("unknown section [{name}]"),
                });
            }
            if name != "channel" && out.iter().any(|s| s.name == name) {
                return Err(Error::Syntax {
                    line,
                    msg: format!("section [{name}] repeated"),
                });
            }
            out.push(Section {
                name: name.to_string(),
                line,
                keys: BTreeMap::new(),
            });
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| Error::Syntax {
            line,
            msg: "expected `key = value`".into(),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(Error::Syntax {
                line,
                msg: "empty key or value".into(),
            });
        }
        let sec = out.last_mut().ok_or_else(|| Error::Syntax {
            line,
            msg: "key before any section".into(),
        })?;
        if sec.keys.insert(k.to_string(), (line, v.to_string())).is_some() {
            return Err(Error::Syntax {
                line,
                msg: format!("key `{k}` repeated"),
            });
        }
    }
    Ok(out)
}

/// Real number, optionally a multiple or fraction of pi: `0.5`, `pi/8`, `3*pi/16`, `-pi`.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let (neg, s) = match s.strip_prefix('-') {
        Some(r) => (true, r.trim()),
        None => (false, s),
    };
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim().parse::<f64>().ok()?),
        None => (s, 1.0),
    };
    let coef = match num.strip_suffix("pi") {
        Some("") => 1.0,
        Some(c) => c.trim().strip_suffix('*')?.trim().parse::<f64>().ok()?,
        None => return None,
    };
    let v = coef * std::f64::consts::PI / den;
    (v.is_finite() && den != 0.0).then_some(if neg { -v } else { v })
}

fn syntax(line: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        msg: msg.into(),
    }
}

fn real(entry: (usize, String)) -> Result<f64> {
    parse_real(&entry.1).ok_or_else(|| syntax(entry.0, format!("`{}` is not a number", entry.1)))
}

fn count(entry: &(usize, String)) -> Result<usize> {
    entry
        .1
        .parse()
        .map_err(|_| syntax(entry.0, format!("`{}` is not a count", entry.1)))
}

fn counts(entry: &(usize, String)) -> Result<Vec<usize>> {
    entry
        .1
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| syntax(entry.0, format!("`{}` is not a list of counts", entry.1)))
        })
        .collect()
}

fn semantic(path: impl Into<String>, e: impl std::fmt::Display) -> Error {
    Error::Semantic {
        path: path.into(),
        msg: e.to_string(),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(base: &Path, file: &str, path: &str) -> Result<T> {
    let full: PathBuf = base.join(file);
    let text = std::fs::read_to_string(&full).map_err(|e| semantic(path, format!("{}: {e}", full.display())))?;
    serde_json::from_str(&text).map_err(|e| semantic(path, format!("{}: {e}", full.display())))
}

fn state_of(sec: &mut Section, base: &Path) -> Result<(ComplexMatrix, SubsystemShape, Option<StateKind>)> {
    if let Some((_, file)) = sec.take("file") {
        let path = sec.path("file");
        let rho: ComplexMatrix = read_json(base, &file, &path)?;
        let shape = match sec.take("shape") {
            Some(e) => SubsystemShape::new(counts(&e)?).map_err(|e| semantic(sec.path("shape"), e))?,
            None => SubsystemShape::new(vec![rho.rows()]).map_err(|e| semantic(&path, e))?,
        };
        if rho.rows() != shape.total() || rho.cols() != shape.total() {
            return Err(semantic(&path, format!("matrix is {}x{}, shape needs {}", rho.rows(), rho.cols(), shape.total())));
        }
        crate::quantum::validate_density(&rho).map_err(|e| semantic(&path, e))?;
        return Ok((rho, shape, None));
    }
    let (line, kind) = sec.required("kind")?;
    let kind = match kind.as_str() {
        "isotropic" => StateKind::Isotropic {
            alpha: real(sec.required("alpha")?)?,
        },
        "rho_alpha_theta" => StateKind::RhoAlphaTheta {
            alpha: real(sec.required("alpha")?)?,
            theta: real(sec.required("theta")?)?,
        },
        "bell" => {
            let (_, w) = sec.required("which")?;
            StateKind::Bell {
                which: BellState::parse(&w).map_err(|e| semantic(sec.path("which"), e))?,
            }
        }
        "ghz" => StateKind::Ghz {
            n: count(&sec.required("n")?)?,
        },
        other => return Err(syntax(line, format!("unknown state kind `{other}`"))),
    };
    let rho = make_state(&kind).map_err(|e| semantic(sec.path("kind"), e))?;
    Ok((rho, kind.shape(), Some(kind)))
}

fn channel_of(mut sec: Section, idx: usize, base: &Path) -> Result<Channel> {
    let name = format!("channel[{idx}]");
    sec.name = name.clone();
    let on = count(&sec.required("on")?)?;
    let (line, kind) = sec.required("kind")?;
    let isometry = match kind.as_str() {
        "broadcast_beta" => Isometry::broadcast_beta(real(sec.required("beta")?)?),
        "copy" => Isometry::copy(),
        "identity" => Isometry::identity(count(&sec.required("dim")?)?),
        "matrix" => {
            let (_, file) = sec.required("file")?;
            let path = sec.path("file");
            let m: ComplexMatrix = read_json(base, &file, &path)?;
            let out = match sec.take("out_dims") {
                Some(e) => counts(&e)?,
                None => vec![m.rows()],
            };
            Isometry::new(m, out).map_err(|e| semantic(&path, e))?
        }
        other => return Err(syntax(line, format!("unknown channel kind `{other}`"))),
    };
    sec.finish()?;
    Ok(Channel { on, isometry })
}

fn model_of(mut sec: Section, scen: &Scenario) -> Result<BroadcastModel> {
    let model = if let Some((line, preset)) = sec.take("preset") {
        let m = match preset.as_str() {
            "local" => Ok(BroadcastModel::local(scen.clone())),
            "broadcast_three" => BroadcastModel::broadcast_three(scen.clone()),
            "broadcast_four" => BroadcastModel::broadcast_four(scen.clone()),
            other => return Err(syntax(line, format!("unknown model preset `{other}`"))),
        };
        m.map_err(|e| semantic("model.preset", e))?
    } else {
        let (line, blocks) = sec.required("blocks")?;
        let blocks: Vec<Vec<usize>> = blocks
            .split('|')
            .map(|b| counts(&(line, b.to_string())))
            .collect::<Result<_>>()?;
        let (line, kinds) = sec.required("kinds")?;
        let kinds: Vec<BlockKind> = kinds
            .split(',')
            .map(|k| match k.trim() {
                "deterministic_local" | "local" => Ok(BlockKind::DeterministicLocal),
                "no_signalling" | "ns" => Ok(BlockKind::NoSignalling),
                other => Err(syntax(line, format!("unknown block kind `{other}`"))),
            })
            .collect::<Result<_>>()?;
        BroadcastModel::new(scen.clone(), blocks, kinds).map_err(|e| semantic("model.blocks", e))?
    };
    sec.finish()?;
    Ok(model)
}

fn measurements_of(sec: &mut Section, base: &Path, parties: usize) -> Result<Vec<PartyMeasurements>> {
    (0..parties)
        .map(|k| {
            let key = format!("party{k}");
            let (_, file) = sec.required(&key)?;
            read_json(base, &file, &sec.path(&key))
        })
        .collect()
}

/// Map strategy validation failures to a path inside the file.
fn strategy_error(e: Error) -> Error {
    match e {
        Error::InvalidMeasurement { path, reason } => Error::Semantic { path, msg: reason },
        other => semantic("strategy", other),
    }
}

/// Parse scenario text; sidecar files are resolved against `base`.
pub fn parse_scenario_file(text: &str, base: &Path) -> Result<ScenarioFile> {
    let mut sections = tokenize(text)?;
    let mut take = |name: &str| -> Option<Section> {
        sections
            .iter()
            .position(|s| s.name == name)
            .map(|i| sections.remove(i))
    };

    let mut sc = take("scenario").ok_or_else(|| semantic("scenario", "missing section"))?;
    let inputs = counts(&sc.required("inputs")?)?;
    let outputs = match sc.take("outputs") {
        Some(e) => counts(&e)?,
        None => vec![2; inputs.len()],
    };
    if let Some(e) = sc.take("parties") {
        let n = count(&e)?;
        if n != inputs.len() || n != outputs.len() {
            return Err(semantic("scenario.parties", format!("{n} parties but {} inputs and {} outputs", inputs.len(), outputs.len())));
        }
    }
    sc.finish()?;
    let scenario = Scenario::new(inputs, outputs).map_err(|e| semantic("scenario", e))?;

    let mut state = take("state");
    let custom_state = match state.as_mut() {
        Some(sec) => Some(state_of(sec, base)?),
        None => None,
    };
    if let Some(sec) = state {
        sec.finish()?;
    }

    let mut channels = Vec::new();
    let mut idx = 0;
    while let Some(sec) = take("channel") {
        channels.push(channel_of(sec, idx, base)?);
        idx += 1;
    }

    let mut ms = take("measurements").ok_or_else(|| semantic("measurements", "missing section"))?;
    let strategy = if let Some((_, name)) = ms.take("builtin") {
        let mut s = analytic_strategy(&name).map_err(|e| semantic("measurements.builtin", e))?;
        if !channels.is_empty() {
            s.channels = channels;
        }
        if let Some((rho, shape, _)) = &custom_state {
            if shape != &s.shape {
                return Err(semantic("state", format!("builtin `{name}` needs shape {:?}", s.shape.dims())));
            }
            s = s.with_state(rho.clone()).map_err(|e| semantic("state", e))?;
        }
        s.validate().map_err(strategy_error)?;
        s
    } else {
        let (rho, shape, _) = custom_state
            .clone()
            .ok_or_else(|| semantic("state", "missing section (needed without a builtin strategy)"))?;
        let measurements = measurements_of(&mut ms, base, scenario.parties())?;
        QuantumStrategy::new(rho, shape, channels, measurements).map_err(strategy_error)?
    };
    ms.finish()?;
    let implied = strategy.scenario().map_err(strategy_error)?;
    if implied != scenario {
        return Err(semantic(
            "measurements",
            format!("strategy has inputs {:?} and outputs {:?}", implied.inputs(), implied.outputs()),
        ));
    }

    let state_kind = custom_state.and_then(|c| c.2);
    let d = strategy.shape.total();
    let noise = match take("noise") {
        Some(mut sec) => {
            let (rho, shape, _) = state_of(&mut sec, base)?;
            sec.finish()?;
            if shape != strategy.shape {
                return Err(semantic("noise", "noise state has a different shape"));
            }
            rho
        }
        None => match state_kind.as_ref().and_then(StateKind::family_endpoints) {
            Some((_, low)) => make_state(&low)?,
            None => ComplexMatrix::identity(d).scale_real(1.0 / d as f64),
        },
    };

    let model = match take("model") {
        Some(sec) => model_of(sec, &scenario)?,
        None => BroadcastModel::local(scenario.clone()),
    };

    let inequality = match take("inequality") {
        Some(mut sec) => {
            let ineq = if let Some((_, name)) = sec.take("name") {
                builtin_inequality(&name).map_err(|e| semantic("inequality.name", e))?
            } else {
                let (_, file) = sec.required("file")?;
                read_json::<Inequality>(base, &file, "inequality.file")?
            };
            sec.finish()?;
            if ineq.scenario != scenario {
                return Err(semantic("inequality", "scenario differs from [scenario]"));
            }
            Some(ineq)
        }
        None => None,
    };
    if let Some(sec) = sections.first() {
        return Err(syntax(sec.line, format!("unexpected section [{}]", sec.name)));
    }

    Ok(ScenarioFile {
        scenario,
        strategy,
        model,
        state_kind,
        noise,
        inequality,
    })
}

pub fn load_scenario_file(path: &Path) -> Result<ScenarioFile> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_scenario_file(&text, base)
}
