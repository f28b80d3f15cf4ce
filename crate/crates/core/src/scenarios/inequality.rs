use serde::{Deserialize, Serialize};

use super::behaviour::{mixed_radix, tuples, Behaviour, Scenario};
use crate::error::{Error, Result};

/// Which model a bound refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    BroadcastLocal,
    Lhv,
    Biseparable,
    Ns,
}

/// One correlator ⟨∏ A_{x_k}⟩; `None` leaves the party out.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorTerm {
    pub settings: Vec<Option<usize>>,
    pub coefficient: f64,
}

impl CorrelatorTerm {
    pub fn new(settings: Vec<Option<usize>>, coefficient: f64) -> Self {
        Self {
            settings,
            coefficient,
        }
    }
}

/// Linear functional Σ coefficients·p ≤ bound in full-probability form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub scenario: Scenario,
    pub coefficients: Vec<f64>,
    pub bound: f64,
    pub bound_kind: BoundKind,
}

impl Inequality {
    pub fn new(
        scenario: Scenario,
        coefficients: Vec<f64>,
        bound: f64,
        bound_kind: BoundKind,
    ) -> Result<Self> {
        if coefficients.len() != scenario.table_len() {
            return Err(Error::ScenarioMismatch(format!(
                "{} coefficients for a table of {}",
                coefficients.len(),
                scenario.table_len()
            )));
        }
        Ok(Self {
            scenario,
            coefficients,
            bound,
            bound_kind,
        })
    }

    /// Expands correlator terms into probability coefficients; unlisted parties
    /// are averaged uniformly over their settings.
    pub fn from_correlators(
        scenario: Scenario,
        terms: &[CorrelatorTerm],
        bound: f64,
        bound_kind: BoundKind,
    ) -> Result<Self> {
        if !scenario.is_binary() {
            return Err(Error::NonBinary(
                scenario.outputs().iter().position(|&o| o != 2).unwrap_or(0),
                scenario.outputs().iter().copied().find(|&o| o != 2).unwrap_or(0),
            ));
        }
        let n = scenario.parties();
        let s = scenario.num_settings();
        let mut coefficients = vec![0.0; scenario.table_len()];
        for term in terms {
            if term.settings.len() != n {
                return Err(Error::ScenarioMismatch("correlator term arity".into()));
            }
            let mut free = 1usize;
            for (k, x) in term.settings.iter().enumerate() {
                match x {
                    Some(x) if *x >= scenario.inputs()[k] => {
                        return Err(Error::ScenarioMismatch(format!(
                            "setting {x} out of range for party {k}"
                        )))
                    }
                    None => free *= scenario.inputs()[k],
                    _ => {}
                }
            }
            let weight = term.coefficient / free as f64;
            for x in 0..s {
                let xs = scenario.setting_digits(x);
                let matches = term
                    .settings
                    .iter()
                    .zip(&xs)
                    .all(|(want, &got)| want.is_none_or(|w| w == got));
                if !matches {
                    continue;
                }
                for a in 0..scenario.num_outcomes() {
                    let ad = scenario.outcome_digits(a);
                    let parity: usize = term
                        .settings
                        .iter()
                        .zip(&ad)
                        .filter(|(w, _)| w.is_some())
                        .map(|(_, &ak)| ak)
                        .sum();
                    let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
                    coefficients[a * s + x] += sign * weight;
                }
            }
        }
        Self::new(scenario, coefficients, bound, bound_kind)
    }

    pub fn evaluate(&self, b: &Behaviour) -> Result<f64> {
        if b.scenario() != &self.scenario {
            return Err(Error::ScenarioMismatch(
                "inequality and behaviour scenarios differ".into(),
            ));
        }
        Ok(self
            .coefficients
            .iter()
            .zip(b.table())
            .map(|(c, p)| c * p)
            .sum())
    }

    /// evaluate(b) − bound
    pub fn violation(&self, b: &Behaviour) -> Result<f64> {
        Ok(self.evaluate(b)? - self.bound)
    }

    /// Coefficients T[j] of Σ_j T[j]⟨∏_{k: j_k>0} A_{j_k−1}⟩ (binary outcomes only).
    pub fn correlator_tensor(&self) -> Result<CorrelatorTensor> {
        let scen = &self.scenario;
        if let Some((k, &o)) = scen.outputs().iter().enumerate().find(|(_, &o)| o != 2) {
            return Err(Error::NonBinary(k, o));
        }
        let n = scen.parties();
        let radices: Vec<usize> = scen.inputs().iter().map(|m| m + 1).collect();
        let mut values = vec![0.0; radices.iter().product()];
        let s = scen.num_settings();
        let norm = 0.5f64.powi(n as i32);
        for x in 0..s {
            let xs = scen.setting_digits(x);
            for a in 0..scen.num_outcomes() {
                let c = self.coefficients[a * s + x];
                if c == 0.0 {
                    continue;
                }
                let ad = scen.outcome_digits(a);
                for mask in 0..(1usize << n) {
                    let mut j = vec![0; n];
                    let mut parity = 0;
                    for k in 0..n {
                        if mask >> k & 1 == 1 {
                            j[k] = xs[k] + 1;
                            parity += ad[k];
                        }
                    }
                    let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
                    values[mixed_radix(&j, &radices)] += sign * c * norm;
                }
            }
        }
        Ok(CorrelatorTensor { radices, values })
    }
}

/// Dense tensor over per-party indices j_k ∈ {0 = identity, 1..=m_k = A_{j_k−1}}.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorTensor {
    pub radices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CorrelatorTensor {
    pub fn get(&self, j: &[usize]) -> f64 {
        self.values[mixed_radix(j, &self.radices)]
    }

    /// Nonzero entries as correlator terms.
    pub fn terms(&self, tol: f64) -> Vec<CorrelatorTerm> {
        tuples(&self.radices)
            .filter_map(|j| {
                let v = self.get(&j);
                (v.abs() > tol).then(|| {
                    CorrelatorTerm::new(
                        j.iter().map(|&jk| jk.checked_sub(1)).collect(),
                        v,
                    )
                })
            })
            .collect()
    }
}

fn term(settings: &[i32], c: f64) -> CorrelatorTerm {
    CorrelatorTerm::new(
        settings
            .iter()
            .map(|&x| (x >= 0).then_some(x as usize))
            .collect(),
        c,
    )
}

pub fn chsh() -> Inequality {
    let terms = [
        term(&[0, 0], 1.0),
        term(&[0, 1], 1.0),
        term(&[1, 0], 1.0),
        term(&[1, 1], -1.0),
    ];
    Inequality::from_correlators(Scenario::binary(&[2, 2]), &terms, 2.0, BoundKind::Lhv)
        .expect("static inequality")
}

/// Three-party broadcast inequality: Alice 3 settings, Bob and Charlie 2.
pub fn i3_broadcast() -> Inequality {
    let terms = [
        term(&[0, 0, 0], 1.0),
        term(&[0, 1, 1], 1.0),
        term(&[1, 1, 1], 1.0),
        term(&[1, 0, 0], -1.0),
        term(&[0, 0, 1], 1.0),
        term(&[0, 1, 0], 1.0),
        term(&[1, 0, 1], 1.0),
        term(&[1, 1, 0], -1.0),
        term(&[2, 0, -1], -2.0),
        term(&[2, 1, -1], 2.0),
    ];
    Inequality::from_correlators(
        Scenario::binary(&[3, 2, 2]),
        &terms,
        4.0,
        BoundKind::BroadcastLocal,
    )
    .expect("static inequality")
}

/// Symmetric four-party broadcast inequality, two settings per party.
pub fn i4_broadcast() -> Inequality {
    let terms = [
        term(&[0, 0, 0, 0], 1.0),
        term(&[0, 0, 1, 0], 1.0),
        term(&[0, 1, 0, 0], 1.0),
        term(&[0, 1, 1, 0], 1.0),
        term(&[1, 0, 0, 0], -1.0),
        term(&[1, 0, 1, 0], 1.0),
        term(&[1, 1, 0, 0], -1.0),
        term(&[1, 1, 1, 0], 1.0),
        term(&[-1, 0, -1, 1], -2.0),
        term(&[-1, 1, -1, 1], 2.0),
    ];
    Inequality::from_correlators(
        Scenario::binary(&[2, 2, 2, 2]),
        &terms,
        4.0,
        BoundKind::BroadcastLocal,
    )
    .expect("static inequality")
}

/// Four-party Klyshko–Belinskii coefficient 2^{−3/2} cos[π/4 (2|x| − 3)].
pub fn mabk4_coefficient(weight: usize) -> f64 {
    2f64.powf(-1.5) * (std::f64::consts::FRAC_PI_4 * (2.0 * weight as f64 - 3.0)).cos()
}

pub fn mabk4_terms() -> Vec<CorrelatorTerm> {
    tuples(&[2, 2, 2, 2])
        .map(|x| {
            let w = x.iter().sum();
            CorrelatorTerm::new(x.into_iter().map(Some).collect(), mabk4_coefficient(w))
        })
        .collect()
}

/// Biseparable (2-producible) bound √2; the LHV bound is 1.
pub fn mabk4(kind: BoundKind) -> Inequality {
    let bound = match kind {
        BoundKind::Lhv => 1.0,
        _ => std::f64::consts::SQRT_2,
    };
    Inequality::from_correlators(Scenario::binary(&[2, 2, 2, 2]), &mabk4_terms(), bound, kind)
        .expect("static inequality")
}

pub fn builtin_inequality(name: &str) -> Result<Inequality> {
    match name {
        "chsh" => Ok(chsh()),
        "i3_broadcast" => Ok(i3_broadcast()),
        "i4_broadcast" => Ok(i4_broadcast()),
        "mabk4" => Ok(mabk4(BoundKind::Biseparable)),
        "mabk4_lhv" => Ok(mabk4(BoundKind::Lhv)),
        other => Err(Error::UnknownName(other.to_string())),
    }
}

pub const BUILTIN_INEQUALITIES: &[&str] = &["chsh", "i3_broadcast", "i4_broadcast", "mabk4", "mabk4_lhv"];
