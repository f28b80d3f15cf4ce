use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use super::behaviour::{Behaviour, Scenario};
use crate::error::{Error, Result};
use crate::quantum::{
    apply_isometry, bloch_observable, hermitian_eig, isotropic, pauli_x, pauli_y, pauli_z,
    random_gaussian, sign_operator, BellState, ComplexMatrix, Isometry, SubsystemShape, C64,
};
use rand::Rng;

const POVM_TOL: f64 = 1e-10;

/// One party's measurements: per setting, the list of POVM elements.
pub type PartyMeasurements = Vec<Vec<ComplexMatrix>>;

/// Isometry applied to one factor of the source state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub on: usize,
    #[serde(flatten)]
    pub isometry: Isometry,
}

/// Source state, broadcasting channels and local measurements.
///
/// Channels act on factors of the source; after broadcasting, factor `k` is
/// replaced by the channel's output factors, which become consecutive parties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumStrategy {
    pub state: ComplexMatrix,
    pub shape: SubsystemShape,
    pub channels: Vec<Channel>,
    pub measurements: Vec<PartyMeasurements>,
}

/// (I ± A)/2
pub fn dichotomic(observable: &ComplexMatrix) -> Vec<ComplexMatrix> {
    let id = ComplexMatrix::identity(observable.rows());
    vec![
        (&id + observable).scale_real(0.5),
        (&id - observable).scale_real(0.5),
    ]
}

impl QuantumStrategy {
    pub fn new(
        state: ComplexMatrix,
        shape: SubsystemShape,
        channels: Vec<Channel>,
        measurements: Vec<PartyMeasurements>,
    ) -> Result<Self> {
        let s = Self {
            state,
            shape,
            channels,
            measurements,
        };
        s.validate()?;
        Ok(s)
    }

    /// Same channels and measurements on a different source state.
    pub fn with_state(&self, state: ComplexMatrix) -> Result<Self> {
        if state.rows() != self.shape.total() || state.cols() != self.shape.total() {
            return Err(Error::Dimension("replacement state has the wrong size".into()));
        }
        Ok(Self {
            state,
            ..self.clone()
        })
    }

    /// Local dimensions after broadcasting.
    pub fn final_shape(&self) -> Result<SubsystemShape> {
        let mut shape = self.shape.clone();
        for ch in self.sorted_channels()? {
            shape = shape.replace(ch.on, ch.isometry.out_dims());
        }
        Ok(shape)
    }

    fn sorted_channels(&self) -> Result<Vec<&Channel>> {
        let mut chans: Vec<&Channel> = self.channels.iter().collect();
        chans.sort_by(|a, b| b.on.cmp(&a.on));
        for w in chans.windows(2) {
            if w[0].on == w[1].on {
                return Err(Error::InvalidChannel(format!(
                    "two channels on factor {}",
                    w[0].on
                )));
            }
        }
        for ch in &chans {
            if ch.on >= self.shape.len() {
                return Err(Error::Dimension(format!("channel on missing factor {}", ch.on)));
            }
            if self.shape.dims()[ch.on] != ch.isometry.d_in() {
                return Err(Error::Dimension(format!(
                    "channel on factor {} expects input {}",
                    ch.on,
                    ch.isometry.d_in()
                )));
            }
        }
        Ok(chans)
    }

    /// State shared by the parties after all channels act.
    pub fn broadcast_state(&self) -> Result<(ComplexMatrix, SubsystemShape)> {
        let mut rho = self.state.clone();
        let mut shape = self.shape.clone();
        for ch in self.sorted_channels()? {
            rho = apply_isometry(&rho, &shape, ch.on, &ch.isometry)?;
            shape = shape.replace(ch.on, ch.isometry.out_dims());
        }
        Ok((rho, shape))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.shape.total();
        if self.state.rows() != n || self.state.cols() != n {
            return Err(Error::Dimension(format!(
                "state is {}x{}, shape needs {n}",
                self.state.rows(),
                self.state.cols()
            )));
        }
        let fshape = self.final_shape()?;
        if fshape.len() != self.measurements.len() {
            return Err(Error::Dimension(format!(
                "{} parties after broadcasting but measurements for {}",
                fshape.len(),
                self.measurements.len()
            )));
        }
        for (k, party) in self.measurements.iter().enumerate() {
            let d = fshape.dims()[k];
            if party.is_empty() {
                return Err(Error::InvalidMeasurement {
                    path: format!("measurements[{k}]"),
                    reason: "no settings".into(),
                });
            }
            for (x, povm) in party.iter().enumerate() {
                validate_povm(povm, d, &format!("measurements[{k}][{x}]"))?;
            }
        }
        Ok(())
    }

    /// Scenario implied by the measurement structure.
    pub fn scenario(&self) -> Result<Scenario> {
        let inputs = self.measurements.iter().map(|p| p.len()).collect();
        let mut outputs = Vec::new();
        for (k, party) in self.measurements.iter().enumerate() {
            let o = party[0].len();
            if party.iter().any(|povm| povm.len() != o) {
                return Err(Error::InvalidMeasurement {
                    path: format!("measurements[{k}]"),
                    reason: "settings have different outcome counts".into(),
                });
            }
            outputs.push(o);
        }
        Scenario::new(inputs, outputs)
    }

    /// Dichotomic strategy from observables, one list per party.
    pub fn from_observables(
        state: ComplexMatrix,
        shape: SubsystemShape,
        channels: Vec<Channel>,
        observables: &[Vec<ComplexMatrix>],
    ) -> Result<Self> {
        let measurements = observables
            .iter()
            .map(|party| party.iter().map(dichotomic).collect())
            .collect();
        Self::new(state, shape, channels, measurements)
    }
}

/// sign(H) for a GUE-distributed H: a random ±1-valued observable.
pub fn random_observable<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = random_gaussian(d, d, rng);
    let h = (&g + &g.adjoint()).scale_real(0.5);
    sign_operator(&h).expect("Hermitian by construction")
}

impl QuantumStrategy {
    /// Random dichotomic measurements for the given channels, `inputs[k]`
    /// settings for party k after broadcasting.
    pub fn random_dichotomic<R: Rng + ?Sized>(
        state: ComplexMatrix,
        shape: SubsystemShape,
        channels: Vec<Channel>,
        inputs: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        let probe = Self {
            state,
            shape,
            channels,
            measurements: Vec::new(),
        };
        let fin = probe.final_shape()?;
        if fin.len() != inputs.len() {
            return Err(Error::Dimension(format!(
                "{} parties after broadcasting, {} input counts",
                fin.len(),
                inputs.len()
            )));
        }
        let observables: Vec<Vec<ComplexMatrix>> = fin
            .dims()
            .iter()
            .zip(inputs)
            .map(|(&d, &m)| (0..m).map(|_| random_observable(d, rng)).collect())
            .collect();
        Self::from_observables(probe.state, probe.shape, probe.channels, &observables)
    }
}

fn validate_povm(povm: &[ComplexMatrix], d: usize, path: &str) -> Result<()> {
    if povm.is_empty() {
        return Err(Error::InvalidMeasurement {
            path: path.into(),
            reason: "no outcomes".into(),
        });
    }
    let mut total = ComplexMatrix::zeros(d, d);
    for (a, el) in povm.iter().enumerate() {
        let here = format!("{path}[{a}]");
        if el.rows() != d || el.cols() != d {
            return Err(Error::InvalidMeasurement {
                path: here,
                reason: format!("element is {}x{}, party dimension is {d}", el.rows(), el.cols()),
            });
        }
        if !el.is_hermitian(POVM_TOL) {
            return Err(Error::InvalidMeasurement {
                path: here,
                reason: "element is not Hermitian".into(),
            });
        }
        let min = hermitian_eig(el)
            .map_err(|e| Error::InvalidMeasurement {
                path: here.clone(),
                reason: e.to_string(),
            })?
            .min();
        if min < -POVM_TOL {
            return Err(Error::InvalidMeasurement {
                path: here,
                reason: format!("element is not PSD (eigenvalue {min:.3e})"),
            });
        }
        total = &total + el;
    }
    let err = total.max_abs_diff(&ComplexMatrix::identity(d));
    if err > POVM_TOL {
        return Err(Error::InvalidMeasurement {
            path: path.into(),
            reason: format!("elements sum to identity only within {err:.3e}"),
        });
    }
    Ok(())
}

/// Tr₁[(op ⊗ I) r] for r on C^d ⊗ C^rest.
fn reduce_first(r: &[C64], d: usize, rest: usize, op: &ComplexMatrix) -> Vec<C64> {
    let n = d * rest;
    let mut out = vec![C64::new(0.0, 0.0); rest * rest];
    for a in 0..d {
        for b in 0..d {
            let w = op[(a, b)];
            if w.re == 0.0 && w.im == 0.0 {
                continue;
            }
            for i in 0..rest {
                let row = &r[(b * rest + i) * n + a * rest..(b * rest + i) * n + a * rest + rest];
                let o = &mut out[i * rest..(i + 1) * rest];
                for (oj, &rj) in o.iter_mut().zip(row) {
                    *oj += w * rj;
                }
            }
        }
    }
    out
}

/// p(a|x) = Tr(⊗ M_{a_k|x_k} ρ) on the broadcast state.
pub fn behaviour_from_strategy(s: &QuantumStrategy, scen: &Scenario) -> Result<Behaviour> {
    s.validate()?;
    let own = s.scenario()?;
    if &own != scen {
        return Err(Error::ScenarioMismatch(format!(
            "strategy has inputs {:?} outputs {:?}, scenario has {:?} {:?}",
            own.inputs(),
            own.outputs(),
            scen.inputs(),
            scen.outputs()
        )));
    }
    let (rho, shape) = s.broadcast_state()?;
    let mut table = vec![0.0; scen.table_len()];
    let mut xs = vec![0; scen.parties()];
    let mut as_ = vec![0; scen.parties()];
    fill(
        &s.measurements,
        shape.dims(),
        scen,
        0,
        rho.as_slice(),
        &mut xs,
        &mut as_,
        &mut table,
    );
    for p in &mut table {
        if p.abs() < 1e-15 {
            *p = p.abs();
        }
    }
    Ok(Behaviour::new_unchecked(scen.clone(), table))
}

#[allow(clippy::too_many_arguments)]
fn fill(
    meas: &[PartyMeasurements],
    dims: &[usize],
    scen: &Scenario,
    k: usize,
    r: &[C64],
    xs: &mut Vec<usize>,
    as_: &mut Vec<usize>,
    table: &mut [f64],
) {
    if k == dims.len() {
        table[scen.index(as_, xs)] = r[0].re;
        return;
    }
    let d = dims[k];
    let rest: usize = dims[k + 1..].iter().product();
    for (x, povm) in meas[k].iter().enumerate() {
        xs[k] = x;
        for (a, el) in povm.iter().enumerate() {
            as_[k] = a;
            let reduced = reduce_first(r, d, rest, el);
            fill(meas, dims, scen, k + 1, &reduced, xs, as_, table);
        }
    }
}

fn observable_xy(phi: f64) -> ComplexMatrix {
    bloch_observable(phi.cos(), phi.sin(), 0.0)
}

/// |Φ⁺⟩ with A = σ_z, σ_x and B = (σ_z ± σ_x)/√2.
pub fn chsh_textbook() -> QuantumStrategy {
    let h = FRAC_1_SQRT_2;
    QuantumStrategy::from_observables(
        BellState::PhiPlus.vector().projector(),
        SubsystemShape::qubits(2),
        vec![],
        &[
            vec![pauli_z(), pauli_x()],
            vec![bloch_observable(h, 0.0, h), bloch_observable(-h, 0.0, h)],
        ],
    )
    .expect("static strategy")
}

/// Three-party strategy for the I₃ inequality on the isotropic family.
pub fn i3_paper() -> QuantumStrategy {
    let phi = (1.0 / 2f64.sqrt()).atan();
    QuantumStrategy::from_observables(
        isotropic(1.0).expect("valid alpha"),
        SubsystemShape::qubits(2),
        vec![Channel {
            on: 1,
            isometry: Isometry::broadcast_beta(PI / 8.0),
        }],
        &[
            vec![pauli_z(), pauli_x(), pauli_y()],
            vec![
                bloch_observable(phi.cos(), phi.sin(), 0.0),
                bloch_observable(phi.cos(), -phi.sin(), 0.0),
            ],
            vec![pauli_z(), pauli_x()],
        ],
    )
    .expect("static strategy")
}

/// Symmetric four-party strategy: the same broadcasting isometry on both halves.
pub fn i4_paper() -> QuantumStrategy {
    let r = 1.0 / 3f64.sqrt();
    let u = Isometry::broadcast_beta(PI / 8.0);
    QuantumStrategy::from_observables(
        isotropic(1.0).expect("valid alpha"),
        SubsystemShape::qubits(2),
        vec![
            Channel {
                on: 0,
                isometry: u.clone(),
            },
            Channel { on: 1, isometry: u },
        ],
        &[
            vec![pauli_x(), pauli_z()],
            vec![bloch_observable(r, r, r), bloch_observable(r, -r, r)],
            vec![pauli_x(), pauli_z()],
            vec![pauli_x(), pauli_y()],
        ],
    )
    .expect("static strategy")
}

/// Default per-party angle offset for the GHZ strategy: φ_k(x) = x·π/2 − 3π/16.
pub const MABK_DEFAULT_OFFSET: f64 = -3.0 * PI / 16.0;

/// Copy isometries on both halves and x–y plane observables at φ_k(x) = x·π/2 + offsets[k].
pub fn mabk_ghz(offsets: [f64; 4]) -> QuantumStrategy {
    let observables: Vec<Vec<ComplexMatrix>> = offsets
        .iter()
        .map(|&o| (0..2).map(|x| observable_xy(x as f64 * PI / 2.0 + o)).collect())
        .collect();
    QuantumStrategy::from_observables(
        isotropic(1.0).expect("valid alpha"),
        SubsystemShape::qubits(2),
        vec![
            Channel {
                on: 0,
                isometry: Isometry::copy(),
            },
            Channel {
                on: 1,
                isometry: Isometry::copy(),
            },
        ],
        &observables,
    )
    .expect("static strategy")
}

pub fn analytic_strategy(name: &str) -> Result<QuantumStrategy> {
    match name {
        "chsh" => Ok(chsh_textbook()),
        "i3_paper" => Ok(i3_paper()),
        "i4_paper" => Ok(i4_paper()),
        "mabk_ghz" => Ok(mabk_ghz([MABK_DEFAULT_OFFSET; 4])),
        other => Err(Error::UnknownName(other.to_string())),
    }
}

pub const ANALYTIC_STRATEGIES: &[&str] = &["chsh", "i3_paper", "i4_paper", "mabk_ghz"];
