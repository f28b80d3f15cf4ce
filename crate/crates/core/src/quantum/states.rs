use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, StateVector, C64, ZERO};
use super::ops::{partial_trace, SubsystemShape};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub fn vector(self) -> StateVector {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let a = match self {
            Self::PhiPlus => vec![h, ZERO, ZERO, h],
            Self::PhiMinus => vec![h, ZERO, ZERO, -h],
            Self::PsiPlus => vec![ZERO, h, h, ZERO],
            Self::PsiMinus => vec![ZERO, h, -h, ZERO],
        };
        StateVector::new(a).expect("bell states are normalized")
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "phi_plus" | "phi+" => Ok(Self::PhiPlus),
            "phi_minus" | "phi-" => Ok(Self::PhiMinus),
            "psi_plus" | "psi+" => Ok(Self::PsiPlus),
            "psi_minus" | "psi-" => Ok(Self::PsiMinus),
            other => Err(Error::UnknownName(other.to_string())),
        }
    }
}

/// Density-matrix constructors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateKind {
    /// α|Φ⁺⟩⟨Φ⁺| + (1−α)·I/4
    Isotropic { alpha: f64 },
    /// α|ψ_θ⟩⟨ψ_θ| + (1−α)·ρ_A ⊗ I/2 with |ψ_θ⟩ = cos θ|00⟩ + sin θ|11⟩
    RhoAlphaTheta { alpha: f64, theta: f64 },
    Bell { which: BellState },
    /// (|0…0⟩ + |1…1⟩)/√2 on n qubits
    Ghz { n: usize },
}

impl StateKind {
    pub fn shape(&self) -> SubsystemShape {
        match self {
            Self::Ghz { n } => SubsystemShape::qubits(*n),
            _ => SubsystemShape::qubits(2),
        }
    }

    /// The entangled and noise endpoints of a linear family, where one exists.
    pub fn family_endpoints(&self) -> Option<(StateKind, StateKind)> {
        match *self {
            Self::Isotropic { .. } => Some((
                Self::Isotropic { alpha: 1.0 },
                Self::Isotropic { alpha: 0.0 },
            )),
            Self::RhoAlphaTheta { theta, .. } => Some((
                Self::RhoAlphaTheta { alpha: 1.0, theta },
                Self::RhoAlphaTheta { alpha: 0.0, theta },
            )),
            _ => None,
        }
    }
}

pub fn make_state(kind: &StateKind) -> Result<ComplexMatrix> {
    match *kind {
        StateKind::Isotropic { alpha } => isotropic(alpha),
        StateKind::RhoAlphaTheta { alpha, theta } => rho_alpha_theta(alpha, theta),
        StateKind::Bell { which } => Ok(which.vector().projector()),
        StateKind::Ghz { n } => ghz(n).map(|v| v.projector()),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter(format!("alpha = {alpha} outside [0, 1]")));
    }
    Ok(())
}

/// Hermitian, unit trace and positive semidefinite, each within 1e-10.
pub fn validate_density(rho: &ComplexMatrix) -> Result<()> {
    const TOL: f64 = 1e-10;
    if !rho.is_square() {
        return Err(Error::Dimension("density matrix must be square".into()));
    }
    let h = rho.hermiticity_defect();
    if h > TOL {
        return Err(Error::NotHermitian(h));
    }
    let t = rho.trace().re;
    if (t - 1.0).abs() > TOL {
        return Err(Error::Parameter(format!("trace {t} differs from 1")));
    }
    let min = super::eig::min_eigenvalue(rho)?;
    if min < -TOL {
        return Err(Error::Parameter(format!("negative eigenvalue {min:.3e}")));
    }
    Ok(())
}

pub fn isotropic(alpha: f64) -> Result<ComplexMatrix> {
    check_alpha(alpha)?;
    let mut rho = BellState::PhiPlus.vector().projector().scale_real(alpha);
    rho.add_scaled(&ComplexMatrix::identity(4), C64::new((1.0 - alpha) / 4.0, 0.0));
    Ok(rho)
}

pub fn psi_theta(theta: f64) -> StateVector {
    let (s, c) = theta.sin_cos();
    StateVector::normalized(vec![C64::new(c, 0.0), ZERO, ZERO, C64::new(s, 0.0)])
        .expect("nonzero amplitudes")
}

pub fn rho_alpha_theta(alpha: f64, theta: f64) -> Result<ComplexMatrix> {
    check_alpha(alpha)?;
    if !(0.0..=FRAC_PI_4 + 1e-15).contains(&theta) {
        return Err(Error::Parameter(format!("theta = {theta} outside [0, pi/4]")));
    }
    let psi = psi_theta(theta).projector();
    let rho_a = partial_trace(&psi, &SubsystemShape::qubits(2), &[0])?;
    let noise = rho_a.kron(&ComplexMatrix::identity(2).scale_real(0.5));
    let mut rho = psi.scale_real(alpha);
    rho.add_scaled(&noise, C64::new(1.0 - alpha, 0.0));
    Ok(rho)
}

pub fn ghz(n: usize) -> Result<StateVector> {
    if n == 0 || n > 10 {
        return Err(Error::Parameter(format!("ghz({n}): need 1 <= n <= 10")));
    }
    let dim = 1usize << n;
    let mut a = vec![ZERO; dim];
    a[0] = C64::new(FRAC_1_SQRT_2, 0.0);
    a[dim - 1] = C64::new(FRAC_1_SQRT_2, 0.0);
    StateVector::new(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::eig::min_eigenvalue;

    #[test]
    fn isotropic_limits() {
        let one = isotropic(1.0).unwrap();
        assert!(one.max_abs_diff(&BellState::PhiPlus.vector().projector()) < 1e-15);
        let zero = isotropic(0.0).unwrap();
        assert!(zero.max_abs_diff(&ComplexMatrix::identity(4).scale_real(0.25)) < 1e-15);
        assert!(isotropic(1.1).is_err());
    }

    #[test]
    fn rho_alpha_theta_at_quarter_pi_is_isotropic() {
        for &a in &[0.0, 0.3, 0.77, 1.0] {
            let r = rho_alpha_theta(a, FRAC_PI_4).unwrap();
            assert!(r.max_abs_diff(&isotropic(a).unwrap()) < 1e-15);
        }
        assert!(rho_alpha_theta(0.5, 1.0).is_err());
    }

    #[test]
    fn states_are_density_matrices() {
        let mut kinds = vec![StateKind::Ghz { n: 3 }, StateKind::Bell { which: BellState::PsiMinus }];
        for i in 0..=10 {
            let a = i as f64 / 10.0;
            kinds.push(StateKind::Isotropic { alpha: a });
            for j in 0..=8 {
                kinds.push(StateKind::RhoAlphaTheta { alpha: a, theta: FRAC_PI_4 * j as f64 / 8.0 });
            }
        }
        for k in kinds {
            let r = make_state(&k).unwrap();
            assert!(r.is_hermitian(1e-15));
            assert!((r.trace().re - 1.0).abs() < 1e-14);
            assert!(min_eigenvalue(&r).unwrap() >= -1e-12, "{k:?}");
        }
    }
}
