use crate::error::{Error, Result};
use crate::quantum::{hermitian_eig, pauli_x, pauli_y, pauli_z, tensor, ComplexMatrix};

/// Correlation matrix T_ij = Tr[ρ σ_i ⊗ σ_j] of a two-qubit state.
pub fn correlation_matrix(rho: &ComplexMatrix) -> Result<[[f64; 3]; 3]> {
    if rho.rows() != 4 || !rho.is_square() {
        return Err(Error::Dimension("expected a two-qubit density matrix".into()));
    }
    let paulis = [pauli_x(), pauli_y(), pauli_z()];
    let mut t = [[0.0; 3]; 3];
    for (i, si) in paulis.iter().enumerate() {
        for (j, sj) in paulis.iter().enumerate() {
            t[i][j] = rho.trace_product(&tensor(si, sj)).re;
        }
    }
    Ok(t)
}

/// Maximal CHSH value over projective measurements: 2√(t₁ + t₂), with t₁ ≥ t₂ the
/// two largest eigenvalues of TᵀT.
pub fn horodecki_chsh_max(rho: &ComplexMatrix) -> Result<f64> {
    let t = correlation_matrix(rho)?;
    let mut m = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            m[i * 3 + j] = (0..3).map(|k| t[k][i] * t[k][j]).sum();
        }
    }
    let e = hermitian_eig(&ComplexMatrix::from_real(3, 3, &m))?;
    Ok(2.0 * (e.values[1] + e.values[2]).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::rho_alpha_theta;

    #[test]
    fn matches_closed_form_for_alpha_theta_family() {
        for &(alpha, theta) in &[(1.0, 0.3), (0.7, 0.1), (0.5, std::f64::consts::FRAC_PI_4), (0.0, 0.5)] {
            let rho = rho_alpha_theta(alpha, theta).unwrap();
            let want = 2.0 * alpha * (1.0 + (2.0 * theta).sin().powi(2)).sqrt();
            let want = want.max(0.0);
            assert!((horodecki_chsh_max(&rho).unwrap() - want).abs() < 1e-9, "{alpha} {theta}");
        }
    }

    #[test]
    fn rejects_wrong_dimension() {
        assert!(horodecki_chsh_max(&ComplexMatrix::identity(2)).is_err());
    }
}
