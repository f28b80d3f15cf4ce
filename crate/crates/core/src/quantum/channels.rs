use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::eig::{hermitian_eig, is_unitary_columns};
use super::matrix::{ComplexMatrix, C64, ZERO};
use super::ops::{embed, partial_trace, SubsystemShape};
use super::states::BellState;
use crate::error::{Error, Result};

const ISOMETRY_TOL: f64 = 1e-10;

/// Linear map V: C^{d_in} → ⊗ out_dims with V†V = I.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    matrix: ComplexMatrix,
    out_dims: Vec<usize>,
}

impl Isometry {
    pub fn new(matrix: ComplexMatrix, out_dims: Vec<usize>) -> Result<Self> {
        let out: usize = out_dims.iter().product();
        if out != matrix.rows() || out_dims.iter().any(|&d| d == 0) {
            return Err(Error::Dimension(format!(
                "output factors {out_dims:?} do not match {} rows",
                matrix.rows()
            )));
        }
        if matrix.rows() < matrix.cols() {
            return Err(Error::InvalidChannel("isometry needs d_out >= d_in".into()));
        }
        if !is_unitary_columns(&matrix, ISOMETRY_TOL) {
            return Err(Error::InvalidChannel("V†V differs from identity".into()));
        }
        Ok(Self { matrix, out_dims })
    }

    /// Single output factor of dimension `rows`.
    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        let rows = matrix.rows();
        Self::new(matrix, vec![rows])
    }

    pub fn identity(d: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(d),
            out_dims: vec![d],
        }
    }

    /// |00⟩⟨0| + |11⟩⟨1|
    pub fn copy() -> Self {
        let mut m = ComplexMatrix::zeros(4, 2);
        m[(0, 0)] = C64::new(1.0, 0.0);
        m[(3, 1)] = C64::new(1.0, 0.0);
        Self {
            matrix: m,
            out_dims: vec![2, 2],
        }
    }

    /// |ψ₀⟩⟨0| + |ψ₁⟩⟨1| with |ψ₀⟩ = sin β|Φ⁻⟩ + cos β|Ψ⁺⟩, |ψ₁⟩ = −cos β|Φ⁻⟩ + sin β|Ψ⁺⟩.
    pub fn broadcast_beta(beta: f64) -> Self {
        let (s, c) = beta.sin_cos();
        let phi_m = BellState::PhiMinus.vector();
        let psi_p = BellState::PsiPlus.vector();
        let mut m = ComplexMatrix::zeros(4, 2);
        for r in 0..4 {
            m[(r, 0)] = phi_m.amplitudes()[r] * s + psi_p.amplitudes()[r] * c;
            m[(r, 1)] = phi_m.amplitudes()[r] * (-c) + psi_p.amplitudes()[r] * s;
        }
        Self {
            matrix: m,
            out_dims: vec![2, 2],
        }
    }

    /// Q factor (positive-diagonal R) of a complex Gaussian matrix.
    pub fn random<R: Rng + ?Sized>(d_in: usize, out_dims: Vec<usize>, rng: &mut R) -> Self {
        let d_out: usize = out_dims.iter().product();
        let g = random_gaussian(d_out, d_in, rng);
        Self {
            matrix: gram_schmidt(&g),
            out_dims,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn d_in(&self) -> usize {
        self.matrix.cols()
    }

    pub fn d_out(&self) -> usize {
        self.matrix.rows()
    }

    /// ‖V†V − I‖ entrywise maximum.
    pub fn defect(&self) -> f64 {
        self.matrix
            .adjoint()
            .matmul(&self.matrix)
            .max_abs_diff(&ComplexMatrix::identity(self.d_in()))
    }
}

pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Modified Gram–Schmidt on the columns; equals the Q of a QR with positive diagonal R.
fn gram_schmidt(m: &ComplexMatrix) -> ComplexMatrix {
    let (rows, cols) = (m.rows(), m.cols());
    let mut q = m.clone();
    for j in 0..cols {
        for k in 0..j {
            let mut dot = ZERO;
            for r in 0..rows {
                dot += q[(r, k)].conj() * q[(r, j)];
            }
            for r in 0..rows {
                let qk = q[(r, k)];
                q[(r, j)] -= qk * dot;
            }
        }
        let norm = (0..rows).map(|r| q[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        for r in 0..rows {
            q[(r, j)] /= norm;
        }
    }
    q
}

/// (1 ⊗ V) ρ (1 ⊗ V)† with V acting on factor `on`.
pub fn apply_isometry(
    rho: &ComplexMatrix,
    shape: &SubsystemShape,
    on: usize,
    v: &Isometry,
) -> Result<ComplexMatrix> {
    check_target(rho, shape, on, v.d_in())?;
    let w = embed(v.matrix(), shape, on);
    Ok(w.matmul(rho).matmul(&w.adjoint()))
}

fn check_target(rho: &ComplexMatrix, shape: &SubsystemShape, on: usize, d_in: usize) -> Result<()> {
    if on >= shape.len() {
        return Err(Error::Dimension(format!("factor {on} out of range")));
    }
    if shape.dims()[on] != d_in {
        return Err(Error::Dimension(format!(
            "channel input {d_in} does not match factor dimension {}",
            shape.dims()[on]
        )));
    }
    if rho.rows() != shape.total() || rho.cols() != shape.total() {
        return Err(Error::Dimension("state does not match shape".into()));
    }
    Ok(())
}

/// Choi matrix Σ_ij |i⟩⟨j| ⊗ Ω(|i⟩⟨j|), input factor first.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    matrix: ComplexMatrix,
    d_in: usize,
    d_out: usize,
}

impl ChoiMatrix {
    pub fn new(matrix: ComplexMatrix, d_in: usize, d_out: usize) -> Result<Self> {
        let n = d_in * d_out;
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::Dimension(format!("choi matrix must be {n}x{n}")));
        }
        let eig = hermitian_eig(&matrix)
            .map_err(|_| Error::InvalidChannel("choi matrix is not Hermitian".into()))?;
        if eig.min() < -1e-10 {
            return Err(Error::InvalidChannel(format!(
                "choi matrix has eigenvalue {:.3e}",
                eig.min()
            )));
        }
        let shape = SubsystemShape::new(vec![d_in, d_out])?;
        let marginal = partial_trace(&matrix, &shape, &[0])?;
        let err = marginal.max_abs_diff(&ComplexMatrix::identity(d_in));
        if err > 1e-10 {
            return Err(Error::InvalidChannel(format!(
                "output partial trace differs from identity by {err:.3e}"
            )));
        }
        Ok(Self { matrix, d_in, d_out })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    /// Ω(|i⟩⟨j|) as the (i, j) block.
    fn block(&self, i: usize, j: usize) -> ComplexMatrix {
        let d = self.d_out;
        ComplexMatrix::from_fn(d, d, |r, c| self.matrix[(i * d + r, j * d + c)])
    }

    /// Ω(σ) = Tr₁(ρ_Ω (σᵀ ⊗ 1)).
    pub fn apply_local(&self, sigma: &ComplexMatrix) -> Result<ComplexMatrix> {
        if sigma.rows() != self.d_in || sigma.cols() != self.d_in {
            return Err(Error::Dimension("input does not match channel".into()));
        }
        let full = self
            .matrix
            .matmul(&sigma.transpose().kron(&ComplexMatrix::identity(self.d_out)));
        partial_trace(&full, &SubsystemShape::new(vec![self.d_in, self.d_out])?, &[1])
    }
}

pub fn choi_of_isometry(v: &Isometry) -> ChoiMatrix {
    let (d_in, d_out) = (v.d_in(), v.d_out());
    let n = d_in * d_out;
    let m = v.matrix();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..d_in {
        for j in 0..d_in {
            for r in 0..d_out {
                for c in 0..d_out {
                    out[(i * d_out + r, j * d_out + c)] = m[(r, i)] * m[(c, j)].conj();
                }
            }
        }
    }
    ChoiMatrix {
        matrix: out,
        d_in,
        d_out,
    }
}

/// (1 ⊗ Ω ⊗ 1)(ρ) with the channel given by its Choi matrix.
pub fn apply_choi(
    rho: &ComplexMatrix,
    shape: &SubsystemShape,
    on: usize,
    c: &ChoiMatrix,
) -> Result<ComplexMatrix> {
    check_target(rho, shape, on, c.d_in)?;
    let (left, d_in, right) = shape.split_at(on);
    let d_out = c.d_out;
    let blocks: Vec<Vec<ComplexMatrix>> = (0..d_in)
        .map(|i| (0..d_in).map(|j| c.block(i, j)).collect())
        .collect();
    let n_out = left * d_out * right;
    let mut out = ComplexMatrix::zeros(n_out, n_out);
    let src = |l: usize, i: usize, r: usize| (l * d_in + i) * right + r;
    let dst = |l: usize, o: usize, r: usize| (l * d_out + o) * right + r;
    for l in 0..left {
        for r in 0..right {
            for l2 in 0..left {
                for r2 in 0..right {
                    for (i, row) in blocks.iter().enumerate() {
                        for (j, omega) in row.iter().enumerate() {
                            let x = rho[(src(l, i, r), src(l2, j, r2))];
                            if x == ZERO {
                                continue;
                            }
                            for o in 0..d_out {
                                for o2 in 0..d_out {
                                    out[(dst(l, o, r), dst(l2, o2, r2))] += x * omega[(o, o2)];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::states::{ghz, isotropic};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn copy_maps_basis() {
        let v = Isometry::copy();
        let zero = ComplexMatrix::from_real(2, 1, &[1.0, 0.0]);
        let out = v.matrix().matmul(&zero);
        assert_eq!(out, ComplexMatrix::from_real(4, 1, &[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn broadcast_beta_is_isometry() {
        let v = Isometry::broadcast_beta(PI / 8.0);
        assert!(v.defect() < 1e-12);
        let (s, c) = (PI / 8.0).sin_cos();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [s * h, c * h, c * h, -s * h];
        for (r, e) in expect.iter().enumerate() {
            assert!((v.matrix()[(r, 0)].re - e).abs() < 1e-15);
        }
    }

    #[test]
    fn copy_on_phi_plus_gives_ghz3() {
        let rho = isotropic(1.0).unwrap();
        let out = apply_isometry(&rho, &SubsystemShape::qubits(2), 1, &Isometry::copy()).unwrap();
        assert!(out.max_abs_diff(&ghz(3).unwrap().projector()) < 1e-15);
    }

    #[test]
    fn identity_channel_choi() {
        let c = choi_of_isometry(&Isometry::identity(2));
        let phi = BellState::PhiPlus.vector().projector().scale_real(2.0);
        assert!(c.matrix().max_abs_diff(&phi) < 1e-15);
        let copy = choi_of_isometry(&Isometry::copy());
        let m = partial_trace(copy.matrix(), &SubsystemShape::new(vec![2, 4]).unwrap(), &[0]).unwrap();
        assert!(m.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn invalid_choi_rejected() {
        let bad = ComplexMatrix::identity(8);
        assert!(matches!(ChoiMatrix::new(bad, 2, 4), Err(Error::InvalidChannel(_))));
    }

    #[test]
    fn dimension_mismatch() {
        let rho = isotropic(0.5).unwrap();
        let v = Isometry::broadcast_beta(0.3);
        let three = Isometry::from_matrix(ComplexMatrix::identity(3)).unwrap();
        assert!(apply_isometry(&rho, &SubsystemShape::qubits(2), 1, &three).is_err());
        assert!(apply_isometry(&rho, &SubsystemShape::qubits(2), 2, &v).is_err());
    }

    #[test]
    fn random_isometry_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let v = Isometry::random(2, vec![2, 2], &mut rng);
            assert!(v.defect() < 1e-12);
        }
    }

    #[test]
    fn choi_apply_local_matches() {
        let v = Isometry::broadcast_beta(0.4);
        let c = choi_of_isometry(&v);
        let sigma = ComplexMatrix::from_real(2, 2, &[0.7, 0.2, 0.2, 0.3]);
        let direct = v.matrix().matmul(&sigma).matmul(&v.matrix().adjoint());
        assert!(c.apply_local(&sigma).unwrap().max_abs_diff(&direct) < 1e-14);
    }
}
