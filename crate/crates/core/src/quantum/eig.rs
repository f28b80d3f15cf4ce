//! Cyclic Jacobi eigensolver for small complex Hermitian matrices.

use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;
const OFF_DIAGONAL_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order with the matching eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    /// V f(Λ) V†
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, n, |r, c| {
            let mut acc = ZERO;
            for k in 0..n {
                acc += v[(r, k)] * v[(c, k)].conj() * fv[k];
            }
            acc
        })
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEig> {
    if !m.is_square() {
        return Err(Error::Dimension("eigendecomposition needs a square matrix".into()));
    }
    let scale = m.frobenius_norm().max(1.0);
    let defect = m.hermiticity_defect();
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(defect));
    }
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let threshold = OFF_DIAGONAL_TOL * scale;

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag = a.real_diagonal();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEig { values, vectors })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += a[(r, c)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Zeroes a[p][q] with U = diag-phase · real rotation; A ← U†AU, V ← VU.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau == 0.0 {
        1.0
    } else {
        tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let pc = phase.conj();
    let u_pp = C64::new(c, 0.0);
    let u_pq = C64::new(s, 0.0);
    let u_qp = pc * (-s);
    let u_qq = pc * c;

    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * u_pp + akq * u_qp;
        a[(k, q)] = akp * u_pq + akq * u_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eig(m)?.min())
}

/// sign(F) with sign(0) := +1.
pub fn sign_operator(f: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(f)?;
    let tol = 1e-14 * f.frobenius_norm().max(1e-300);
    Ok(eig.map(|x| if x < -tol { -1.0 } else { 1.0 }))
}

/// Closest isometry V (V†V)^{-1/2}; `m` must have full column rank.
pub fn polar_isometry(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let gram = m.adjoint().matmul(m);
    let eig = hermitian_eig(&gram)?;
    if eig.min() <= 1e-14 * eig.max().max(1.0) {
        return Err(Error::InvalidChannel("polar factor of a rank-deficient matrix".into()));
    }
    Ok(m.matmul(&eig.map(|x| 1.0 / x.sqrt())))
}

pub fn is_unitary_columns(v: &ComplexMatrix, tol: f64) -> bool {
    let g = v.adjoint().matmul(v);
    g.max_abs_diff(&ComplexMatrix::identity(v.cols())) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::matrix::pauli_x;

    fn reconstruct(e: &HermitianEig) -> ComplexMatrix {
        e.map(|x| x)
    }

    #[test]
    fn sigma_x_spectrum() {
        let e = hermitian_eig(&pauli_x()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15);
        assert!((e.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_sorted_with_permutation_vectors() {
        let e = hermitian_eig(&ComplexMatrix::diag_real(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(e.vectors[(1, 0)].norm(), 1.0);
        assert_eq!(e.vectors[(2, 1)].norm(), 1.0);
        assert_eq!(e.vectors[(0, 2)].norm(), 1.0);
    }

    #[test]
    fn complex_reconstruction() {
        let m = ComplexMatrix::from_fn(5, 5, |r, c| {
            let x = C64::new((r * 7 + c * 3) as f64 % 5.0 - 2.0, (r as f64 - c as f64) * 0.3);
            x
        });
        let h = &m + &m.adjoint();
        let e = hermitian_eig(&h).unwrap();
        assert!(reconstruct(&e).max_abs_diff(&h) < 1e-12);
        assert!(is_unitary_columns(&e.vectors, 1e-12));
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn sign_conventions() {
        let a = sign_operator(&ComplexMatrix::diag_real(&[2.0, -1.0])).unwrap();
        assert!(a.max_abs_diff(&ComplexMatrix::diag_real(&[1.0, -1.0])) < 1e-15);
        let z = sign_operator(&ComplexMatrix::zeros(2, 2)).unwrap();
        assert!(z.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn polar_of_scaled_isometry() {
        let m = ComplexMatrix::from_real(3, 2, &[2.0, 0.0, 0.0, 3.0, 0.0, 0.0]);
        let p = polar_isometry(&m).unwrap();
        assert!(is_unitary_columns(&p, 1e-14));
        assert!((p[(0, 0)].re - 1.0).abs() < 1e-14);
    }
}
