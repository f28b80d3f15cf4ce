use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, ZERO};
use crate::error::{Error, Result};

/// Local dimensions of a composite system, leftmost factor most significant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubsystemShape {
    dims: Vec<usize>,
}

impl SubsystemShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Dimension("subsystem dimensions must be >= 1".into()));
        }
        Ok(Self { dims })
    }

    pub fn qubits(n: usize) -> Self {
        Self { dims: vec![2; n] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Dimension of factors strictly left / right of `k`.
    pub fn split_at(&self, k: usize) -> (usize, usize, usize) {
        let left = self.dims[..k].iter().product();
        let right = self.dims[k + 1..].iter().product();
        (left, self.dims[k], right)
    }

    /// Shape after replacing factor `k` by the factors `with`.
    pub fn replace(&self, k: usize, with: &[usize]) -> Self {
        let mut dims = self.dims[..k].to_vec();
        dims.extend_from_slice(with);
        dims.extend_from_slice(&self.dims[k + 1..]);
        Self { dims }
    }

    fn check_square(&self, m: &ComplexMatrix) -> Result<()> {
        let n = self.total();
        if m.rows() != n || m.cols() != n {
            return Err(Error::Dimension(format!(
                "shape {:?} (total {n}) does not match a {}x{} matrix",
                self.dims,
                m.rows(),
                m.cols()
            )));
        }
        Ok(())
    }

    fn digits(&self, mut index: usize, out: &mut [usize]) {
        for k in (0..self.dims.len()).rev() {
            out[k] = index % self.dims[k];
            index /= self.dims[k];
        }
    }

    fn compose(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&d, &n)| acc * n + d)
    }
}

pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

pub fn tensor_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| acc.kron(f))
}

/// Reduced operator on the factors in `keep` (kept in ascending factor order).
pub fn partial_trace(
    m: &ComplexMatrix,
    shape: &SubsystemShape,
    keep: &[usize],
) -> Result<ComplexMatrix> {
    shape.check_square(m)?;
    let n = shape.len();
    let mut kept = vec![false; n];
    for &k in keep {
        if k >= n {
            return Err(Error::Dimension(format!("factor {k} out of range for {n}")));
        }
        kept[k] = true;
    }
    let kept_idx: Vec<usize> = (0..n).filter(|&k| kept[k]).collect();
    let traced_idx: Vec<usize> = (0..n).filter(|&k| !kept[k]).collect();
    let kept_shape = SubsystemShape {
        dims: kept_idx.iter().map(|&k| shape.dims[k]).collect(),
    };
    let traced_shape = SubsystemShape {
        dims: traced_idx.iter().map(|&k| shape.dims[k]).collect(),
    };
    let dk = kept_shape.total();
    let dt = traced_shape.total();

    let mut out = ComplexMatrix::zeros(dk, dk);
    let mut rd = vec![0; n];
    let mut cd = vec![0; n];
    let mut kr = vec![0; kept_idx.len()];
    let mut kc = vec![0; kept_idx.len()];
    let mut td = vec![0; traced_idx.len()];
    for r in 0..dk {
        kept_shape.digits(r, &mut kr);
        for c in 0..dk {
            kept_shape.digits(c, &mut kc);
            let mut acc = ZERO;
            for t in 0..dt {
                traced_shape.digits(t, &mut td);
                for (i, &k) in kept_idx.iter().enumerate() {
                    rd[k] = kr[i];
                    cd[k] = kc[i];
                }
                for (i, &k) in traced_idx.iter().enumerate() {
                    rd[k] = td[i];
                    cd[k] = td[i];
                }
                acc += m[(shape.compose(&rd), shape.compose(&cd))];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// Transpose applied to factor `on` only.
pub fn partial_transpose(
    m: &ComplexMatrix,
    shape: &SubsystemShape,
    on: usize,
) -> Result<ComplexMatrix> {
    shape.check_square(m)?;
    if on >= shape.len() {
        return Err(Error::Dimension(format!("factor {on} out of range")));
    }
    let n = shape.total();
    let mut out = ComplexMatrix::zeros(n, n);
    let mut rd = vec![0; shape.len()];
    let mut cd = vec![0; shape.len()];
    for r in 0..n {
        shape.digits(r, &mut rd);
        for c in 0..n {
            shape.digits(c, &mut cd);
            std::mem::swap(&mut rd[on], &mut cd[on]);
            out[(shape.compose(&rd), shape.compose(&cd))] = m[(r, c)];
            std::mem::swap(&mut rd[on], &mut cd[on]);
        }
    }
    Ok(out)
}

/// I_left ⊗ op ⊗ I_right, with `op` acting on factor `k` of `shape`.
pub fn embed(op: &ComplexMatrix, shape: &SubsystemShape, k: usize) -> ComplexMatrix {
    let (left, _, right) = shape.split_at(k);
    ComplexMatrix::identity(left)
        .kron(op)
        .kron(&ComplexMatrix::identity(right))
}
