use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Leading columns of an LP whose entries factor over blocks: column
/// (v₀, …, v_{k−1}) (first index most significant) has entry
/// Π_b factors[b][v_b][rows[i][b]] in row i. The solver uses this to price all
/// columns with a few small tensor contractions instead of a pass over the matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductColumns {
    pub factors: Vec<Vec<Vec<f64>>>,
    pub rows: Vec<Vec<usize>>,
}

impl ProductColumns {
    pub fn cols(&self) -> usize {
        self.factors.iter().map(Vec::len).product()
    }

    fn dims(&self) -> Vec<usize> {
        self.factors
            .iter()
            .map(|f| f.first().map_or(0, Vec::len))
            .collect()
    }

    pub fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        let bad = |w: &str| Err(Error::Lp(format!("invalid product columns: {w}")));
        if self.rows.len() != rows || self.cols() > cols {
            return bad("size");
        }
        let dims = self.dims();
        if self.factors.iter().zip(&dims).any(|(f, &d)| f.iter().any(|v| v.len() != d)) {
            return bad("ragged factor");
        }
        let cells: usize = dims.iter().product();
        let mut seen = vec![false; cells];
        for r in &self.rows {
            if r.len() != dims.len() || r.iter().zip(&dims).any(|(i, d)| i >= d) {
                return bad("row index");
            }
            let c = r.iter().zip(&dims).fold(0, |acc, (i, d)| acc * d + i);
            if std::mem::replace(&mut seen[c], true) {
                return bad("repeated row");
            }
        }
        Ok(())
    }

    /// Entry of product column j in row i.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let mut rem = j;
        let mut v = 1.0;
        for b in (0..self.factors.len()).rev() {
            let n = self.factors[b].len();
            v *= self.factors[b][rem % n][self.rows[i][b]];
            rem /= n;
        }
        v
    }

    /// yᵀ A_j for every product column, written to `out`.
    pub fn row_pass(&self, y: &[f64], out: &mut [f64]) {
        let dims = self.dims();
        let mut shape = dims.clone();
        let mut t = vec![0.0; dims.iter().product()];
        for (yi, r) in y.iter().zip(&self.rows) {
            let c = r.iter().zip(&dims).fold(0, |acc, (i, d)| acc * d + i);
            t[c] += yi;
        }
        for b in 0..self.factors.len() {
            let pre: usize = shape[..b].iter().product();
            let post: usize = shape[b + 1..].iter().product();
            let d = shape[b];
            let f = &self.factors[b];
            let mut next = vec![0.0; pre * f.len() * post];
            if post == 1 {
                // out[p, :] = Σ_s t[p, s]·f[:, s], contiguous over the output index.
                let n = f.len();
                let mut ft = vec![0.0; d * n];
                for (v, fv) in f.iter().enumerate() {
                    for (s, &c) in fv.iter().enumerate() {
                        ft[s * n + v] = c;
                    }
                }
                for (p, dst) in next.chunks_exact_mut(n).enumerate() {
                    for (s, &x) in t[p * d..(p + 1) * d].iter().enumerate() {
                        if x != 0.0 {
                            for (o, c) in dst.iter_mut().zip(&ft[s * n..(s + 1) * n]) {
                                *o += x * c;
                            }
                        }
                    }
                }
            } else {
                for p in 0..pre {
                    for (v, fv) in f.iter().enumerate() {
                        let dst = &mut next[(p * f.len() + v) * post..(p * f.len() + v + 1) * post];
                        for (s, &c) in fv.iter().enumerate() {
                            if c != 0.0 {
                                let src = &t[(p * d + s) * post..(p * d + s + 1) * post];
                                for (o, x) in dst.iter_mut().zip(src) {
                                    *o += c * x;
                                }
                            }
                        }
                    }
                }
            }
            shape[b] = f.len();
            t = next;
        }
        out[..t.len()].copy_from_slice(&t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_pass_matches_dense() {
        let pc = ProductColumns {
            factors: vec![
                vec![vec![1.0, 0.5], vec![1.0, 0.0], vec![1.0, 1.0]],
                vec![vec![1.0, 0.0, 1.0], vec![1.0, 0.5, 0.5]],
            ],
            rows: (0..6).map(|c| vec![c / 3, c % 3]).rev().collect(),
        };
        pc.validate(6, 6).unwrap();
        let y = [0.3, -1.0, 2.0, 0.25, 0.0, -0.7];
        let mut out = vec![0.0; 6];
        pc.row_pass(&y, &mut out);
        for (j, o) in out.iter().enumerate() {
            let direct: f64 = (0..6).map(|i| y[i] * pc.entry(i, j)).sum();
            assert!((o - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_repeated_rows() {
        let pc = ProductColumns {
            factors: vec![vec![vec![1.0, 0.0]]],
            rows: vec![vec![0], vec![0]],
        };
        assert!(pc.validate(2, 1).is_err());
    }
}
