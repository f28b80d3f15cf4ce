//! Vertex enumeration by trying every basis of tight inequalities.
//!
//! Slow and simple; kept as an independent check on the double description
//! result. Candidate bases are screened in floating point and every surviving
//! point is then recomputed and verified exactly.

use std::collections::{BTreeMap, BTreeSet};

use super::hrep::HRepresentation;
use super::rational::{dot, rref, to_f64, Rational};
use crate::error::{Error, Result};

const SCREEN_TOL: f64 = 1e-9;

pub(crate) fn brute_force_vertices(h: &HRepresentation, max_bases: usize) -> Result<Vec<Vec<Rational>>> {
    let Some(param) = h.affine_param() else {
        return Ok(vec![]);
    };
    let k = param.directions.len();
    let g: Vec<Vec<Rational>> = h
        .inequalities
        .iter()
        .map(|c| param.directions.iter().map(|d| dot(&c.row, d)).collect())
        .collect();
    let rhs: Vec<Rational> = h
        .inequalities
        .iter()
        .map(|c| &c.rhs - dot(&c.row, &param.point))
        .collect();
    if k == 0 {
        let ok = rhs.iter().all(|b| *b <= Rational::from_integer(0.into()));
        return Ok(if ok { vec![param.point.clone()] } else { vec![] });
    }
    let gf: Vec<Vec<f64>> = g.iter().map(|r| r.iter().map(to_f64).collect()).collect();
    let bf: Vec<f64> = rhs.iter().map(to_f64).collect();

    let mut search = Search {
        g: &gf,
        b: &bf,
        k,
        chosen: Vec::new(),
        basis: Vec::new(),
        found: BTreeMap::new(),
        leaves: 0,
        max_bases,
    };
    search.run(0)?;

    let mut out = BTreeSet::new();
    for subset in search.found.into_values() {
        let mut aug: Vec<Vec<Rational>> = subset
            .iter()
            .map(|&i| {
                let mut r = g[i].clone();
                r.push(rhs[i].clone());
                r
            })
            .collect();
        if rref(&mut aug, k).len() != k {
            continue;
        }
        let t: Vec<Rational> = aug.iter().map(|r| r[k].clone()).collect();
        if g.iter().zip(&rhs).all(|(gi, bi)| dot(gi, &t) >= *bi) {
            out.insert(param.map(&t));
        }
    }
    Ok(out.into_iter().collect())
}

struct Search<'a> {
    g: &'a [Vec<f64>],
    b: &'a [f64],
    k: usize,
    chosen: Vec<usize>,
    /// Orthonormal basis of the chosen rows.
    basis: Vec<Vec<f64>>,
    /// Screened point (rounded) to one basis that produced it.
    found: BTreeMap<Vec<i64>, Vec<usize>>,
    leaves: usize,
    max_bases: usize,
}

impl Search<'_> {
    fn run(&mut self, start: usize) -> Result<()> {
        if self.chosen.len() == self.k {
            self.leaves += 1;
            if self.leaves > self.max_bases {
                return Err(Error::Budget(self.max_bases));
            }
            self.leaf();
            return Ok(());
        }
        let need = self.k - self.chosen.len();
        for i in start..self.g.len() {
            if self.g.len() - i < need {
                break;
            }
            let Some(q) = self.orthogonalize(&self.g[i]) else {
                continue;
            };
            self.chosen.push(i);
            self.basis.push(q);
            self.run(i + 1)?;
            self.basis.pop();
            self.chosen.pop();
        }
        Ok(())
    }

    fn orthogonalize(&self, row: &[f64]) -> Option<Vec<f64>> {
        let scale = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if scale == 0.0 {
            return None;
        }
        let mut v = row.to_vec();
        for _ in 0..2 {
            for q in &self.basis {
                let c: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < SCREEN_TOL * scale {
            return None;
        }
        Some(v.into_iter().map(|x| x / norm).collect())
    }

    fn leaf(&mut self) {
        let k = self.k;
        let mut a: Vec<Vec<f64>> = self
            .chosen
            .iter()
            .map(|&i| {
                let mut r = self.g[i].clone();
                r.push(self.b[i]);
                r
            })
            .collect();
        for c in 0..k {
            let p = (c..k)
                .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
                .unwrap_or(c);
            a.swap(c, p);
            let piv = a[c][c];
            if piv.abs() < 1e-12 {
                return;
            }
            for r in 0..k {
                if r == c {
                    continue;
                }
                let f = a[r][c] / piv;
                if f != 0.0 {
                    for j in c..=k {
                        a[r][j] -= f * a[c][j];
                    }
                }
            }
        }
        let t: Vec<f64> = (0..k).map(|i| a[i][k] / a[i][i]).collect();
        let feasible = self.g.iter().zip(self.b).all(|(gi, bi)| {
            let lhs: f64 = gi.iter().zip(&t).map(|(x, y)| x * y).sum();
            let scale = 1.0 + gi.iter().map(|x| x.abs()).sum::<f64>() + bi.abs();
            lhs >= bi - SCREEN_TOL * scale
        });
        if feasible {
            let key = t.iter().map(|x| (x * 1048576.0).round() as i64).collect();
            self.found.entry(key).or_insert_with(|| self.chosen.clone());
        }
    }
}
