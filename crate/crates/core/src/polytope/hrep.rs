use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::rational::{dot, rat, rref, Rational};
use crate::error::{Error, Result};
use crate::scenarios::{tuples, Scenario};

/// One linear constraint `row · x (= or ≥) rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    #[serde(with = "rational_vec")]
    pub row: Vec<Rational>,
    #[serde(with = "rational_scalar")]
    pub rhs: Rational,
}

/// Polyhedron {x : E x = e, A x ≥ b}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HRepresentation {
    pub dimension: usize,
    pub equalities: Vec<Constraint>,
    pub inequalities: Vec<Constraint>,
}

/// x = point + Σ t_j · directions[j], the affine hull of the equalities.
#[derive(Clone, Debug)]
pub(crate) struct AffineParam {
    pub point: Vec<Rational>,
    pub directions: Vec<Vec<Rational>>,
}

impl AffineParam {
    pub fn map(&self, t: &[Rational]) -> Vec<Rational> {
        let mut x = self.point.clone();
        for (tj, dir) in t.iter().zip(&self.directions) {
            if tj.is_zero() {
                continue;
            }
            for (xi, di) in x.iter_mut().zip(dir) {
                if !di.is_zero() {
                    *xi += tj * di;
                }
            }
        }
        x
    }
}

impl HRepresentation {
    pub fn new(
        dimension: usize,
        equalities: Vec<Constraint>,
        inequalities: Vec<Constraint>,
    ) -> Result<Self> {
        for c in equalities.iter().chain(&inequalities) {
            if c.row.len() != dimension {
                return Err(Error::Dimension(format!(
                    "constraint row has length {}, dimension is {dimension}",
                    c.row.len()
                )));
            }
        }
        Ok(Self {
            dimension,
            equalities,
            inequalities,
        })
    }

    /// The box [lo, hi]^n.
    pub fn cube(n: usize, lo: i64, hi: i64) -> Self {
        let mut ineq = Vec::new();
        for i in 0..n {
            let mut up = vec![Rational::zero(); n];
            up[i] = Rational::one();
            let mut down = vec![Rational::zero(); n];
            down[i] = -Rational::one();
            ineq.push(Constraint { row: up, rhs: rat(lo) });
            ineq.push(Constraint {
                row: down,
                rhs: rat(-hi),
            });
        }
        Self {
            dimension: n,
            equalities: vec![],
            inequalities: ineq,
        }
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        x.len() == self.dimension
            && self.equalities.iter().all(|c| dot(&c.row, x) == c.rhs)
            && self.inequalities.iter().all(|c| dot(&c.row, x) >= c.rhs)
    }

    /// Indices of inequalities satisfied with equality at x.
    pub fn tight(&self, x: &[Rational]) -> Vec<usize> {
        self.inequalities
            .iter()
            .enumerate()
            .filter(|(_, c)| dot(&c.row, x) == c.rhs)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn equality_rank(&self) -> usize {
        let mut rows: Vec<Vec<Rational>> = self.equalities.iter().map(|c| c.row.clone()).collect();
        rref(&mut rows, self.dimension).len()
    }

    /// Dimension of the affine hull of the equalities.
    pub fn affine_dimension(&self) -> usize {
        self.dimension - self.equality_rank()
    }

    /// Whether x is an extreme point: feasible and the tight rows span the space together
    /// with the equalities.
    pub fn is_vertex(&self, x: &[Rational]) -> bool {
        if !self.contains(x) {
            return false;
        }
        let mut rows: Vec<Vec<Rational>> = self.equalities.iter().map(|c| c.row.clone()).collect();
        rows.extend(self.tight(x).into_iter().map(|i| self.inequalities[i].row.clone()));
        rref(&mut rows, self.dimension).len() == self.dimension
    }

    /// Parametrize the solution set of the equalities; `None` if inconsistent.
    pub(crate) fn affine_param(&self) -> Option<AffineParam> {
        let n = self.dimension;
        let mut rows: Vec<Vec<Rational>> = self
            .equalities
            .iter()
            .map(|c| {
                let mut r = c.row.clone();
                r.push(c.rhs.clone());
                r
            })
            .collect();
        let pivots = rref(&mut rows, n);
        if rows[pivots.len()..].iter().any(|r| !r[n].is_zero()) {
            return None;
        }
        let mut point = vec![Rational::zero(); n];
        for (i, &p) in pivots.iter().enumerate() {
            point[p] = rows[i][n].clone();
        }
        let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
        let directions = free
            .iter()
            .map(|&f| {
                let mut d = vec![Rational::zero(); n];
                d[f] = Rational::one();
                for (i, &p) in pivots.iter().enumerate() {
                    d[p] = -rows[i][f].clone();
                }
                d
            })
            .collect();
        Some(AffineParam { point, directions })
    }
}

/// No-signalling polytope of a scenario, in behaviour-table coordinates:
/// positivity, per-setting normalization, and for every party the marginal
/// of the others independent of that party's setting.
pub fn ns_h_representation(inputs: &[usize], outputs: &[usize]) -> Result<HRepresentation> {
    let scen = Scenario::new(inputs.to_vec(), outputs.to_vec())?;
    let n = scen.table_len();
    let unit = |i: usize| {
        let mut r = vec![Rational::zero(); n];
        r[i] = Rational::one();
        r
    };
    let inequalities = (0..n)
        .map(|i| Constraint {
            row: unit(i),
            rhs: Rational::zero(),
        })
        .collect();
    let mut equalities = Vec::new();
    let outcomes: Vec<Vec<usize>> = tuples(outputs).collect();
    for x in tuples(inputs) {
        let mut row = vec![Rational::zero(); n];
        for a in &outcomes {
            row[scen.index(a, &x)] = Rational::one();
        }
        equalities.push(Constraint {
            row,
            rhs: Rational::one(),
        });
    }
    // Σ_{a_k} p(a|x) does not depend on x_k (no signalling from party k).
    for k in 0..scen.parties() {
        for x in tuples(inputs).filter(|x| x[k] != 0) {
            let mut x0 = x.clone();
            x0[k] = 0;
            for a in outcomes.iter().filter(|a| a[k] == 0) {
                let mut row = vec![Rational::zero(); n];
                for ak in 0..outputs[k] {
                    let mut aa = a.clone();
                    aa[k] = ak;
                    row[scen.index(&aa, &x)] += Rational::one();
                    row[scen.index(&aa, &x0)] -= Rational::one();
                }
                equalities.push(Constraint {
                    row,
                    rhs: Rational::zero(),
                });
            }
        }
    }
    HRepresentation::new(n, equalities, inequalities)
}

mod rational_scalar {
    use super::super::rational::{format_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod rational_vec {
    use super::super::rational::{format_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ns_sizes() {
        let h = ns_h_representation(&[2, 2], &[2, 2]).unwrap();
        assert_eq!(h.dimension, 16);
        assert_eq!(h.inequalities.len(), 16);
        assert_eq!(h.affine_dimension(), 8);
        let h = ns_h_representation(&[3, 2], &[2, 2]).unwrap();
        assert_eq!(h.dimension, 24);
        assert_eq!(h.affine_dimension(), 11);
    }

    #[test]
    fn single_setting_is_simplex() {
        let h = ns_h_representation(&[1, 1], &[2, 3]).unwrap();
        assert_eq!(h.dimension, 6);
        assert_eq!(h.affine_dimension(), 5);
    }

    #[test]
    fn param_reproduces_equalities() {
        let h = ns_h_representation(&[2, 2], &[2, 2]).unwrap();
        let p = h.affine_param().unwrap();
        assert_eq!(p.directions.len(), 8);
        let t: Vec<Rational> = (0..8).map(|i| rat(i as i64 - 3)).collect();
        let x = p.map(&t);
        assert!(h.equalities.iter().all(|c| dot(&c.row, &x) == c.rhs));
    }

    #[test]
    fn inconsistent_equalities() {
        let one = vec![rat(1)];
        let h = HRepresentation::new(
            1,
            vec![
                Constraint { row: one.clone(), rhs: rat(1) },
                Constraint { row: one, rhs: rat(2) },
            ],
            vec![],
        )
        .unwrap();
        assert!(h.affine_param().is_none());
    }
}
