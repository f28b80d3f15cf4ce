//! Double description method on the homogenized cone of a polytope.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::hrep::HRepresentation;
use super::rational::{dot, integer_rank, make_primitive, primitive_integer_row, rref, Rational};
use crate::error::{Error, Result};

/// Caps on intermediate rays and final vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_rays: usize,
    pub max_vertices: usize,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        Self {
            max_rays: 1_000_000,
            max_vertices: 1_000_000,
        }
    }
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn and(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & b).collect())
    }
    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64).filter(move |b| bits >> b & 1 == 1).map(move |b| w * 64 + b)
        })
    }
}

struct Ray {
    v: Vec<BigInt>,
    zeros: Bits,
}

fn idot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !x.is_zero() && !y.is_zero())
        .fold(BigInt::zero(), |acc, (x, y)| acc + x * y)
}

/// Vertices of a bounded polyhedron, in exact arithmetic, sorted and unique.
pub(crate) fn dd_vertices(h: &HRepresentation, budget: EnumerationBudget) -> Result<Vec<Vec<Rational>>> {
    let Some(param) = h.affine_param() else {
        return Ok(vec![]);
    };
    let k = param.directions.len();
    let d = k + 1;

    // Row (−(b − a·x0), a·N) so that row · (t0, t) ≥ 0.
    let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(h.inequalities.len() + 1);
    let mut t0 = vec![BigInt::zero(); d];
    t0[0] = BigInt::from(1);
    rows.push(t0);
    for c in &h.inequalities {
        let mut r = Vec::with_capacity(d);
        r.push(-(&c.rhs - dot(&c.row, &param.point)));
        r.extend(param.directions.iter().map(|dir| dot(&c.row, dir)));
        if r.iter().all(Zero::is_zero) {
            continue;
        }
        rows.push(primitive_integer_row(&r));
    }
    let m = rows.len();

    // Initial simplicial cone from d independent rows.
    let mut basis: Vec<usize> = Vec::new();
    for i in 0..m {
        let mut cand: Vec<&[BigInt]> = basis.iter().map(|&j| rows[j].as_slice()).collect();
        cand.push(&rows[i]);
        if integer_rank(&cand) == cand.len() {
            basis.push(i);
            if basis.len() == d {
                break;
            }
        }
    }
    if basis.len() < d {
        return Err(Error::Unbounded(
            "the constraints leave a line in the feasible set".into(),
        ));
    }
    let mut rays = initial_rays(&rows, &basis, m);
    let mut done = vec![false; m];
    for &i in &basis {
        done[i] = true;
    }

    for i in 0..m {
        if done[i] {
            continue;
        }
        done[i] = true;
        let a = &rows[i];
        let s: Vec<BigInt> = rays.iter().map(|r| idot(a, &r.v)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&j| s[j].is_positive()).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&j| s[j].is_negative()).collect();
        let mut fresh = Vec::new();
        for &p in &pos {
            for &n in &neg {
                let z = rays[p].zeros.and(&rays[n].zeros);
                if z.count() < d.saturating_sub(2) {
                    continue;
                }
                let zr: Vec<&[BigInt]> = z.ones().map(|j| rows[j].as_slice()).collect();
                if integer_rank(&zr) != d.saturating_sub(2) {
                    continue;
                }
                let sp = &s[p];
                let sn = -&s[n];
                let v: Vec<BigInt> = rays[n]
                    .v
                    .iter()
                    .zip(&rays[p].v)
                    .map(|(vn, vp)| sp * vn + &sn * vp)
                    .collect();
                let mut zeros = z;
                zeros.set(i);
                fresh.push(Ray {
                    v: make_primitive(v),
                    zeros,
                });
            }
        }
        let mut next: Vec<Ray> = Vec::with_capacity(rays.len() + fresh.len());
        for (j, mut r) in rays.into_iter().enumerate() {
            if s[j].is_negative() {
                continue;
            }
            if s[j].is_zero() {
                r.zeros.set(i);
            }
            next.push(r);
        }
        next.extend(fresh);
        if next.len() > budget.max_rays {
            return Err(Error::Budget(budget.max_rays));
        }
        rays = next;
    }

    let mut out = Vec::new();
    let mut recession = false;
    for r in &rays {
        if r.v[0].is_zero() {
            recession = true;
            continue;
        }
        let t0 = Rational::from_integer(r.v[0].clone());
        let t: Vec<Rational> = r.v[1..]
            .iter()
            .map(|x| Rational::from_integer(x.clone()) / &t0)
            .collect();
        out.push(param.map(&t));
    }
    if recession && !out.is_empty() {
        return Err(Error::Unbounded("the feasible set has a recession direction".into()));
    }
    out.sort();
    out.dedup();
    if out.len() > budget.max_vertices {
        return Err(Error::Budget(budget.max_vertices));
    }
    Ok(out)
}

/// Extreme rays of {x : rows[basis] x ≥ 0}: columns of the inverse.
fn initial_rays(rows: &[Vec<BigInt>], basis: &[usize], m: usize) -> Vec<Ray> {
    let d = basis.len();
    let mut aug: Vec<Vec<Rational>> = basis
        .iter()
        .enumerate()
        .map(|(r, &i)| {
            let mut row: Vec<Rational> = rows[i].iter().map(|x| Rational::from_integer(x.clone())).collect();
            row.extend((0..d).map(|c| Rational::from_integer(BigInt::from((c == r) as i64))));
            row
        })
        .collect();
    rref(&mut aug, d);
    (0..d)
        .map(|j| {
            let col: Vec<Rational> = (0..d).map(|r| aug[r][d + j].clone()).collect();
            let mut zeros = Bits::new(m);
            for (r, &i) in basis.iter().enumerate() {
                if r != j {
                    zeros.set(i);
                }
            }
            Ray {
                v: primitive_integer_row(&col),
                zeros,
            }
        })
        .collect()
}
