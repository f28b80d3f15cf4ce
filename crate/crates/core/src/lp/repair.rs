//! Rational simplex continued from a floating-point basis.
//!
//! Used when the float basis is optimal only up to rounding: a few exact
//! pivots (dual simplex while primal infeasible, primal simplex while dual
//! infeasible, Bland's rule in both) reach the exact optimum of the problem
//! whose data are the given doubles.

use num_traits::{One, Signed, Zero};

use super::LpProblem;
use crate::polytope::{from_f64_exact, Rational};

fn q(x: f64) -> Rational {
    from_f64_exact(x).expect("finite data")
}

pub(super) struct Repaired {
    pub objective: Rational,
    pub pivots: usize,
}

struct Tableau {
    /// B⁻¹[A | I], one row per basic variable.
    t: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    x: Vec<Rational>,
    lo: Vec<Rational>,
    up: Vec<Option<Rational>>,
}

impl Tableau {
    fn fixed(&self, j: usize) -> bool {
        self.up[j].as_ref() == Some(&self.lo[j])
    }

    fn at_lower(&self, j: usize) -> bool {
        self.x[j] == self.lo[j]
    }

    fn violation(&self, j: usize) -> Option<Rational> {
        if self.x[j] < self.lo[j] {
            return Some(self.lo[j].clone());
        }
        match &self.up[j] {
            Some(u) if &self.x[j] > u => Some(u.clone()),
            _ => None,
        }
    }

    fn reduced_costs(&self, c: &[Rational]) -> Vec<Rational> {
        let mut d = c.to_vec();
        for (row, &k) in self.t.iter().zip(&self.basis) {
            if c[k].is_zero() {
                continue;
            }
            for (dj, a) in d.iter_mut().zip(row) {
                if !a.is_zero() {
                    *dj -= &c[k] * a;
                }
            }
        }
        d
    }

    /// Nonbasic j for which increasing (at lower) or decreasing (at upper) helps.
    fn improving(&self, j: usize, d: &Rational, basic: &[bool]) -> bool {
        !basic[j] && !self.fixed(j) && if self.at_lower(j) { d.is_positive() } else { d.is_negative() }
    }

    /// Move nonbasic j by `delta`; basics follow.
    fn shift(&mut self, j: usize, delta: &Rational) {
        for (row, &k) in self.t.iter().zip(&self.basis) {
            if !row[j].is_zero() {
                self.x[k] -= &row[j] * delta;
            }
        }
        self.x[j] += delta;
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.t[r][j].clone();
        for a in self.t[r].iter_mut() {
            *a /= &p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r || row[j].is_zero() {
                continue;
            }
            let f = row[j].clone();
            for (a, b) in row.iter_mut().zip(&pivot_row) {
                if !b.is_zero() {
                    *a -= &f * b;
                }
            }
        }
        self.basis[r] = j;
    }
}

/// Exact optimum of `p` (a maximization) starting from `basis` with the
/// nonbasic values of `x`. Errors describe why no exact optimum was reached.
pub(super) fn exact_optimum(p: &LpProblem, basis: &[usize], x: &[f64], max_pivots: usize) -> Result<Repaired, String> {
    let m = p.rows;
    let n = p.cols;
    let w = n + m;
    if basis.len() != m {
        return Err("basis has the wrong size".into());
    }
    let mut lo: Vec<Rational> = p.lower.iter().map(|&l| q(l)).collect();
    let mut up: Vec<Option<Rational>> = p.upper.iter().map(|u| u.map(q)).collect();
    lo.resize(w, Rational::zero());
    up.resize(w, Some(Rational::zero()));
    let mut c: Vec<Rational> = p.objective.iter().map(|&v| q(v)).collect();
    c.resize(w, Rational::zero());
    let c_orig = c.clone();

    // Gauss-Jordan on [A | I | b] over the basis columns.
    let mut rows: Vec<Vec<Rational>> = (0..m)
        .map(|i| {
            let mut r: Vec<Rational> = (0..n).map(|j| q(p.column(j)[i])).collect();
            r.extend((0..m).map(|k| if k == i { Rational::one() } else { Rational::zero() }));
            r.push(q(p.rhs[i]));
            r
        })
        .collect();
    let mut order = vec![usize::MAX; m];
    let mut used = vec![false; m];
    for &k in basis {
        let Some(r) = (0..m).find(|&i| !used[i] && !rows[i][k].is_zero()) else {
            return Err("basis is singular in exact arithmetic".into());
        };
        used[r] = true;
        order[r] = k;
        let piv = rows[r][k].clone();
        for a in rows[r].iter_mut() {
            *a /= &piv;
        }
        let pr = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[k].is_zero() {
                let f = row[k].clone();
                for (a, b) in row.iter_mut().zip(&pr) {
                    if !b.is_zero() {
                        *a -= &f * b;
                    }
                }
            }
        }
    }
    let mut is_basic = vec![false; w];
    for &k in basis {
        is_basic[k] = true;
    }
    let mut xs: Vec<Rational> = vec![Rational::zero(); w];
    for j in (0..w).filter(|&j| !is_basic[j]) {
        let v = if j < n { q(x[j]) } else { Rational::zero() };
        let on_bound = v == lo[j] || up[j].as_ref() == Some(&v);
        xs[j] = if on_bound { v } else { lo[j].clone() };
    }
    for (row, &k) in rows.iter().zip(&order) {
        let mut v = row[w].clone();
        for j in (0..w).filter(|&j| !is_basic[j]) {
            if !row[j].is_zero() && !xs[j].is_zero() {
                v -= &row[j] * &xs[j];
            }
        }
        xs[k] = v;
    }
    for row in rows.iter_mut() {
        row.truncate(w);
    }
    let mut tab = Tableau {
        t: rows,
        basis: order,
        x: xs,
        lo,
        up,
    };

    let mut shifted = false;
    let mut pivots = 0;
    loop {
        let mut basic = vec![false; w];
        for &k in &tab.basis {
            basic[k] = true;
        }
        let d = tab.reduced_costs(&c);
        let leaving = (0..m)
            .filter(|&r| tab.violation(tab.basis[r]).is_some())
            .min_by_key(|&r| tab.basis[r]);
        let entering = (0..w).find(|&j| tab.improving(j, &d[j], &basic));
        match (leaving, entering) {
            (None, None) if shifted => {
                c = c_orig.clone();
                shifted = false;
                continue;
            }
            (None, None) => break,
            (Some(_), Some(_)) => {
                // Zero the offending reduced costs so the dual simplex applies.
                for j in (0..w).filter(|&j| tab.improving(j, &d[j], &basic)) {
                    c[j] -= &d[j];
                }
                shifted = true;
                continue;
            }
            _ => {}
        }
        if pivots >= max_pivots {
            return Err(format!("no exact optimum within {max_pivots} pivots"));
        }
        pivots += 1;
        if let Some(r) = leaving {
            dual_step(&mut tab, &d, &basic, r)?;
        } else if let Some(j) = entering {
            primal_step(&mut tab, j)?;
        }
    }
    let objective = tab.x.iter().zip(&c_orig).filter(|(_, c)| !c.is_zero()).map(|(x, c)| x * c).sum();
    Ok(Repaired { objective, pivots })
}

fn dual_step(tab: &mut Tableau, d: &[Rational], basic: &[bool], r: usize) -> Result<(), String> {
    let k = tab.basis[r];
    let target = tab.violation(k).expect("leaving row is infeasible");
    let raise = tab.x[k] < target;
    let row = &tab.t[r];
    let mut best: Option<(Rational, usize)> = None;
    for j in 0..row.len() {
        if basic[j] || tab.fixed(j) || row[j].is_zero() {
            continue;
        }
        // x_k moves by −row[j]·Δ_j.
        let up_ok = tab.at_lower(j);
        let helps = if raise == up_ok { row[j].is_negative() } else { row[j].is_positive() };
        if !helps {
            continue;
        }
        let ratio = (&d[j] / &row[j]).abs();
        if best.as_ref().is_none_or(|(b, _)| ratio < *b) {
            best = Some((ratio, j));
        }
    }
    let Some((_, j)) = best else {
        return Err("exact problem is infeasible".into());
    };
    let delta = (&tab.x[k] - &target) / &tab.t[r][j];
    tab.shift(j, &delta);
    tab.x[k] = target;
    tab.pivot(r, j);
    Ok(())
}

fn primal_step(tab: &mut Tableau, j: usize) -> Result<(), String> {
    let inc = tab.at_lower(j);
    let mut step = tab.up[j].as_ref().map(|u| u - &tab.lo[j]);
    let mut leave: Option<(usize, Rational)> = None;
    for (r, row) in tab.t.iter().enumerate() {
        let a = &row[j];
        if a.is_zero() {
            continue;
        }
        let k = tab.basis[r];
        // Rate of change of x_k per unit step of j in its improving direction.
        let falls = a.is_positive() == inc;
        let (limit, bound) = if falls {
            ((&tab.x[k] - &tab.lo[k]) / a.abs(), tab.lo[k].clone())
        } else {
            match &tab.up[k] {
                Some(u) => ((u - &tab.x[k]) / a.abs(), u.clone()),
                None => continue,
            }
        };
        let better = match &step {
            None => true,
            Some(s) => limit < *s || (limit == *s && leave.as_ref().is_some_and(|(lr, _)| k < tab.basis[*lr])),
        };
        if better {
            step = Some(limit);
            leave = Some((r, bound));
        }
    }
    let Some(t) = step else {
        return Err("exact problem is unbounded".into());
    };
    let delta = if inc { t } else { -t };
    tab.shift(j, &delta);
    if let Some((r, bound)) = leave {
        tab.x[tab.basis[r]] = bound;
        tab.pivot(r, j);
    }
    Ok(())
}
