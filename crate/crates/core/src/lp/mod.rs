//! Dense bounded-variable revised simplex.
//!
//! Problems are `max c·x  s.t.  A x = b,  l ≤ x ≤ u` with finite lower bounds.
//! Every solve checks its own answer: primal residuals and a weak-duality gap
//! for optimal results, a Farkas certificate for infeasible ones.

mod exact;
mod product;
mod repair;
mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use exact::ExactCheck;
pub use product::ProductColumns;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub rows: usize,
    pub cols: usize,
    /// Column-major, `rows × cols`.
    pub matrix: Vec<f64>,
    pub rhs: Vec<f64>,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    /// `None` means unbounded above.
    pub upper: Vec<Option<f64>>,
    /// Optional factored description of the leading columns, used for pricing.
    /// The dense matrix must hold the same entries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product: Option<ProductColumns>,
}

impl LpProblem {
    /// Feasibility problem with zero objective and x ≥ 0.
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            matrix: vec![0.0; rows * cols],
            rhs: vec![0.0; rows],
            objective: vec![0.0; cols],
            lower: vec![0.0; cols],
            upper: vec![None; cols],
            product: None,
        }
    }

    pub fn from_rows(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<Self> {
        let rows = a.len();
        let cols = c.len();
        let mut p = Self::new(rows, cols);
        for (i, row) in a.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Dimension(format!("row {i} has length {}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                p.set(i, j, v);
            }
        }
        if b.len() != rows {
            return Err(Error::Dimension("rhs length".into()));
        }
        p.rhs = b.to_vec();
        p.objective = c.to_vec();
        Ok(p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[j * self.rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.matrix[j * self.rows + i] = v;
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.matrix[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.matrix[j * self.rows..(j + 1) * self.rows]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Lp(format!("invalid problem: {what}")));
        if self.matrix.len() != self.rows * self.cols {
            return bad("matrix size");
        }
        if self.rhs.len() != self.rows
            || self.objective.len() != self.cols
            || self.lower.len() != self.cols
            || self.upper.len() != self.cols
        {
            return bad("vector lengths");
        }
        if let Some(pc) = &self.product {
            pc.validate(self.rows, self.cols)?;
        }
        if self.matrix.iter().chain(&self.rhs).chain(&self.objective).chain(&self.lower).any(|v| !v.is_finite()) {
            return bad("non-finite entry");
        }
        for (j, (l, u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if let Some(u) = u {
                if !u.is_finite() || u < l {
                    return bad(&format!("bounds of variable {j}"));
                }
            }
        }
        Ok(())
    }

    /// Largest |A x − b| entry.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut r: Vec<f64> = self.rhs.iter().map(|b| -b).collect();
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (ri, aij) in r.iter_mut().zip(self.column(j)) {
                    *ri += aij * xj;
                }
            }
        }
        r.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Lagrangian dual value g(y) = b·y + Σ_j max over [l_j, u_j] of (c_j − yᵀA_j) x_j.
    /// Returns `None` when the maximum is unbounded.
    pub fn dual_value(&self, y: &[f64]) -> Option<f64> {
        let mut g: f64 = self.rhs.iter().zip(y).map(|(b, y)| b * y).sum();
        for j in 0..self.cols {
            let d = self.objective[j] - dotf(y, self.column(j));
            let lo = d * self.lower[j];
            match self.upper[j] {
                Some(u) => g += lo.max(d * u),
                None if d > 0.0 => return None,
                None => g += lo,
            }
        }
        Some(g)
    }

    /// Farkas margin yᵀb − max over the box of yᵀA x; positive means infeasibility is proven.
    pub fn farkas_margin(&self, y: &[f64]) -> Option<f64> {
        let mut m: f64 = self.rhs.iter().zip(y).map(|(b, y)| b * y).sum();
        for j in 0..self.cols {
            let s = dotf(y, self.column(j));
            let lo = s * self.lower[j];
            match self.upper[j] {
                Some(u) => m -= lo.max(s * u),
                None if s > 0.0 => return None,
                None => m -= lo,
            }
        }
        Some(m)
    }
}

pub(crate) fn dotf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
    /// One multiplier per equality row.
    pub duals: Vec<f64>,
    pub farkas: Option<Vec<f64>>,
    pub iterations: usize,
    /// Final basis (column indices, artificial columns ≥ `cols`).
    pub basis: Vec<usize>,
    pub exact: Option<ExactCheck>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpOptions {
    pub pivot_tol: f64,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub refactor_every: usize,
    /// Iteration cap; `None` picks one from the problem size.
    pub max_iterations: Option<usize>,
    /// Re-check the final basis in rational arithmetic.
    pub exact: bool,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-7,
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            refactor_every: 50,
            max_iterations: None,
            exact: false,
        }
    }
}

pub fn solve(p: &LpProblem) -> Result<LpSolution> {
    solve_with(p, &LpOptions::default())
}

pub fn solve_with(p: &LpProblem, opts: &LpOptions) -> Result<LpSolution> {
    p.validate()?;
    // Numerical failures (a singular basis, a cleanup that stalls) are almost
    // always a pivot that was too small; retry once with a stricter tolerance.
    let attempt = |o: &LpOptions| -> Result<LpSolution> {
        let sol = simplex::run(p, o)?;
        verify(p, &sol, o)?;
        Ok(sol)
    };
    let mut sol = match attempt(opts) {
        Err(Error::Lp(_)) => attempt(&LpOptions {
            pivot_tol: (opts.pivot_tol * 100.0).max(1e-6),
            ..*opts
        })?,
        other => other?,
    };
    if opts.exact {
        sol.exact = Some(exact::check(p, &sol));
    }
    Ok(sol)
}

fn scale_of(p: &LpProblem) -> f64 {
    p.rhs.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

/// Post-solve certificate checks; a result that cannot certify itself is an error.
pub fn verify(p: &LpProblem, sol: &LpSolution, opts: &LpOptions) -> Result<()> {
    let scale = scale_of(p);
    match sol.status {
        LpStatus::Optimal => {
            let res = p.residual(&sol.x);
            if res > opts.feasibility_tol * scale {
                return Err(Error::Lp(format!("primal residual {res:.3e}")));
            }
            for (j, &xj) in sol.x.iter().enumerate() {
                let lo = p.lower[j] - opts.feasibility_tol;
                let hi = p.upper[j].map_or(f64::INFINITY, |u| u + opts.feasibility_tol);
                if xj < lo || xj > hi {
                    return Err(Error::Lp(format!("variable {j} = {xj} outside its bounds")));
                }
            }
            let g = relaxed_dual_value(p, &sol.duals, opts.optimality_tol)
                .ok_or_else(|| Error::Lp("dual multipliers are not dual feasible".into()))?;
            let primal = sol.objective_value;
            let obj_scale = 1.0 + primal.abs().max(g.abs());
            if primal > g + 1e-8 * obj_scale {
                return Err(Error::Lp(format!("weak duality violated: {primal} > {g}")));
            }
            if (g - primal) > 1e-8 * obj_scale {
                return Err(Error::Lp(format!("duality gap {:.3e}", g - primal)));
            }
            Ok(())
        }
        LpStatus::Infeasible => {
            let y = sol
                .farkas
                .as_ref()
                .ok_or_else(|| Error::Lp("infeasible without certificate".into()))?;
            let ymax = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            match relaxed_farkas_margin(p, y, opts.optimality_tol * ymax.max(1.0)) {
                Some(m) if m > 1e-9 * scale.max(ymax) => Ok(()),
                Some(m) => Err(Error::Lp(format!("Farkas margin {m:.3e} too small"))),
                None => Err(Error::Lp("Farkas certificate is unbounded on the box".into())),
            }
        }
        LpStatus::Unbounded => Ok(()),
    }
}

/// Dual value with reduced costs on unbounded variables clamped when within tolerance.
pub fn relaxed_dual_value(p: &LpProblem, y: &[f64], tol: f64) -> Option<f64> {
    let mut g: f64 = p.rhs.iter().zip(y).map(|(b, y)| b * y).sum();
    for j in 0..p.cols {
        let d = p.objective[j] - dotf(y, p.column(j));
        let lo = d * p.lower[j];
        match p.upper[j] {
            Some(u) => g += lo.max(d * u),
            None if d > tol => return None,
            None => g += d.min(0.0) * p.lower[j],
        }
    }
    Some(g)
}

/// Farkas margin with column products up to `tol` treated as zero on unbounded columns.
pub fn relaxed_farkas_margin(p: &LpProblem, y: &[f64], tol: f64) -> Option<f64> {
    let mut m: f64 = p.rhs.iter().zip(y).map(|(b, y)| b * y).sum();
    for j in 0..p.cols {
        let s = dotf(y, p.column(j));
        let lo = s * p.lower[j];
        match p.upper[j] {
            Some(u) => m -= lo.max(s * u),
            None if s > tol => return None,
            None => m -= s.min(0.0) * p.lower[j],
        }
    }
    Some(m)
}
