//! Rational re-verification of a floating-point simplex result.
//!
//! Every finite double is a dyadic rational, so the problem data convert
//! exactly. The final basis is re-solved in rational arithmetic; optimality is
//! confirmed when the exact basic solution is feasible and the exact reduced
//! costs have the right signs. Infeasibility is confirmed by evaluating the
//! Farkas margin exactly.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{LpProblem, LpSolution, LpStatus};
use crate::polytope::{format_rational, from_f64_exact, Rational};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactCheck {
    pub confirmed: bool,
    pub detail: String,
    /// Exact objective of the re-solved basis, as "num/den".
    pub objective: Option<String>,
}

fn q(x: f64) -> Rational {
    from_f64_exact(x).expect("finite data")
}

pub(super) fn check(p: &LpProblem, sol: &LpSolution) -> ExactCheck {
    match sol.status {
        LpStatus::Optimal => {
            let c = check_optimal(p, sol);
            if c.confirmed {
                c
            } else {
                repair_optimal(p, sol, &c.detail)
            }
        }
        LpStatus::Infeasible => check_farkas(p, sol),
        LpStatus::Unbounded => ExactCheck {
            confirmed: false,
            detail: "unbounded results are not re-verified".into(),
            objective: None,
        },
    }
}

fn check_farkas(p: &LpProblem, sol: &LpSolution) -> ExactCheck {
    let Some(y) = &sol.farkas else {
        return fail("no certificate");
    };
    if let Some(yb) = phase_one_multipliers(p, &sol.basis) {
        let c = farkas_margin_exact(p, &yb);
        if c.confirmed {
            return c;
        }
    }
    let y: Vec<Rational> = y.iter().map(|&v| q(v)).collect();
    farkas_margin_exact(p, &y)
}

/// Rows are sign-normalized exactly as the simplex does it.
fn row_signs(p: &LpProblem) -> Vec<i64> {
    let mut b = p.rhs.clone();
    for j in 0..p.cols {
        let l = p.lower[j];
        if l != 0.0 {
            for (bi, aij) in b.iter_mut().zip(p.column(j)) {
                *bi -= aij * l;
            }
        }
    }
    b.iter().map(|&v| if v < 0.0 { -1 } else { 1 }).collect()
}

/// y = −π for the phase-one basis: Bᵀπ = c_B with cost −1 on artificials.
fn phase_one_multipliers(p: &LpProblem, basis: &[usize]) -> Option<Vec<Rational>> {
    let m = p.rows;
    let n = p.cols;
    if basis.len() != m {
        return None;
    }
    let sign = row_signs(p);
    let mut aug: Vec<Vec<Rational>> = basis
        .iter()
        .map(|&k| {
            let mut row: Vec<Rational> = if k < n {
                p.column(k).iter().map(|&a| q(a)).collect()
            } else {
                (0..m)
                    .map(|i| Rational::from_integer(if i == k - n { sign[i].into() } else { 0.into() }))
                    .collect()
            };
            row.push(if k < n { Rational::zero() } else { Rational::from_integer((-1).into()) });
            row
        })
        .collect();
    if crate::polytope::rank_in_place(&mut aug, m) != m {
        return None;
    }
    Some(aug.iter().map(|r| -r[m].clone()).collect())
}

fn farkas_margin_exact(p: &LpProblem, y: &[Rational]) -> ExactCheck {
    let mut margin: Rational = p.rhs.iter().zip(y).map(|(&b, yi)| q(b) * yi).sum();
    for j in 0..p.cols {
        let s: Rational = p
            .column(j)
            .iter()
            .zip(y)
            .filter(|(a, _)| **a != 0.0)
            .map(|(&a, yi)| q(a) * yi)
            .sum();
        let lo = &s * q(p.lower[j]);
        match p.upper[j] {
            Some(u) => {
                let hi = &s * q(u);
                margin -= if hi > lo { hi } else { lo };
            }
            None if s.is_positive() => return fail("certificate unbounded on the box"),
            None => margin -= lo,
        }
    }
    ExactCheck {
        confirmed: margin.is_positive(),
        detail: format!("exact Farkas margin {}", crate::polytope::to_f64(&margin)),
        objective: None,
    }
}

fn repair_optimal(p: &LpProblem, sol: &LpSolution, why: &str) -> ExactCheck {
    let cap = 2 * (p.rows + p.cols) + 50;
    match super::repair::exact_optimum(p, &sol.basis, &sol.x, cap) {
        Ok(r) => {
            let float: f64 = p.objective.iter().zip(&sol.x).map(|(c, x)| c * x).sum();
            let exact = crate::polytope::to_f64(&r.objective);
            let agrees = (exact - float).abs() <= 1e-9 * (1.0 + exact.abs());
            ExactCheck {
                confirmed: agrees,
                detail: if agrees {
                    format!("{why}; exact optimum reached after {} rational pivots", r.pivots)
                } else {
                    format!("{why}; exact optimum {exact} differs from the float objective {float}")
                },
                objective: Some(format_rational(&r.objective)),
            }
        }
        Err(e) => fail(&format!("{why}; {e}")),
    }
}

fn fail(msg: &str) -> ExactCheck {
    ExactCheck {
        confirmed: false,
        detail: msg.into(),
        objective: None,
    }
}

fn check_optimal(p: &LpProblem, sol: &LpSolution) -> ExactCheck {
    let m = p.rows;
    let n = p.cols;
    let basic: Vec<usize> = sol.basis.clone();
    let is_basic = {
        let mut v = vec![false; n];
        for &k in &basic {
            if k < n {
                v[k] = true;
            }
        }
        v
    };
    // Nonbasic structurals sit exactly on a bound.
    let mut rhs: Vec<Rational> = p.rhs.iter().map(|&b| q(b)).collect();
    let mut xn: Vec<Option<Rational>> = vec![None; n];
    for j in (0..n).filter(|&j| !is_basic[j]) {
        let v = q(sol.x[j]);
        let on_bound = v == q(p.lower[j]) || p.upper[j].is_some_and(|u| v == q(u));
        if !on_bound {
            return fail("nonbasic variable off its bounds");
        }
        if !v.is_zero() {
            for (ri, &a) in rhs.iter_mut().zip(p.column(j)) {
                if a != 0.0 {
                    *ri -= q(a) * &v;
                }
            }
        }
        xn[j] = Some(v);
    }
    let column = |k: usize| -> Vec<Rational> {
        if k < n {
            p.column(k).iter().map(|&a| q(a)).collect()
        } else {
            (0..m).map(|i| Rational::from_integer(((i == k - n) as i64).into())).collect()
        }
    };
    let bcols: Vec<Vec<Rational>> = basic.iter().map(|&k| column(k)).collect();
    // B x_B = rhs
    let mut aug: Vec<Vec<Rational>> = (0..m)
        .map(|i| {
            let mut r: Vec<Rational> = bcols.iter().map(|c| c[i].clone()).collect();
            r.push(rhs[i].clone());
            r
        })
        .collect();
    if crate::polytope::rank_in_place(&mut aug, m) != m {
        return fail("basis is singular in exact arithmetic");
    }
    let xb: Vec<Rational> = aug.iter().map(|r| r[m].clone()).collect();
    for (r, &k) in basic.iter().enumerate() {
        if k >= n {
            if !xb[r].is_zero() {
                return fail("artificial variable nonzero in exact basic solution");
            }
        } else {
            if xb[r] < q(p.lower[k]) || p.upper[k].is_some_and(|u| xb[r] > q(u)) {
                return fail("exact basic solution violates a bound");
            }
            xn[k] = Some(xb[r].clone());
        }
    }
    // Bᵀ y = c_B
    let cb: Vec<Rational> = basic
        .iter()
        .map(|&k| if k < n { q(p.objective[k]) } else { Rational::zero() })
        .collect();
    let mut aug: Vec<Vec<Rational>> = (0..m)
        .map(|r| {
            let mut row = bcols[r].clone();
            row.push(cb[r].clone());
            row
        })
        .collect();
    crate::polytope::rank_in_place(&mut aug, m);
    let y: Vec<Rational> = aug.iter().map(|r| r[m].clone()).collect();
    for j in (0..n).filter(|&j| !is_basic[j]) {
        let d: Rational = q(p.objective[j])
            - p.column(j)
                .iter()
                .zip(&y)
                .filter(|(a, _)| **a != 0.0)
                .map(|(&a, yi)| q(a) * yi)
                .sum::<Rational>();
        let at_lower = xn[j].as_ref() == Some(&q(p.lower[j]));
        let fixed = p.upper[j].is_some_and(|u| u == p.lower[j]);
        if fixed {
            continue;
        }
        if (at_lower && d.is_positive()) || (!at_lower && d.is_negative()) {
            return fail("exact reduced cost has the wrong sign");
        }
    }
    let obj: Rational = xn
        .iter()
        .zip(&p.objective)
        .map(|(x, &c)| x.clone().unwrap_or_default() * q(c))
        .sum();
    ExactCheck {
        confirmed: true,
        detail: "basis optimal in exact arithmetic".into(),
        objective: Some(format_rational(&obj)),
    }
}
