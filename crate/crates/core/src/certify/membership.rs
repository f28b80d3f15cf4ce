use std::str::FromStr;
use std::sync::Arc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::bound::model_bound;
use super::model::{BlockKind, BroadcastModel, CgMap, CgProduct};
use crate::error::{Error, Result};
use crate::lp::{solve_with, LpOptions, LpProblem, LpSolution, LpStatus, ProductColumns};
use crate::polytope::{ns_h_representation, rank, rat, to_f64, Rational, VertexSet};
use crate::scenarios::{tuples, Behaviour, BoundKind, Inequality};

/// Largest tolerated no-signalling defect before a behaviour is rejected outright.
pub const NS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// One weight per product of block vertices.
    #[default]
    Vertex,
    /// One block kept as sub-normalized no-signalling boxes.
    Hybrid,
}

impl FromStr for Formulation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vertex" => Ok(Self::Vertex),
            "hybrid" => Ok(Self::Hybrid),
            other => Err(Error::UnknownName(other.into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertifyOptions {
    pub formulation: Formulation,
    /// Block kept variable in the hybrid form; default is the last no-signalling block.
    pub variable_block: Option<usize>,
    pub lp: LpOptions,
    /// Cap on LP columns.
    pub max_columns: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            formulation: Formulation::Vertex,
            variable_block: None,
            lp: LpOptions::default(),
            max_columns: 1_000_000,
        }
    }
}

impl CertifyOptions {
    pub fn hybrid() -> Self {
        Self {
            formulation: Formulation::Hybrid,
            ..Self::default()
        }
    }
}

/// Separating inequality with its exact model bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub inequality: Inequality,
    /// Exact bound as "num/den".
    pub bound_exact: String,
    /// Value on the tested behaviour.
    pub value: f64,
}

/// One term of a decomposition: vertex index per enumerated block and its weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedTerm {
    pub vertices: Vec<usize>,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipResult {
    pub feasible: bool,
    pub weights: Option<Vec<WeightedTerm>>,
    pub separating: Option<Separation>,
    pub lp_iterations: usize,
    pub exact_confirmed: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisibilityResult {
    pub v_star: f64,
    pub separating: Option<Separation>,
    pub lp_iterations: usize,
    pub exact_confirmed: Option<bool>,
}

/// LP data for a model, built once and reused across behaviours.
pub struct PreparedModel {
    pub model: BroadcastModel,
    pub formulation: Formulation,
    cg: CgProduct,
    template: LpProblem,
    cg_rows: usize,
    /// Enumerated-block vertex tuple of each column group.
    groups: Vec<Vec<usize>>,
    /// Columns per group (1 in vertex form, the variable block's table in hybrid form).
    group_width: usize,
    variable_block: Option<usize>,
    opts: CertifyOptions,
}

impl PreparedModel {
    pub fn new(model: &BroadcastModel, opts: &CertifyOptions) -> Result<Self> {
        model.validate()?;
        let cg = CgProduct::new(model);
        let vertices: Vec<Arc<VertexSet>> = (0..model.blocks.len())
            .map(|b| model.block_vertices(b))
            .collect::<Result<_>>()?;
        let block_cg: Vec<Vec<Vec<f64>>> = vertices
            .iter()
            .zip(&cg.blocks)
            .map(|(vs, m)| vs.to_f64().iter().map(|v| m.apply(v)).collect())
            .collect();
        match opts.formulation {
            Formulation::Vertex => Self::vertex_form(model, opts, cg, &block_cg),
            Formulation::Hybrid => Self::hybrid_form(model, opts, cg, &block_cg),
        }
    }

    fn vertex_form(
        model: &BroadcastModel,
        opts: &CertifyOptions,
        cg: CgProduct,
        block_cg: &[Vec<Vec<f64>>],
    ) -> Result<Self> {
        let counts: Vec<usize> = block_cg.iter().map(Vec::len).collect();
        let cols = counts
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c))
            .filter(|&c| c <= opts.max_columns)
            .ok_or(Error::Budget(opts.max_columns))?;
        let rows = cg.full.len();
        let mut lp = LpProblem::new(rows, cols);
        let groups: Vec<Vec<usize>> = tuples(&counts).collect();
        for (j, tuple) in groups.iter().enumerate() {
            let parts: Vec<&[f64]> = tuple
                .iter()
                .zip(block_cg)
                .map(|(&i, b)| b[i].as_slice())
                .collect();
            lp.column_mut(j).copy_from_slice(&cg.product(&parts));
        }
        lp.product = Some(ProductColumns {
            factors: block_cg.to_vec(),
            rows: cg.split.clone(),
        });
        Ok(Self {
            model: model.clone(),
            formulation: Formulation::Vertex,
            cg,
            template: lp,
            cg_rows: rows,
            groups,
            group_width: 1,
            variable_block: None,
            opts: opts.clone(),
        })
    }

    fn hybrid_form(
        model: &BroadcastModel,
        opts: &CertifyOptions,
        cg: CgProduct,
        block_cg: &[Vec<Vec<f64>>],
    ) -> Result<Self> {
        let vb = match opts.variable_block {
            Some(b) if b < model.blocks.len() && model.kinds[b] == BlockKind::NoSignalling => b,
            Some(b) => {
                return Err(Error::UnsupportedModel(format!(
                    "block {b} is not a no-signalling block"
                )))
            }
            None => (0..model.blocks.len())
                .rev()
                .find(|&b| model.kinds[b] == BlockKind::NoSignalling)
                .ok_or_else(|| {
                    Error::UnsupportedModel("the hybrid form needs a no-signalling block".into())
                })?,
        };
        let vscen = model.block_scenario(vb);
        let width = vscen.table_len();
        let box_rows = box_constraints(&vscen)?;
        let counts: Vec<usize> = (0..model.blocks.len())
            .map(|b| if b == vb { 1 } else { block_cg[b].len() })
            .collect();
        let groups: Vec<Vec<usize>> = tuples(&counts).collect();
        let cols = groups
            .len()
            .checked_mul(width)
            .filter(|&c| c <= opts.max_columns)
            .ok_or(Error::Budget(opts.max_columns))?;
        let cg_rows = cg.full.len();
        let rows = cg_rows + groups.len() * box_rows.len();
        let mut lp = LpProblem::new(rows, cols);
        let vmap: &CgMap = &cg.blocks[vb];
        let unit_cg: Vec<Vec<f64>> = (0..width)
            .map(|t| {
                let mut e = vec![0.0; width];
                e[t] = 1.0;
                vmap.apply(&e)
            })
            .collect();
        for (g, tuple) in groups.iter().enumerate() {
            for t in 0..width {
                let parts: Vec<&[f64]> = (0..model.blocks.len())
                    .map(|b| {
                        if b == vb {
                            unit_cg[t].as_slice()
                        } else {
                            block_cg[b][tuple[b]].as_slice()
                        }
                    })
                    .collect();
                let col = cg.product(&parts);
                let j = g * width + t;
                let dst = lp.column_mut(j);
                dst[..cg_rows].copy_from_slice(&col);
                for (r, row) in box_rows.iter().enumerate() {
                    dst[cg_rows + g * box_rows.len() + r] = row[t];
                }
            }
        }
        Ok(Self {
            model: model.clone(),
            formulation: Formulation::Hybrid,
            cg,
            template: lp,
            cg_rows,
            groups,
            group_width: width,
            variable_block: Some(vb),
            opts: opts.clone(),
        })
    }

    pub fn lp_size(&self) -> (usize, usize) {
        (self.template.rows, self.template.cols)
    }

    fn check(&self, b: &Behaviour) -> Result<()> {
        if b.scenario() != &self.model.scenario {
            return Err(Error::ScenarioMismatch(
                "behaviour and model scenarios differ".into(),
            ));
        }
        Ok(())
    }

    fn rhs_for(&self, g: &[f64]) -> Vec<f64> {
        let mut rhs = vec![0.0; self.template.rows];
        rhs[..self.cg_rows].copy_from_slice(g);
        rhs
    }

    fn separation(&self, y_cg: &[f64], sign: f64, b: &Behaviour) -> Result<Separation> {
        let n = self.model.scenario.table_len();
        let mut coef = self.cg.full.transpose_apply(y_cg, n);
        let scale = coef.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let s = if scale > 0.0 { sign / scale } else { sign };
        coef.iter_mut().for_each(|c| *c *= s);
        let mut ineq = Inequality::new(self.model.scenario.clone(), coef, 0.0, BoundKind::BroadcastLocal)?;
        let bound = model_bound(&ineq, &self.model)?;
        ineq.bound = to_f64(&bound);
        let value = ineq.evaluate(b)?;
        Ok(Separation {
            inequality: ineq,
            bound_exact: crate::polytope::format_rational(&bound),
            value,
        })
    }

    fn weights(&self, sol: &LpSolution) -> Vec<WeightedTerm> {
        let mut out = Vec::new();
        for (g, tuple) in self.groups.iter().enumerate() {
            let x = &sol.x[g * self.group_width..(g + 1) * self.group_width];
            // Box normalization = Σ over outcomes at the first setting of the variable block.
            let w = match self.variable_block {
                None => x[0],
                Some(vb) => {
                    let vs = self.model.block_scenario(vb);
                    let s = vs.num_settings();
                    (0..vs.num_outcomes()).map(|a| x[a * s]).sum()
                }
            };
            if w > 1e-12 {
                let vertices = match self.variable_block {
                    None => tuple.clone(),
                    Some(vb) => tuple
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| *b != vb)
                        .map(|(_, &i)| i)
                        .collect(),
                };
                out.push(WeightedTerm { vertices, weight: w });
            }
        }
        out
    }

    pub fn membership(&self, b: &Behaviour) -> Result<MembershipResult> {
        self.check(b)?;
        if let Some(sep) = signalling_witness(b)? {
            return Ok(MembershipResult {
                feasible: false,
                weights: None,
                separating: Some(sep),
                lp_iterations: 0,
                exact_confirmed: None,
            });
        }
        let mut lp = self.template.clone();
        lp.rhs = self.rhs_for(&self.cg.full.apply(b.table()));
        let sol = solve_with(&lp, &self.opts.lp)?;
        let exact_confirmed = sol.exact.as_ref().map(|e| e.confirmed);
        match sol.status {
            LpStatus::Optimal => Ok(MembershipResult {
                feasible: true,
                weights: Some(self.weights(&sol)),
                separating: None,
                lp_iterations: sol.iterations,
                exact_confirmed,
            }),
            LpStatus::Infeasible => {
                let y = sol.farkas.as_ref().expect("certificate");
                Ok(MembershipResult {
                    feasible: false,
                    weights: None,
                    separating: Some(self.separation(&y[..self.cg_rows], 1.0, b)?),
                    lp_iterations: sol.iterations,
                    exact_confirmed,
                })
            }
            LpStatus::Unbounded => Err(Error::Lp("feasibility problem reported unbounded".into())),
        }
    }

    /// max v such that v·p_ent + (1 − v)·p_noise is in the model, 0 ≤ v ≤ 1.
    pub fn visibility(&self, p_ent: &Behaviour, p_noise: &Behaviour) -> Result<VisibilityResult> {
        self.check(p_ent)?;
        self.check(p_noise)?;
        for b in [p_ent, p_noise] {
            if signalling_witness(b)?.is_some() {
                return Err(Error::Parameter("visibility needs no-signalling behaviours".into()));
            }
        }
        let ge = self.cg.full.apply(p_ent.table());
        let gn = self.cg.full.apply(p_noise.table());
        let base = &self.template;
        let mut lp = LpProblem::new(base.rows, base.cols + 1);
        lp.matrix[..base.matrix.len()].copy_from_slice(&base.matrix);
        lp.product = base.product.clone();
        let vcol = lp.column_mut(base.cols);
        for i in 0..self.cg_rows {
            vcol[i] = -(ge[i] - gn[i]);
        }
        lp.rhs = self.rhs_for(&gn);
        lp.objective[base.cols] = 1.0;
        lp.upper[base.cols] = Some(1.0);
        let sol = solve_with(&lp, &self.opts.lp)?;
        let exact_confirmed = sol.exact.as_ref().map(|e| e.confirmed);
        match sol.status {
            LpStatus::Optimal => {
                let v_star = sol.x[base.cols].clamp(0.0, 1.0);
                let separating = if v_star < 1.0 - 1e-9 {
                    Some(self.separation(&sol.duals[..self.cg_rows], -1.0, p_ent)?)
                } else {
                    None
                };
                Ok(VisibilityResult {
                    v_star,
                    separating,
                    lp_iterations: sol.iterations,
                    exact_confirmed,
                })
            }
            LpStatus::Infeasible => Err(Error::Parameter(
                "the noise behaviour is outside the model".into(),
            )),
            LpStatus::Unbounded => Err(Error::Lp("visibility LP reported unbounded".into())),
        }
    }
}

/// Independent homogeneous constraints of a sub-normalized no-signalling box:
/// equal normalization across settings plus the marginal conditions.
fn box_constraints(scen: &crate::scenarios::Scenario) -> Result<Vec<Vec<f64>>> {
    let h = ns_h_representation(scen.inputs(), scen.outputs())?;
    let n = h.dimension;
    let s = scen.num_settings();
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    for x in 1..s {
        let mut r = vec![Rational::zero(); n];
        for a in 0..scen.num_outcomes() {
            r[a * s + x] += rat(1);
            r[a * s] -= rat(1);
        }
        rows.push(r);
    }
    rows.extend(
        h.equalities
            .iter()
            .filter(|c| c.rhs.is_zero())
            .map(|c| c.row.clone()),
    );
    let mut kept: Vec<Vec<Rational>> = Vec::new();
    for r in rows {
        kept.push(r);
        if rank(&kept) < kept.len() {
            kept.pop();
        }
    }
    Ok(kept
        .iter()
        .map(|r| r.iter().map(to_f64).collect())
        .collect())
}

/// A single-party no-signalling condition violated by more than [`NS_TOL`], as an inequality
/// with model bound 0.
pub fn signalling_witness(b: &Behaviour) -> Result<Option<Separation>> {
    let scen = b.scenario();
    let n = scen.parties();
    let mut best: Option<(f64, Vec<(usize, f64)>)> = None;
    for k in 0..n {
        for x in tuples(scen.inputs()).filter(|x| x[k] != 0) {
            let mut x0 = x.clone();
            x0[k] = 0;
            for a in tuples(scen.outputs()).filter(|a| a[k] == 0) {
                let mut terms = Vec::new();
                let mut v = 0.0;
                for ak in 0..scen.outputs()[k] {
                    let mut aa = a.clone();
                    aa[k] = ak;
                    let i1 = scen.index(&aa, &x);
                    let i0 = scen.index(&aa, &x0);
                    v += b.table()[i1] - b.table()[i0];
                    terms.push((i1, 1.0));
                    terms.push((i0, -1.0));
                }
                if v.abs() > NS_TOL && best.as_ref().is_none_or(|(bv, _)| v.abs() > *bv) {
                    let s = v.signum();
                    best = Some((v.abs(), terms.into_iter().map(|(i, c)| (i, c * s)).collect()));
                }
            }
        }
    }
    let Some((value, terms)) = best else {
        return Ok(None);
    };
    let mut coef = vec![0.0; scen.table_len()];
    for (i, c) in terms {
        coef[i] += c;
    }
    Ok(Some(Separation {
        inequality: Inequality::new(scen.clone(), coef, 0.0, BoundKind::Ns)?,
        bound_exact: "0/1".into(),
        value,
    }))
}

pub fn membership(b: &Behaviour, m: &BroadcastModel, opts: &CertifyOptions) -> Result<MembershipResult> {
    PreparedModel::new(m, opts)?.membership(b)
}

pub fn membership_vertex_form(b: &Behaviour, m: &BroadcastModel) -> Result<MembershipResult> {
    membership(b, m, &CertifyOptions::default())
}

pub fn membership_hybrid_form(b: &Behaviour, m: &BroadcastModel) -> Result<MembershipResult> {
    membership(b, m, &CertifyOptions::hybrid())
}

pub fn visibility(
    p_ent: &Behaviour,
    p_noise: &Behaviour,
    m: &BroadcastModel,
    opts: &CertifyOptions,
) -> Result<VisibilityResult> {
    PreparedModel::new(m, opts)?.visibility(p_ent, p_noise)
}
