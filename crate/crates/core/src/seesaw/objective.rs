//! Inequality values and their derivatives as operators on the broadcast state.

use crate::error::{Error, Result};
use crate::quantum::{
    apply_isometry, partial_trace, sign_operator, ComplexMatrix, Isometry, SubsystemShape,
};
use crate::scenarios::{Channel, CorrelatorTensor};

/// sign(F) with sign(0) = +1: the best observable −I ⪯ A ⪯ I for Tr(A·F).
pub fn update_observable(context: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !context.is_square() {
        return Err(Error::Dimension("context operator must be square".into()));
    }
    let defect = context.hermiticity_defect();
    if defect > 1e-10 * context.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    sign_operator(context)
}

/// Σ_J T[J] ⊗_k Ã_{j_k}, bucketed by j_skip when `skip` is set (the skipped
/// party's slot holds the identity).
pub(crate) fn correlator_operators(
    tensor: &CorrelatorTensor,
    observables: &[Vec<ComplexMatrix>],
    dims: &[usize],
    skip: Option<usize>,
) -> Vec<ComplexMatrix> {
    let total: usize = dims.iter().product();
    let buckets = skip.map_or(1, |k| tensor.radices[k]);
    let mut out = vec![ComplexMatrix::zeros(total, total); buckets];
    let mut j = vec![0; dims.len()];
    build(tensor, observables, dims, skip, 0, &ComplexMatrix::identity(1), &mut j, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn build(
    tensor: &CorrelatorTensor,
    observables: &[Vec<ComplexMatrix>],
    dims: &[usize],
    skip: Option<usize>,
    level: usize,
    prefix: &ComplexMatrix,
    j: &mut Vec<usize>,
    out: &mut [ComplexMatrix],
) {
    if level == dims.len() {
        let w = tensor.get(j);
        if w != 0.0 {
            let b = skip.map_or(0, |k| j[k]);
            out[b].add_scaled(prefix, w.into());
        }
        return;
    }
    if !subtree_nonzero(tensor, j, level) {
        return;
    }
    let id = ComplexMatrix::identity(dims[level]);
    for jl in 0..tensor.radices[level] {
        j[level] = jl;
        if !subtree_nonzero(tensor, j, level + 1) {
            continue;
        }
        let factor = if jl == 0 || skip == Some(level) {
            &id
        } else {
            &observables[level][jl - 1]
        };
        let next = prefix.kron(factor);
        build(tensor, observables, dims, skip, level + 1, &next, j, out);
    }
    j[level] = 0;
}

/// Whether any entry with prefix j[..level] is nonzero.
fn subtree_nonzero(tensor: &CorrelatorTensor, j: &[usize], level: usize) -> bool {
    let rest: usize = tensor.radices[level..].iter().product();
    let start = j[..level]
        .iter()
        .zip(&tensor.radices)
        .fold(0, |acc, (&d, &r)| acc * r + d)
        * rest;
    tensor.values[start..start + rest].iter().any(|&v| v != 0.0)
}

/// Context operators F_x for party k: value = Σ_x Tr(A_x F_x) + constant.
pub(crate) fn party_contexts(
    tensor: &CorrelatorTensor,
    observables: &[Vec<ComplexMatrix>],
    rho: &ComplexMatrix,
    shape: &SubsystemShape,
    k: usize,
) -> Result<Vec<ComplexMatrix>> {
    let ops = correlator_operators(tensor, observables, shape.dims(), Some(k));
    ops[1..]
        .iter()
        .map(|w| Ok(partial_trace(&rho.matmul(w), shape, &[k])?.hermitian_part()))
        .collect()
}

/// State with every channel except `skip` applied, and the position of the
/// skipped channel's input factor in it.
pub(crate) fn state_without(
    rho: &ComplexMatrix,
    shape: &SubsystemShape,
    channels: &[Channel],
    skip: usize,
) -> Result<(ComplexMatrix, SubsystemShape, usize)> {
    let mut order: Vec<usize> = (0..channels.len()).collect();
    order.sort_by(|&a, &b| channels[b].on.cmp(&channels[a].on));
    let mut r = rho.clone();
    let mut sh = shape.clone();
    let target = channels[skip].on;
    let mut pos = target;
    for &c in &order {
        if c == skip {
            continue;
        }
        let ch = &channels[c];
        r = apply_isometry(&r, &sh, ch.on, &ch.isometry)?;
        sh = sh.replace(ch.on, ch.isometry.out_dims());
        if ch.on < target {
            pos += ch.isometry.out_dims().len() - 1;
        }
    }
    Ok((r, sh, pos))
}

/// Objective V ↦ Tr[W (I⊗V⊗I) ρ' (I⊗V⊗I)†] for one channel.
pub(crate) struct ChannelObjective {
    pub w: ComplexMatrix,
    pub rho: ComplexMatrix,
    pub left: usize,
    pub right: usize,
}

impl ChannelObjective {
    fn lift(&self, v: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::identity(self.left)
            .kron(v)
            .kron(&ComplexMatrix::identity(self.right))
    }

    pub fn value(&self, v: &ComplexMatrix) -> f64 {
        let vt = self.lift(v);
        let inner = vt.matmul(&self.rho).matmul(&vt.adjoint());
        self.w.trace_product(&inner).re
    }

    /// ∂/∂V̄; the differential is 2·Re Tr(G† dV).
    pub fn gradient(&self, v: &ComplexMatrix) -> ComplexMatrix {
        let (dout, din) = (v.rows(), v.cols());
        let x = self.w.matmul(&self.lift(v)).matmul(&self.rho);
        let r = self.right;
        let mut g = ComplexMatrix::zeros(dout, din);
        for l in 0..self.left {
            for o in 0..dout {
                for i in 0..din {
                    let mut acc = crate::quantum::ZERO;
                    for rr in 0..r {
                        acc += x[((l * dout + o) * r + rr, (l * din + i) * r + rr)];
                    }
                    g[(o, i)] += acc;
                }
            }
        }
        g
    }
}

/// Tangent projection G − V·herm(V†G) on the isometry manifold.
pub(crate) fn riemannian_gradient(v: &ComplexMatrix, g: &ComplexMatrix) -> ComplexMatrix {
    let vg = v.adjoint().matmul(g);
    let sym = (&vg + &vg.adjoint()).scale_real(0.5);
    g - &v.matmul(&sym)
}

pub(crate) fn channel_objective(
    tensor: &CorrelatorTensor,
    observables: &[Vec<ComplexMatrix>],
    rho: &ComplexMatrix,
    shape: &SubsystemShape,
    channels: &[Channel],
    c: usize,
) -> Result<ChannelObjective> {
    let (r, sh, pos) = state_without(rho, shape, channels, c)?;
    let fin = sh.replace(pos, channels[c].isometry.out_dims());
    let w = correlator_operators(tensor, observables, fin.dims(), None).remove(0);
    let (left, _, right) = sh.split_at(pos);
    Ok(ChannelObjective {
        w,
        rho: r,
        left,
        right,
    })
}

/// Outcome of one channel update.
#[derive(Clone, Debug)]
pub(crate) struct ChannelStep {
    pub isometry: Isometry,
    /// Line search ran out of halvings.
    pub stalled: bool,
}

/// Backtracked Riemannian ascent steps with polar retraction.
pub(crate) fn ascend_channel(
    obj: &ChannelObjective,
    start: &Isometry,
    cfg: &super::SeesawConfig,
) -> Result<ChannelStep> {
    let mut v = start.matrix().clone();
    let mut value = obj.value(&v);
    let mut stalled = false;
    for _ in 0..cfg.channel_iterations {
        let g = obj.gradient(&v);
        let xi = riemannian_gradient(&v, &g);
        let slope = 2.0 * xi.frobenius_norm().powi(2);
        if slope < 1e-24 {
            break;
        }
        let mut t = cfg.channel_step;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let mut cand = v.clone();
            cand.add_scaled(&xi, t.into());
            if let Ok(p) = crate::quantum::polar_isometry(&cand) {
                let val = obj.value(&p);
                if val >= value + cfg.armijo * t * slope {
                    accepted = Some((p, val));
                    break;
                }
            }
            t *= cfg.channel_backtrack;
        }
        match accepted {
            Some((p, val)) => {
                let gain = val - value;
                v = p;
                value = val;
                if gain < cfg.convergence_eps * 1e-2 {
                    break;
                }
            }
            None => {
                stalled = true;
                break;
            }
        }
    }
    Ok(ChannelStep {
        isometry: Isometry::new(v, start.out_dims().to_vec())?,
        stalled,
    })
}
