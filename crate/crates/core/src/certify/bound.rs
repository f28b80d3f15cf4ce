use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::model::{table_split, BroadcastModel};
use crate::error::{Error, Result};
use crate::polytope::{from_f64_exact, Rational};
use crate::scenarios::Inequality;

/// Coefficients rearranged block-major: index (i_0, …, i_{k−1}) over block tables.
fn block_major<T: Clone + Default>(model: &BroadcastModel, coef: &[T]) -> (Vec<T>, Vec<usize>) {
    let dims: Vec<usize> = (0..model.blocks.len())
        .map(|b| model.block_scenario(b).table_len())
        .collect();
    let mut t = vec![T::default(); coef.len()];
    for (idx, s) in table_split(model).into_iter().enumerate() {
        let pos = s.iter().zip(&dims).fold(0, |acc, (&i, &d)| acc * d + i);
        t[pos] = coef[idx].clone();
    }
    (t, dims)
}

fn check_scenario(ineq: &Inequality, model: &BroadcastModel) -> Result<()> {
    if ineq.scenario != model.scenario {
        return Err(Error::ScenarioMismatch(
            "inequality and model scenarios differ".into(),
        ));
    }
    Ok(())
}

/// Exact maximum of the inequality over all products of block extremal points.
pub fn model_bound(ineq: &Inequality, model: &BroadcastModel) -> Result<Rational> {
    check_scenario(ineq, model)?;
    let coef: Vec<Rational> = ineq
        .coefficients
        .iter()
        .map(|&c| from_f64_exact(c).ok_or_else(|| Error::Parameter("non-finite coefficient".into())))
        .collect::<Result<_>>()?;
    // Work in integers: scale coefficients and each block's vertices by common denominators.
    let dc = coef.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<BigInt> = coef.iter().map(|q| q.numer() * (&dc / q.denom())).collect();
    let (tensor, dims) = block_major(model, &ints);
    let mut scale = dc;
    let mut blocks = Vec::new();
    for b in 0..model.blocks.len() {
        let vs = model.block_vertices(b)?;
        let db = vs
            .vertices
            .iter()
            .flatten()
            .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let iv: Vec<Vec<(usize, BigInt)>> = vs
            .vertices
            .iter()
            .map(|v| {
                v.iter()
                    .enumerate()
                    .filter(|(_, q)| !q.is_zero())
                    .map(|(i, q)| (i, q.numer() * (&db / q.denom())))
                    .collect()
            })
            .collect();
        scale *= db;
        blocks.push(iv);
    }
    let best = max_rec(&tensor, &dims, &blocks, 0);
    Ok(Rational::new(best, scale))
}

fn max_rec(t: &[BigInt], dims: &[usize], blocks: &[Vec<Vec<(usize, BigInt)>>], level: usize) -> BigInt {
    let stride: usize = dims[level + 1..].iter().product();
    let mut best: Option<BigInt> = None;
    for v in &blocks[level] {
        let val = if level + 1 == dims.len() {
            v.iter().fold(BigInt::zero(), |acc, (i, w)| acc + w * &t[*i])
        } else {
            let mut sub = vec![BigInt::zero(); stride];
            for (i, w) in v {
                for (s, x) in sub.iter_mut().zip(&t[i * stride..(i + 1) * stride]) {
                    if !x.is_zero() {
                        *s += w * x;
                    }
                }
            }
            max_rec(&sub, dims, blocks, level + 1)
        };
        if best.as_ref().is_none_or(|b| val > *b) {
            best = Some(val);
        }
    }
    best.expect("every block has a vertex")
}

/// Floating-point counterpart of [`model_bound`], for inner loops.
pub fn model_bound_f64(ineq: &Inequality, model: &BroadcastModel) -> Result<f64> {
    check_scenario(ineq, model)?;
    let (tensor, dims) = block_major(model, &ineq.coefficients);
    let blocks: Vec<Vec<Vec<(usize, f64)>>> = (0..model.blocks.len())
        .map(|b| {
            Ok(model
                .block_vertices(b)?
                .to_f64()
                .into_iter()
                .map(|v| v.into_iter().enumerate().filter(|(_, x)| *x != 0.0).collect())
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(max_rec_f64(&tensor, &dims, &blocks, 0))
}

fn max_rec_f64(t: &[f64], dims: &[usize], blocks: &[Vec<Vec<(usize, f64)>>], level: usize) -> f64 {
    let stride: usize = dims[level + 1..].iter().product();
    let mut best = f64::NEG_INFINITY;
    let mut sub = vec![0.0; stride];
    for v in &blocks[level] {
        let val = if level + 1 == dims.len() {
            v.iter().map(|(i, w)| w * t[*i]).sum()
        } else {
            sub.iter_mut().for_each(|s| *s = 0.0);
            for (i, w) in v {
                for (s, x) in sub.iter_mut().zip(&t[i * stride..(i + 1) * stride]) {
                    *s += w * x;
                }
            }
            max_rec_f64(&sub, dims, blocks, level + 1)
        };
        best = best.max(val);
    }
    best
}
