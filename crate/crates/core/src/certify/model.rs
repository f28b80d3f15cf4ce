use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::{deterministic_vertices, ns_vertices, VertexSet};
use crate::scenarios::{digits, mixed_radix, tuples, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    DeterministicLocal,
    NoSignalling,
}

/// Parties grouped into blocks; model points are mixtures of products of
/// block extremal points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BroadcastModel {
    pub scenario: Scenario,
    pub blocks: Vec<Vec<usize>>,
    pub kinds: Vec<BlockKind>,
}

impl BroadcastModel {
    pub fn new(scenario: Scenario, blocks: Vec<Vec<usize>>, kinds: Vec<BlockKind>) -> Result<Self> {
        let m = Self {
            scenario,
            blocks,
            kinds,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::UnsupportedModel("a model needs at least one block".into()));
        }
        if self.blocks.len() != self.kinds.len() {
            return Err(Error::UnsupportedModel("one kind per block".into()));
        }
        let n = self.scenario.parties();
        let mut seen = vec![false; n];
        for b in &self.blocks {
            if b.is_empty() {
                return Err(Error::UnsupportedModel("empty block".into()));
            }
            for &k in b {
                if k >= n || seen[k] {
                    return Err(Error::UnsupportedModel(format!(
                        "blocks must partition parties 0..{n}"
                    )));
                }
                seen[k] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::UnsupportedModel("blocks do not cover every party".into()));
        }
        Ok(())
    }

    /// Fully local: every party its own deterministic block.
    pub fn local(scenario: Scenario) -> Self {
        let n = scenario.parties();
        Self {
            scenario,
            blocks: (0..n).map(|k| vec![k]).collect(),
            kinds: vec![BlockKind::DeterministicLocal; n],
        }
    }

    /// Party 0 deterministic, the rest one no-signalling block.
    pub fn broadcast_three(scenario: Scenario) -> Result<Self> {
        Self::new(
            scenario,
            vec![vec![0], vec![1, 2]],
            vec![BlockKind::DeterministicLocal, BlockKind::NoSignalling],
        )
    }

    /// Parties (0,1) and (2,3) as two no-signalling blocks.
    pub fn broadcast_four(scenario: Scenario) -> Result<Self> {
        Self::new(
            scenario,
            vec![vec![0, 1], vec![2, 3]],
            vec![BlockKind::NoSignalling, BlockKind::NoSignalling],
        )
    }

    pub fn block_scenario(&self, b: usize) -> Scenario {
        self.scenario.restrict(&self.blocks[b])
    }

    /// Extremal points of block `b`, cached across calls.
    pub fn block_vertices(&self, b: usize) -> Result<Arc<VertexSet>> {
        let s = self.block_scenario(b);
        cached_vertices(s.inputs(), s.outputs(), self.kinds[b])
    }
}

type CacheKey = (Vec<usize>, Vec<usize>, BlockKind);

fn cached_vertices(inputs: &[usize], outputs: &[usize], kind: BlockKind) -> Result<Arc<VertexSet>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<VertexSet>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (inputs.to_vec(), outputs.to_vec(), kind);
    if let Some(v) = cache.lock().expect("cache lock").get(&key) {
        return Ok(v.clone());
    }
    let v = Arc::new(match kind {
        BlockKind::DeterministicLocal => deterministic_vertices(inputs, outputs)?,
        BlockKind::NoSignalling => ns_vertices(inputs, outputs)?,
    });
    cache.lock().expect("cache lock").insert(key, v.clone());
    Ok(v)
}

/// Collins–Gisin coordinates: per party j_k = 0 (marginalized) or
/// 1 + x·(o−1) + a with a < o − 1. Marginals are read at setting 0 of the
/// marginalized parties, which is exact for no-signalling tables.
#[derive(Clone, Debug)]
pub(crate) struct CgMap {
    pub radices: Vec<usize>,
    /// Table indices summed by each coordinate.
    pub rows: Vec<Vec<usize>>,
}

impl CgMap {
    pub fn new(scen: &Scenario) -> Self {
        let n = scen.parties();
        let radices: Vec<usize> = (0..n)
            .map(|k| 1 + scen.inputs()[k] * (scen.outputs()[k] - 1))
            .collect();
        let rows = tuples(&radices)
            .map(|j| {
                let mut xs = vec![0; n];
                let mut fixed: Vec<Option<usize>> = vec![None; n];
                for k in 0..n {
                    if j[k] > 0 {
                        let o1 = scen.outputs()[k] - 1;
                        xs[k] = (j[k] - 1) / o1;
                        fixed[k] = Some((j[k] - 1) % o1);
                    }
                }
                tuples(scen.outputs())
                    .filter(|a| (0..n).all(|k| fixed[k].is_none_or(|f| f == a[k])))
                    .map(|a| scen.index(&a, &xs))
                    .collect()
            })
            .collect();
        Self { radices, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, table: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&i| table[i]).sum())
            .collect()
    }

    /// Probability coefficients of the functional y · CG(p).
    pub fn transpose_apply(&self, y: &[f64], table_len: usize) -> Vec<f64> {
        let mut out = vec![0.0; table_len];
        for (yi, r) in y.iter().zip(&self.rows) {
            if *yi != 0.0 {
                for &i in r {
                    out[i] += yi;
                }
            }
        }
        out
    }
}

/// Full Collins–Gisin coordinates as products of block coordinates.
#[derive(Clone, Debug)]
pub(crate) struct CgProduct {
    pub full: CgMap,
    pub blocks: Vec<CgMap>,
    /// For each full coordinate, the coordinate index inside each block.
    pub split: Vec<Vec<usize>>,
}

impl CgProduct {
    pub fn new(model: &BroadcastModel) -> Self {
        let full = CgMap::new(&model.scenario);
        let blocks: Vec<CgMap> = (0..model.blocks.len())
            .map(|b| CgMap::new(&model.block_scenario(b)))
            .collect();
        let split = (0..full.len())
            .map(|idx| {
                let j = digits(idx, &full.radices);
                model
                    .blocks
                    .iter()
                    .zip(&blocks)
                    .map(|(parties, bm)| {
                        let jb: Vec<usize> = parties.iter().map(|&k| j[k]).collect();
                        mixed_radix(&jb, &bm.radices)
                    })
                    .collect()
            })
            .collect();
        Self {
            full,
            blocks,
            split,
        }
    }

    /// Full coordinate vector of a product of block coordinate vectors.
    pub fn product(&self, parts: &[&[f64]]) -> Vec<f64> {
        self.split
            .iter()
            .map(|s| s.iter().zip(parts).map(|(&i, p)| p[i]).product())
            .collect()
    }
}

/// For each full table index, the table index inside each block.
pub(crate) fn table_split(model: &BroadcastModel) -> Vec<Vec<usize>> {
    let scen = &model.scenario;
    let subs: Vec<Scenario> = (0..model.blocks.len()).map(|b| model.block_scenario(b)).collect();
    (0..scen.table_len())
        .map(|idx| {
            let (a, x) = scen.split_index(idx);
            model
                .blocks
                .iter()
                .zip(&subs)
                .map(|(parties, sub)| {
                    let ab: Vec<usize> = parties.iter().map(|&k| a[k]).collect();
                    let xb: Vec<usize> = parties.iter().map(|&k| x[k]).collect();
                    sub.index(&ab, &xb)
                })
                .collect()
        })
        .collect()
}
