use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::brute::brute_force_vertices;
use super::dd::{dd_vertices, EnumerationBudget};
use super::hrep::{ns_h_representation, rational_vec, HRepresentation};
use super::rational::{to_f64, Rational};
use crate::error::{Error, Result};
use crate::scenarios::{tuples, Behaviour, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexLabel {
    LocalDeterministic,
    NonlocalExtremal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexSet {
    pub dimension: usize,
    #[serde(with = "vertex_list")]
    pub vertices: Vec<Vec<Rational>>,
    pub labels: Vec<VertexLabel>,
}

mod vertex_list {
    use super::rational_vec;
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Row(#[serde(with = "rational_vec")] Vec<Rational>);

    pub fn serialize<S: Serializer>(v: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|r| Row(r.clone())))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Rational>>, D::Error> {
        Ok(Vec::<Row>::deserialize(d)?.into_iter().map(|r| r.0).collect())
    }
}

impl VertexSet {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn count(&self, label: VertexLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.vertices
            .iter()
            .map(|v| v.iter().map(to_f64).collect())
            .collect()
    }

    /// Vertices as behaviours of `scen` (coordinates must follow its table order).
    pub fn behaviours(&self, scen: &Scenario) -> Result<Vec<Behaviour>> {
        if scen.table_len() != self.dimension {
            return Err(Error::ScenarioMismatch(format!(
                "vertex dimension {} vs table length {}",
                self.dimension,
                scen.table_len()
            )));
        }
        self.to_f64()
            .into_iter()
            .map(|t| Behaviour::new(scen.clone(), t))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("vertex sets serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: VertexSet = serde_json::from_str(text)?;
        if v.labels.len() != v.vertices.len() || v.vertices.iter().any(|r| r.len() != v.dimension) {
            return Err(Error::Dimension("inconsistent vertex set".into()));
        }
        Ok(v)
    }
}

/// All deterministic behaviours, in lexicographic order.
pub fn deterministic_vertices(inputs: &[usize], outputs: &[usize]) -> Result<VertexSet> {
    deterministic_vertices_with(inputs, outputs, EnumerationBudget::default().max_vertices)
}

pub fn deterministic_vertices_with(
    inputs: &[usize],
    outputs: &[usize],
    max_vertices: usize,
) -> Result<VertexSet> {
    let scen = Scenario::new(inputs.to_vec(), outputs.to_vec())?;
    let mut count: usize = 1;
    for (&m, &o) in inputs.iter().zip(outputs) {
        for _ in 0..m {
            count = count.checked_mul(o).ok_or(Error::Budget(max_vertices))?;
            if count > max_vertices {
                return Err(Error::Budget(max_vertices));
            }
        }
    }
    // One response digit per (party, setting).
    let radices: Vec<usize> = inputs
        .iter()
        .zip(outputs)
        .flat_map(|(&m, &o)| std::iter::repeat_n(o, m))
        .collect();
    let mut vertices = Vec::with_capacity(count);
    for resp in tuples(&radices) {
        let mut responses = Vec::with_capacity(inputs.len());
        let mut off = 0;
        for &m in inputs {
            responses.push(resp[off..off + m].to_vec());
            off += m;
        }
        let b = Behaviour::deterministic(&scen, &responses)?;
        vertices.push(
            b.table()
                .iter()
                .map(|&p| if p == 1.0 { Rational::one() } else { Rational::zero() })
                .collect::<Vec<_>>(),
        );
    }
    vertices.sort();
    Ok(VertexSet {
        dimension: scen.table_len(),
        labels: vec![VertexLabel::LocalDeterministic; vertices.len()],
        vertices,
    })
}

/// Vertices of a bounded polyhedron by double description.
///
/// Labels: integral vertices are tagged local-deterministic, the rest
/// nonlocal-extremal (for no-signalling polytopes this matches
/// [`classify_vertex`]).
pub fn enumerate_vertices(h: &HRepresentation) -> Result<VertexSet> {
    enumerate_vertices_with(h, EnumerationBudget::default())
}

pub fn enumerate_vertices_with(h: &HRepresentation, budget: EnumerationBudget) -> Result<VertexSet> {
    Ok(labelled(h.dimension, dd_vertices(h, budget)?))
}

/// The same vertex set, found by trying every basis. Exponential; for cross-checks.
pub fn enumerate_vertices_brute_force(h: &HRepresentation, max_bases: usize) -> Result<VertexSet> {
    Ok(labelled(h.dimension, brute_force_vertices(h, max_bases)?))
}

fn labelled(dimension: usize, vertices: Vec<Vec<Rational>>) -> VertexSet {
    let labels = vertices
        .iter()
        .map(|v| {
            if v.iter().all(|q| q.is_integer()) {
                VertexLabel::LocalDeterministic
            } else {
                VertexLabel::NonlocalExtremal
            }
        })
        .collect();
    VertexSet {
        dimension,
        vertices,
        labels,
    }
}

/// Vertices of the no-signalling polytope, labelled by [`classify_vertex`].
pub fn ns_vertices(inputs: &[usize], outputs: &[usize]) -> Result<VertexSet> {
    let h = ns_h_representation(inputs, outputs)?;
    let mut set = enumerate_vertices(&h)?;
    for (v, l) in set.vertices.iter().zip(set.labels.iter_mut()) {
        *l = classify_with(&h, v, inputs, outputs)?;
    }
    Ok(set)
}

/// Local-deterministic iff 0/1 valued and a product of per-party responses.
pub fn classify_vertex(v: &[Rational], inputs: &[usize], outputs: &[usize]) -> Result<VertexLabel> {
    let h = ns_h_representation(inputs, outputs)?;
    classify_with(&h, v, inputs, outputs)
}

fn classify_with(
    h: &HRepresentation,
    v: &[Rational],
    inputs: &[usize],
    outputs: &[usize],
) -> Result<VertexLabel> {
    if v.len() != h.dimension {
        return Err(Error::Dimension(format!(
            "point has {} coordinates, scenario needs {}",
            v.len(),
            h.dimension
        )));
    }
    if !h.is_vertex(v) {
        return Err(Error::NotAVertex);
    }
    if !v.iter().all(|q| q.is_zero() || q.is_one()) {
        return Ok(VertexLabel::NonlocalExtremal);
    }
    let scen = Scenario::new(inputs.to_vec(), outputs.to_vec())?;
    let b = Behaviour::new(scen.clone(), v.iter().map(to_f64).collect())?;
    let mut responses = Vec::new();
    for k in 0..inputs.len() {
        let marg = b.marginal(&[k])?;
        let resp = (0..inputs[k])
            .map(|x| (0..outputs[k]).find(|&a| marg.get(&[a], &[x]) == 1.0))
            .collect::<Option<Vec<usize>>>();
        match resp {
            Some(r) => responses.push(r),
            None => return Ok(VertexLabel::NonlocalExtremal),
        }
    }
    let det = Behaviour::deterministic(&scen, &responses)?;
    Ok(if det.table() == b.table() {
        VertexLabel::LocalDeterministic
    } else {
        VertexLabel::NonlocalExtremal
    })
}
