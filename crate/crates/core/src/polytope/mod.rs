//! Exact vertex enumeration for deterministic-local and no-signalling polytopes.

mod brute;
mod dd;
mod hrep;
mod rational;
mod vertices;

pub use dd::EnumerationBudget;
pub use hrep::{ns_h_representation, Constraint, HRepresentation};
pub use rational::{
    dot, format_rational, from_f64_exact, parse_rational, rank, rank_in_place, rat, ratio, to_f64, Rational,
};
pub use vertices::{
    classify_vertex, deterministic_vertices, deterministic_vertices_with, enumerate_vertices,
    enumerate_vertices_brute_force, enumerate_vertices_with, ns_vertices, VertexLabel, VertexSet,
};

#[cfg(test)]
mod tests;
