//! Broadcast-local models and the linear programs that test behaviours against them.
//!
//! Constraints are written in Collins–Gisin coordinates: a no-signalling table is
//! determined by its marginals, so the equality system has one row per coordinate
//! instead of one per table entry.

mod bound;
mod chsh;
mod fig2;
mod membership;
mod model;

pub use bound::{model_bound, model_bound_f64};
pub use chsh::{correlation_matrix, horodecki_chsh_max};
pub use fig2::{fig2_csv, fig2_curves, fig2_grid, fig2_point, Fig2Options, Fig2Row};
pub use membership::{
    membership, membership_hybrid_form, membership_vertex_form, signalling_witness, visibility,
    CertifyOptions, Formulation, MembershipResult, PreparedModel, Separation, VisibilityResult,
    WeightedTerm, NS_TOL,
};
pub use model::{BlockKind, BroadcastModel};

#[cfg(test)]
mod tests;
