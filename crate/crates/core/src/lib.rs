//! Certification of broadcast nonlocality and device-independent
//! entanglement for bipartite quantum states.
//!
//! The pipeline: build a behaviour from a state, broadcasting channels and
//! local measurements ([`scenarios`]); test it against a broadcast-local model
//! with a linear program ([`certify`], [`lp`]) whose extremal points come from
//! [`polytope`]; and search strategies that lower the critical visibility
//! ([`seesaw`]).

pub mod certify;
pub mod error;
pub mod json;
pub mod lp;
pub mod polytope;
pub mod quantum;
pub mod scenario_file;
pub mod scenarios;
pub mod seesaw;

pub use error::{Error, Result};
