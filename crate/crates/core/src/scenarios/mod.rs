//! Behaviours, correlators, inequalities and quantum strategies.
//!
//! Outcome `a` maps to the value (−1)^a in every correlator. Behaviour tables
//! are flat: `outcomeIndex · #settings + settingIndex`, both mixed-radix with
//! the first party most significant.

mod behaviour;
mod inequality;
mod strategy;

pub use behaviour::{check_no_signalling, singleton_partition, Behaviour, Scenario};
pub use inequality::{
    builtin_inequality, chsh, i3_broadcast, i4_broadcast, mabk4, mabk4_coefficient, mabk4_terms,
    BoundKind, CorrelatorTensor, CorrelatorTerm, Inequality, BUILTIN_INEQUALITIES,
};
pub use strategy::{
    analytic_strategy, behaviour_from_strategy, chsh_textbook, dichotomic, i3_paper, i4_paper,
    mabk_ghz, random_observable, Channel, PartyMeasurements, QuantumStrategy, ANALYTIC_STRATEGIES,
    MABK_DEFAULT_OFFSET,
};

pub(crate) use behaviour::{digits, mixed_radix, tuples};

/// evaluate(ineq, b)
pub fn evaluate(ineq: &Inequality, b: &Behaviour) -> crate::Result<f64> {
    ineq.evaluate(b)
}
