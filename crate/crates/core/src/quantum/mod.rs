//! Dense complex linear algebra and quantum primitives.
//!
//! Composite indices put the leftmost tensor factor in the most significant
//! position everywhere in the crate.

mod channels;
mod eig;
mod matrix;
mod ops;
mod states;

pub use channels::{
    apply_choi, apply_isometry, choi_of_isometry, random_gaussian, ChoiMatrix, Isometry,
};
pub use eig::{
    hermitian_eig, is_unitary_columns, min_eigenvalue, polar_isometry, sign_operator,
    HermitianEig,
};
pub use matrix::{
    bloch_observable, pauli_x, pauli_y, pauli_z, ComplexMatrix, StateVector, C64, I, ONE, ZERO,
};
pub use ops::{embed, partial_trace, partial_transpose, tensor, tensor_all, SubsystemShape};
pub use states::{
    ghz, isotropic, make_state, psi_theta, rho_alpha_theta, validate_density, BellState, StateKind,
};
