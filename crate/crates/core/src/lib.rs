//! Classical sampling of measurement outcomes of high-temperature quantum
//! Gibbs states of k-local qubit Hamiltonians.
//!
//! The sampler draws outcome strings one qubit at a time from approximate
//! conditional marginals computed by a truncated cluster expansion; below the
//! threshold `beta_star` every estimate carries a rigorous tail bound, and
//! the induced distribution is within `2εN` of the true one in L1. A dense
//! reference implementation (valid to 12 qubits) backs the verification
//! suite.
//!
//! Modules:
//! - [`pauli`]: exact Pauli-string algebra and projector traces.
//! - [`model`]: Hamiltonian files, validation, derived constants.
//! - [`clusters`]: connected multiset-cluster enumeration.
//! - [`series`]: truncated formal power series and insertion jets.
//! - [`expansion`]: marginals, observables, correlations with tail bounds.
//! - [`sampler`]: autoregressive sampling, schedules, sample records.
//! - [`oracle`]: exact dense reference computations.
//! - [`verify`]: the acceptance criteria, runnable in-process.

pub mod clusters;
pub mod expansion;
pub mod model;
pub mod oracle;
pub mod pauli;
pub mod sampler;
pub mod series;
pub mod verify;
