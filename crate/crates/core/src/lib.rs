//! Exact desk-scale state-vector simulation of measurement as projection.
//!
//! The crate simulates multi-register qubit systems with dense complex
//! amplitude vectors and provides:
//!
//! - [`qstate`]: register layouts, pure states and phase-invariant comparison.
//! - [`gates`]: Hadamard layers, the discrete Fourier transform, XOR oracles
//!   and the Grover iteration, all as in-place permutations or butterflies.
//! - [`measure`]: outcome distributions, Born-rule sampling, projection,
//!   partial traces and the random-phase representation of mixtures.
//! - [`circuit`]: a linear circuit program with a measurement-deferral pass,
//!   outcome backdating and an exact equivalence checker.
//! - [`shor`]: period finding under three treatments of the function register.
//! - [`grover`]: the drawer-search game, quantum and classical.
//! - [`costmodel`]: stage-by-stage classical and quantum unit counts.
//! - [`selftest`]: invariant suites shared by the CLI and the test suites.
//!
//! Register order is most-significant-first: the first register in a layout
//! occupies the highest bits of a basis index, and within a register bits are
//! standard binary.

pub mod circuit;
pub mod costmodel;
pub mod error;
pub mod gates;
pub mod grover;
pub mod measure;
pub mod qstate;
pub mod selftest;
pub mod shor;

pub use error::{Error, Result};
pub use gates::{FunctionTable, ModedFunctionTable};
pub use measure::{DensityMatrix, OutcomeDistribution, PhasedMixture, ProjectionOperator};
pub use qstate::{PureState, RegisterLayout, StateDistance};

pub use num_complex::Complex64;

/// Seeded generator used everywhere randomness is needed.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Builds the generator for a seed.
pub fn rng_from_seed(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}

/// Tolerance for state equality.
pub const STATE_TOL: f64 = 1e-10;
