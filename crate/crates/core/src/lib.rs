//! A desk-scale laboratory for the variational quantum linear solver.
//!
//! Given a Hermitian system matrix A and a right-hand side b, the solver
//! prepares a parameterized state |x(theta)> = V(theta)|0> and minimizes a
//! cost that vanishes when A|x> is proportional to |b>. The crate provides:
//!
//! - [`numerics`]: dense complex linear algebra (Jacobi eigensolver,
//!   condition numbers, alignment metric);
//! - [`pauli`]: Pauli strings and the linear-combination-of-unitaries
//!   decomposition with the trace formula;
//! - [`circuit`]: gate model, statevector simulation, the layered RY/CZ
//!   ansatz, real-amplitude state preparation, controlled wrapping, and
//!   lowering to {RX, RY, RZ, CX};
//! - [`hadamard`]: the ancilla test circuits that estimate every term of
//!   the cost functions, with exact and shot-sampled execution;
//! - [`cost`]: global and local cost functions evaluated both by direct
//!   matrix algebra and by Hadamard-test aggregation, plus exact
//!   parameter-shift gradients;
//! - [`problems`]: instance generators (transverse-field Ising chain,
//!   random Pauli sums, banded synthetic systems), Matrix Market
//!   ingestion, and the block-extraction/padding pipeline;
//! - [`optimizer`]: a COBYLA-style linear-model trust-region optimizer
//!   and the end-to-end solve loop;
//! - [`analysis`]: gradient-variance (barren plateau) estimation, decay
//!   fits, gradient-norm scans, and circuit-resource accounting.

pub mod analysis;
pub mod circuit;
pub mod cost;
pub mod error;
pub mod hadamard;
pub mod numerics;
pub mod optimizer;
pub mod pauli;
pub mod problems;

pub use error::{Error, Result};
