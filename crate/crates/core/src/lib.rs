//! Subharmonic periodic orbits of perturbed four-dimensional symplectic maps,
//! their Floquet frames, and their weak separatrices.
//!
//! The crate is organised bottom-up: [`taylor`] supplies truncated power
//! series, [`integrate`] propagates states, Jacobians and jets, [`systems`]
//! holds the concrete Hamiltonian models, [`seqsolve`] solves the scalar
//! cyclic equations every correction step reduces to, [`spo`] runs the
//! quasi-Newton continuation, [`separatrix`] builds the Taylor
//! parameterizations and [`io`] handles configuration and files.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod integrate;
pub mod io;
pub mod map;
pub mod separatrix;
pub mod seqsolve;
pub mod spo;
pub mod systems;
pub mod taylor;

/// Phase-space point `(x, y, px, py)`.
pub type State = nalgebra::Vector4<f64>;

pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
