//! Numerical laboratory for gradient flows on embedded manifolds and
//! first-order loop operators on the circle.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`] — embedded manifolds as level sets, scalar fields with
//!   analytic or finite-difference derivatives, and coarse (chordal) metrics.
//! - [`flowcore`] — trajectories, energies, spectral gaps, and empirical
//!   compactness diagnostics for families of gradient flow lines.
//! - [`morsebott`] — adaptive gradient-flow integration, limit detection,
//!   exponential-decay fitting, Morse–Bott verification, weighted Sobolev
//!   norms, and the shift-family non-compactness diagnostic.
//! - [`loopfield`] — discrete loop calculus: periodic differentiation
//!   matrices, metric inner products, the first-order loop operator and its
//!   adjoint, spectral splittings with kernel/range projectors, and the
//!   operator-identity check suite.
//! - [`floerlab`] — the Hamiltonian laboratory: a radial model system,
//!   tubular coordinates around a periodic-orbit manifold, shift operators,
//!   higher-order loop operators, linear spectral evolution, a Newton
//!   boundary-value cylinder solver, and decay measurement.
//!
//! All computations are dense, deterministic, and desk-scale (matrices at
//! most ~1000×1000); there is no hidden global state.

pub mod error;
pub mod fit;
pub mod floerlab;
pub mod flowcore;
pub mod geometry;
pub mod loopfield;
pub mod morsebott;
pub mod quad;
pub mod report;

pub use error::{Error, Result};

/// Dynamically sized column vector of `f64`, the ambient point/vector type.
pub type Vec64 = nalgebra::DVector<f64>;
/// Dynamically sized dense matrix of `f64`.
pub type Mat64 = nalgebra::DMatrix<f64>;
