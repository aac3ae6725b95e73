//! Hamiltonian cylinder laboratory.
//!
//! Builds on [`crate::loopfield`]: model Hamiltonian systems on `R^{2n}`
//! with a marked manifold of 1-periodic orbits, tubular coordinates around
//! a reference orbit, the higher loop operators `B`, `C`, `Â`, `D`, `C¹`,
//! `C²`, `E`, spectral and Newton constructions of solution cylinders of
//! `∂_sZ = A_{Z}Z`, decay measurement, and a discrete maximum principle.

pub mod chart;
pub mod cylinder;
pub mod model;
pub mod operators;

pub use chart::{shift_loops, TubularChart};
pub use cylinder::{
    linear_stable_evolution, maximum_principle_check, measure_decay, nonlinear_floer_solve,
    CylinderGrid, DecayReport, Provenance,
};
pub use model::{mb_condition_check, reeb_action_profile, HamiltonianModel, ReebProfileRow};
pub use operators::{
    build_ahat, build_b, build_c, build_d_c1_c2, build_e, check_dsb_equals_c, d2_a, d3_a, d_a,
};
