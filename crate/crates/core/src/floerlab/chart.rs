//! Tubular coordinates around the reference orbit of the radial model.
//!
//! The chart sends `(ϑ, z) ∈ S¹ × (−radius, radius)` to the plane point of
//! angle `2πϑ` and radius `√(2(1+z))`, so the reference orbit is `ϑ ↦
//! (ϑ, 0)`, the orbit manifold is the slice `{z = 0}`, and on that slice
//! the coordinate field `∂_ϑ` equals the Hamiltonian vector field. In
//! these coordinates the defect `∂_ϑ − X_H` is `(−z, 0)`, which factors
//! through the normal coordinate with the constant column `S = (−1, 0)ᵀ`.
//!
//! The chart also carries the pulled-back almost complex structure and
//! metric and implements [`ChartDynamics`], so the loop-operator assembly
//! in [`crate::loopfield`] can consume it directly.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::loopfield::{hadamard_factor, ChartDynamics, LoopGrid};
use crate::{Mat64, Vec64};

/// Half-width of the valid band in the normal coordinate `z` (and sup-norm
/// radius for relative loops).
pub const CHART_RADIUS: f64 = 0.3;
/// Loops handed to the Newton solver must start within this sup-norm
/// distance of the reference loop.
pub const NEWTON_RADIUS: f64 = 0.05;

/// Tubular chart of the radial model around its reference orbit.
#[derive(Debug, Clone)]
pub struct TubularChart {
    /// Orbit-manifold dimension (`1`).
    pub d: usize,
    /// Chart dimension (`2`).
    pub dim: usize,
    /// Hadamard column of the defect `∂_ϑ − X_H`, computed at
    /// construction; constant over the chart for this model.
    pub s0: Mat64,
}

impl TubularChart {
    /// Build the chart, deriving `S` by Hadamard factorization of the
    /// coordinate defect at the basepoint.
    pub fn radial() -> Self {
        let f = |p: &Vec64| defect_field(p);
        let probe = Vec64::from_column_slice(&[0.2, 0.1]);
        let s0 = hadamard_factor(&f, &probe, 1).expect("defect vanishes on the orbit slice");
        TubularChart { d: 1, dim: 2, s0 }
    }

    /// Chart point `(ϑ, z)` to the plane.
    pub fn from_chart(&self, p: &Vec64) -> Vec64 {
        let r = (2.0 * (1.0 + p[1])).sqrt();
        Vec64::from_column_slice(&[r * (TAU * p[0]).cos(), r * (TAU * p[0]).sin()])
    }

    /// Plane point to the chart; `ϑ` lands in `[0, 1)`.
    pub fn to_chart(&self, q: &Vec64) -> Result<Vec64> {
        let z = (q[0] * q[0] + q[1] * q[1]) / 2.0 - 1.0;
        if z.abs() > CHART_RADIUS {
            return Err(Error::Domain(format!(
                "point at normal distance {:.3e} is outside the tubular band {CHART_RADIUS}",
                z.abs()
            )));
        }
        let theta = (q[1].atan2(q[0]) / TAU).rem_euclid(1.0);
        Ok(Vec64::from_column_slice(&[theta, z]))
    }

    /// The reference orbit in chart coordinates, sampled on `n` nodes:
    /// the loop `t ↦ (t, 0)`.
    pub fn reference_loop(&self, n_points: usize) -> LoopGrid {
        LoopGrid::from_fn(n_points, 2, |t| Vec64::from_column_slice(&[t, 0.0]))
    }
}

/// The coordinate defect `∂_ϑ − X_H` of the radial model expressed in
/// chart components at the chart point `p = (ϑ, z)`: the chart pushes
/// `∂_ϑ` to the angular field of one revolution per unit time while `X_H`
/// rotates at `1 + z` revolutions, giving `(−z, 0)`.
pub fn defect_field(p: &Vec64) -> Vec64 {
    Vec64::from_column_slice(&[-p[1], 0.0])
}

impl ChartDynamics for TubularChart {
    fn dim(&self) -> usize {
        self.dim
    }

    fn base_dim(&self) -> usize {
        self.d
    }

    /// Pullback of the standard complex structure: with `r² = 2(1+z)`,
    /// `J ∂_ϑ = 2πr² ∂_z` and `J ∂_z = −∂_ϑ/(2πr²)`.
    fn j_matrix(&self, _t: f64, p: &Vec64) -> Mat64 {
        let r_sq = 2.0 * (1.0 + p[1]);
        Mat64::from_row_slice(2, 2, &[0.0, 1.0 / (TAU * r_sq), -TAU * r_sq, 0.0])
    }

    fn s_matrix(&self, _t: f64, _p: &Vec64) -> Mat64 {
        self.s0.clone()
    }

    /// Pullback metric: `diag(4π²r², 1/r²)` with `r² = 2(1+z)`.
    fn metric(&self, _t: f64, p: &Vec64) -> Mat64 {
        let r_sq = 2.0 * (1.0 + p[1]);
        Mat64::from_row_slice(2, 2, &[TAU * TAU * r_sq, 0.0, 0.0, 1.0 / r_sq])
    }

    fn chart_radius(&self) -> f64 {
        CHART_RADIUS
    }
}

/// Per-node metric family of the reference-orbit inner product (constant
/// `diag(8π², 1/2)` for the radial chart).
pub fn basepoint_metric_family(chart: &TubularChart, n_points: usize) -> Vec<Mat64> {
    (0..n_points)
        .map(|i| {
            let t = i as f64 / n_points as f64;
            chart.metric(t, &Vec64::from_column_slice(&[t, 0.0]))
        })
        .collect()
}

/// Shift a relative loop by `±(t, 0)`: `(Σ±x)(t) = x(t) ± (t, 0)`. The
/// stored `ϑ` values are not wrapped (the chart maps are periodic in `ϑ`),
/// so `Σ⁻ ∘ Σ⁺` is the identity up to one rounding per entry.
pub fn shift_loops(x: &LoopGrid, sign: f64) -> LoopGrid {
    let mut out = x.clone();
    for i in 0..x.n_points {
        out.values[(i, 0)] += sign * i as f64 / x.n_points as f64;
    }
    out
}
