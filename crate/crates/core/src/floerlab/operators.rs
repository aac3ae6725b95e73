//! Directional derivatives of the loop operator and the higher operators
//! built from them.
//!
//! For a chart model the assignment `x ↦ A_x` is a smooth map from loops
//! to matrices. This module differentiates it by symmetric finite
//! differences in loop-space directions (first order at relative step
//! 1e−5, second at 1e−4, third at 1e−3, always along normalized
//! directions) and assembles:
//!
//! - `B_x = D²A[W, W] + DA[DA[W]x] + DA[A²x]` with `W = A_x x`;
//! - `C_x`, the nine-summand derivative of `s ↦ B_{Z(s)}` along the
//!   cylinder equation;
//! - the lower-triangular triple-space operator `Â_x`;
//! - the triple `E(x) = (x, A_x x, DA[W]x + A²x)`;
//! - the comparison operators `D_x`, `C¹_x`, `C²_x` against the basepoint
//!   structure;
//! - the consistency check that the `s`-derivative of `B` along a solution
//!   cylinder equals `C`.

use crate::error::{Error, Result};
use crate::floerlab::cylinder::CylinderGrid;
use crate::loopfield::{build_operator_a, ChartDynamics, LoopGrid, LoopOperator, SpectralSplit};
use crate::report::{Check, CheckSet};
use crate::{Mat64, Vec64};

/// Relative probe steps for the three derivative orders.
const STEP1: f64 = 1e-5;
const STEP2: f64 = 1e-4;
const STEP3: f64 = 1e-3;

fn zero_like(x: &LoopGrid, label: &str) -> LoopOperator {
    let size = x.n_points * x.dim;
    LoopOperator::new(Mat64::zeros(size, size), x.n_points, x.dim, label)
}

fn add_scaled(x: &LoopGrid, v: &LoopGrid, factor: f64) -> LoopGrid {
    let mut out = x.clone();
    out.values += &v.values * factor;
    out
}

/// First directional derivative `D_xA[V]` at custom relative step.
pub(crate) fn d_a_with_step(
    x: &LoopGrid,
    v: &LoopGrid,
    model: &dyn ChartDynamics,
    rel_step: f64,
) -> Result<LoopOperator> {
    let scale = v.max_abs();
    if scale == 0.0 {
        return Ok(zero_like(x, "D_xA[0]"));
    }
    let h = rel_step * (1.0 + x.max_abs());
    let vh = h / scale; // step along v itself giving sup-norm h
    let plus = build_operator_a(&add_scaled(x, v, vh), model)?;
    let minus = build_operator_a(&add_scaled(x, v, -vh), model)?;
    let m = (plus.matrix - minus.matrix) / (2.0 * vh);
    Ok(LoopOperator::new(m, x.n_points, x.dim, "D_xA[V]"))
}

/// First directional derivative `D_xA[V]` of the operator map by symmetric
/// differences along the normalized direction.
pub fn d_a(x: &LoopGrid, v: &LoopGrid, model: &dyn ChartDynamics) -> Result<LoopOperator> {
    d_a_with_step(x, v, model, STEP1)
}

/// Same-direction second derivative `D²_xA[U, U]`.
fn d2_a_same(
    x: &LoopGrid,
    u: &LoopGrid,
    model: &dyn ChartDynamics,
    rel_step: f64,
) -> Result<LoopOperator> {
    let scale = u.max_abs();
    if scale == 0.0 {
        return Ok(zero_like(x, "D²_xA[0,0]"));
    }
    let h = rel_step * (1.0 + x.max_abs());
    let uh = h / scale;
    let plus = build_operator_a(&add_scaled(x, u, uh), model)?;
    let center = build_operator_a(x, model)?;
    let minus = build_operator_a(&add_scaled(x, u, -uh), model)?;
    let m = (plus.matrix - center.matrix * 2.0 + minus.matrix) / (uh * uh);
    Ok(LoopOperator::new(m, x.n_points, x.dim, "D²_xA[U,U]"))
}

/// Second directional derivative `D²_xA[U, V]`, by polarization of the
/// same-direction formula.
pub fn d2_a(
    x: &LoopGrid,
    u: &LoopGrid,
    v: &LoopGrid,
    model: &dyn ChartDynamics,
) -> Result<LoopOperator> {
    let mut sum = u.clone();
    sum.values += &v.values;
    let mut diff = u.clone();
    diff.values -= &v.values;
    let a = d2_a_same(x, &sum, model, STEP2)?;
    let b = d2_a_same(x, &diff, model, STEP2)?;
    let m = (a.matrix - b.matrix) / 4.0;
    Ok(LoopOperator::new(m, x.n_points, x.dim, "D²_xA[U,V]"))
}

/// Same-direction third derivative `D³_xA[W, W, W]`, five-point formula
/// `(A(x+2h) − 2A(x+h) + 2A(x−h) − A(x−2h))/(2h³)`.
pub fn d3_a(x: &LoopGrid, w: &LoopGrid, model: &dyn ChartDynamics) -> Result<LoopOperator> {
    let scale = w.max_abs();
    if scale == 0.0 {
        return Ok(zero_like(x, "D³_xA[0,0,0]"));
    }
    let h = STEP3 * (1.0 + x.max_abs());
    let wh = h / scale;
    let p2 = build_operator_a(&add_scaled(x, w, 2.0 * wh), model)?;
    let p1 = build_operator_a(&add_scaled(x, w, wh), model)?;
    let m1 = build_operator_a(&add_scaled(x, w, -wh), model)?;
    let m2 = build_operator_a(&add_scaled(x, w, -2.0 * wh), model)?;
    let m = (p2.matrix - p1.matrix * 2.0 + m1.matrix * 2.0 - m2.matrix) / (2.0 * wh.powi(3));
    Ok(LoopOperator::new(m, x.n_points, x.dim, "D³_xA[W,W,W]"))
}

/// `B_x` at a custom first/second-derivative step pair (used by the
/// step-halving stability checks).
pub(crate) fn build_b_with_steps(
    x: &LoopGrid,
    model: &dyn ChartDynamics,
    step1: f64,
    step2: f64,
) -> Result<LoopOperator> {
    let a = build_operator_a(x, model)?;
    let w = a.apply(x);
    let t1 = d2_a_same(x, &w, model, step2)?;
    let da_w = d_a_with_step(x, &w, model, step1)?;
    let t2 = d_a_with_step(x, &da_w.apply(x), model, step1)?;
    let a2x = a.apply(&a.apply(x));
    let t3 = d_a_with_step(x, &a2x, model, step1)?;
    let m = t1.matrix + t2.matrix + t3.matrix;
    Ok(LoopOperator::new(m, x.n_points, x.dim, "B_x"))
}

/// The quadratic operator `B_x = D²A[W,W] + DA[DA[W]x] + DA[A²x]` with
/// `W = A_x x`. Vanishes at the reference loop, where `W = 0`.
pub fn build_b(x: &LoopGrid, model: &dyn ChartDynamics) -> Result<LoopOperator> {
    build_b_with_steps(x, model, STEP1, STEP2)
}

/// The cubic operator `C_x`: the derivative of `s ↦ B_{Z(s)}` along the
/// cylinder equation `∂_sZ = A_ZZ`, expanded into nine summands in `x`.
pub fn build_c(x: &LoopGrid, model: &dyn ChartDynamics) -> Result<LoopOperator> {
    let a = build_operator_a(x, model)?;
    let w = a.apply(x);
    let a2x = a.apply(&a.apply(x));
    let a3x = a.apply(&a2x);
    let da_w = d_a(x, &w, model)?;
    let da_w_x = da_w.apply(x);

    // Derivative of the D²A[W, W] summand.
    let t1 = d3_a(x, &w, model)?;
    let t2 = d2_a(x, &w, &a2x, model)?;
    let t3 = d2_a(x, &w, &da_w_x, model)?;
    let t4 = d_a(x, &da_w.apply(&w), model)?;
    // Derivative of the DA[DA[W]x] summand.
    let t5 = d_a(x, &d_a(x, &da_w_x, model)?.apply(x), model)?;
    let t6 = d_a(x, &d_a(x, &a2x, model)?.apply(x), model)?;
    let t7 = d_a(x, &d2_a(x, &w, &w, model)?.apply(x), model)?;
    let t8 = d_a(x, &a.apply(&da_w_x), model)?;
    // Derivative of the DA[A²x] summand.
    let t9 = d_a(x, &a3x, model)?;

    let m = t1.matrix
        + t2.matrix * 3.0
        + t3.matrix * 3.0
        + t4.matrix * 2.0
        + t5.matrix
        + t6.matrix
        + t7.matrix
        + t8.matrix
        + t9.matrix;
    Ok(LoopOperator::new(m, x.n_points, x.dim, "C_x"))
}

/// The triple-space operator with block rows `(A, 0, 0)`,
/// `(DA[W], A, 0)`, `(B, 2DA[W], A)`: the linearization governing
/// `(Z, ∂_sZ, ∂_s²Z)` along the cylinder equation. Block-diagonal at the
/// reference loop.
pub fn build_ahat(x: &LoopGrid, model: &dyn ChartDynamics) -> Result<LoopOperator> {
    let a = build_operator_a(x, model)?;
    let w = a.apply(x);
    let da_w = d_a(x, &w, model)?;
    let b = build_b(x, model)?;
    let nb = x.n_points * x.dim;
    let mut m = Mat64::zeros(3 * nb, 3 * nb);
    let blocks: [(usize, usize, &Mat64, f64); 6] = [
        (0, 0, &a.matrix, 1.0),
        (1, 0, &da_w.matrix, 1.0),
        (1, 1, &a.matrix, 1.0),
        (2, 0, &b.matrix, 1.0),
        (2, 1, &da_w.matrix, 2.0),
        (2, 2, &a.matrix, 1.0),
    ];
    for (br, bc, mat, factor) in blocks {
        for r in 0..nb {
            for c in 0..nb {
                m[(br * nb + r, bc * nb + c)] = factor * mat[(r, c)];
            }
        }
    }
    Ok(LoopOperator::new(m, x.n_points, 3 * x.dim, "Â_x"))
}

/// The solution triple `E(x) = (x, A_x x, DA[W]x + A²x)`: along a
/// cylinder, slice-wise equal to `(Z, ∂_sZ, ∂_s²Z)`.
pub fn build_e(
    x: &LoopGrid,
    model: &dyn ChartDynamics,
) -> Result<(LoopGrid, LoopGrid, LoopGrid)> {
    let a = build_operator_a(x, model)?;
    let w = a.apply(x);
    let da_w = d_a(x, &w, model)?;
    let mut third = da_w.apply(x);
    third.values += a.apply(&w).values;
    Ok((x.clone(), w, third))
}

/// Comparison operators against the basepoint structure: returns
/// `(D_x, C¹_x, C²_x)` where `C²_x = P(J₀ − J(Σ⁺x))J(Σ⁺x)`,
/// `D_x = I − C²_x`, and `C¹_x = P·J₀(S₀ − S(Σ⁺x))·z″`. All three reduce
/// to `(I, 0, 0)` at the reference loop.
pub fn build_d_c1_c2(
    x: &LoopGrid,
    model: &dyn ChartDynamics,
    split: &SpectralSplit,
) -> Result<(LoopOperator, LoopOperator, LoopOperator)> {
    let (n, dim, d) = (x.n_points, x.dim, model.base_dim());
    if x.max_abs() > model.chart_radius() {
        return Err(Error::Domain("loop leaves the chart region".into()));
    }
    let nb = n * dim;
    let mut jj = Mat64::zeros(nb, nb); // (J₀ − J(Σ⁺x))·J(Σ⁺x), blockwise
    let mut c1_raw = Mat64::zeros(nb, nb); // J₀(S₀ − S(Σ⁺x))·z″, blockwise
    for i in 0..n {
        let t = i as f64 / n as f64;
        let base = Vec64::from_fn(dim, |c, _| if c == 0 { t } else { 0.0 });
        let mut shifted = x.node(i);
        shifted[0] += t;
        let j0 = model.j_matrix(t, &base);
        let jx = model.j_matrix(t, &shifted);
        let block = (&j0 - &jx) * &jx;
        let s0 = model.s_matrix(t, &base);
        let sx = model.s_matrix(t, &shifted);
        let c1_block = &j0 * (s0 - sx);
        for r in 0..dim {
            for c in 0..dim {
                jj[(i * dim + r, i * dim + c)] = block[(r, c)];
            }
            for c in 0..(dim - d) {
                c1_raw[(i * dim + r, i * dim + d + c)] = c1_block[(r, c)];
            }
        }
    }
    let c2 = &split.p * jj;
    let d_op = Mat64::identity(nb, nb) - &c2;
    let c1 = &split.p * c1_raw;
    Ok((
        LoopOperator::new(d_op, n, dim, "D_x"),
        LoopOperator::new(c1, n, dim, "C¹_x"),
        LoopOperator::new(c2, n, dim, "C²_x"),
    ))
}

/// Verify that the `s`-derivative of `B` along a solution cylinder equals
/// `C`, with second-order accuracy in the slice spacing: compares central
/// differences of `B` at spacings `2Δs` and `4Δs` around the middle slice
/// and reports the Richardson ratio (≈ 4 for a second-order scheme).
pub fn check_dsb_equals_c(
    z: &CylinderGrid,
    model: &dyn ChartDynamics,
) -> Result<CheckSet> {
    let m_slices = z.slices.len();
    if m_slices < 9 {
        return Err(Error::Precondition("need at least 9 slices".into()));
    }
    let residual = z.interior_residual(model)?;
    let scale = z.slices.iter().map(|s| s.max_abs()).fold(0.0_f64, f64::max);
    if residual > 1e-7 * (1.0 + scale) {
        return Err(Error::Precondition(format!(
            "cylinder does not satisfy the discrete flow equation (residual {residual:.3e})"
        )));
    }
    let mid = m_slices / 2;
    let ds = z.s_grid[1] - z.s_grid[0];
    let b = |idx: usize| -> Result<Mat64> { Ok(build_b(&z.slices[idx], model)?.matrix) };
    let c_mid = build_c(&z.slices[mid], model)?.matrix;
    // Difference at 2Δs and 4Δs rather than Δs and 2Δs: the solution
    // slices themselves carry an O(Δs²) discretization error that does not
    // scale with the differencing spacing, so wider stencils keep the
    // scaling truncation term dominant in the Richardson ratio.
    let diff1 = (b(mid + 2)? - b(mid - 2)?) / (4.0 * ds);
    let diff2 = (b(mid + 4)? - b(mid - 4)?) / (8.0 * ds);
    let res1 = (&diff1 - &c_mid).norm();
    let res2 = (&diff2 - &c_mid).norm();
    let ratio = res2 / res1.max(1e-300);
    let mut checks = CheckSet::new();
    checks.push(Check::bool(
        "ds_b_equals_c_second_order",
        (3.5..=4.5).contains(&ratio),
        format!(
            "Richardson ratio {ratio:.3} (residuals {res1:.3e} at Δs, {res2:.3e} at 2Δs, \
             constant ≈ {:.3e})",
            res1 / (ds * ds)
        ),
    ));
    checks.push(Check::le(
        "ds_b_residual_small",
        res1,
        5e-2 * (&c_mid).norm().max(1e-12),
        "‖ΔB/Δs − C‖ against ‖C‖",
    ));
    Ok(checks)
}
