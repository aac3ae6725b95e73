//! Finite-dimensional gradient-flow laboratory: adaptive integration of
//! `γ′ = ∇f∘γ` on embedded manifolds, limit detection, exponential-decay
//! fitting, Morse–Bott verification, weighted Sobolev norms, and the
//! shift-family non-compactness diagnostic.

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::flowcore::{CriticalSetSample, Trajectory};
use crate::geometry::{
    kernel_dimension, riemannian_gradient, tangent_hessian, CoarseMetric, EmbeddedManifold,
    ScalarField,
};
use crate::report::{Check, CheckSet};
use crate::Vec64;

/// Fitted exponential-decay envelope `d(s) ≤ A·√(ζ − f∘γ(s_lo))·e^{−B(s−s_lo)}`.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    /// Envelope constant `A` (minimal value making the bound hold on the window).
    pub a_hat: f64,
    /// Decay rate `B` (negated slope of the log-linear fit).
    pub b_hat: f64,
    /// Fit quality of the log-linear regression.
    pub r_squared: f64,
    /// Fitting window `(s_lo, s_hi)`.
    pub window: (f64, f64),
    /// Distances at or below this level were excluded from the fit.
    pub noise_floor: f64,
    /// Value of `ζ − f∘γ(s_lo)` used in the envelope.
    pub drop_at_window_start: f64,
}

/// Specification of a weighted Sobolev norm: weight `e^{δ|s|}`, derivative
/// order `k ≤ 2`, exponent 2.
#[derive(Debug, Clone, Copy)]
pub struct WeightedNormSpec {
    /// Positive exponential weight rate.
    pub delta: f64,
    /// Highest derivative order included (0, 1, or 2).
    pub k: usize,
}

/// Controls for the adaptive gradient-flow integrator.
#[derive(Debug, Clone, Copy)]
pub struct IntegrationControls {
    /// Absolute local-error tolerance (per step, embedded half-step estimate).
    pub abs_tol: f64,
    /// Relative local-error tolerance.
    pub rel_tol: f64,
    /// Stop when `|∇f|` falls below this.
    pub stop_tol: f64,
    /// Largest step size.
    pub max_step: f64,
    /// Constraint drift beyond this (before re-projection) is an error.
    pub drift_tol: f64,
}

impl Default for IntegrationControls {
    fn default() -> Self {
        IntegrationControls {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            stop_tol: 1e-10,
            max_step: 0.05,
            drift_tol: 1e-8,
        }
    }
}

/// One classical RK4 step of `γ′ = P∇f` of size `h` from `p`.
fn rk4_step(
    m: &EmbeddedManifold,
    f: &ScalarField,
    p: &Vec64,
    h: f64,
    sign: f64,
) -> Result<Vec64> {
    let rhs = |q: &Vec64| -> Result<Vec64> {
        let q_on = m.reproject(q, 1e-12)?;
        Ok(m.tangent_projector(&q_on) * f.ambient_gradient(&q_on) * sign)
    };
    let k1 = rhs(p)?;
    let k2 = rhs(&(p + &k1 * (h / 2.0)))?;
    let k3 = rhs(&(p + &k2 * (h / 2.0)))?;
    let k4 = rhs(&(p + &k3 * h))?;
    Ok(p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Integrate the (positive) gradient flow `γ′ = ∇f∘γ` from `x0` with
/// adaptive RK4 (embedded half-step error control) and per-step Newton
/// re-projection onto the manifold.
///
/// Terminates at `s_max` or as soon as `|∇f| < stop_tol`. The returned
/// trajectory carries cached `f` and `G = |∇f|²` values.
pub fn integrate_gradient_flow(
    m: &EmbeddedManifold,
    f: &ScalarField,
    x0: &Vec64,
    s_max: f64,
    controls: &IntegrationControls,
) -> Result<Trajectory> {
    integrate_flow_signed(m, f, x0, s_max, controls, 1.0)
}

/// As [`integrate_gradient_flow`], but for `γ′ = sign·∇f∘γ`; `sign = −1`
/// integrates the backward flow (used to build heteroclinics).
pub fn integrate_flow_signed(
    m: &EmbeddedManifold,
    f: &ScalarField,
    x0: &Vec64,
    s_max: f64,
    controls: &IntegrationControls,
    sign: f64,
) -> Result<Trajectory> {
    if !m.is_on_manifold(x0) {
        return Err(Error::Domain("initial point off the manifold".into()));
    }
    let mut s = 0.0_f64;
    let mut p = m.reproject(x0, 1e-12)?;
    let mut h = controls.max_step;

    let mut s_grid = vec![0.0];
    let mut points = vec![p.clone()];
    let mut f_values = vec![f.value(&p)];
    let grad_at = |q: &Vec64| -> Result<Vec64> { riemannian_gradient(m, f, q) };
    let mut g_values = vec![grad_at(&p)?.norm_squared()];

    while s < s_max {
        let g = grad_at(&p)?;
        if g.norm() < controls.stop_tol {
            break;
        }
        h = h.min(s_max - s).min(controls.max_step);
        // Embedded error estimate: one full step vs two half steps.
        let full = rk4_step(m, f, &p, h, sign)?;
        let half = rk4_step(m, f, &p, h / 2.0, sign)?;
        let two_half = rk4_step(m, f, &half, h / 2.0, sign)?;
        let err = (&full - &two_half).norm();
        let tol = controls.abs_tol + controls.rel_tol * two_half.norm();
        if err <= tol {
            // Accept, keeping the more accurate two-half-step value.
            let drift = m.constraint_residual(&two_half);
            if drift > controls.drift_tol {
                return Err(Error::Integration(format!(
                    "constraint drift {:.3e} exceeds tolerance",
                    drift
                )));
            }
            p = m.reproject(&two_half, 1e-12)?;
            if !p.iter().all(|x| x.is_finite()) || p.norm() > 1e9 {
                return Err(Error::Divergence("trajectory left every bounded region".into()));
            }
            s += h;
            s_grid.push(s);
            points.push(p.clone());
            f_values.push(f.value(&p));
            g_values.push(grad_at(&p)?.norm_squared());
            let grow = 0.9 * (tol / err.max(1e-300)).powf(0.2);
            h *= grow.clamp(1.0, 2.0);
        } else {
            h *= (0.9 * (tol / err).powf(0.2)).clamp(0.2, 0.9);
            if h < 1e-12 {
                return Err(Error::Divergence("step-size underflow (stiff blow-up)".into()));
            }
        }
    }
    Trajectory::new(s_grid, points, f_values, g_values)
}

/// Integrate the heteroclinic through `x0`: forward flow `γ′ = ∇f` on
/// `[0, s_max]` glued at `s = 0` with the time-reversed backward flow on
/// `[−s_max, 0]`. Detected endpoints populate `limit` / `limit_neg`.
pub fn integrate_heteroclinic(
    m: &EmbeddedManifold,
    f: &ScalarField,
    x0: &Vec64,
    s_max: f64,
    controls: &IntegrationControls,
) -> Result<Trajectory> {
    let fwd = integrate_gradient_flow(m, f, x0, s_max, controls)?;
    let bwd = integrate_flow_signed(m, f, x0, s_max, controls, -1.0)?;
    let nb = bwd.len();
    let mut s_grid = Vec::with_capacity(nb + fwd.len() - 1);
    let mut points = Vec::with_capacity(nb + fwd.len() - 1);
    let mut f_values = Vec::with_capacity(nb + fwd.len() - 1);
    let mut g_values = Vec::with_capacity(nb + fwd.len() - 1);
    for i in (1..nb).rev() {
        s_grid.push(-bwd.s_grid[i]);
        points.push(bwd.points[i].clone());
        f_values.push(bwd.f_values[i]);
        g_values.push(bwd.g_values[i]);
    }
    s_grid.extend_from_slice(&fwd.s_grid);
    points.extend_from_slice(&fwd.points);
    f_values.extend_from_slice(&fwd.f_values);
    g_values.extend_from_slice(&fwd.g_values);
    let mut traj = Trajectory::new(s_grid, points, f_values, g_values)?;
    traj.limit = Some(fwd.points.last().unwrap().clone());
    traj.limit_neg = Some(bwd.points.last().unwrap().clone());
    Ok(traj)
}

/// Cauchy-tail + critical-set test for the existence of `γ(∞)`.
///
/// Returns the final point when (a) `|∇f|` at the last node is ≤ 1e−8,
/// (b) the diameter of the last 10% of the points is ≤ 1e−6, and (c) the
/// final point is within `z_tol` of the `Z` sample (nearest point).
pub fn detect_limit(
    traj: &Trajectory,
    z: &CriticalSetSample,
    metric: &CoarseMetric,
    z_tol: f64,
) -> Option<Vec64> {
    let n = traj.len();
    if n == 0 || traj.g_values[n - 1].sqrt() > 1e-8 {
        return None;
    }
    let tail_start = n - (n / 10).max(1);
    let last = &traj.points[n - 1];
    let tail_diam = traj.points[tail_start..]
        .iter()
        .map(|p| metric.dist(p, last))
        .fold(0.0_f64, f64::max);
    if tail_diam > 1e-6 {
        return None;
    }
    if z.dist_to(last, metric) > z_tol {
        return None;
    }
    Some(last.clone())
}

/// Distances at or below this level are treated as numerical noise by the
/// decay fits.
pub const NOISE_FLOOR: f64 = 1e-10;

/// Least-squares exponential-decay fit of `s ↦ d(γ(s), limit)`.
///
/// The window excludes the first 10% of the samples (transient) and all
/// samples at or below the noise floor; at least 10 usable samples are
/// required. `B̂` is the negated slope of the log-linear fit and `Â` is the
/// minimal constant making the envelope hold on the whole window.
pub fn fit_exponential_decay(
    traj: &Trajectory,
    limit: &Vec64,
    metric: &CoarseMetric,
) -> Result<DecayFit> {
    let n = traj.len();
    let skip = n / 10;
    let mut ss = Vec::new();
    let mut logs = Vec::new();
    let mut dists = Vec::new();
    for i in skip..n {
        let d = metric.dist(&traj.points[i], limit);
        if d > NOISE_FLOOR {
            ss.push(traj.s_grid[i]);
            logs.push(d.ln());
            dists.push(d);
        }
    }
    if ss.len() < 10 {
        return Err(Error::Fit(format!(
            "only {} samples above the noise floor",
            ss.len()
        )));
    }
    let lf = linear_fit(&ss, &logs)?;
    let b_hat = -lf.slope;
    let s_lo = ss[0];
    let s_hi = *ss.last().unwrap();
    // ζ is the converged f-value; f∘γ(s_lo) is read off the cached values.
    let zeta = *traj.f_values.last().unwrap();
    let idx_lo = traj.s_grid.partition_point(|&s| s < s_lo);
    let drop = (zeta - traj.f_values[idx_lo.min(n - 1)]).max(f64::MIN_POSITIVE);
    let a_hat = ss
        .iter()
        .zip(&dists)
        .map(|(&s, &d)| d / (drop.sqrt() * (-b_hat * (s - s_lo)).exp()))
        .fold(0.0_f64, f64::max);
    Ok(DecayFit {
        a_hat,
        b_hat,
        r_squared: lf.r_squared,
        window: (s_lo, s_hi),
        noise_floor: NOISE_FLOOR,
        drop_at_window_start: drop,
    })
}

/// Verify the fitted decay envelope pointwise on the window and check that
/// the speed `|γ′|` decays with the same rate (within 10%).
pub fn check_decay_bound(
    traj: &Trajectory,
    limit: &Vec64,
    fit: &DecayFit,
    metric: &CoarseMetric,
) -> Result<CheckSet> {
    let mut checks = CheckSet::new();
    let (s_lo, s_hi) = fit.window;
    let mut worst = f64::NEG_INFINITY;
    let mut any = false;
    for (i, &s) in traj.s_grid.iter().enumerate() {
        if s < s_lo || s > s_hi {
            continue;
        }
        let d = metric.dist(&traj.points[i], limit);
        if d <= fit.noise_floor {
            continue;
        }
        any = true;
        let envelope =
            fit.a_hat * fit.drop_at_window_start.sqrt() * (-fit.b_hat * (s - s_lo)).exp();
        worst = worst.max(d - envelope * (1.0 + 1e-9));
    }
    if !any {
        // Constant (or fully converged) trajectory: all distances are noise.
        checks.push(Check::bool("pointwise_envelope", true, "all distances below noise floor"));
        checks.push(Check::bool("derivative_rate", true, "trivial"));
        return Ok(checks);
    }
    checks.push(Check::le(
        "pointwise_envelope",
        worst,
        0.0,
        "d(γ(s), γ(∞)) ≤ Â √(ζ−f∘γ(s_lo)) e^{−B̂(s−s_lo)} on the window",
    ));

    // Speed by central differences on the (possibly nonuniform) grid.
    let mut ss = Vec::new();
    let mut logs = Vec::new();
    for i in 1..traj.len() - 1 {
        let speed = (&traj.points[i + 1] - &traj.points[i - 1]).norm()
            / (traj.s_grid[i + 1] - traj.s_grid[i - 1]);
        let s = traj.s_grid[i];
        if s >= s_lo && s <= s_hi && speed > fit.noise_floor {
            ss.push(s);
            logs.push(speed.ln());
        }
    }
    if ss.len() < 10 {
        return Err(Error::Fit("too few speed samples in the window".into()));
    }
    let lf = linear_fit(&ss, &logs)?;
    let rate = -lf.slope;
    let rel = (rate - fit.b_hat).abs() / fit.b_hat.abs().max(1e-300);
    checks.push(Check::le(
        "derivative_rate",
        rel,
        0.10,
        format!("speed decay rate {:.6} vs distance rate {:.6}", rate, fit.b_hat),
    ));
    Ok(checks)
}

/// Morse–Bott verification: at every sample of `Z`, the kernel dimension of
/// the tangent Hessian must equal `dim Z`.
pub fn morse_bott_verify(
    m: &EmbeddedManifold,
    f: &ScalarField,
    z: &CriticalSetSample,
) -> Result<CheckSet> {
    let dim_z = z
        .dim
        .ok_or_else(|| Error::Precondition("critical sample carries no dimension hint".into()))?;
    let mut checks = CheckSet::new();
    for (i, p) in z.points.iter().enumerate() {
        let hess = tangent_hessian(m, f, p)?;
        let kd = kernel_dimension(&hess);
        checks.push(Check::bool(
            &format!("kernel_dim_sample_{i}"),
            kd == dim_z,
            format!("kernel dim {} vs dim Z = {}", kd, dim_z),
        ));
    }
    Ok(checks)
}

/// Discrete weighted Sobolev norm `(Σ_{j≤k} ∫ e^{2δ|s|} |∂ˢʲu|² ds)^{1/2}`
/// on a uniform grid, by trapezoid quadrature with central-difference
/// derivatives.
///
/// Returns `+∞` when the tail has not decayed: the last quarter of the grid
/// contributes more than 10% of the rest of the integral (the truncated
/// integral is then not a credible approximation of the infinite one).
pub fn weighted_sobolev_norm(s_grid: &[f64], u: &[f64], spec: &WeightedNormSpec) -> Result<f64> {
    let n = s_grid.len();
    if n < 5 || u.len() != n {
        return Err(Error::Precondition("need ≥5 matching samples".into()));
    }
    if spec.k > 2 {
        return Err(Error::Precondition("derivative order k ≤ 2".into()));
    }
    if spec.delta <= 0.0 {
        return Err(Error::Precondition("weight rate must be positive".into()));
    }
    let ds = s_grid[1] - s_grid[0];
    for w in s_grid.windows(2) {
        if ((w[1] - w[0]) - ds).abs() > 1e-9 * ds.abs().max(1.0) {
            return Err(Error::Precondition("grid must be uniform".into()));
        }
    }
    // Central differences (one-sided at the ends) applied repeatedly.
    let diff = |vals: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        out[0] = (vals[1] - vals[0]) / ds;
        out[n - 1] = (vals[n - 1] - vals[n - 2]) / ds;
        for i in 1..n - 1 {
            out[i] = (vals[i + 1] - vals[i - 1]) / (2.0 * ds);
        }
        out
    };
    let mut integrand = vec![0.0; n];
    let mut current: Vec<f64> = u.to_vec();
    for j in 0..=spec.k {
        if j > 0 {
            current = diff(&current);
        }
        for i in 0..n {
            integrand[i] += current[i] * current[i];
        }
    }
    for (i, &s) in s_grid.iter().enumerate() {
        integrand[i] *= (2.0 * spec.delta * s.abs()).exp();
    }
    let seg = |i: usize| 0.5 * (integrand[i] + integrand[i + 1]) * ds;
    let q3 = 3 * (n - 1) / 4;
    let head: f64 = (0..q3).map(seg).sum();
    let tail: f64 = (q3..n - 1).map(seg).sum();
    if tail > 0.1 * head {
        return Ok(f64::INFINITY);
    }
    Ok((head + tail).sqrt())
}

/// Report from [`shift_family_diagnostic`].
#[derive(Debug, Clone)]
pub struct ShiftDiagnostic {
    /// Shifts the diagnostic was evaluated at.
    pub shifts: Vec<f64>,
    /// Sup-distance, on the fixed compact window, between the shifted
    /// trajectory and the constant trajectory at `γ(−∞)`.
    pub window_distances: Vec<f64>,
    /// Sup-distance on the full line (including the `s → +∞` limit).
    pub full_line_distances: Vec<f64>,
    /// Chordal distance between the two ends of the heteroclinic.
    pub end_diameter: f64,
    /// Set when the input was (numerically) constant.
    pub degenerate: bool,
    /// Structured checks.
    pub checks: CheckSet,
}

/// Non-compactness witness for shift families of a heteroclinic.
///
/// For each shift `σ`, the reparametrized trajectory `γ(· − σ)` is compared
/// with the constant trajectory at `γ(−∞)`: on any fixed compact window the
/// distance tends to 0 as `σ` grows (locally-uniform convergence), while on
/// the full line it stays at least half the end-to-end diameter (no
/// uniformly convergent subsequence).
pub fn shift_family_diagnostic(
    traj: &Trajectory,
    shifts: &[f64],
    window: (f64, f64),
    metric: &CoarseMetric,
) -> Result<ShiftDiagnostic> {
    let limit_pos = traj
        .limit
        .clone()
        .ok_or_else(|| Error::Precondition("forward limit missing".into()))?;
    let limit_neg = traj
        .limit_neg
        .clone()
        .ok_or_else(|| Error::Precondition("backward limit missing".into()))?;
    let end_diameter = metric.dist(&limit_pos, &limit_neg);
    let degenerate = end_diameter < 1e-12;

    let n_window = 256;
    let mut window_distances = Vec::with_capacity(shifts.len());
    let mut full_line_distances = Vec::with_capacity(shifts.len());
    for &sigma in shifts {
        // γ_σ(s) = γ(s − σ).
        let mut wd = 0.0_f64;
        for i in 0..=n_window {
            let s = window.0 + (window.1 - window.0) * i as f64 / n_window as f64;
            wd = wd.max(metric.dist(&traj.sample(s - sigma), &limit_neg));
        }
        window_distances.push(wd);
        let mut fd = traj
            .points
            .iter()
            .map(|p| metric.dist(p, &limit_neg))
            .fold(0.0_f64, f64::max);
        fd = fd.max(end_diameter);
        full_line_distances.push(fd);
    }

    let mut checks = CheckSet::new();
    if !degenerate {
        let monotone = window_distances.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        checks.push(Check::bool(
            "window_distance_decreasing",
            monotone,
            format!("{:?}", window_distances),
        ));
        let min_full = full_line_distances.iter().cloned().fold(f64::INFINITY, f64::min);
        checks.push(Check::ge(
            "full_line_distance",
            min_full,
            end_diameter / 2.0,
            "uniform distance never drops below half the end separation",
        ));
    } else {
        checks.push(Check::bool("degenerate_input", true, "constant trajectory flagged"));
    }
    Ok(ShiftDiagnostic {
        shifts: shifts.to_vec(),
        window_distances,
        full_line_distances,
        end_diameter,
        degenerate,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowcore::energy_of;
    use approx::assert_abs_diff_eq;

    fn v(vals: &[f64]) -> Vec64 {
        Vec64::from_column_slice(vals)
    }

    fn line() -> EmbeddedManifold {
        EmbeddedManifold::euclidean(1)
    }

    fn well() -> ScalarField {
        ScalarField::with_gradient(|p| -p[0] * p[0] / 2.0, |p| v(&[-p[0]]))
    }

    fn sphere_and_height() -> (EmbeddedManifold, ScalarField) {
        (
            EmbeddedManifold::unit_sphere(3),
            ScalarField::with_gradient(|p| p[2], |_p| v(&[0.0, 0.0, 1.0])),
        )
    }

    fn circle_well() -> (EmbeddedManifold, ScalarField) {
        (
            EmbeddedManifold::euclidean(3),
            ScalarField::from_value(|p| {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                -((r - 1.0) * (r - 1.0) + p[2] * p[2])
            }),
        )
    }

    #[test]
    fn one_dimensional_flow_matches_closed_form() {
        // γ′ = ∇(−x²/2) = −x from x0 = 1 is e^{−s}.
        let t = integrate_gradient_flow(
            &line(),
            &well(),
            &v(&[1.0]),
            10.0,
            &IntegrationControls::default(),
        )
        .unwrap();
        for (i, &s) in t.s_grid.iter().enumerate() {
            assert!((t.points[i][0] - (-s).exp()).abs() <= 1e-6);
        }
    }

    #[test]
    fn critical_start_stays_constant() {
        let (m, f) = sphere_and_height();
        let t = integrate_gradient_flow(
            &m,
            &f,
            &v(&[0.0, 0.0, 1.0]),
            5.0,
            &IntegrationControls::default(),
        )
        .unwrap();
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn sphere_meridian_flow_converges_to_north_pole() {
        let (m, f) = sphere_and_height();
        let theta0 = std::f64::consts::PI - 0.1;
        let x0 = v(&[theta0.sin(), 0.0, theta0.cos()]);
        let t = integrate_gradient_flow(&m, &f, &x0, 40.0, &IntegrationControls::default())
            .unwrap();
        // f monotone increasing.
        assert!(t.f_values.windows(2).all(|w| w[1] >= w[0] - 1e-10));
        let last = t.points.last().unwrap();
        assert!((last - v(&[0.0, 0.0, 1.0])).norm() <= 1e-6);
        // Energy–action identity: E = f(∞) − f(−∞) here ≈ 1 − cos θ0.
        let e = energy_of(&t);
        let df = t.f_values.last().unwrap() - t.f_values[0];
        assert!((e - df).abs() <= 1e-4 * (1.0 + e));
        // Against the closed-form meridian solution tan(θ/2) = tan(θ0/2)e^{−s}.
        for (i, &s) in t.s_grid.iter().enumerate().step_by(50) {
            let theta = 2.0 * ((theta0 / 2.0).tan() * (-s).exp()).atan();
            let exact = v(&[theta.sin(), 0.0, theta.cos()]);
            assert!((&t.points[i] - exact).norm() <= 1e-6);
        }
    }

    #[test]
    fn limit_detection_on_sphere_flow() {
        let (m, f) = sphere_and_height();
        let metric = CoarseMetric::chordal();
        let t = integrate_gradient_flow(
            &m,
            &f,
            &v(&[0.1_f64.sin(), 0.0, 0.1_f64.cos()]),
            40.0,
            &IntegrationControls::default(),
        )
        .unwrap();
        let z = CriticalSetSample { points: vec![v(&[0.0, 0.0, 1.0])], zeta: 1.0, dim: Some(0) };
        let lim = detect_limit(&t, &z, &metric, 1e-4).unwrap();
        assert!((lim - v(&[0.0, 0.0, 1.0])).norm() <= 1e-6);
    }

    #[test]
    fn diverging_flow_has_no_limit() {
        let m = line();
        let f = ScalarField::with_gradient(|p| p[0] * p[0] / 2.0, |p| v(&[p[0]]));
        let t = integrate_gradient_flow(&m, &f, &v(&[1.0]), 8.0, &IntegrationControls::default())
            .unwrap();
        let metric = CoarseMetric::chordal();
        let z = CriticalSetSample { points: vec![v(&[0.0])], zeta: 0.0, dim: Some(0) };
        assert!(detect_limit(&t, &z, &metric, 1e-4).is_none());
    }

    #[test]
    fn decay_rate_of_one_dimensional_well_is_one() {
        let metric = CoarseMetric::chordal();
        let t = integrate_gradient_flow(
            &line(),
            &well(),
            &v(&[1.0]),
            25.0,
            &IntegrationControls::default(),
        )
        .unwrap();
        let fit = fit_exponential_decay(&t, &v(&[0.0]), &metric).unwrap();
        assert_abs_diff_eq!(fit.b_hat, 1.0, epsilon = 1e-3);
        let checks = check_decay_bound(&t, &v(&[0.0]), &fit, &metric).unwrap();
        assert!(checks.all_passed(), "{:?}", checks.failures());
    }

    #[test]
    fn circle_well_decay_rate_is_two() {
        let (m, f) = circle_well();
        let metric = CoarseMetric::chordal();
        let x0 = v(&[1.05, 0.0, 0.0]);
        let t = integrate_gradient_flow(&m, &f, &x0, 14.0, &IntegrationControls::default())
            .unwrap();
        let fit = fit_exponential_decay(&t, &v(&[1.0, 0.0, 0.0]), &metric).unwrap();
        assert_abs_diff_eq!(fit.b_hat, 2.0, epsilon = 2e-2);
        let checks = check_decay_bound(&t, &v(&[1.0, 0.0, 0.0]), &fit, &metric).unwrap();
        assert!(checks.all_passed(), "{:?}", checks.failures());
    }

    #[test]
    fn sphere_decay_rate_is_one() {
        let (m, f) = sphere_and_height();
        let metric = CoarseMetric::chordal();
        let x0 = v(&[0.3_f64.sin(), 0.0, 0.3_f64.cos()]);
        let t = integrate_gradient_flow(&m, &f, &x0, 30.0, &IntegrationControls::default())
            .unwrap();
        let fit = fit_exponential_decay(&t, &v(&[0.0, 0.0, 1.0]), &metric).unwrap();
        assert_abs_diff_eq!(fit.b_hat, 1.0, epsilon = 1e-2);
    }

    #[test]
    fn fitted_rate_is_shift_invariant() {
        let metric = CoarseMetric::chordal();
        let t = integrate_gradient_flow(
            &line(),
            &well(),
            &v(&[1.0]),
            25.0,
            &IntegrationControls::default(),
        )
        .unwrap();
        let f1 = fit_exponential_decay(&t, &v(&[0.0]), &metric).unwrap();
        let f2 = fit_exponential_decay(&t.shifted(3.5), &v(&[0.0]), &metric).unwrap();
        assert!((f1.b_hat - f2.b_hat).abs() <= 1e-6);
    }

    #[test]
    fn rate_matches_hessian_eigenvalue() {
        // Smallest-magnitude nonzero eigenvalue of the tangent Hessian at
        // the limit should match the fitted rate within 5%.
        let (m, f) = circle_well();
        let metric = CoarseMetric::chordal();
        let t = integrate_gradient_flow(
            &m,
            &f,
            &v(&[1.05, 0.0, 0.0]),
            14.0,
            &IntegrationControls::default(),
        )
        .unwrap();
        let fit = fit_exponential_decay(&t, &v(&[1.0, 0.0, 0.0]), &metric).unwrap();
        let h = tangent_hessian(&m, &f, &v(&[1.0, 0.0, 0.0])).unwrap();
        let min_nonzero = h
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|l| l.abs())
            .filter(|&a| a > 1e-6)
            .fold(f64::INFINITY, f64::min);
        assert!((fit.b_hat - min_nonzero).abs() / min_nonzero <= 0.05);
    }

    #[test]
    fn morse_bott_verification_examples() {
        let (m, f) = circle_well();
        let mut pts = Vec::new();
        for k in 0..8 {
            let a = std::f64::consts::TAU * k as f64 / 8.0;
            pts.push(v(&[a.cos(), a.sin(), 0.0]));
        }
        let z = CriticalSetSample { points: pts, zeta: 0.0, dim: Some(1) };
        assert!(morse_bott_verify(&m, &f, &z).unwrap().all_passed());

        // Degenerate non-Morse–Bott control: f = −x⁴ at the origin has a
        // one-dimensional Hessian kernel but dim Z = 0.
        let m1 = line();
        let f1 = ScalarField::from_value(|p| -p[0].powi(4));
        let z1 = CriticalSetSample { points: vec![v(&[0.0])], zeta: 0.0, dim: Some(0) };
        assert!(!morse_bott_verify(&m1, &f1, &z1).unwrap().all_passed());

        let (ms, fs) = sphere_and_height();
        let zs =
            CriticalSetSample { points: vec![v(&[0.0, 0.0, 1.0])], zeta: 1.0, dim: Some(0) };
        assert!(morse_bott_verify(&ms, &fs, &zs).unwrap().all_passed());
    }

    #[test]
    fn weighted_norm_closed_forms() {
        let n = 4001;
        let s: Vec<f64> = (0..n).map(|i| 20.0 * i as f64 / (n - 1) as f64).collect();
        let u: Vec<f64> = s.iter().map(|&x| (-2.0 * x).exp()).collect();
        // ∫₀^∞ e^{2s} e^{−4s} ds = 1/2.
        let norm =
            weighted_sobolev_norm(&s, &u, &WeightedNormSpec { delta: 1.0, k: 0 }).unwrap();
        assert_abs_diff_eq!(norm, (0.5_f64).sqrt(), epsilon = 1e-3);
        // δ equal to the decay rate: integrand ≡ 1, divergent.
        let inf = weighted_sobolev_norm(&s, &u, &WeightedNormSpec { delta: 2.0, k: 0 }).unwrap();
        assert!(inf.is_infinite());
        // Zero function.
        let zero = vec![0.0; n];
        assert_eq!(
            weighted_sobolev_norm(&s, &zero, &WeightedNormSpec { delta: 1.0, k: 2 }).unwrap(),
            0.0
        );
    }

    #[test]
    fn weighted_norm_is_absolutely_homogeneous() {
        let n = 2001;
        let s: Vec<f64> = (0..n).map(|i| 15.0 * i as f64 / (n - 1) as f64).collect();
        let u: Vec<f64> = s.iter().map(|&x| (-3.0 * x).exp() * (x).cos()).collect();
        let cu: Vec<f64> = u.iter().map(|&x| -2.5 * x).collect();
        let spec = WeightedNormSpec { delta: 1.0, k: 1 };
        let nu = weighted_sobolev_norm(&s, &u, &spec).unwrap();
        let ncu = weighted_sobolev_norm(&s, &cu, &spec).unwrap();
        assert_abs_diff_eq!(ncu, 2.5 * nu, epsilon = 1e-12 * (1.0 + nu));
    }

    #[test]
    fn shift_diagnostic_on_sphere_heteroclinic() {
        let (m, f) = sphere_and_height();
        let metric = CoarseMetric::chordal();
        // Start on the equator: the heteroclinic runs from the south pole
        // (s → −∞) to the north pole (s → +∞).
        let t = integrate_heteroclinic(
            &m,
            &f,
            &v(&[1.0, 0.0, 0.0]),
            40.0,
            &IntegrationControls::default(),
        )
        .unwrap();
        assert!((t.limit.clone().unwrap() - v(&[0.0, 0.0, 1.0])).norm() <= 1e-6);
        assert!((t.limit_neg.clone().unwrap() - v(&[0.0, 0.0, -1.0])).norm() <= 1e-6);
        let diag =
            shift_family_diagnostic(&t, &[1.0, 2.0, 4.0, 8.0], (-3.0, 3.0), &metric).unwrap();
        assert!(diag.checks.all_passed(), "{:?}", diag.checks.failures());
        // Window distance decreasing toward 0; full-line distance ≥ 1.
        assert!(diag.window_distances.last().unwrap() < &diag.window_distances[0]);
        assert!(diag.full_line_distances.iter().all(|&d| d >= 1.0));
    }

    #[test]
    fn shift_diagnostic_flags_constant_input() {
        let metric = CoarseMetric::chordal();
        let mut t =
            Trajectory::constant(&v(&[0.0, 0.0, 1.0]), vec![0.0, 1.0, 2.0], 1.0).unwrap();
        t.limit_neg = Some(v(&[0.0, 0.0, 1.0]));
        let diag = shift_family_diagnostic(&t, &[1.0, 2.0], (-1.0, 1.0), &metric).unwrap();
        assert!(diag.degenerate);
    }
}
