//! Hamiltonian model systems on `R^{2n}` with a marked manifold of
//! 1-periodic orbits.
//!
//! Coordinates are ordered `(x₁, y₁, …, x_n, y_n)` with the standard
//! symplectic pairing `ω(u, v) = Σ (u_{x_i}v_{y_i} − u_{y_i}v_{x_i})` and
//! the sign convention `ω(·, X_H) = dH`. The stock models are rotationally
//! invariant on `R²`: `H = h(ρ)` with `ρ = (x²+y²)/2` gives the vector
//! field `h′(ρ)·(−y, x)`, whose circle of radius `√(2ρ)` is 1-periodic
//! exactly when `h′(ρ)` is a multiple of `2π`.

use std::rc::Rc;

use crate::error::{Error, Result};
use crate::report::{Check, CheckSet};
use crate::{Mat64, Vec64};

/// Relative finite-difference step for monodromy and gradient probes.
const PROBE_STEP: f64 = 1e-5;
/// Flow integration step (fixed-step RK4).
const FLOW_STEP: f64 = 1e-3;
/// Orbit samples must return to themselves after time 1 within this.
const PERIODICITY_TOL: f64 = 1e-6;
/// Singular values of `dφ¹ − I` below this count toward the
/// eigenvalue-one eigenspace.
const MONODROMY_RANK_TOL: f64 = 1e-4;

/// A Hamiltonian system with a marked orbit manifold.
#[derive(Clone)]
pub struct HamiltonianModel {
    /// Ambient dimension `2n`.
    pub dim: usize,
    /// Dimension `d` of the orbit manifold.
    pub d: usize,
    /// The Hamiltonian `H`.
    pub hamiltonian: Rc<dyn Fn(&Vec64) -> f64>,
    /// The Hamiltonian vector field `X_H` with `ω(·, X_H) = dH`.
    pub vector_field: Rc<dyn Fn(&Vec64) -> Vec64>,
    /// Loop of compatible almost complex structures `J_t` (default:
    /// constant standard `J`).
    pub j_t: Rc<dyn Fn(f64, &Vec64) -> Mat64>,
    /// Sample points on the orbit manifold.
    pub orbit_samples: Vec<Vec64>,
}

/// Standard complex structure `J(x_i, y_i) = (−y_i, x_i)` blockwise.
pub fn standard_j(dim: usize) -> Mat64 {
    let mut j = Mat64::zeros(dim, dim);
    for b in 0..dim / 2 {
        j[(2 * b, 2 * b + 1)] = -1.0;
        j[(2 * b + 1, 2 * b)] = 1.0;
    }
    j
}

/// Standard symplectic pairing on `(x₁, y₁, …)` coordinates.
pub fn symplectic_pairing(u: &Vec64, v: &Vec64) -> f64 {
    let mut s = 0.0;
    for b in 0..u.len() / 2 {
        s += u[2 * b] * v[2 * b + 1] - u[2 * b + 1] * v[2 * b];
    }
    s
}

impl HamiltonianModel {
    /// Rotationally invariant model on `R²` with `H = h(ρ)`,
    /// `h(ρ) = πρ²`: the circle `ρ = 1` (radius `√2`) is a 1-periodic
    /// orbit manifold of dimension 1, and `h″ > 0` makes its monodromy a
    /// nontrivial shear.
    pub fn radial() -> Self {
        Self::rotation_invariant(|rho| std::f64::consts::PI * rho * rho, 1)
    }

    /// Degenerate control: linear `h(ρ) = 2πρ` makes *every* circle
    /// 1-periodic with identity monodromy, so the orbit-manifold
    /// condition fails for the marked circle.
    pub fn radial_linear() -> Self {
        Self::rotation_invariant(|rho| std::f64::consts::TAU * rho, 1)
    }

    /// `H = h(ρ)` on `R²` with the circle `ρ = 1` marked (`d = 1`).
    pub fn rotation_invariant(h: impl Fn(f64) -> f64 + 'static, n_samples_pow: usize) -> Self {
        let h = Rc::new(h);
        let h_val = h.clone();
        let hamiltonian = move |p: &Vec64| h_val((p[0] * p[0] + p[1] * p[1]) / 2.0);
        let h_vf = h;
        let vector_field = move |p: &Vec64| {
            let rho = (p[0] * p[0] + p[1] * p[1]) / 2.0;
            let step = PROBE_STEP * (1.0 + rho);
            let dh = (h_vf(rho + step) - h_vf(rho - step)) / (2.0 * step);
            Vec64::from_column_slice(&[-dh * p[1], dh * p[0]])
        };
        let n_samples = 8 * n_samples_pow;
        let orbit_samples = (0..n_samples)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n_samples as f64;
                Vec64::from_column_slice(&[2f64.sqrt() * a.cos(), 2f64.sqrt() * a.sin()])
            })
            .collect();
        HamiltonianModel {
            dim: 2,
            d: 1,
            hamiltonian: Rc::new(hamiltonian),
            vector_field: Rc::new(vector_field),
            j_t: Rc::new(|_t, _p| standard_j(2)),
            orbit_samples,
        }
    }

    /// Product of independent models: dimensions and orbit dimensions add,
    /// the Hamiltonian is the sum, and everything acts blockwise.
    pub fn product(factors: Vec<HamiltonianModel>) -> Self {
        assert!(!factors.is_empty());
        let dim: usize = factors.iter().map(|m| m.dim).sum();
        let d: usize = factors.iter().map(|m| m.d).sum();
        let n_samples = factors.iter().map(|m| m.orbit_samples.len()).min().unwrap();
        let mut orbit_samples = Vec::with_capacity(n_samples);
        for i in 0..n_samples {
            let mut p = Vec64::zeros(dim);
            let mut off = 0;
            for m in &factors {
                for c in 0..m.dim {
                    p[off + c] = m.orbit_samples[i][c];
                }
                off += m.dim;
            }
            orbit_samples.push(p);
        }
        let fs = Rc::new(factors);
        let f_h = fs.clone();
        let hamiltonian = move |p: &Vec64| {
            let mut total = 0.0;
            let mut off = 0;
            for m in f_h.iter() {
                let block = Vec64::from_fn(m.dim, |c, _| p[off + c]);
                total += (m.hamiltonian)(&block);
                off += m.dim;
            }
            total
        };
        let f_v = fs.clone();
        let vector_field = move |p: &Vec64| {
            let mut out = Vec64::zeros(p.len());
            let mut off = 0;
            for m in f_v.iter() {
                let block = Vec64::from_fn(m.dim, |c, _| p[off + c]);
                let v = (m.vector_field)(&block);
                for c in 0..m.dim {
                    out[off + c] = v[c];
                }
                off += m.dim;
            }
            out
        };
        let f_j = fs;
        let j_t = move |t: f64, p: &Vec64| {
            let mut j = Mat64::zeros(p.len(), p.len());
            let mut off = 0;
            for m in f_j.iter() {
                let block = Vec64::from_fn(m.dim, |c, _| p[off + c]);
                let jb = (m.j_t)(t, &block);
                for r in 0..m.dim {
                    for c in 0..m.dim {
                        j[(off + r, off + c)] = jb[(r, c)];
                    }
                }
                off += m.dim;
            }
            j
        };
        HamiltonianModel {
            dim,
            d,
            hamiltonian: Rc::new(hamiltonian),
            vector_field: Rc::new(vector_field),
            j_t: Rc::new(j_t),
            orbit_samples,
        }
    }

    /// Time-`t` Hamiltonian flow by fixed-step RK4.
    pub fn flow(&self, t: f64, p: &Vec64) -> Vec64 {
        let n_steps = (t.abs() / FLOW_STEP).ceil().max(1.0) as usize;
        let h = t / n_steps as f64;
        let f = &*self.vector_field;
        let mut q = p.clone();
        for _ in 0..n_steps {
            let k1 = f(&q);
            let k2 = f(&(&q + &k1 * (h / 2.0)));
            let k3 = f(&(&q + &k2 * (h / 2.0)));
            let k4 = f(&(&q + &k3 * h));
            q += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        q
    }

    /// Ambient gradient of `H` by central differences.
    pub fn grad_h(&self, p: &Vec64) -> Vec64 {
        let h = PROBE_STEP * (1.0 + p.norm());
        Vec64::from_fn(p.len(), |i, _| {
            let mut pp = p.clone();
            let mut pm = p.clone();
            pp[i] += h;
            pm[i] -= h;
            ((self.hamiltonian)(&pp) - (self.hamiltonian)(&pm)) / (2.0 * h)
        })
    }

    /// Structural sanity suite: `dH(v) = ω(v, X_H)` on random probes,
    /// `J_t² = −I`, and `ω(·, J_t·)` positive definite.
    pub fn consistency_check(&self, probes: &[Vec64]) -> CheckSet {
        let mut checks = CheckSet::new();
        let mut worst_pairing = 0.0_f64;
        let mut worst_j_sq = 0.0_f64;
        let mut worst_metric = f64::INFINITY;
        for p in probes {
            let grad = self.grad_h(p);
            let xh = (self.vector_field)(p);
            for i in 0..self.dim {
                let mut v = Vec64::zeros(self.dim);
                v[i] = 1.0;
                worst_pairing = worst_pairing.max((grad[i] - symplectic_pairing(&v, &xh)).abs());
            }
            for &t in &[0.0, 0.25, 0.5, 0.75] {
                let j = (self.j_t)(t, p);
                worst_j_sq = worst_j_sq.max((&j * &j + Mat64::identity(self.dim, self.dim)).amax());
                // g(u, v) := ω(u, Jv) must be SPD; probe its smallest
                // eigenvalue through the assembled matrix.
                let mut g = Mat64::zeros(self.dim, self.dim);
                for r in 0..self.dim {
                    let mut er = Vec64::zeros(self.dim);
                    er[r] = 1.0;
                    for c in 0..self.dim {
                        let jc = Vec64::from(j.column(c));
                        g[(r, c)] = symplectic_pairing(&er, &jc);
                    }
                }
                let min_eig = g
                    .clone()
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                worst_metric = worst_metric.min(min_eig);
            }
        }
        checks.push(Check::le(
            "hamiltonian_vector_field_pairing",
            worst_pairing,
            1e-8,
            "max |dH(v) − ω(v, X_H)| over probes",
        ));
        checks.push(Check::le("j_squares_to_minus_identity", worst_j_sq, 1e-10, "max ‖J²+I‖"));
        checks.push(Check::ge(
            "metric_positive_definite",
            worst_metric,
            1e-10,
            "min eigenvalue of ω(·, J·)",
        ));
        checks
    }

    /// Monodromy `dφ¹` at `p` by central differences of the time-1 flow.
    pub fn monodromy(&self, p: &Vec64) -> Mat64 {
        let h = PROBE_STEP * (1.0 + p.norm());
        let mut m = Mat64::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            let mut pp = p.clone();
            let mut pm = p.clone();
            pp[i] += h;
            pm[i] -= h;
            let col = (self.flow(1.0, &pp) - self.flow(1.0, &pm)) / (2.0 * h);
            m.set_column(i, &col);
        }
        m
    }
}

/// Orbit-manifold nondegeneracy check: at every orbit sample the
/// eigenvalue-one eigenspace of the monodromy `dφ¹` (counted as the
/// nullity of `dφ¹ − I` by singular values below 1e−4) must match the
/// orbit-manifold dimension `d`.
///
/// Non-periodic samples are a precondition error, not a failed check.
pub fn mb_condition_check(model: &HamiltonianModel) -> Result<CheckSet> {
    let mut checks = CheckSet::new();
    for (idx, p) in model.orbit_samples.iter().enumerate() {
        let ret = model.flow(1.0, p);
        let drift = (&ret - p).norm();
        if drift > PERIODICITY_TOL {
            return Err(Error::Precondition(format!(
                "orbit sample {idx} is not 1-periodic (return drift {drift:.3e})"
            )));
        }
        let m = model.monodromy(p) - Mat64::identity(model.dim, model.dim);
        let sv = m.svd(false, false).singular_values;
        let eigenspace_dim = sv.iter().filter(|&&s| s < MONODROMY_RANK_TOL).count();
        checks.push(Check::bool(
            &format!("monodromy_fixed_space_dim_sample_{idx}"),
            eigenspace_dim == model.d,
            format!("eigenvalue-one eigenspace dim {eigenspace_dim}, orbit manifold dim {}", model.d),
        ));
    }
    Ok(checks)
}

/// One row of the rotation-invariant action profile.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ReebProfileRow {
    /// Radial parameter.
    pub r: f64,
    /// Orbit action `r·h′(r) − h(r)`.
    pub action: f64,
    /// Its derivative `r·h″(r)`.
    pub action_derivative: f64,
}

/// Action profile of a rotation-invariant Hamiltonian `h` over a radial
/// grid: tabulates `(r, rh′−h, rh″)` with finite-difference derivatives,
/// and checks that the action is monotone increasing across grid intervals
/// where `h″ > 0`.
pub fn reeb_action_profile(
    h: &dyn Fn(f64) -> f64,
    r_grid: &[f64],
) -> (Vec<ReebProfileRow>, CheckSet) {
    let mut rows = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let h1 = 1e-6 * (1.0 + r.abs());
        let dh = (h(r + h1) - h(r - h1)) / (2.0 * h1);
        let h2 = 1e-4 * (1.0 + r.abs());
        let ddh = (h(r + h2) - 2.0 * h(r) + h(r - h2)) / (h2 * h2);
        rows.push(ReebProfileRow { r, action: r * dh - h(r), action_derivative: r * ddh });
    }
    let mut checks = CheckSet::new();
    let mut worst_violation = 0.0_f64;
    for w in rows.windows(2) {
        if w[0].action_derivative > 0.0 && w[1].action_derivative > 0.0 {
            worst_violation = worst_violation.max(w[0].action - w[1].action);
        }
    }
    checks.push(Check::le(
        "action_monotone_where_convex",
        worst_violation,
        1e-10,
        "max action decrease across intervals with rh″ > 0",
    ));
    (rows, checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn random_probes(dim: usize, n: usize, seed: u64) -> Vec<Vec64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Vec64::from_fn(dim, |_r, _c| rng.random::<f64>() * 3.0 - 1.5))
            .collect()
    }

    #[test]
    fn radial_model_is_consistent() {
        let m = HamiltonianModel::radial();
        let checks = m.consistency_check(&random_probes(2, 100, 3));
        assert!(checks.all_passed(), "{:?}", checks.failures());
    }

    #[test]
    fn radial_orbits_are_periodic_and_energy_is_conserved() {
        let m = HamiltonianModel::radial();
        for p in &m.orbit_samples {
            let q = m.flow(1.0, p);
            assert!((q - p).norm() <= 1e-8);
        }
        // Off the marked circle, the flow still conserves H.
        let p = Vec64::from_column_slice(&[0.9, 0.4]);
        let q = m.flow(0.7, &p);
        assert_abs_diff_eq!((m.hamiltonian)(&q), (m.hamiltonian)(&p), epsilon = 1e-9);
    }

    #[test]
    fn monodromy_matches_shear_oracle() {
        // The time-1 flow rotates p by the angle 2πρ(p), so on the orbit
        // circle dφ¹ − I = 2π(Jp)pᵀ: a rank-one shear whose nonzero
        // singular value is 2π‖p‖² = 4π at radius √2.
        let m = HamiltonianModel::radial();
        let p = &m.orbit_samples[0];
        let delta = m.monodromy(p) - Mat64::identity(2, 2);
        let sv = delta.svd(false, false).singular_values;
        assert_abs_diff_eq!(sv[0], 2.0 * std::f64::consts::TAU, epsilon = 1e-3);
        assert!(sv[1] <= 1e-6);
    }

    #[test]
    fn mb_check_passes_radial_fails_linear_passes_product() {
        let radial = HamiltonianModel::radial();
        assert!(mb_condition_check(&radial).unwrap().all_passed());

        let linear = HamiltonianModel::radial_linear();
        let report = mb_condition_check(&linear).unwrap();
        assert!(!report.all_passed(), "identity monodromy must fail the dimension match");

        let prod = HamiltonianModel::product(vec![
            HamiltonianModel::radial(),
            HamiltonianModel::radial(),
        ]);
        assert_eq!(prod.d, 2);
        let checks = prod.consistency_check(&random_probes(4, 50, 9));
        assert!(checks.all_passed(), "{:?}", checks.failures());
        assert!(mb_condition_check(&prod).unwrap().all_passed());
    }

    #[test]
    fn action_profile_oracles() {
        let grid: Vec<f64> = (1..=20).map(|i| 0.1 * i as f64).collect();
        // h(r) = r²/2 → action r²/2, derivative r².
        let (rows, checks) = reeb_action_profile(&|r| r * r / 2.0, &grid);
        assert!(checks.all_passed());
        for row in &rows {
            assert_abs_diff_eq!(row.action, row.r * row.r / 2.0, epsilon = 1e-7);
            assert_abs_diff_eq!(row.action_derivative, row.r, epsilon = 1e-5);
        }
        // Linear h → constant (zero-slope) profile.
        let (rows, checks) = reeb_action_profile(&|r| 3.0 * r + 1.0, &grid);
        assert!(checks.all_passed());
        for row in &rows {
            assert_abs_diff_eq!(row.action, -1.0, epsilon = 1e-8);
            assert_abs_diff_eq!(row.action_derivative, 0.0, epsilon = 1e-6);
        }
    }

    /// Orbit action by quadrature: ∮ (x ẏ − y ẋ)/2 dt − ∫ H dt along the
    /// flow, evaluated with the trapezoid rule on a fine time grid.
    fn action_by_quadrature(m: &HamiltonianModel, p: &Vec64, n: usize) -> f64 {
        let mut total = 0.0;
        let dt = 1.0 / n as f64;
        let mut q = p.clone();
        let integrand = |q: &Vec64| {
            let v = (m.vector_field)(q);
            (q[0] * v[1] - q[1] * v[0]) / 2.0 - (m.hamiltonian)(q)
        };
        let mut prev = integrand(&q);
        for _ in 0..n {
            q = m.flow(dt, &q);
            let cur = integrand(&q);
            total += dt * (prev + cur) / 2.0;
            prev = cur;
        }
        total
    }

    #[test]
    fn radial_critical_actions_are_pi_k_squared() {
        let m = HamiltonianModel::radial();
        // The circle ρ = k (radius √(2k)) is a k-fold 1-periodic orbit
        // with action πk².
        for k in 1..=3usize {
            let p = Vec64::from_column_slice(&[(2.0 * k as f64).sqrt(), 0.0]);
            let ret = m.flow(1.0, &p);
            assert!((ret - &p).norm() <= 1e-6, "ρ = {k} orbit must be 1-periodic");
            let action = action_by_quadrature(&m, &p, 4000);
            assert_abs_diff_eq!(action, PI * (k * k) as f64, epsilon = 1e-6);
        }
    }
}
