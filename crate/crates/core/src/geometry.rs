//! Embedded manifolds, scalar fields, and coarse metrics.
//!
//! Manifolds are represented as level sets of a constraint map
//! `c: R^m → R^{m−d}` together with an analytic tangent projector. The
//! Riemannian metric is always the ambient Euclidean metric restricted to
//! tangent spaces; distances between points use the chordal (ambient
//! Euclidean) metric, which induces a topology at least as coarse as the
//! intrinsic one.

use crate::error::{Error, Result};
use crate::{Mat64, Vec64};

/// Tolerance below which a point counts as lying on the manifold.
pub const ON_MANIFOLD_TOL: f64 = 1e-8;
/// Tolerance below which a tangent vector counts as zero (critical point).
pub const CRITICAL_TOL: f64 = 1e-6;

/// An embedded submanifold of `R^m`, given as the zero set of a constraint
/// map with an analytic tangent projector.
///
/// For the full space `R^m` the constraint is empty and the projector is
/// the identity.
pub struct EmbeddedManifold {
    ambient_dim: usize,
    intrinsic_dim: usize,
    /// Constraint map `R^m → R^{m−d}`; `None` encodes all of `R^m`.
    constraint: Option<Box<dyn Fn(&Vec64) -> Vec64 + Sync + Send>>,
    /// Jacobian of the constraint map, `(m−d)×m`.
    constraint_jacobian: Option<Box<dyn Fn(&Vec64) -> Mat64 + Sync + Send>>,
    tangent_projector: Box<dyn Fn(&Vec64) -> Mat64 + Sync + Send>,
}

impl EmbeddedManifold {
    /// The full Euclidean space `R^m`: no constraint, identity projector.
    pub fn euclidean(m: usize) -> Self {
        EmbeddedManifold {
            ambient_dim: m,
            intrinsic_dim: m,
            constraint: None,
            constraint_jacobian: None,
            tangent_projector: Box::new(move |_p| Mat64::identity(m, m)),
        }
    }

    /// The unit sphere `S^{m−1} ⊂ R^m`, constraint `|p|² − 1`, projector
    /// `I − p pᵀ`.
    pub fn unit_sphere(m: usize) -> Self {
        EmbeddedManifold {
            ambient_dim: m,
            intrinsic_dim: m - 1,
            constraint: Some(Box::new(|p: &Vec64| {
                Vec64::from_element(1, p.norm_squared() - 1.0)
            })),
            constraint_jacobian: Some(Box::new(|p: &Vec64| {
                Mat64::from_fn(1, p.len(), |_r, c| 2.0 * p[c])
            })),
            tangent_projector: Box::new(move |p: &Vec64| {
                let m = p.len();
                Mat64::identity(m, m) - p * p.transpose() / p.norm_squared()
            }),
        }
    }

    /// A general level set `{c(p) = 0}` with user-supplied constraint,
    /// Jacobian, and tangent projector.
    pub fn level_set(
        ambient_dim: usize,
        intrinsic_dim: usize,
        constraint: impl Fn(&Vec64) -> Vec64 + Sync + Send + 'static,
        constraint_jacobian: impl Fn(&Vec64) -> Mat64 + Sync + Send + 'static,
        tangent_projector: impl Fn(&Vec64) -> Mat64 + Sync + Send + 'static,
    ) -> Self {
        EmbeddedManifold {
            ambient_dim,
            intrinsic_dim,
            constraint: Some(Box::new(constraint)),
            constraint_jacobian: Some(Box::new(constraint_jacobian)),
            tangent_projector: Box::new(tangent_projector),
        }
    }

    /// Ambient dimension `m`.
    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Intrinsic dimension `d`.
    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    /// Max-norm of the constraint at `p` (0 for the unconstrained space).
    pub fn constraint_residual(&self, p: &Vec64) -> f64 {
        match &self.constraint {
            None => 0.0,
            Some(c) => c(p).amax(),
        }
    }

    /// Whether `p` lies on the manifold up to [`ON_MANIFOLD_TOL`].
    pub fn is_on_manifold(&self, p: &Vec64) -> bool {
        self.constraint_residual(p) <= ON_MANIFOLD_TOL
    }

    /// Orthogonal projector onto the tangent space at `p`.
    pub fn tangent_projector(&self, p: &Vec64) -> Mat64 {
        (self.tangent_projector)(p)
    }

    /// Project `p` back onto the manifold by Newton steps on the constraint
    /// (`p ← p − Jᵀ(JJᵀ)⁻¹ c(p)`), iterating until the residual is below
    /// `tol` or 20 steps have been taken.
    pub fn reproject(&self, p: &Vec64, tol: f64) -> Result<Vec64> {
        let (c, jac) = match (&self.constraint, &self.constraint_jacobian) {
            (Some(c), Some(j)) => (c, j),
            _ => return Ok(p.clone()),
        };
        let mut q = p.clone();
        for _ in 0..20 {
            let r = c(&q);
            if r.amax() <= tol {
                return Ok(q);
            }
            let j = jac(&q);
            let gram = &j * j.transpose();
            let sol = gram.lu().solve(&r).ok_or_else(|| {
                Error::Integration("singular constraint Jacobian during re-projection".into())
            })?;
            q -= j.transpose() * sol;
        }
        if c(&q).amax() <= tol {
            Ok(q)
        } else {
            Err(Error::Integration(format!(
                "re-projection stalled at residual {:.3e}",
                c(&q).amax()
            )))
        }
    }

    /// Orthonormal basis of the tangent space at `p`: eigenvectors of the
    /// (symmetric, idempotent) projector with eigenvalue near 1, returned
    /// as the columns of an `m×d` matrix.
    pub fn tangent_frame(&self, p: &Vec64) -> Mat64 {
        let proj = self.tangent_projector(p);
        let sym = (&proj + proj.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let mut cols: Vec<Vec64> = Vec::new();
        for (i, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam > 0.5 {
                cols.push(Vec64::from(eig.eigenvectors.column(i)));
            }
        }
        let mut frame = Mat64::zeros(self.ambient_dim, cols.len());
        for (i, v) in cols.iter().enumerate() {
            frame.set_column(i, v);
        }
        frame
    }
}

/// A scalar field on ambient space, with optional analytic gradient and
/// Hessian. When the analytic derivative is absent, central finite
/// differences are used with scale-aware steps.
pub struct ScalarField {
    value: Box<dyn Fn(&Vec64) -> f64 + Sync + Send>,
    gradient: Option<Box<dyn Fn(&Vec64) -> Vec64 + Sync + Send>>,
    hessian: Option<Box<dyn Fn(&Vec64) -> Mat64 + Sync + Send>>,
}

impl ScalarField {
    /// Field from a value closure only (derivatives by finite differences).
    pub fn from_value(value: impl Fn(&Vec64) -> f64 + Sync + Send + 'static) -> Self {
        ScalarField {
            value: Box::new(value),
            gradient: None,
            hessian: None,
        }
    }

    /// Field with an analytic gradient.
    pub fn with_gradient(
        value: impl Fn(&Vec64) -> f64 + Sync + Send + 'static,
        gradient: impl Fn(&Vec64) -> Vec64 + Sync + Send + 'static,
    ) -> Self {
        ScalarField {
            value: Box::new(value),
            gradient: Some(Box::new(gradient)),
            hessian: None,
        }
    }

    /// Field with analytic gradient and Hessian.
    pub fn with_hessian(
        value: impl Fn(&Vec64) -> f64 + Sync + Send + 'static,
        gradient: impl Fn(&Vec64) -> Vec64 + Sync + Send + 'static,
        hessian: impl Fn(&Vec64) -> Mat64 + Sync + Send + 'static,
    ) -> Self {
        ScalarField {
            value: Box::new(value),
            gradient: Some(Box::new(gradient)),
            hessian: Some(Box::new(hessian)),
        }
    }

    /// Value `f(p)`.
    pub fn value(&self, p: &Vec64) -> f64 {
        (self.value)(p)
    }

    /// Ambient gradient: analytic if supplied, otherwise central finite
    /// differences with step `1e−5·(1+|p|)`.
    pub fn ambient_gradient(&self, p: &Vec64) -> Vec64 {
        if let Some(g) = &self.gradient {
            return g(p);
        }
        let h = 1e-5 * (1.0 + p.norm());
        let mut g = Vec64::zeros(p.len());
        let mut q = p.clone();
        for i in 0..p.len() {
            q[i] = p[i] + h;
            let fp = (self.value)(&q);
            q[i] = p[i] - h;
            let fm = (self.value)(&q);
            q[i] = p[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        g
    }

    /// Ambient Hessian: analytic if supplied, otherwise second-order central
    /// differences with step `1e−4·(1+|p|)`, symmetrized.
    pub fn ambient_hessian(&self, p: &Vec64) -> Mat64 {
        if let Some(h) = &self.hessian {
            let m = h(p);
            return (&m + m.transpose()) * 0.5;
        }
        let n = p.len();
        let h = 1e-4 * (1.0 + p.norm());
        let f0 = (self.value)(p);
        let mut out = Mat64::zeros(n, n);
        let mut q = p.clone();
        for i in 0..n {
            q[i] = p[i] + h;
            let fp = (self.value)(&q);
            q[i] = p[i] - h;
            let fm = (self.value)(&q);
            q[i] = p[i];
            out[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
            for j in (i + 1)..n {
                q[i] = p[i] + h;
                q[j] = p[j] + h;
                let fpp = (self.value)(&q);
                q[j] = p[j] - h;
                let fpm = (self.value)(&q);
                q[i] = p[i] - h;
                q[j] = p[j] + h;
                let fmp = (self.value)(&q);
                q[j] = p[j] - h;
                let fmm = (self.value)(&q);
                q[i] = p[i];
                q[j] = p[j];
                let v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }
}

/// A coarse metric: any metric whose topology is at least as coarse as the
/// ambient one. The default realization is the chordal (ambient Euclidean)
/// distance.
pub struct CoarseMetric {
    dist: Box<dyn Fn(&Vec64, &Vec64) -> f64 + Sync + Send>,
}

impl CoarseMetric {
    /// Chordal metric: ambient Euclidean distance.
    pub fn chordal() -> Self {
        CoarseMetric {
            dist: Box::new(|p, q| (p - q).norm()),
        }
    }

    /// Custom distance function.
    pub fn from_fn(dist: impl Fn(&Vec64, &Vec64) -> f64 + Sync + Send + 'static) -> Self {
        CoarseMetric { dist: Box::new(dist) }
    }

    /// Distance between two points.
    pub fn dist(&self, p: &Vec64, q: &Vec64) -> f64 {
        (self.dist)(p, q)
    }
}

/// Chordal (ambient Euclidean) distance between two points.
pub fn coarse_distance(p: &Vec64, q: &Vec64) -> f64 {
    (p - q).norm()
}

/// Riemannian gradient of `f` on `M` at `p`: the tangent projection of the
/// ambient gradient. Its squared norm is the local energy density of the
/// gradient flow.
pub fn riemannian_gradient(m: &EmbeddedManifold, f: &ScalarField, p: &Vec64) -> Result<Vec64> {
    if !m.is_on_manifold(p) {
        return Err(Error::Domain(format!(
            "point is off the manifold (constraint residual {:.3e})",
            m.constraint_residual(p)
        )));
    }
    Ok(m.tangent_projector(p) * f.ambient_gradient(p))
}

/// Hessian of `f` restricted to the tangent space at a critical point `p`,
/// expressed in an orthonormal tangent frame (`d×d`, symmetric).
///
/// Computed by second-order central differences of `f` along tangent lines
/// re-projected onto the manifold; at critical points the result is
/// independent of the chosen frame up to orthogonal conjugation, so its
/// eigenvalues and kernel dimension are well defined.
pub fn tangent_hessian(m: &EmbeddedManifold, f: &ScalarField, p: &Vec64) -> Result<Mat64> {
    let grad = riemannian_gradient(m, f, p)?;
    if grad.norm() > CRITICAL_TOL {
        return Err(Error::Domain(format!(
            "tangent Hessian requested at a non-critical point (|∇f| = {:.3e})",
            grad.norm()
        )));
    }
    let frame = m.tangent_frame(p);
    let d = frame.ncols();
    let h = 1e-4 * (1.0 + p.norm());
    let f0 = f.value(p);
    // f evaluated after moving along a tangent direction and re-projecting.
    let eval = |dir: Vec64| -> Result<f64> {
        let q = m.reproject(&(p + dir), 1e-12)?;
        Ok(f.value(&q))
    };
    let mut out = Mat64::zeros(d, d);
    for i in 0..d {
        let vi = Vec64::from(frame.column(i));
        let fp = eval(&vi * h)?;
        let fm = eval(&vi * (-h))?;
        out[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in (i + 1)..d {
            let vj = Vec64::from(frame.column(j));
            let fpp = eval((&vi + &vj) * h)?;
            let fpm = eval((&vi - &vj) * h)?;
            let fmp = eval((&vj - &vi) * h)?;
            let fmm = eval((&vi + &vj) * (-h))?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok((&out + out.transpose()) * 0.5)
}

/// Number of singular values below `1e−6·max(largest singular value, 1)`:
/// the kernel dimension of a matrix, scale-invariant above unit scale with
/// an absolute floor so that (near-)zero matrices report a full kernel.
pub fn kernel_dimension(mat: &Mat64) -> usize {
    let svals = mat.clone().svd(false, false).singular_values;
    let max = svals.iter().cloned().fold(0.0_f64, f64::max);
    let tol = 1e-6 * max.max(1.0);
    svals.iter().filter(|&&s| s < tol).count()
}
