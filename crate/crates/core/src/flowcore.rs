//! Trajectories, energies, spectral gaps, and empirical compactness
//! diagnostics for families of gradient flow lines.
//!
//! A [`Trajectory`] is a discretized curve `γ` on an `s`-grid together with
//! cached values of `f∘γ` and of the energy density `G∘γ = |∇f∘γ|²`. The
//! diagnostics in this module treat trajectories abstractly: any curve along
//! which `(f∘γ)′ = G∘γ` holds (to discretization error) is a gradient flow
//! line in the generalized sense, regardless of how it was produced.

use crate::error::{Error, Result};
use crate::geometry::CoarseMetric;
use crate::report::{Check, CheckSet};
use crate::Vec64;

/// Guard above which a single trapezoid segment is treated as a divergent
/// tail and the energy reported as `+∞`.
const ENERGY_OVERFLOW_GUARD: f64 = 1e12;

/// A discretized trajectory: strictly increasing `s`-grid, one ambient point
/// per node, cached `f` and `G = |∇f|²` values, and an optional detected
/// limit point.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Strictly increasing grid of curve parameters.
    pub s_grid: Vec<f64>,
    /// One ambient point per grid node.
    pub points: Vec<Vec64>,
    /// Detected limit as `s → ∞`, if any.
    pub limit: Option<Vec64>,
    /// Detected limit as `s → −∞` (heteroclinic, two-sided trajectories).
    pub limit_neg: Option<Vec64>,
    /// Cached `f(γ(s))` per node.
    pub f_values: Vec<f64>,
    /// Cached `G(γ(s)) = |∇f(γ(s))|²` per node.
    pub g_values: Vec<f64>,
}

impl Trajectory {
    /// Build a trajectory, validating grid monotonicity and matching lengths.
    pub fn new(
        s_grid: Vec<f64>,
        points: Vec<Vec64>,
        f_values: Vec<f64>,
        g_values: Vec<f64>,
    ) -> Result<Self> {
        if s_grid.len() != points.len()
            || s_grid.len() != f_values.len()
            || s_grid.len() != g_values.len()
        {
            return Err(Error::Precondition("trajectory field lengths differ".into()));
        }
        if s_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition("s-grid must be strictly increasing".into()));
        }
        Ok(Trajectory { s_grid, points, limit: None, limit_neg: None, f_values, g_values })
    }

    /// Constant trajectory sitting at `p` with the given `f`-value (its
    /// energy density is zero).
    pub fn constant(p: &Vec64, s_grid: Vec<f64>, f_value: f64) -> Result<Self> {
        let n = s_grid.len();
        let mut t = Trajectory::new(
            s_grid,
            vec![p.clone(); n],
            vec![f_value; n],
            vec![0.0; n],
        )?;
        t.limit = Some(p.clone());
        Ok(t)
    }

    /// Number of grid nodes.
    pub fn len(&self) -> usize {
        self.s_grid.len()
    }

    /// Whether the trajectory has no nodes.
    pub fn is_empty(&self) -> bool {
        self.s_grid.is_empty()
    }

    /// Shift the parameter grid by `s0` (the trajectory class is invariant
    /// under this; energies and identities only see parameter differences).
    pub fn shifted(&self, s0: f64) -> Trajectory {
        let mut t = self.clone();
        for s in &mut t.s_grid {
            *s += s0;
        }
        t
    }

    /// Point at parameter `s` by linear interpolation, clamped to the ends.
    pub fn sample(&self, s: f64) -> Vec64 {
        let n = self.len();
        if s <= self.s_grid[0] {
            return self.points[0].clone();
        }
        if s >= self.s_grid[n - 1] {
            return self.points[n - 1].clone();
        }
        let idx = self.s_grid.partition_point(|&x| x < s);
        let (s0, s1) = (self.s_grid[idx - 1], self.s_grid[idx]);
        let w = (s - s0) / (s1 - s0);
        &self.points[idx - 1] * (1.0 - w) + &self.points[idx] * w
    }
}

/// A finite sample of a critical manifold `Z` on which `f` is constant with
/// value `zeta`.
#[derive(Debug, Clone)]
pub struct CriticalSetSample {
    /// Sampled points of `Z`.
    pub points: Vec<Vec64>,
    /// Common critical value of `f` on `Z`.
    pub zeta: f64,
    /// Dimension of `Z`, when known (needed by Morse–Bott verification).
    pub dim: Option<usize>,
}

impl CriticalSetSample {
    /// Distance from `p` to the nearest sample point.
    pub fn dist_to(&self, p: &Vec64, metric: &CoarseMetric) -> f64 {
        self.points
            .iter()
            .map(|z| metric.dist(p, z))
            .fold(f64::INFINITY, f64::min)
    }
}

/// A family of trajectories with a common energy cap `E₀` and interval
/// start `a`, all expected to converge into `Z`.
#[derive(Debug, Clone)]
pub struct ModuliFamily {
    /// Member trajectories.
    pub members: Vec<Trajectory>,
    /// Energy cap `E₀`.
    pub e0: f64,
    /// Common interval start `a`.
    pub a: f64,
}

/// Which end of the critical value `zeta` a spectral gap is measured at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapMode {
    /// Gap towards competitor values below `zeta`.
    Positive,
    /// Gap towards competitor values above `zeta`.
    Negative,
    /// Minimum of the two one-sided gaps.
    Ordinary,
}

/// Trapezoid-rule energy `E(γ) = ∫ G∘γ ds` over the trajectory's grid.
///
/// For exact flow lines this agrees with `f∘γ(b) − f∘γ(a)`. Divergent tails
/// (non-finite values, or a final segment contributing more than the
/// overflow guard) are reported as `+∞`.
pub fn energy_of(traj: &Trajectory) -> f64 {
    let mut total = 0.0;
    for i in 1..traj.len() {
        let seg = 0.5
            * (traj.g_values[i] + traj.g_values[i - 1])
            * (traj.s_grid[i] - traj.s_grid[i - 1]);
        if !seg.is_finite() || seg > ENERGY_OVERFLOW_GUARD {
            return f64::INFINITY;
        }
        total += seg;
    }
    total
}

/// Maximum over interior nodes of `|d/ds (f∘γ) − G∘γ|` with centered
/// differences: certifies membership in the gradient-flow class.
pub fn flow_identity_residual(traj: &Trajectory) -> Result<f64> {
    if traj.len() < 3 {
        return Err(Error::Precondition("need ≥3 grid nodes".into()));
    }
    let mut worst = 0.0_f64;
    for i in 1..traj.len() - 1 {
        let df = (traj.f_values[i + 1] - traj.f_values[i - 1])
            / (traj.s_grid[i + 1] - traj.s_grid[i - 1]);
        worst = worst.max((df - traj.g_values[i]).abs());
    }
    Ok(worst)
}

/// Spectral gap of the critical value `zeta` against a list of competitor
/// critical values (with multiplicity, excluding `zeta`'s own component).
///
/// Positive mode measures the smallest drop `zeta − v` over competitors
/// `v ≤ zeta`; negative mode the smallest rise `v − zeta` over `v ≥ zeta`;
/// ordinary mode the minimum of both. The infimum of an empty competitor
/// set is `+∞`.
pub fn spectral_gap(critical_values: &[f64], zeta: f64, mode: GapMode) -> f64 {
    let below = critical_values
        .iter()
        .filter(|&&v| v <= zeta)
        .map(|&v| zeta - v)
        .fold(f64::INFINITY, f64::min);
    let above = critical_values
        .iter()
        .filter(|&&v| v >= zeta)
        .map(|&v| v - zeta)
        .fold(f64::INFINITY, f64::min);
    match mode {
        GapMode::Positive => below,
        GapMode::Negative => above,
        GapMode::Ordinary => below.min(above),
    }
}

/// Uniform (sup) distance between two trajectories in the given metric,
/// including the distance between limits when both are present.
///
/// If the grids differ, `t2` is resampled onto `t1`'s grid by linear
/// interpolation (clamped at the ends). When either limit is missing, the
/// comparison covers the finite grid only.
pub fn uniform_distance(t1: &Trajectory, t2: &Trajectory, metric: &CoarseMetric) -> f64 {
    let mut worst = 0.0_f64;
    for (i, &s) in t1.s_grid.iter().enumerate() {
        let q = t2.sample(s);
        worst = worst.max(metric.dist(&t1.points[i], &q));
    }
    if let (Some(l1), Some(l2)) = (&t1.limit, &t2.limit) {
        worst = worst.max(metric.dist(l1, l2));
    }
    worst
}

/// Options for [`compactness_certificate`].
#[derive(Debug, Clone, Copy)]
pub struct CompactnessOptions {
    /// Neighborhood radius `r` around the `Z` sample for the entry-time
    /// diagnostic.
    pub radius: f64,
    /// Covering radius for the greedy net (total-boundedness proxy).
    pub eps_cluster: f64,
    /// Slack allowed on the action window.
    pub action_tol: f64,
}

impl Default for CompactnessOptions {
    fn default() -> Self {
        CompactnessOptions { radius: 0.5, eps_cluster: 1e-2, action_tol: 1e-6 }
    }
}

/// Report from [`compactness_certificate`].
#[derive(Debug, Clone)]
pub struct CompactnessReport {
    /// Count of `(member, node)` pairs whose `f`-value leaves the action
    /// window `[ζ − E₀, ζ]` beyond tolerance.
    pub action_window_violations: usize,
    /// Uniform entry time `s₀(r)`: the largest, over members, of the first
    /// parameter after which the member stays within `radius` of `Z`
    /// (`+∞` when some member never enters for good).
    pub entry_time: f64,
    /// Number of greedy net representatives at radius `eps_cluster`.
    pub net_size: usize,
    /// Largest distance from a member to its net representative.
    pub max_dist_to_net: f64,
    /// Structured checks, all of which must pass for the certificate.
    pub checks: CheckSet,
}

impl CompactnessReport {
    /// Whether the certificate passed.
    pub fn passed(&self) -> bool {
        self.checks.all_passed()
    }
}

/// Empirical compactness certificate for a trajectory family below the
/// spectral gap.
///
/// Checks (i) the action window `ζ − E₀ ≤ f∘γ ≤ ζ` on every node, (ii) a
/// finite uniform entry time into the radius-`r` tube around `Z`, and
/// (iii) total boundedness of the family via a greedy net at radius
/// `eps_cluster` in the uniform metric. Families whose energy cap reaches
/// the spectral gap are refused: trajectory families at or above the gap
/// can escape along parameter shifts, so no certificate is expected to hold
/// there.
pub fn compactness_certificate(
    family: &ModuliFamily,
    z: &CriticalSetSample,
    metric: &CoarseMetric,
    positive_gap: f64,
    opts: &CompactnessOptions,
) -> Result<CompactnessReport> {
    if family.members.is_empty() {
        return Err(Error::Precondition("empty family".into()));
    }
    if family.e0 >= positive_gap {
        return Err(Error::Refusal(format!(
            "energy cap E0 = {} reaches the spectral gap {}; families at or above \
             the gap admit shift sequences with no uniformly convergent subsequence, \
             so the certificate is declined",
            family.e0, positive_gap
        )));
    }
    let zeta = z.zeta;
    let mut violations = 0usize;
    for t in &family.members {
        for &f in &t.f_values {
            if f < zeta - family.e0 - opts.action_tol || f > zeta + opts.action_tol {
                violations += 1;
            }
        }
    }

    let mut entry_time = 0.0_f64;
    for t in &family.members {
        let mut member_entry = f64::INFINITY;
        // First index after which all later points stay within the tube.
        let mut ok_from = t.len();
        for i in (0..t.len()).rev() {
            if z.dist_to(&t.points[i], metric) <= opts.radius {
                ok_from = i;
            } else {
                break;
            }
        }
        if ok_from < t.len() {
            member_entry = t.s_grid[ok_from];
        }
        entry_time = entry_time.max(member_entry);
    }

    // Greedy net in the uniform metric.
    let mut reps: Vec<usize> = Vec::new();
    let mut max_dist_to_net = 0.0_f64;
    for (i, t) in family.members.iter().enumerate() {
        let nearest = reps
            .iter()
            .map(|&r| uniform_distance(t, &family.members[r], metric))
            .fold(f64::INFINITY, f64::min);
        if nearest > opts.eps_cluster {
            reps.push(i);
        } else {
            max_dist_to_net = max_dist_to_net.max(nearest);
        }
    }

    let mut checks = CheckSet::new();
    checks.push(Check::le(
        "action_window_violations",
        violations as f64,
        0.0,
        format!("f-values confined to [{:.6}, {:.6}]", zeta - family.e0, zeta),
    ));
    checks.push(Check::bool(
        "uniform_entry_time_finite",
        entry_time.is_finite(),
        format!("s0({}) = {:.6}", opts.radius, entry_time),
    ));
    checks.push(Check::le(
        "net_covering",
        max_dist_to_net,
        opts.eps_cluster,
        format!("{} representatives cover {} members", reps.len(), family.members.len()),
    ));
    Ok(CompactnessReport {
        action_window_violations: violations,
        entry_time,
        net_size: reps.len(),
        max_dist_to_net,
        checks,
    })
}

/// Largest `δ > 0` from a uniform grid search on `(0, delta_upper]` such
/// that, over all members and nodes, `ζ − f∘γ(s) ≤ δ` implies the point
/// lies in `U`; returns 0 when no grid value works.
pub fn delta_neighborhood_estimate(
    family: &ModuliFamily,
    u_membership: &dyn Fn(&Vec64) -> bool,
    zeta: f64,
    delta_upper: f64,
    n_grid: usize,
) -> f64 {
    // For each node outside U record its f-drop; δ must stay below all of
    // those, so the grid search reduces to one threshold scan.
    let mut min_drop_outside = f64::INFINITY;
    for t in &family.members {
        for (p, &f) in t.points.iter().zip(&t.f_values) {
            if !u_membership(p) {
                min_drop_outside = min_drop_outside.min(zeta - f);
            }
        }
        if let Some(l) = &t.limit {
            if !u_membership(l) {
                // The implication fails arbitrarily close to the limit.
                return 0.0;
            }
        }
    }
    let step = delta_upper / n_grid as f64;
    let mut best = 0.0;
    for k in 1..=n_grid {
        let delta = step * k as f64;
        if delta < min_drop_outside {
            best = delta;
        }
    }
    best
}

/// Report from [`shortening_bound_check`].
#[derive(Debug, Clone)]
pub struct ShorteningReport {
    /// Worst value of `d(γ(b), γ(∞)) − Ξ(γ(b))` over all checked nodes
    /// (negative when the bound holds strictly everywhere).
    pub worst_slack: f64,
    /// Number of nodes violating the bound beyond tolerance.
    pub violations: usize,
    /// Whether the bound held at every checked node.
    pub passed: bool,
}

/// Verifies the tail-shortening bound `d(γ(b), γ(∞)) ≤ Ξ(γ(b))` for every
/// member and every node `b` whose tail stays in `U`.
///
/// Precondition: `Ξ` vanishes on the sampled points of `Z` that lie in `U`.
pub fn shortening_bound_check(
    family: &ModuliFamily,
    xi: &dyn Fn(&Vec64) -> f64,
    u_membership: &dyn Fn(&Vec64) -> bool,
    metric: &CoarseMetric,
    z: &CriticalSetSample,
    tol: f64,
) -> Result<ShorteningReport> {
    for p in &z.points {
        if u_membership(p) && xi(p).abs() > 1e-10 {
            return Err(Error::Precondition(format!(
                "Ξ = {:.3e} ≠ 0 at a critical sample point inside U",
                xi(p)
            )));
        }
    }
    let mut worst_slack = f64::NEG_INFINITY;
    let mut violations = 0usize;
    for t in &family.members {
        let limit = match &t.limit {
            Some(l) => l,
            None => continue,
        };
        // Tail-in-U: find the first index from which all later points are in U.
        let mut tail_start = t.len();
        for i in (0..t.len()).rev() {
            if u_membership(&t.points[i]) {
                tail_start = i;
            } else {
                break;
            }
        }
        for i in tail_start..t.len() {
            let slack = metric.dist(&t.points[i], limit) - xi(&t.points[i]);
            worst_slack = worst_slack.max(slack);
            if slack > tol {
                violations += 1;
            }
        }
    }
    if worst_slack == f64::NEG_INFINITY {
        worst_slack = 0.0;
    }
    Ok(ShorteningReport { worst_slack, violations, passed: violations == 0 })
}
