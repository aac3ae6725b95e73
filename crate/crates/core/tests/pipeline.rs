//! Integration tests exercising the public API end-to-end: a gradient-flow
//! pipeline on the sphere and a cylinder pipeline on the radial model.

use gflab_core::floerlab::chart::basepoint_metric_family;
use gflab_core::floerlab::{measure_decay, nonlinear_floer_solve, TubularChart};
use gflab_core::flowcore::{energy_of, flow_identity_residual, CriticalSetSample};
use gflab_core::geometry::{CoarseMetric, EmbeddedManifold, ScalarField};
use gflab_core::loopfield::{build_operator_a, spectral_split, LoopGrid};
use gflab_core::morsebott::{
    detect_limit, fit_exponential_decay, integrate_gradient_flow, IntegrationControls,
};
use gflab_core::Vec64;

#[test]
fn sphere_flow_pipeline() {
    let m = EmbeddedManifold::unit_sphere(3);
    let f = ScalarField::with_gradient(|p| p[2], |_p| Vec64::from_column_slice(&[0.0, 0.0, 1.0]));
    let metric = CoarseMetric::chordal();
    let x0 = Vec64::from_column_slice(&[0.5_f64.sin(), 0.0, 0.5_f64.cos()]);
    let traj =
        integrate_gradient_flow(&m, &f, &x0, 30.0, &IntegrationControls::default()).unwrap();
    // Centered differences on the adaptive (nonuniform) grid are only
    // first-order accurate, so the identity certifies at ~1e-4.
    assert!(flow_identity_residual(&traj).unwrap() <= 1e-3);
    let z = CriticalSetSample {
        points: vec![Vec64::from_column_slice(&[0.0, 0.0, 1.0])],
        zeta: 1.0,
        dim: Some(0),
    };
    let limit = detect_limit(&traj, &z, &metric, 1e-4).expect("flow converges");
    let fit = fit_exponential_decay(&traj, &limit, &metric).unwrap();
    assert!((fit.b_hat - 1.0).abs() <= 0.02);
    let energy = energy_of(&traj);
    let df = traj.f_values.last().unwrap() - traj.f_values[0];
    assert!((energy - df).abs() <= 1e-4 * (1.0 + energy));
}

#[test]
fn radial_cylinder_pipeline() {
    let n = 32;
    let chart = TubularChart::radial();
    let g = basepoint_metric_family(&chart, n);
    let a0 = build_operator_a(&LoopGrid::zeros(n, 2), &chart).unwrap();
    let split = spectral_split(&a0, &g).unwrap();
    assert_eq!(split.kernel_dim(), 1);
    let tol = split.kernel_tol();
    let j1 = (0..split.eigenvalues.len())
        .filter(|&j| split.eigenvalues[j] < -tol)
        .max_by(|&a, &b| split.eigenvalues[a].total_cmp(&split.eigenvalues[b]))
        .unwrap();
    let seed = Vec64::from(split.eigenvectors.column(j1)) * 1e-3;
    let z0 = LoopGrid::from_flat(n, 2, &seed);
    let cyl = nonlinear_floer_solve(&chart, &split, &z0, 1.5, 150).unwrap();
    assert!(cyl.interior_residual(&chart).unwrap() <= 1e-8);
    let report = measure_decay(&cyl, &split, &g).unwrap();
    assert!(report.checks.all_passed(), "{:?}", report.checks.failures());
    assert!(report.l2_rate.unwrap() >= 0.85 * split.c0.sqrt());
}
