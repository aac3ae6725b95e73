//! Gauss–Legendre quadrature nodes and weights (Golub–Welsch).

use crate::Mat64;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[0, 1]`.
///
/// Computed from the eigendecomposition of the symmetric Jacobi matrix of
/// the Legendre recurrence; exact for polynomials of degree `2n−1`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    // Jacobi matrix on [−1,1]: zero diagonal, off-diagonal k/√(4k²−1).
    let mut jac = Mat64::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        jac[(k - 1, k)] = b;
        jac[(k, k - 1)] = b;
    }
    let eig = jac.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let w = 2.0 * eig.eigenvectors[(0, i)] * eig.eigenvectors[(0, i)];
            (x, w)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Map from [−1,1] to [0,1].
    let nodes = pairs.iter().map(|&(x, _)| 0.5 * (x + 1.0)).collect();
    let weights = pairs.iter().map(|&(_, w)| 0.5 * w).collect();
    (nodes, weights)
}
