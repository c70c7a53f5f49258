/// Thomas algorithm for a tridiagonal system, solved in place in `rhs`.
///
/// `lower[i]` couples row i to column i−1 (lower[0] unused), `upper[i]`
/// couples row i to column i+1 (last entry unused). No pivoting: the
/// diffusion matrices assembled here are diagonally dominant M-matrices.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = rhs.len();
    assert!(diag.len() == n && lower.len() == n && upper.len() == n, "tridiagonal size mismatch");
    let mut c = vec![0.0; n];
    let mut denom = diag[0];
    c[0] = upper[0] / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / denom;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}
