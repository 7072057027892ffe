//! Small dense helpers on top of nalgebra shared by the solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Orthonormal basis of the hyperplane orthogonal to the all-ones vector,
/// returned as the columns of an `n x (n-1)` matrix (Helmert basis).
pub fn mean_zero_basis(n: usize) -> DMatrix<f64> {
    let mut v = DMatrix::zeros(n, n.saturating_sub(1));
    for k in 1..n {
        let kf = k as f64;
        let norm = (kf * (kf + 1.0)).sqrt();
        for i in 0..k {
            v[(i, k - 1)] = 1.0 / norm;
        }
        v[(k, k - 1)] = -kf / norm;
    }
    v
}

/// Centering projector `I - 11^T / n`.
pub fn centering(n: usize) -> DMatrix<f64> {
    let mut p = DMatrix::from_element(n, n, -1.0 / n as f64);
    for i in 0..n {
        p[(i, i)] += 1.0;
    }
    p
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted ascending
/// and eigenvectors permuted to match.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let sym = symmetrize(m);
    // The default convergence test of `SymmetricEigen::new` can stop with
    // off-diagonal residue near 1e-6 relative; a tighter threshold fixes it.
    let eig = SymmetricEigen::try_new(sym.clone(), 1e-18, 100_000).unwrap_or_else(|| SymmetricEigen::new(sym));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Nearest PSD matrix in Frobenius norm (eigenvalue clipping).
pub fn project_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(m);
    reassemble(&vecs, vals.iter().map(|&v| v.max(0.0)))
}

/// `U diag(values) U^T`.
pub fn reassemble(vecs: &DMatrix<f64>, values: impl Iterator<Item = f64>) -> DMatrix<f64> {
    let n = vecs.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (k, lam) in values.enumerate() {
        if lam == 0.0 {
            continue;
        }
        let u = vecs.column(k);
        out.ger(lam, &u, &u, 1.0);
    }
    out
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let (vals, _) = sym_eigen(m);
    vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Euclidean projection of `v` onto the probability simplex scaled to `total`.
pub fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cum += x;
        let t = (cum - total) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, c, |i, j| rows[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helmert_basis_is_orthonormal_and_mean_zero() {
        for n in 2..9 {
            let v = mean_zero_basis(n);
            let gram = v.transpose() * &v;
            assert!((gram - DMatrix::identity(n - 1, n - 1)).amax() < 1e-14);
            let ones = DVector::from_element(n, 1.0);
            assert!((v.transpose() * ones).amax() < 1e-14);
            assert!((&v * v.transpose() - centering(n)).amax() < 1e-14);
        }
    }

    #[test]
    fn eigen_reconstruction_is_tight() {
        let g = DMatrix::from_row_slice(4, 4, &[
            1.5989407138567238, -0.7155691556053715, 0.42798897621882553, -1.3113605344701778,
            -0.7155691556053717, 2.208841638699576, -0.7333725285552083, -0.7598999545389962,
            0.42798897621882553, -0.7333725285552083, 0.2700160699746619, 0.035367482361720874,
            -1.3113605344701778, -0.7598999545389962, 0.03536748236172093, 2.035893006647453,
        ]);
        let (vals, vecs) = sym_eigen(&g);
        let back = reassemble(&vecs, vals.iter().copied());
        assert!((back - symmetrize(&g)).amax() < 1e-13);
    }

    #[test]
    fn eigen_sorted_ascending() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 5.0]);
        let (vals, vecs) = sym_eigen(&m);
        assert_eq!(vals.as_slice(), &[-1.0, 2.0, 5.0]);
        assert!((reassemble(&vecs, vals.iter().copied()) - m).amax() < 1e-12);
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.5, 0.5, 2.0], 1.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p[0], 0.0);
        let q = project_simplex(&[0.2, 0.3, 0.5], 1.0);
        assert!((q[2] - 0.5).abs() < 1e-12);
    }
}
