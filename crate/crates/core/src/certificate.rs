//! Matrices in the certificate cone `{Q : Q PSD, Q 1 = 0}` and the sign-split
//! sums they are evaluated with.
//!
//! Every quantity here is computed from the entries of `Q` classified as
//! positive (`q > eps`), negative (`q < -eps`) or neither, with
//! `eps = 1e-9 * max|q|`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{centering, max_abs, project_psd, spectral_norm, sym_eigen, symmetrize};
use crate::metric::SemiMetricSpace;

pub const MEMBERSHIP_TOL: f64 = 1e-8;
pub const SIGN_EPS_REL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PsdCertificate {
    q: DMatrix<f64>,
    sign_eps: f64,
    rank: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateJson {
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
}

/// Why a matrix is not in the cone, or `Ok` with its rank.
fn membership(q: &DMatrix<f64>) -> Result<usize> {
    let n = q.nrows();
    if q.ncols() != n {
        return Err(Error::NotInCone(format!("matrix is {}x{}", n, q.ncols())));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotInCone("non-finite entry".into()));
    }
    let norm = spectral_norm(q);
    let asym = (q - q.transpose()).amax();
    if asym > MEMBERSHIP_TOL * norm.max(f64::MIN_POSITIVE) && asym > 0.0 {
        return Err(Error::NotInCone(format!("asymmetry {asym:e}")));
    }
    let row_sums = q * DVector::from_element(n, 1.0);
    let worst = row_sums.amax();
    if worst > MEMBERSHIP_TOL * norm {
        return Err(Error::NotInCone(format!("row sums reach {worst:e}")));
    }
    let (vals, _) = sym_eigen(q);
    if vals.len() > 0 && vals[0] < -MEMBERSHIP_TOL * norm {
        return Err(Error::NotInCone(format!("negative eigenvalue {:e}", vals[0])));
    }
    Ok(vals.iter().filter(|&&v| v > MEMBERSHIP_TOL * norm).count())
}

impl PsdCertificate {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        let rank = membership(&q)?;
        let q = symmetrize(&q);
        let sign_eps = SIGN_EPS_REL * max_abs(&q);
        Ok(Self { q, sign_eps, rank })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::NotInCone(format!("row {i} has {} entries, expected {n}", r.len())));
        }
        Self::new(crate::linalg::from_rows(rows))
    }

    /// Nearest cone member of an arbitrary square matrix: symmetrize,
    /// center, clip negative eigenvalues.
    pub fn project(m: &DMatrix<f64>) -> Self {
        let proj = centering(m.nrows());
        let centered = &proj * symmetrize(m) * &proj;
        let mut q = project_psd(&centered);
        // Clipping can reintroduce O(eps) row sums; recentering keeps PSD.
        q = &proj * q * &proj;
        q = symmetrize(&q);
        let rank = membership(&q).expect("projection lands in the cone");
        let sign_eps = SIGN_EPS_REL * max_abs(&q);
        Self { q, sign_eps, rank }
    }

    /// `xi xi^T` for mean-zero `xi`.
    pub fn rank_one(xi: &[f64]) -> Result<Self> {
        let v = DVector::from_column_slice(xi);
        Self::new(&v * v.transpose())
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.q.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sign_eps(&self) -> f64 {
        self.sign_eps
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_zero(&self) -> bool {
        self.q.iter().all(|&v| v == 0.0)
    }

    /// Sum of the strictly positive entries, diagonal included.
    pub fn pos(&self) -> f64 {
        self.q.iter().filter(|&&v| v > self.sign_eps).sum()
    }

    /// Same certificate multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Self {
        Self { q: &self.q * s, sign_eps: self.sign_eps * s, rank: self.rank }
    }

    /// Rescaled so that `pos(Q) = 1`; `None` for the zero matrix.
    pub fn pos_normalized(&self) -> Option<Self> {
        let p = self.pos();
        (p > 0.0).then(|| self.scaled(1.0 / p))
    }

    /// Spectral factors `xi_k` with `Q = sum_k xi_k xi_k^T`; each is mean-zero.
    pub fn rank_one_factors(&self) -> Vec<DVector<f64>> {
        let (vals, vecs) = sym_eigen(&self.q);
        let cut = MEMBERSHIP_TOL * vals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        vals.iter()
            .enumerate()
            .filter(|(_, &v)| v > cut)
            .map(|(k, &v)| vecs.column(k) * v.sqrt())
            .collect()
    }

    pub fn to_json(&self, ratio: Option<f64>) -> CertificateJson {
        CertificateJson { q: crate::linalg::to_rows(&self.q), ratio, rank: Some(self.rank) }
    }

    /// Sign-split sums against a weight matrix `w` (typically `d^p`):
    /// `(sum_{q>0} w q, -sum_{q<0} w q)`.
    pub fn split_sums(&self, w: &DMatrix<f64>) -> (f64, f64) {
        split_sums(&self.q, w, self.sign_eps)
    }
}

pub(crate) fn split_sums(q: &DMatrix<f64>, w: &DMatrix<f64>, eps: f64) -> (f64, f64) {
    let mut positive = 0.0;
    let mut negative = 0.0;
    for (qv, wv) in q.iter().zip(w.iter()) {
        if *qv > eps {
            positive += wv * qv;
        } else if *qv < -eps {
            negative -= wv * qv;
        }
    }
    (positive, negative)
}

fn check_size(x: &SemiMetricSpace, q: &PsdCertificate) -> Result<()> {
    if q.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: q.len() });
    }
    Ok(())
}

/// `(sum_{q>0} d^p q) / (-sum_{q<0} d^p q)`: a lower bound on `c2(X, d^{p/2})^2`.
pub fn certificate_ratio(x: &SemiMetricSpace, p: f64, q: &PsdCertificate) -> Result<f64> {
    check_size(x, q)?;
    let (num, den) = q.split_sums(&x.power_matrix(p));
    if den <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(num / den)
}

/// Left-hand side `sum_{q>0} d^p q + C^2 sum_{q<0} d^p q` of the distorted
/// negative type inequality.
pub fn distorted_inequality_slack(x: &SemiMetricSpace, p: f64, c: f64, q: &PsdCertificate) -> Result<f64> {
    check_size(x, q)?;
    let (num, den) = q.split_sums(&x.power_matrix(p));
    Ok(num - c * c * den)
}

/// The gap objective `f(p, C, Q) = -C^2 sum_{q<0} d^p q - sum_{q>0} d^p q`.
pub fn gap_objective(x: &SemiMetricSpace, p: f64, c: f64, q: &PsdCertificate) -> Result<f64> {
    distorted_inequality_slack(x, p, c, q).map(|s| -s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{standard_space, Family};

    #[test]
    fn rank_one_two_point_ratio_is_zero() {
        let x = SemiMetricSpace::validate(&[vec![0.0, 1.0], vec![1.0, 0.0]], None).unwrap();
        let q = PsdCertificate::rank_one(&[1.0, -1.0]).unwrap();
        assert_eq!(q.rank(), 1);
        assert_eq!(certificate_ratio(&x, 1.0, &q).unwrap(), 0.0);
        assert_eq!(q.pos(), 2.0);
    }

    #[test]
    fn zero_certificate() {
        let x = standard_space(Family::Complete { n: 3 }).unwrap();
        let q = PsdCertificate::new(DMatrix::zeros(3, 3)).unwrap();
        assert!(q.is_zero());
        assert_eq!(q.rank(), 0);
        assert_eq!(distorted_inequality_slack(&x, 1.0, 2.0, &q).unwrap(), 0.0);
        assert_eq!(certificate_ratio(&x, 1.0, &q), Err(Error::ZeroDenominator));
        assert!(q.pos_normalized().is_none());
    }

    #[test]
    fn membership_failures() {
        let not_centered = DMatrix::identity(3, 3);
        assert!(matches!(PsdCertificate::new(not_centered), Err(Error::NotInCone(_))));
        let indefinite = -centering(3);
        assert!(matches!(PsdCertificate::new(indefinite), Err(Error::NotInCone(_))));
        let mut asym = centering(3);
        asym[(0, 1)] += 0.1;
        asym[(0, 0)] -= 0.1;
        assert!(matches!(PsdCertificate::new(asym), Err(Error::NotInCone(_))));
    }

    #[test]
    fn projection_lands_in_cone() {
        let m = DMatrix::from_fn(4, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let q = PsdCertificate::project(&m);
        assert!(PsdCertificate::new(q.matrix().clone()).is_ok());
    }

    #[test]
    fn pos_counts_diagonal_and_equals_negative_mass() {
        let q = PsdCertificate::new(centering(4)).unwrap();
        // diagonal 3/4 each, off-diagonal -1/4
        assert!((q.pos() - 3.0).abs() < 1e-15);
        let ones = DMatrix::from_element(4, 4, 1.0);
        let (_, neg) = q.split_sums(&ones);
        assert!((neg - q.pos()).abs() < 1e-14);
    }
}
