//! The distortion SDP in reduced coordinates.
//!
//! Gram matrices are parametrized as `G = V Y V^T` with `V` an orthonormal
//! basis of the mean-zero hyperplane, so translations are factored out and
//! `Y` is `(n-1) x (n-1)`. For the pair `e = (i, j)` the squared image
//! distance is `a_e^T Y a_e` with `a_e = V^T (e_i - e_j)`.

use nalgebra::{DMatrix, DVector};

use crate::certificate::{split_sums, PsdCertificate, SIGN_EPS_REL};
use crate::linalg::{max_abs, mean_zero_basis};
use crate::metric::SemiMetricSpace;

pub(crate) struct Problem {
    pub n: usize,
    pub k: usize,
    pub pairs: Vec<(usize, usize)>,
    /// `d^p / max(d^p)` per pair.
    pub w: Vec<f64>,
    /// `max(d^p)`, restores original units.
    pub unit: f64,
    pub basis: DMatrix<f64>,
    pub a: Vec<DVector<f64>>,
    /// Normalized `d^p` as a full matrix.
    pub weights: DMatrix<f64>,
}

/// Upper end of a bracket: a concrete Gram matrix and the distortion it attains.
pub(crate) struct PrimalPoint {
    /// Squared distortion `max r / min r` with `r_e = |f_i - f_j|^2 / w_e`.
    pub distortion_sq: f64,
    /// Gram in original units, rescaled so the smallest ratio is exactly 1.
    pub gram: DMatrix<f64>,
}

impl Problem {
    pub fn new(x: &SemiMetricSpace, p: f64) -> Self {
        let n = x.len();
        let k = n - 1;
        let raw = x.power_matrix(p);
        let unit = raw.max();
        let weights = &raw / unit;
        let basis = mean_zero_basis(n);
        let mut pairs = Vec::with_capacity(n * k / 2);
        let mut w = Vec::with_capacity(n * k / 2);
        let mut a = Vec::with_capacity(n * k / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                pairs.push((i, j));
                w.push(weights[(i, j)]);
                a.push((basis.row(i) - basis.row(j)).transpose());
            }
        }
        Self { n, k, pairs, w, unit, basis, a, weights }
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn gram_distance(&self, y: &DMatrix<f64>, e: usize) -> f64 {
        let a = &self.a[e];
        (a.transpose() * y * a)[(0, 0)]
    }

    pub fn full_gram(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        &self.basis * y * self.basis.transpose()
    }

    /// Certified upper bound from a PSD `Y`; `None` if two images coincide.
    pub fn primal_point(&self, y: &DMatrix<f64>) -> Option<PrimalPoint> {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0_f64;
        for e in 0..self.pair_count() {
            let r = self.gram_distance(y, e) / self.w[e];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if !(lo > 0.0) || !hi.is_finite() {
            return None;
        }
        let gram = self.full_gram(y) * (self.unit / lo);
        Some(PrimalPoint { distortion_sq: hi / lo, gram })
    }

    /// Laplacian-form cone element with off-diagonal `q_e = coeff_e`.
    pub fn laplacian(&self, coeff: &[f64]) -> DMatrix<f64> {
        let mut q = DMatrix::zeros(self.n, self.n);
        for (e, &(i, j)) in self.pairs.iter().enumerate() {
            let c = coeff[e];
            q[(i, j)] += c;
            q[(j, i)] += c;
            q[(i, i)] -= c;
            q[(j, j)] -= c;
        }
        q
    }

    /// Sign-split ratio of an arbitrary (already cone-valid) matrix against
    /// the normalized weights.
    pub fn ratio_of(&self, q: &DMatrix<f64>) -> Option<f64> {
        let eps = SIGN_EPS_REL * max_abs(q);
        let (num, den) = split_sums(q, &self.weights, eps);
        (den > 0.0).then(|| num / den)
    }

    /// Project a candidate onto the cone and evaluate its ratio.
    pub fn certify(&self, q: &DMatrix<f64>) -> Option<(PsdCertificate, f64)> {
        let cert = PsdCertificate::project(q);
        let tr = cert.matrix().trace();
        if !(tr > 0.0) {
            return None;
        }
        let cert = cert.scaled(1.0 / tr);
        let ratio = self.ratio_of(cert.matrix())?;
        Some((cert, ratio))
    }

    /// Explicit strictly feasible start: all images equidistant.
    pub fn equidistant_start(&self) -> DMatrix<f64> {
        let wmax = self.w.iter().copied().fold(0.0, f64::max);
        // a_e^T (c I) a_e = 2c for every pair
        DMatrix::identity(self.k, self.k) * wmax
    }
}
