//! Point configurations in Euclidean space, their Gram factorization and
//! their distortion against a (powered) semi-metric.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, sym_eigen};
use crate::metric::SemiMetricSpace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    /// Lower Lipschitz constant `s` in `s d <= |f(x) - f(y)| <= s C d`.
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingStats {
    pub expansion: f64,
    pub contraction: f64,
    pub distortion: f64,
}

impl Embedding {
    pub fn new(points: Vec<Vec<f64>>, scale: f64) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if let Some(bad) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::BadParams(format!("embedding scale {scale} must be positive")));
        }
        Ok(Self { dim, points, scale })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.points[i]
            .iter()
            .zip(&self.points[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn gram(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.points[i].iter().zip(&self.points[j]).map(|(a, b)| a * b).sum())
    }
}

/// Factor `G = U L U^T` into points `U L^{1/2}`, dropping eigenvalues at or
/// below `tol * |G|`.
pub fn gram_to_embedding(g: &DMatrix<f64>, tol: f64) -> Result<Embedding> {
    let n = g.nrows();
    if g.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: g.ncols() });
    }
    let norm = spectral_norm(g);
    let (vals, vecs) = sym_eigen(g);
    if n > 0 && vals[0] < -tol * norm {
        return Err(Error::NotPsd(vals[0]));
    }
    // Largest eigenvalues first so coordinates are ordered by variance.
    let kept: Vec<usize> = (0..n).rev().filter(|&k| vals[k] > tol * norm).collect();
    let points = (0..n)
        .map(|i| kept.iter().map(|&k| vecs[(i, k)] * vals[k].sqrt()).collect())
        .collect::<Vec<Vec<f64>>>();
    Ok(Embedding { dim: kept.len(), points, scale: 1.0 })
}

/// Expansion, contraction and distortion of `e` as a map from `(X, d^{p/2})`.
pub fn embedding_stats(x: &SemiMetricSpace, p: f64, e: &Embedding) -> Result<EmbeddingStats> {
    let n = x.len();
    if e.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: e.len() });
    }
    let mut expansion = 0.0_f64;
    let mut contraction = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let target = e.distance(i, j);
            let source = x.d(i, j).powf(p / 2.0);
            if target == 0.0 {
                return Err(Error::CoincidentImages { i, j });
            }
            expansion = expansion.max(target / source);
            contraction = contraction.max(source / target);
        }
    }
    Ok(EmbeddingStats { expansion, contraction, distortion: expansion * contraction })
}
