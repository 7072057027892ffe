//! Classical (undistorted) p-negative type.
//!
//! The form `sum_ij d_ij^p xi_i xi_j` restricted to mean-zero `xi` is the form
//! of `P D^(p) P` with `P = I - 11^T/n`. We diagonalize it in an explicit
//! orthonormal basis of the mean-zero hyperplane, so the structural zero
//! eigenvalue along `1` never enters the strictness test.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{centering, mean_zero_basis, sym_eigen};
use crate::metric::SemiMetricSpace;

pub const DEFAULT_EIG_TOL: f64 = 1e-9;
pub const DEFAULT_BISECTION_TOL: f64 = 1e-3;
pub const DEFAULT_CAP: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Strict,
    Nonstrict,
    Fails,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Strict => "strict",
            Status::Nonstrict => "nonstrict",
            Status::Fails => "fails",
        }
    }

    pub fn has_type(self) -> bool {
        self != Status::Fails
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegTypeVerdict {
    pub status: Status,
    /// Mean-zero coefficients attaining the top eigenvalue; present unless
    /// the verdict is strict.
    pub witness: Option<Vec<f64>>,
    /// Largest eigenvalue of the form on the mean-zero hyperplane, in units of
    /// the unnormalized `d^p`.
    pub top_eigenvalue: f64,
    /// Classification band half-width `tol * max(d^p) * n`.
    pub band: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SupremalValue {
    Finite { value: f64 },
    AtLeastCap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupremalType {
    pub value: SupremalValue,
    pub bracket: [f64; 2],
    pub cap: f64,
}

impl SupremalType {
    /// Point estimate, `inf` when the cap was reached.
    pub fn estimate(&self) -> f64 {
        match self.value {
            SupremalValue::Finite { value } => value,
            SupremalValue::AtLeastCap => f64::INFINITY,
        }
    }
}

/// `P D^(p) P`.
pub fn projected_power_matrix(x: &SemiMetricSpace, p: f64) -> DMatrix<f64> {
    let proj = centering(x.len());
    &proj * x.power_matrix(p) * &proj
}

pub fn p_negative_type(x: &SemiMetricSpace, p: f64, tol: f64) -> NegTypeVerdict {
    let n = x.len();
    // Work with d / max(d) so large exponents cannot overflow; the verdict is
    // scale-free and eigenvalues are rescaled afterwards.
    let unit = x.max_distance();
    let d = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { (x.d(i, j) / unit).powf(p) });
    let basis = mean_zero_basis(n);
    let reduced = basis.transpose() * &d * &basis;
    let (vals, vecs) = sym_eigen(&reduced);
    let top = vals[n - 2];
    let band = tol * d.max() * n as f64;
    let status = if top < -band {
        Status::Strict
    } else if top <= band {
        Status::Nonstrict
    } else {
        Status::Fails
    };
    let witness = (status != Status::Strict).then(|| {
        let mut xi: DVector<f64> = &basis * vecs.column(n - 2);
        let pivot = xi.iter().copied().fold(0.0_f64, |a, v| if v.abs() > a.abs() + 1e-12 { v } else { a });
        if pivot < 0.0 {
            xi.neg_mut();
        }
        xi.iter().copied().collect()
    });
    let rescale = unit.powf(p);
    NegTypeVerdict { status, witness, top_eigenvalue: top * rescale, band: band * rescale }
}

/// Locate `sup { p : X has p-negative type }` by bisection on `[0, cap]`.
pub fn supremal_negative_type(x: &SemiMetricSpace, tol: f64, cap: f64) -> SupremalType {
    supremal_with(x, tol, cap, DEFAULT_EIG_TOL)
}

pub fn supremal_with(x: &SemiMetricSpace, tol: f64, cap: f64, eig_tol: f64) -> SupremalType {
    let holds = |p: f64| p_negative_type(x, p, eig_tol).status.has_type();
    if holds(cap) {
        return SupremalType { value: SupremalValue::AtLeastCap, bracket: [cap, f64::INFINITY], cap };
    }
    let (mut lo, mut hi) = (0.0, cap);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    SupremalType { value: SupremalValue::Finite { value: 0.5 * (lo + hi) }, bracket: [lo, hi], cap }
}

/// `sum_ij d_ij^p xi_i xi_j` for mean-zero `xi`.
pub fn classical_witness_check(x: &SemiMetricSpace, p: f64, xi: &[f64]) -> Result<f64> {
    let n = x.len();
    if xi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: xi.len() });
    }
    let sum: f64 = xi.iter().sum();
    let l1: f64 = xi.iter().map(|v| v.abs()).sum();
    if sum.abs() > 1e-9 * l1.max(1.0) {
        return Err(Error::NotMeanZero(sum));
    }
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += x.d(i, j).powf(p) * xi[i] * xi[j];
            }
        }
    }
    Ok(acc)
}
