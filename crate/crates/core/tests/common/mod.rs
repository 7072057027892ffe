#![allow(dead_code)]

use nalgebra::DMatrix;
use negtype::{PsdCertificate, SemiMetricSpace};
use proptest::prelude::*;

pub fn space_from_upper(n: usize, upper: &[f64]) -> SemiMetricSpace {
    let mut rows = vec![vec![0.0; n]; n];
    let mut it = upper.iter();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = *it.next().expect("enough entries");
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    SemiMetricSpace::validate(&rows, None).expect("valid space")
}

/// Random semi-metric spaces with `lo <= d <= hi` (triangle inequality not enforced).
pub fn spaces(n_min: usize, n_max: usize, lo: f64, hi: f64) -> impl Strategy<Value = SemiMetricSpace> {
    (n_min..=n_max).prop_flat_map(move |n| {
        prop::collection::vec(lo..hi, n * (n - 1) / 2).prop_map(move |u| space_from_upper(n, &u))
    })
}

pub fn centering(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64)
}

/// `P B B^T P` for a factor `B` given column-major with `n` rows.
pub fn cone_element(n: usize, factor: &[f64]) -> DMatrix<f64> {
    let b = DMatrix::from_column_slice(n, factor.len() / n, factor);
    let p = centering(n);
    &p * (&b * b.transpose()) * &p
}

/// Random spaces paired with a random certificate-cone element of random rank.
pub fn spaces_with_cone(n_min: usize, n_max: usize) -> impl Strategy<Value = (SemiMetricSpace, PsdCertificate)> {
    (n_min..=n_max, 1usize..=4).prop_flat_map(|(n, r)| {
        (
            prop::collection::vec(0.25f64..4.0, n * (n - 1) / 2),
            prop::collection::vec(-1.0f64..1.0, n * r),
        )
            .prop_map(move |(u, f)| (space_from_upper(n, &u), PsdCertificate::project(&cone_element(n, &f))))
    })
}

/// Direct sum over ordered pairs with the same sign threshold as the library.
pub fn split_oracle(x: &SemiMetricSpace, p: f64, q: &DMatrix<f64>) -> (f64, f64) {
    let eps = 1e-9 * q.amax();
    let (mut pos, mut neg) = (0.0, 0.0);
    for i in 0..x.len() {
        for j in 0..x.len() {
            if i == j {
                continue;
            }
            let w = x.d(i, j).powf(p);
            if q[(i, j)] > eps {
                pos += w * q[(i, j)];
            } else if q[(i, j)] < -eps {
                neg -= w * q[(i, j)];
            }
        }
    }
    (pos, neg)
}
