//! Exact constructions for the complete graph, the complete bipartite graph
//! and the Hamming cube: optimal embeddings, their distortions and the
//! certificate matrices that prove optimality.

use nalgebra::{DMatrix, DVector};

use crate::certificate::PsdCertificate;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::metric::{standard_space, Family, SemiMetricSpace};

/// Unit-distance placement of `n >= 1` points in `R^{n-1}` with all norms
/// equal to `sqrt(1 - 1/n) / sqrt(2)`.
fn simplex_points(n: usize) -> Vec<Vec<f64>> {
    if n == 1 {
        return vec![Vec::new()];
    }
    let nf = n as f64;
    let c = std::f64::consts::SQRT_2 * (1.0 + nf.sqrt()) / (2.0 * (nf - 1.0));
    let shift = (c + std::f64::consts::FRAC_1_SQRT_2) / nf;
    let mut pts: Vec<Vec<f64>> = (0..n - 1)
        .map(|i| {
            (0..n - 1)
                .map(|k| if k == i { std::f64::consts::FRAC_1_SQRT_2 - shift } else { -shift })
                .collect()
        })
        .collect();
    pts.push(vec![c - shift; n - 1]);
    pts
}

pub fn simplex_embedding(n: usize) -> Result<Embedding> {
    if n < 2 {
        return Err(Error::BadParams(format!("simplex embedding needs n >= 2, got {n}")));
    }
    Embedding::new(simplex_points(n), 1.0)
}

#[derive(Debug, Clone)]
pub struct KmnReference {
    pub m: usize,
    pub n: usize,
    pub supremal: f64,
    pub certificate: PsdCertificate,
}

/// `log2(2mn / (2mn - m - n))`.
pub fn kmn_supremal(m: usize, n: usize) -> f64 {
    let (m, n) = (m as f64, n as f64);
    (2.0 * m * n / (2.0 * m * n - m - n)).log2()
}

/// `2^p (1 - (1/m + 1/n)/2)`, the certificate ratio of the rank-one `Q`.
pub fn kmn_ratio(m: usize, n: usize, p: f64) -> f64 {
    2f64.powf(p) * (1.0 - 0.5 * (1.0 / m as f64 + 1.0 / n as f64))
}

impl KmnReference {
    pub fn c2_at(&self, p: f64) -> f64 {
        if p <= self.supremal {
            1.0
        } else {
            kmn_ratio(self.m, self.n, p).sqrt()
        }
    }

    /// Orthogonal direct sum of the two simplex embeddings.
    pub fn embedding_at(&self, p: f64) -> Embedding {
        let (m, n) = (self.m, self.n);
        let dim = m + n - 2;
        let left = simplex_points(m);
        let right = simplex_points(n);
        let points = left
            .into_iter()
            .map(|x| {
                let mut v = x;
                v.resize(dim, 0.0);
                v
            })
            .chain(right.into_iter().map(|y| {
                let mut v = vec![0.0; m - 1];
                v.extend(y);
                v
            }))
            .collect();
        let cross = 1.0 - 0.5 * (1.0 / m as f64 + 1.0 / n as f64);
        let contraction = 2f64.powf(p / 2.0).max(cross.powf(-0.5));
        Embedding { dim, points, scale: 1.0 / contraction }
    }

    pub fn space(&self) -> SemiMetricSpace {
        standard_space(Family::Bipartite { m: self.m, n: self.n }).expect("validated parameters")
    }
}

pub fn kmn_reference(m: usize, n: usize) -> Result<KmnReference> {
    Family::Bipartite { m, n }.check()?;
    let xi: Vec<f64> = (0..m).map(|_| 1.0 / m as f64).chain((0..n).map(|_| -1.0 / n as f64)).collect();
    let v = DVector::from_vec(xi);
    // Entries 1/m^2, 1/n^2 and -1/(mn) written out exactly.
    let q = DMatrix::from_fn(m + n, m + n, |i, j| match (i < m, j < m) {
        (true, true) => 1.0 / (m * m) as f64,
        (false, false) => 1.0 / (n * n) as f64,
        _ => -1.0 / (m * n) as f64,
    });
    debug_assert!((&v * v.transpose() - &q).amax() < 1e-15);
    Ok(KmnReference { m, n, supremal: kmn_supremal(m, n), certificate: PsdCertificate::new(q)? })
}

#[derive(Debug, Clone)]
pub struct HammingReference {
    pub n: usize,
    pub embedding: Embedding,
    pub certificate: Option<PsdCertificate>,
}

impl HammingReference {
    pub fn c2_at(&self, p: f64) -> f64 {
        if p <= 1.0 {
            1.0
        } else {
            (self.n as f64).powf((p - 1.0) / 2.0)
        }
    }

    pub fn embedding_at(&self, p: f64) -> Embedding {
        // Image distance sqrt(k) against d^{p/2} = k^{p/2}: contraction is
        // attained at k = n when p >= 1 and at k = 1 otherwise.
        let contraction = if p >= 1.0 { (self.n as f64).powf((p - 1.0) / 2.0) } else { 1.0 };
        Embedding { scale: 1.0 / contraction, ..self.embedding.clone() }
    }

    pub fn space(&self) -> SemiMetricSpace {
        standard_space(Family::Hamming { n: self.n }).expect("validated parameters")
    }
}

/// `n - 1` on the diagonal, `-1` at distance 1, `+1` at distance `n`.
pub fn hamming_certificate(n: usize) -> Result<PsdCertificate> {
    if n < 2 {
        return Err(Error::BadParams(format!("hamming certificate needs n >= 2, got {n}")));
    }
    let size = 1usize << n;
    let q = DMatrix::from_fn(size, size, |i, j| {
        let d = (i ^ j).count_ones() as usize;
        if i == j {
            (n - 1) as f64
        } else if d == 1 {
            -1.0
        } else if d == n {
            1.0
        } else {
            0.0
        }
    });
    PsdCertificate::new(q)
}

pub fn hamming_reference(n: usize) -> Result<HammingReference> {
    Family::Hamming { n }.check()?;
    let points = (0..1usize << n)
        .map(|i| (0..n).map(|k| ((i >> (n - 1 - k)) & 1) as f64).collect())
        .collect();
    let certificate = if n >= 2 { Some(hamming_certificate(n)?) } else { None };
    Ok(HammingReference { n, embedding: Embedding::new(points, 1.0)?, certificate })
}

/// Closed-form `c2(X, d^{p/2})` for a family.
pub fn family_c2(family: Family, p: f64) -> Result<f64> {
    family.check()?;
    Ok(match family {
        Family::Complete { .. } => 1.0,
        Family::Bipartite { m, n } => kmn_reference(m, n)?.c2_at(p),
        Family::Hamming { n } => hamming_reference(n)?.c2_at(p),
    })
}

/// Closed-form supremal negative type; `None` means unbounded.
pub fn family_supremal(family: Family) -> Result<Option<f64>> {
    family.check()?;
    Ok(match family {
        Family::Complete { .. } => None,
        Family::Bipartite { m, n } => Some(kmn_supremal(m, n)),
        // H_1 is a two-point space.
        Family::Hamming { n } => (n >= 2).then_some(1.0),
    })
}

fn proportional(x: &SemiMetricSpace, y: &SemiMetricSpace) -> bool {
    if x.len() != y.len() {
        return false;
    }
    let lambda = x.d(0, 1) / y.d(0, 1);
    let n = x.len();
    (0..n).all(|i| ((i + 1)..n).all(|j| (x.d(i, j) - lambda * y.d(i, j)).abs() <= 1e-12 * x.d(i, j)))
}

/// The family `x` is (up to a global scale, in the standard point order), if any.
pub fn identify_family(x: &SemiMetricSpace) -> Option<Family> {
    let size = x.len();
    if size.is_power_of_two() && size >= 4 {
        let fam = Family::Hamming { n: size.trailing_zeros() as usize };
        if proportional(x, &standard_space(fam).ok()?) {
            return Some(fam);
        }
    }
    for m in 1..size {
        let fam = Family::Bipartite { m, n: size - m };
        if let Ok(std) = standard_space(fam) {
            if proportional(x, &std) {
                return Some(fam);
            }
        }
    }
    let complete = Family::Complete { n: size };
    proportional(x, &standard_space(complete).ok()?).then_some(complete)
}

/// Closed-form certificate for a recognised family (not for `K_n`, where
/// no non-trivial polygonal equality exists).
pub fn known_certificate(x: &SemiMetricSpace) -> Option<PsdCertificate> {
    match identify_family(x)? {
        Family::Bipartite { m, n } => kmn_reference(m, n).ok().map(|r| r.certificate),
        Family::Hamming { n } => hamming_certificate(n).ok(),
        Family::Complete { .. } => None,
    }
}
