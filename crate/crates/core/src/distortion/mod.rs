//! Euclidean distortion `c2(X, d^{p/2})` of a finite semi-metric space.
//!
//! The squared distortion is the optimal `t` of
//!
//! ```text
//! minimize t  s.t.  G PSD,  d_ij^p <= g_ii + g_jj - 2 g_ij <= t d_ij^p.
//! ```
//!
//! Every report carries a bracket `[lo, hi]` in which both ends are backed by
//! objects that can be re-verified independently: `hi` is the distortion of
//! the returned Gram matrix, `lo` is the square root of the certificate ratio
//! of the returned cone element (or 1).

mod barrier;
mod dykstra;
mod problem;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::certificate::{certificate_ratio, PsdCertificate, SIGN_EPS_REL};
use crate::embedding::{gram_to_embedding, Embedding};
use crate::error::{Error, Result};
use crate::linalg::{centering, max_abs, to_rows};
use crate::metric::SemiMetricSpace;
use crate::search::{Schedule, Spectraplex};

pub(crate) use problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Log-barrier path; both bracket ends come from the path itself.
    InteriorPoint,
    /// Bisection with Dykstra feasibility; the lower end comes from the
    /// certificate search.
    Dykstra,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub method: Method,
    /// Required `hi / lo - 1`.
    pub rel_tol: f64,
    /// Relative slab violation accepted as feasible (Dykstra only).
    pub feas_tol: f64,
    /// Projection budget per bisection step (Dykstra only).
    pub max_projections: usize,
    /// Random restarts for the certificate search.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: Method::InteriorPoint,
            rel_tol: 1e-4,
            feas_tol: 1e-6,
            max_projections: 50_000,
            restarts: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DistortionReport {
    pub p: f64,
    pub c2: f64,
    pub bracket: [f64; 2],
    /// Feasible Gram in original units: `d^p <= dist_G <= hi^2 d^p`.
    pub gram: DMatrix<f64>,
    pub embedding: Embedding,
    /// Best cone element found with its certificate ratio.
    pub certificate: Option<(PsdCertificate, f64)>,
    pub method: Method,
    pub iterations: usize,
}

impl DistortionReport {
    pub fn to_json(&self) -> serde_json::Value {
        let certificate = self.certificate.as_ref().map(|(q, ratio)| {
            json!({ "Q": to_rows(q.matrix()), "ratio": ratio, "rank": q.rank() })
        });
        json!({
            "p": self.p,
            "c2": self.c2,
            "bracket": self.bracket,
            "gram": to_rows(&self.gram),
            "embedding": { "dim": self.embedding.dim, "points": self.embedding.points },
            "certificate": certificate,
        })
    }

    /// Largest violation of `d^p <= dist_G <= hi^2 d^p`, relative to max `d^p`.
    pub fn feasibility_violation(&self, x: &SemiMetricSpace) -> f64 {
        let n = x.len();
        let hi_sq = self.bracket[1] * self.bracket[1];
        let scale = x.max_distance().powf(self.p);
        let g = &self.gram;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let w = x.d(i, j).powf(self.p);
                let v = g[(i, i)] + g[(j, j)] - 2.0 * g[(i, j)];
                worst = worst.max(w - v).max(v - hi_sq * w);
            }
        }
        worst / scale
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::BadExponent(p));
    }
    Ok(())
}

pub fn min_distortion(x: &SemiMetricSpace, p: f64, opts: &SolverOptions) -> Result<DistortionReport> {
    check_exponent(p)?;
    let n = x.len();
    if p == 0.0 {
        // (X, d^0) is equilateral: the regular simplex is an isometry.
        let gram = centering(n) * 0.5;
        let embedding = gram_to_embedding(&gram, 1e-10)?;
        return Ok(DistortionReport {
            p,
            c2: 1.0,
            bracket: [1.0, 1.0],
            gram,
            embedding,
            certificate: None,
            method: opts.method,
            iterations: 0,
        });
    }
    let pb = Problem::new(x, p);
    let (primal, dual, iterations, closed) = match opts.method {
        Method::InteriorPoint => {
            let out = barrier::solve(&pb, opts.rel_tol)
                .ok_or_else(|| Error::SolverFailure("interior-point start failed".into()))?;
            (out.primal, out.dual, out.newton_steps, out.closed)
        }
        Method::Dykstra => {
            let seeds = ascent_seeds(&pb, &[], opts.restarts.min(8), opts.seed);
            let start = best_of(&seeds);
            let lo_start = start.as_ref().map_or(1.0, |(_, r)| r.max(1.0));
            let out = dykstra::bisect(&pb, lo_start, opts.rel_tol, opts.feas_tol, opts.max_projections)
                .ok_or_else(|| Error::SolverFailure("Dykstra start failed".into()))?;
            let extra: Vec<DMatrix<f64>> = out.last_infeasible.iter().map(|m| pb.laplacian(m)).collect();
            let mut found = ascent_seeds(&pb, &extra, 0, opts.seed);
            found.extend(start);
            let dual = best_of(&found);
            let target = (1.0 + opts.rel_tol).powi(2);
            let lo_sq = dual.as_ref().map_or(1.0, |(_, r)| r.max(1.0));
            let closed = out.primal.distortion_sq <= target * lo_sq;
            (out.primal, dual, out.projections, closed)
        }
    };
    let hi = primal.distortion_sq.sqrt();
    let lo = dual.as_ref().map_or(1.0, |(_, r)| r.max(1.0).sqrt()).min(hi);
    if !closed {
        return Err(Error::SolverFailure(format!(
            "bracket [{lo}, {hi}] did not close to relative width {}",
            opts.rel_tol
        )));
    }
    let embedding = gram_to_embedding(&primal.gram, 1e-10)?;
    let certificate = dual.and_then(|(q, _)| {
        let ratio = certificate_ratio(x, p, &q).ok()?;
        Some((q, ratio))
    });
    Ok(DistortionReport {
        p,
        c2: 0.5 * (lo + hi),
        bracket: [lo, hi],
        gram: primal.gram,
        embedding,
        certificate,
        method: opts.method,
        iterations,
    })
}

/// Ratio objective `N(Q)/D(Q)` and its subgradient on off-diagonal entries.
fn ratio_objective(pb: &Problem, q: &DMatrix<f64>) -> Option<(f64, DMatrix<f64>)> {
    let eps = SIGN_EPS_REL * max_abs(q);
    let n = pb.n;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = q[(i, j)];
            if v > eps {
                num += pb.weights[(i, j)] * v;
            } else if v < -eps {
                den -= pb.weights[(i, j)] * v;
            }
        }
    }
    if !(den > 0.0) {
        return None;
    }
    let r = num / den;
    let grad = DMatrix::from_fn(n, n, |i, j| {
        let v = q[(i, j)];
        if i == j {
            0.0
        } else if v > eps {
            pb.weights[(i, j)] / den
        } else if v < -eps {
            r * pb.weights[(i, j)] / den
        } else {
            0.0
        }
    });
    Some((r, grad))
}

fn best_of(found: &[(PsdCertificate, f64)]) -> Option<(PsdCertificate, f64)> {
    found
        .iter()
        .fold(None::<&(PsdCertificate, f64)>, |best, cand| match best {
            Some(b) if b.1 >= cand.1 => Some(b),
            _ => Some(cand),
        })
        .cloned()
}

/// Ascend from each explicit seed (with a short polishing schedule) and from
/// `random` Gaussian starts. Results are in seed order, then restart order.
fn ascent_seeds(pb: &Problem, seeds: &[DMatrix<f64>], random: usize, seed: u64) -> Vec<(PsdCertificate, f64)> {
    let sp = Spectraplex::new(pb.n);
    let polish = Schedule { iterations: 800, step0: 1e-2, step_min: 1e-9 };
    let mut starts: Vec<(DMatrix<f64>, Schedule)> =
        seeds.iter().filter_map(|q| sp.from_cone(q)).map(|s| (s, polish)).collect();
    for r in 0..random {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(r as u64));
        starts.push((sp.random_start(&mut rng), Schedule::default()));
    }
    starts
        .into_par_iter()
        .filter_map(|(s0, sched)| {
            let (s, _) = sp.maximize(s0, sched, |q| ratio_objective(pb, q));
            pb.certify(&sp.lift(&s))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CertificateSearch {
    /// Trace-normalized cone element.
    pub certificate: PsdCertificate,
    pub ratio: f64,
    pub target: f64,
    pub met: bool,
}

/// Search for `Q` with `certificate_ratio(Q) >= target (1 - rel_tol)`, seeded by
/// a tightly solved interior-point dual, any `extra` seeds, and
/// `opts.restarts` random starts. Always returns the best found.
pub fn search_certificate(
    x: &SemiMetricSpace,
    p: f64,
    target: f64,
    opts: &SolverOptions,
    extra: &[PsdCertificate],
) -> Result<CertificateSearch> {
    check_exponent(p)?;
    if x.len() < 2 {
        return Err(Error::TooSmall(x.len()));
    }
    let pb = Problem::new(x, p);
    let mut seeds: Vec<DMatrix<f64>> = extra.iter().map(|q| q.matrix().clone()).collect();
    let mut found = Vec::new();
    if p > 0.0 {
        if let Some(out) = barrier::solve(&pb, opts.rel_tol.min(1e-9)) {
            if let Some((q, r)) = out.dual {
                seeds.push(q.matrix().clone());
                found.push((q, r));
            }
        }
    }
    found.extend(ascent_seeds(&pb, &seeds, opts.restarts, opts.seed));
    let (certificate, _) = best_of(&found).ok_or_else(|| Error::SearchFailure { best: 0.0, required: target })?;
    let ratio = certificate_ratio(x, p, &certificate)?;
    let met = ratio >= target * (1.0 - opts.rel_tol);
    Ok(CertificateSearch { certificate, ratio, target, met })
}

/// Like [`search_certificate`], but a shortfall is an error.
pub fn dual_certificate_search(
    x: &SemiMetricSpace,
    p: f64,
    target: f64,
    opts: &SolverOptions,
) -> Result<PsdCertificate> {
    let found = search_certificate(x, p, target, opts, &[])?;
    if found.met {
        Ok(found.certificate)
    } else {
        Err(Error::SearchFailure { best: found.ratio, required: target * (1.0 - opts.rel_tol) })
    }
}

pub(crate) fn solver_dual(x: &SemiMetricSpace, p: f64, rel_tol: f64) -> Option<PsdCertificate> {
    if !(p > 0.0) {
        return None;
    }
    barrier::solve(&Problem::new(x, p), rel_tol).and_then(|o| o.dual).map(|(q, _)| q)
}
