//! p-negative type with distortion C.
//!
//! Verdicts are decided through the Euclidean distortion: `X` has strict
//! p-negative type with distortion `C` iff `p` is below the supremal negative
//! type or `C > c2(X, d^{p/2})`, and has the (non-strict) type iff
//! `C >= c2(X, d^{p/2})`. The gap function
//!
//! ```text
//! Delta(p, C) = inf { -C^2 sum_{q<0} d^p q - sum_{q>0} d^p q : Q in cone, pos(Q) = 1 }
//! ```
//!
//! is positive exactly in the strict case. It is minimized numerically; the
//! returned value is always attained by the returned matrix, so it is an
//! upper bound on `Delta`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::certificate::{gap_objective, split_sums, PsdCertificate, SIGN_EPS_REL};
use crate::classical::{p_negative_type, supremal_with, Status, SupremalType, DEFAULT_BISECTION_TOL, DEFAULT_CAP, DEFAULT_EIG_TOL};
use crate::closed_forms::known_certificate;
use crate::distortion::{min_distortion, solver_dual, DistortionReport, SolverOptions};
use crate::error::{Error, Result};
use crate::linalg::{centering, max_abs, sym_eigen};
use crate::metric::SemiMetricSpace;
use crate::search::{Schedule, Spectraplex};

pub use crate::certificate::distorted_inequality_slack;

/// Relative width of the band in which a gap value counts as zero.
pub const SIGN_LAW_EPS: f64 = 1e-6;
pub const ORACLE_MAX_POINTS: usize = 6;
pub const ORACLE_MIN_BUDGET: usize = 10_000;
const PATTERN_ROUNDS: usize = 3000;
const ORACLE_KEEP: usize = 3;
const RIDGE_ROUNDS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rationale {
    PBelowSupremal,
    #[serde(rename = "C_above_c2")]
    CAboveC2,
    #[serde(rename = "C_equals_c2")]
    CEqualsC2,
    #[serde(rename = "C_below_c2")]
    CBelowC2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortedVerdict {
    pub p: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub status: Status,
    #[serde(rename = "c2")]
    pub c2_used: f64,
    pub c2_bracket: [f64; 2],
    /// `None` when the supremal type exceeds the search cap.
    pub supremal_p: Option<f64>,
    pub rationale: Rationale,
    /// Set when `C` lies inside the `c2` bracket, where strict and
    /// non-strict cannot be told apart numerically.
    pub ambiguous: bool,
}

impl DistortedVerdict {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "p": self.p,
            "C": self.c,
            "status": self.status.as_str(),
            "c2": self.c2_used,
            "supremal_p": self.supremal_p,
            "rationale": self.rationale,
            "ambiguous": self.ambiguous,
        })
    }
}

/// Verdict evaluator for one space, caching distortion solves per exponent.
pub struct VerdictEngine {
    x: SemiMetricSpace,
    opts: SolverOptions,
    eig_tol: f64,
    reports: RwLock<HashMap<u64, Arc<DistortionReport>>>,
    supremal: OnceLock<SupremalType>,
}

impl VerdictEngine {
    pub fn new(x: SemiMetricSpace, opts: SolverOptions) -> Self {
        Self { x, opts, eig_tol: DEFAULT_EIG_TOL, reports: RwLock::default(), supremal: OnceLock::new() }
    }

    pub fn space(&self) -> &SemiMetricSpace {
        &self.x
    }

    pub fn distortion(&self, p: f64) -> Result<Arc<DistortionReport>> {
        let key = p.to_bits();
        if let Some(r) = self.reports.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(r));
        }
        let report = Arc::new(min_distortion(&self.x, p, &self.opts)?);
        self.reports.write().expect("cache lock").entry(key).or_insert_with(|| Arc::clone(&report));
        Ok(report)
    }

    pub fn supremal(&self) -> SupremalType {
        *self.supremal.get_or_init(|| supremal_with(&self.x, DEFAULT_BISECTION_TOL, DEFAULT_CAP, self.eig_tol))
    }

    pub fn verdict(&self, p: f64, c: f64) -> Result<DistortedVerdict> {
        if !(c >= 1.0) || !c.is_finite() {
            return Err(Error::BadParams(format!("distortion C = {c} must be finite and >= 1")));
        }
        let report = self.distortion(p)?;
        let [lo, hi] = report.bracket;
        let supremal = self.supremal();
        let supremal_p = supremal.estimate();
        let supremal_p = supremal_p.is_finite().then_some(supremal_p);
        // Below the supremal type the classical form is negative definite on
        // the mean-zero hyperplane, which decides strictness directly.
        let classical = p_negative_type(&self.x, p, self.eig_tol);
        let (status, rationale, ambiguous) = if classical.status == Status::Strict {
            (Status::Strict, Rationale::PBelowSupremal, false)
        } else if c > hi {
            (Status::Strict, Rationale::CAboveC2, false)
        } else if c < lo {
            (Status::Fails, Rationale::CBelowC2, false)
        } else {
            (Status::Nonstrict, Rationale::CEqualsC2, hi > lo || classical.status == Status::Nonstrict)
        };
        Ok(DistortedVerdict { p, c, status, c2_used: report.c2, c2_bracket: [lo, hi], supremal_p, rationale, ambiguous })
    }
}

pub fn distorted_p_negative_type(
    x: &SemiMetricSpace,
    p: f64,
    c: f64,
    opts: &SolverOptions,
) -> Result<DistortedVerdict> {
    VerdictEngine::new(x.clone(), opts.clone()).verdict(p, c)
}

#[derive(Debug, Clone)]
pub struct GapEstimate {
    /// `f(p, C, argmin_q)`, an upper bound on `Delta(p, C)`.
    pub value: f64,
    /// Minimizer found, normalized to `pos = 1`.
    pub argmin_q: PsdCertificate,
    pub restarts_used: usize,
    /// No entry of `argmin_q` lies within its sign threshold of zero.
    pub sign_confident: bool,
}

impl GapEstimate {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "value": self.value,
            "Q": crate::linalg::to_rows(self.argmin_q.matrix()),
            "rank": self.argmin_q.rank(),
            "restarts_used": self.restarts_used,
            "sign_confident": self.sign_confident,
        })
    }
}

/// Gap objective in normalized weights: `h(Q) = f(Q) / pos(Q)`.
struct GapProblem {
    n: usize,
    weights: DMatrix<f64>,
    c_sq: f64,
}

impl GapProblem {
    fn new(x: &SemiMetricSpace, p: f64, c: f64) -> Self {
        let raw = x.power_matrix(p);
        let unit = raw.max();
        Self { n: x.len(), weights: raw / unit, c_sq: c * c }
    }

    fn value(&self, q: &DMatrix<f64>) -> Option<f64> {
        let eps = SIGN_EPS_REL * max_abs(q);
        let (num, den) = split_sums(q, &self.weights, eps);
        let pos: f64 = q.iter().filter(|&&v| v > eps).sum();
        (pos > 0.0).then(|| (self.c_sq * den - num) / pos)
    }

    /// Value and gradient of `-h`, for ascent.
    fn neg_objective(&self, q: &DMatrix<f64>) -> Option<(f64, DMatrix<f64>)> {
        let eps = SIGN_EPS_REL * max_abs(q);
        let (num, den) = split_sums(q, &self.weights, eps);
        let pos: f64 = q.iter().filter(|&&v| v > eps).sum();
        if !(pos > 0.0) {
            return None;
        }
        let h = (self.c_sq * den - num) / pos;
        let grad = DMatrix::from_fn(self.n, self.n, |i, j| {
            let v = q[(i, j)];
            let w = self.weights[(i, j)];
            if v > eps {
                (w + h) / pos
            } else if v < -eps {
                self.c_sq * w / pos
            } else {
                0.0
            }
        });
        Some((-h, grad))
    }

    fn finish(&self, x: &SemiMetricSpace, p: f64, c: f64, q: &DMatrix<f64>, restarts_used: usize) -> Result<GapEstimate> {
        let cert = PsdCertificate::project(q)
            .pos_normalized()
            .ok_or_else(|| Error::NotInCone("gap search collapsed to zero".into()))?;
        let value = gap_objective(x, p, c, &cert)?;
        let eps = cert.sign_eps();
        let sign_confident = cert.matrix().iter().all(|v| v.abs() > eps);
        Ok(GapEstimate { value, argmin_q: cert, restarts_used, sign_confident })
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

fn check_args(p: f64, c: f64) -> Result<()> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::BadExponent(p));
    }
    if !(c >= 1.0) || !c.is_finite() {
        return Err(Error::BadParams(format!("distortion C = {c} must be finite and >= 1")));
    }
    Ok(())
}

/// Multi-start projected subgradient estimate of `Delta(p, C)`.
pub fn gap_estimate(x: &SemiMetricSpace, p: f64, c: f64, restarts: usize, seed: u64) -> Result<GapEstimate> {
    check_args(p, c)?;
    if restarts == 0 {
        return Err(Error::BadParams("gap estimate needs at least one restart".into()));
    }
    let gp = GapProblem::new(x, p, c);
    let sp = Spectraplex::new(x.len());

    let mut seeds: Vec<DMatrix<f64>> = Vec::new();
    if let Some(q) = solver_dual(x, p, 1e-6) {
        seeds.push(q.matrix().clone());
    }
    if let Some(q) = known_certificate(x) {
        seeds.push(q.matrix().clone());
    }
    if let Some(xi) = p_negative_type(x, p, DEFAULT_EIG_TOL).witness {
        let v = nalgebra::DVector::from_vec(xi);
        seeds.push(&v * v.transpose());
    }
    // Two-point certificates: minimizers are often supported on few points.
    let n = x.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut q = DMatrix::zeros(n, n);
            q[(i, i)] = 1.0;
            q[(j, j)] = 1.0;
            q[(i, j)] = -1.0;
            q[(j, i)] = -1.0;
            seeds.push(q);
        }
    }

    let polish = Schedule { iterations: 1500, step0: 0.05, step_min: 1e-9 };
    let mut starts: Vec<(DMatrix<f64>, Schedule)> = seeds.iter().filter_map(|q| sp.from_cone(q)).map(|s| (s, polish)).collect();
    // Seeds also get a plain run so a poor polish step cannot mask them.
    starts.extend(seeds.iter().filter_map(|q| sp.from_cone(q)).map(|s| (s, Schedule { iterations: 0, ..polish })));
    for r in 0..restarts {
        let mut rng = rng_for(seed, r as u64);
        starts.push((sp.random_start(&mut rng), Schedule { iterations: 2000, step0: 0.25, step_min: 1e-9 }));
    }
    let used = starts.len();
    let results: Vec<(DMatrix<f64>, f64)> = starts
        .into_par_iter()
        .map(|(s0, sched)| sp.maximize(s0, sched, |q| gp.neg_objective(q)))
        .collect();
    let (best_s, _) = results
        .into_iter()
        .fold(None::<(DMatrix<f64>, f64)>, |best, cand| match best {
            Some(b) if b.1 >= cand.1 => Some(b),
            _ => Some(cand),
        })
        .ok_or_else(|| Error::SolverFailure("no gap candidates".into()))?;
    gp.finish(x, p, c, &sp.lift(&best_s), used)
}

/// Brute-force estimate of `Delta(p, C)` for `n <= 6`: for every support of at
/// least two points, random sampling of `Q = P B B^T P` on that support, then
/// pattern search on `B` from the best samples and a zero-pinned ridge search
/// from the best of those.
/// Independent of the spectraplex search used by [`gap_estimate`].
pub fn gap_oracle(x: &SemiMetricSpace, p: f64, c: f64, budget: usize, seed: u64) -> Result<GapEstimate> {
    check_args(p, c)?;
    let n = x.len();
    if n > ORACLE_MAX_POINTS {
        return Err(Error::TooLarge { n, max: ORACLE_MAX_POINTS });
    }
    if budget < ORACLE_MIN_BUDGET {
        return Err(Error::BadParams(format!("oracle budget {budget} below {ORACLE_MIN_BUDGET}")));
    }
    let gp = GapProblem::new(x, p, c);

    // Minimizers often vanish on some points, which is a kink of the objective
    // in factor coordinates. Searching each support separately keeps the
    // minimizer in the interior of its own parametrization.
    let supports: Vec<Vec<usize>> = (1u32..1 << n)
        .filter(|m| m.count_ones() >= 2)
        .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
        .collect();
    let per_support = budget.div_ceil(supports.len());
    let best: Vec<(f64, DMatrix<f64>)> = supports
        .par_iter()
        .enumerate()
        .filter_map(|(s, idx)| {
            let k = idx.len();
            let proj = centering(k);
            let sub = GapProblem { n: k, weights: gp.weights.select_rows(idx).select_columns(idx), c_sq: gp.c_sq };
            let gram = |b: &DMatrix<f64>| &proj * (b * b.transpose()) * &proj;
            let eval = |b: &DMatrix<f64>| sub.value(&gram(b));
            let mut rng = rng_for(seed, s as u64);
            let mut pool: Vec<(f64, DMatrix<f64>)> = Vec::with_capacity(ORACLE_KEEP + 1);
            for _ in 0..per_support {
                let rank = rng.gen_range(1..k);
                let b = DMatrix::from_fn(k, rank, |_, _| rng.sample::<f64, _>(StandardNormal));
                let Some(v) = eval(&b) else { continue };
                if pool.len() < ORACLE_KEEP || v < pool[pool.len() - 1].0 {
                    pool.push((v, b));
                    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
                    pool.truncate(ORACLE_KEEP);
                }
            }
            let (v, b) = pool
                .into_iter()
                .map(|(v, b)| pattern_search(&eval, b, v, &mut rng))
                .min_by(|a, b| a.0.total_cmp(&b.0))?;
            let (v, small) = ridge_search(&sub, gram(&b), v, &mut rng);
            let mut q = DMatrix::zeros(n, n);
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    q[(i, j)] = small[(a, b)];
                }
            }
            Some((v, q))
        })
        .collect();
    let (_, q) = best
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::SolverFailure("oracle found no admissible sample".into()))?;
    gp.finish(x, p, c, &q, budget)
}

/// Pattern search on a centered factor `F` of `Q = F F^T` that keeps a set of
/// off-diagonal entries pinned at zero. Minimizers typically sit on the PSD
/// boundary and on several `q_ij = 0` faces at once; working on the factor
/// handles the first, and restoring `f_i . f_j = 0` after every move keeps the
/// search on the second, where the objective is smooth.
fn ridge_search<R: Rng>(gp: &GapProblem, q: DMatrix<f64>, mut best: f64, rng: &mut R) -> (f64, DMatrix<f64>) {
    let n = gp.n;
    let (values, vectors) = sym_eigen(&q);
    // Full-width factor, so the search is not confined to the starting rank.
    let mut f = DMatrix::from_fn(n, n, |i, c| vectors[(i, c)] * values[c].max(0.0).sqrt());
    let noise = 1e-3 * f.norm();
    if !(noise > 0.0) {
        return (best, q);
    }
    f += DMatrix::from_fn(n, n, |_, _| noise * rng.sample::<f64, _>(StandardNormal));
    f /= f.norm();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let qmax = max_abs(&q);
    let mut zeros: Vec<(usize, usize)> = pairs.iter().copied().filter(|&(i, j)| q[(i, j)].abs() <= 1e-4 * qmax).collect();
    let gram = |f: &DMatrix<f64>| f * f.transpose();
    let restore = |mut f: DMatrix<f64>, zeros: &[(usize, usize)]| -> Option<DMatrix<f64>> {
        center_rows(&mut f);
        if zeros.is_empty() {
            return Some(f);
        }
        let r = f.ncols();
        for _ in 0..30 {
            let g = DMatrix::from_fn(zeros.len(), 1, |z, _| f.row(zeros[z].0).dot(&f.row(zeros[z].1)));
            if g.amax() <= 1e-15 * f.norm_squared() {
                return Some(f);
            }
            // Jacobian rows in flattened (point, column) coordinates, restricted
            // to moves that keep the rows centered.
            let mut jac: DMatrix<f64> = DMatrix::zeros(zeros.len(), n * r);
            for (z, &(i, j)) in zeros.iter().enumerate() {
                for c in 0..r {
                    jac[(z, i * r + c)] += f[(j, c)];
                    jac[(z, j * r + c)] += f[(i, c)];
                }
                for c in 0..r {
                    let mean = (0..n).map(|k| jac[(z, k * r + c)]).sum::<f64>() / n as f64;
                    for k in 0..n {
                        jac[(z, k * r + c)] -= mean;
                    }
                }
            }
            let mut normal: DMatrix<f64> = &jac * jac.transpose();
            let ridge = 1e-14 * normal.diagonal().amax();
            for z in 0..zeros.len() {
                normal[(z, z)] += ridge;
            }
            let step: DMatrix<f64> = jac.transpose() * normal.lu().solve(&g)?;
            for k in 0..n {
                for c in 0..r {
                    f[(k, c)] -= step[(k * r + c, 0)];
                }
            }
            center_rows(&mut f);
            if !(f.norm() > 1e-6) {
                return None;
            }
        }
        None
    };
    let accept = |v: f64, best: f64| v < best - 1e-15 * (1.0 + best.abs());
    let fallback = (best, q);
    let Some(start) = restore(f.clone(), &zeros).or_else(|| {
        zeros.clear();
        restore(f.clone(), &zeros)
    }) else {
        return fallback;
    };
    f = start;
    best = gp.value(&gram(&f)).unwrap_or(f64::INFINITY);
    let mut step: f64 = 0.1;
    let mut alpha: f64 = 1e-2;
    for _ in 0..RIDGE_ROUNDS {
        if step <= 1e-12 {
            break;
        }
        let round_start = best;
        // Gradient steps with an adaptive length; the ridge is smooth once the
        // zero pattern is pinned.
        for _ in 0..50 {
            let Some((_, g)) = gp.neg_objective(&gram(&f)) else { break };
            let mut dir = (&g + g.transpose()) * &f;
            center_rows(&mut dir);
            let dn = dir.norm();
            if !(dn > 0.0) {
                break;
            }
            let mut moved = false;
            for _ in 0..30 {
                if let Some(cand) = restore(&f + &dir * (alpha / dn), &zeros) {
                    if let Some(v) = gp.value(&gram(&cand)) {
                        if accept(v, best) {
                            best = v;
                            f = cand;
                            f /= f.norm();
                            moved = true;
                            break;
                        }
                    }
                }
                alpha *= 0.5;
            }
            if !moved {
                alpha = 1e-2;
                break;
            }
            alpha = (alpha * 2.0).min(0.5);
        }
        let q = gram(&f);
        let small = 0.05 * max_abs(&q);
        for &pair in &pairs {
            if zeros.contains(&pair) || q[pair].abs() > small {
                continue;
            }
            let mut z = zeros.clone();
            z.push(pair);
            if let Some(cand) = restore(f.clone(), &z) {
                if let Some(v) = gp.value(&gram(&cand)) {
                    if accept(v, best) {
                        best = v;
                        f = cand;
                        zeros = z;
                                }
                }
            }
        }
        let dims = f.len();
        for t in 0..3 * dims {
            let cand = if t < 2 * dims {
                let mut c = f.clone();
                c[t / 2] += if t % 2 == 0 { step } else { -step };
                c
            } else {
                let dir = DMatrix::from_fn(f.nrows(), f.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
                &f + &dir * (step / dir.norm())
            };
            let Some(cand) = restore(cand, &zeros) else { continue };
            if let Some(v) = gp.value(&gram(&cand)) {
                if accept(v, best) {
                    best = v;
                    f = cand;
                        }
            }
        }
        let norm = f.norm();
        f /= norm;
        if round_start - best < 1e-12 * (1.0 + best.abs()) {
            step *= 0.5;
        }
    }
    if best < fallback.0 {
        (best, gram(&f))
    } else {
        fallback
    }
}

fn center_rows(f: &mut DMatrix<f64>) {
    let n = f.nrows() as f64;
    for c in 0..f.ncols() {
        let mean = f.column(c).sum() / n;
        f.column_mut(c).add_scalar_mut(-mean);
    }
}

/// Compass search on the factor entries, plus random directions at every
/// step size so kinks of the objective do not stall progress.
fn pattern_search<F, R>(eval: &F, mut b: DMatrix<f64>, mut best: f64, rng: &mut R) -> (f64, DMatrix<f64>)
where
    F: Fn(&DMatrix<f64>) -> Option<f64>,
    R: Rng,
{
    let scale = b.norm();
    b /= scale;
    let mut step = 0.25;
    let dims = b.len();
    let accept = |v: f64, best: f64| v < best - 1e-15 * (1.0 + best.abs());
    for _ in 0..PATTERN_ROUNDS {
        if step <= 1e-10 {
            break;
        }
        let mut improved = false;
        for idx in 0..dims {
            for sign in [1.0, -1.0] {
                let mut cand = b.clone();
                cand[idx] += sign * step;
                if let Some(v) = eval(&cand) {
                    if accept(v, best) {
                        best = v;
                        b = cand;
                        improved = true;
                    }
                }
            }
        }
        for _ in 0..2 * dims {
            let dir = DMatrix::from_fn(b.nrows(), b.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
            let dir = &dir / dir.norm();
            let cand = &b + dir * step;
            if let Some(v) = eval(&cand) {
                if accept(v, best) {
                    best = v;
                    b = cand;
                    improved = true;
                }
            }
        }
        let nb = b.norm();
        b /= nb;
        if !improved {
            step *= 0.5;
        }
    }
    (best, b)
}
