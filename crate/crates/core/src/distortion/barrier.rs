//! Log-barrier interior-point path for
//!
//! ```text
//! minimize t  s.t.  Y PSD,  w_e <= a_e^T Y a_e <= t w_e  for every pair e.
//! ```
//!
//! At each barrier weight `tau` the centering problem is solved by damped
//! Newton steps in the variables `(t, svec(Y))`. Central points yield dual
//! multipliers `alpha_e = 1/(tau s1_e)`, `beta_e = 1/(tau s2_e)` whose
//! Laplacian `sum (alpha_e - beta_e)` (off-diagonal) lies in the certificate
//! cone. Both ends of the bracket are checked on concrete objects, never on
//! the barrier parameter.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::problem::{PrimalPoint, Problem};
use crate::certificate::PsdCertificate;

const BARRIER_GROWTH: f64 = 8.0;
const MAX_OUTER: usize = 60;
const MAX_NEWTON: usize = 80;

pub(crate) struct BarrierOutcome {
    pub primal: PrimalPoint,
    /// Best certified lower bound on `c2^2` with the matrix that attains it.
    pub dual: Option<(PsdCertificate, f64)>,
    pub newton_steps: usize,
    pub closed: bool,
}

struct Layout {
    /// `(row, col)` with `row <= col` for each svec coordinate.
    idx: Vec<(usize, usize)>,
    /// Row `e` maps `svec(Y)` to `a_e^T Y a_e`.
    coeff: DMatrix<f64>,
}

impl Layout {
    fn new(pb: &Problem) -> Self {
        let k = pb.k;
        let idx: Vec<(usize, usize)> = (0..k).flat_map(|r| (r..k).map(move |c| (r, c))).collect();
        let mut coeff = DMatrix::zeros(pb.pair_count(), idx.len());
        for (e, a) in pb.a.iter().enumerate() {
            for (col, &(r, c)) in idx.iter().enumerate() {
                coeff[(e, col)] = if r == c { a[r] * a[r] } else { 2.0 * a[r] * a[c] };
            }
        }
        Self { idx, coeff }
    }

    fn to_matrix(&self, k: usize, y: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(k, k);
        for (v, &(r, c)) in y.iter().zip(&self.idx) {
            m[(r, c)] = *v;
            m[(c, r)] = *v;
        }
        m
    }

    fn from_matrix(&self, m: &DMatrix<f64>) -> Vec<f64> {
        self.idx.iter().map(|&(r, c)| m[(r, c)]).collect()
    }
}

struct State<'a> {
    pb: &'a Problem,
    lay: &'a Layout,
    t: f64,
    y: Vec<f64>,
}

struct Eval {
    value: f64,
    s1: DVector<f64>,
    s2: DVector<f64>,
    inv: DMatrix<f64>,
}

impl State<'_> {
    /// Barrier value, or `None` outside the strict interior.
    fn eval(&self, t: f64, y: &[f64], tau: f64) -> Option<Eval> {
        let pb = self.pb;
        let dist = &self.lay.coeff * DVector::from_column_slice(y);
        let w = DVector::from_column_slice(&pb.w);
        let s1 = &dist - &w;
        let s2 = &w * t - &dist;
        if s1.iter().chain(s2.iter()).any(|&s| !(s > 0.0)) {
            return None;
        }
        let ym = self.lay.to_matrix(pb.k, y);
        let chol = Cholesky::new(ym)?;
        let logdet: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let value = tau * t - s1.iter().map(|v| v.ln()).sum::<f64>() - s2.iter().map(|v| v.ln()).sum::<f64>() - logdet;
        Some(Eval { value, s1, s2, inv: chol.inverse() })
    }

    /// Newton centering at weight `tau`. Returns the number of steps taken.
    fn center(&mut self, tau: f64) -> Option<usize> {
        let pb = self.pb;
        let lay = self.lay;
        let m = lay.idx.len();
        let w = DVector::from_column_slice(&pb.w);
        let mut cur = self.eval(self.t, &self.y, tau)?;
        for step in 0..MAX_NEWTON {
            let inv1 = cur.s1.map(|s| 1.0 / s);
            let inv2 = cur.s2.map(|s| 1.0 / s);
            let mut grad = DVector::zeros(m + 1);
            grad[0] = tau - w.dot(&inv2);
            let gy = lay.coeff.transpose() * (&inv2 - &inv1);
            for (col, &(r, c)) in lay.idx.iter().enumerate() {
                let logdet = if r == c { cur.inv[(r, r)] } else { 2.0 * cur.inv[(r, c)] };
                grad[col + 1] = gy[col] - logdet;
            }

            let mut hess = DMatrix::zeros(m + 1, m + 1);
            let d1 = inv1.component_mul(&inv1);
            let d2 = inv2.component_mul(&inv2);
            hess[(0, 0)] = w.component_mul(&w).dot(&d2);
            let ty = -(lay.coeff.transpose() * w.component_mul(&d2));
            for col in 0..m {
                hess[(0, col + 1)] = ty[col];
                hess[(col + 1, 0)] = ty[col];
            }
            let mut scaled = lay.coeff.clone();
            let dd = &d1 + &d2;
            for (e, mut row) in scaled.row_iter_mut().enumerate() {
                row *= dd[e];
            }
            let yy = lay.coeff.transpose() * scaled;
            let inv = &cur.inv;
            for a in 0..m {
                let (r1, c1) = lay.idx[a];
                for b in a..m {
                    let (r2, c2) = lay.idx[b];
                    let ld = logdet_hessian(inv, (r1, c1), (r2, c2));
                    hess[(a + 1, b + 1)] = yy[(a, b)] + ld;
                    hess[(b + 1, a + 1)] = yy[(a, b)] + ld;
                }
            }

            let delta = solve_spd(hess, &grad)?;
            let decrement = -grad.dot(&delta);
            if !(decrement.is_finite()) {
                return None;
            }
            if decrement < 1e-11 {
                return Some(step);
            }
            let mut s = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let t_new = self.t + s * delta[0];
                let y_new: Vec<f64> = self.y.iter().enumerate().map(|(i, v)| v + s * delta[i + 1]).collect();
                if let Some(ev) = self.eval(t_new, &y_new, tau) {
                    if ev.value <= cur.value - 0.25 * s * decrement {
                        accepted = Some((t_new, y_new, ev));
                        break;
                    }
                }
                s *= 0.5;
            }
            match accepted {
                Some((t_new, y_new, ev)) => {
                    self.t = t_new;
                    self.y = y_new;
                    cur = ev;
                }
                // Line search stalls only at the floating-point floor.
                None => return Some(step),
            }
        }
        Some(MAX_NEWTON)
    }

    fn multipliers(&self, tau: f64) -> Option<Vec<f64>> {
        let ev = self.eval(self.t, &self.y, tau)?;
        Some(ev.s1.iter().zip(ev.s2.iter()).map(|(a, b)| 1.0 / (tau * a) - 1.0 / (tau * b)).collect())
    }
}

fn logdet_hessian(inv: &DMatrix<f64>, a: (usize, usize), b: (usize, usize)) -> f64 {
    let ua: &[(usize, usize)] = if a.0 == a.1 { &[(a.0, a.1)] } else { &[(a.0, a.1), (a.1, a.0)] };
    let ub: &[(usize, usize)] = if b.0 == b.1 { &[(b.0, b.1)] } else { &[(b.0, b.1), (b.1, b.0)] };
    let mut acc = 0.0;
    for &(r1, c1) in ua {
        for &(r2, c2) in ub {
            acc += inv[(c1, r2)] * inv[(c2, r1)];
        }
    }
    acc
}

fn solve_spd(mut h: DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = h.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut ridge = 0.0;
    for _ in 0..8 {
        if let Some(ch) = Cholesky::new(h.clone()) {
            let d = ch.solve(&(-g));
            if d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
        ridge = if ridge == 0.0 { 1e-14 * scale } else { ridge * 100.0 };
        for i in 0..h.nrows() {
            h[(i, i)] += ridge;
        }
    }
    None
}

/// Follow the central path until the certified bracket satisfies
/// `sqrt(hi^2 / lo^2) <= 1 + rel_tol`.
pub(crate) fn solve(pb: &Problem, rel_tol: f64) -> Option<BarrierOutcome> {
    let lay = Layout::new(pb);
    let y0 = pb.equidistant_start();
    let wmax = pb.w.iter().copied().fold(0.0, f64::max);
    let wmin = pb.w.iter().copied().fold(f64::INFINITY, f64::min);
    let t0 = 4.0 * wmax / wmin;
    let mut state = State { pb, lay: &lay, t: t0, y: lay.from_matrix(&y0) };
    let constraints = (2 * pb.pair_count() + pb.k) as f64;
    let mut tau = constraints / t0;

    let mut best_primal = pb.primal_point(&y0)?;
    let mut best_dual: Option<(PsdCertificate, f64)> = None;
    let mut steps = 0;
    let target = (1.0 + rel_tol) * (1.0 + rel_tol);
    for _ in 0..MAX_OUTER {
        match state.center(tau) {
            Some(s) => steps += s,
            None => break,
        }
        let y = lay.to_matrix(pb.k, &state.y);
        if let Some(pp) = pb.primal_point(&y) {
            if pp.distortion_sq < best_primal.distortion_sq {
                best_primal = pp;
            }
        }
        if let Some(coeff) = state.multipliers(tau) {
            if let Some((cert, ratio)) = pb.certify(&pb.laplacian(&coeff)) {
                if best_dual.as_ref().map_or(true, |(_, r)| ratio > *r) {
                    best_dual = Some((cert, ratio));
                }
            }
        }
        let lo_sq = best_dual.as_ref().map_or(1.0, |(_, r)| r.max(1.0));
        if best_primal.distortion_sq <= target * lo_sq {
            return Some(BarrierOutcome { primal: best_primal, dual: best_dual, newton_steps: steps, closed: true });
        }
        tau *= BARRIER_GROWTH;
    }
    Some(BarrierOutcome { primal: best_primal, dual: best_dual, newton_steps: steps, closed: false })
}
