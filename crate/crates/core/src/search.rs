//! Projected subgradient search over the trace-one slice of the certificate
//! cone, `{Q = V S V^T : S PSD, trace S = 1}`.
//!
//! Both the certificate ratio and the gap objective are positively
//! homogeneous of degree zero in `Q`, so optimizing over this slice loses
//! nothing.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{mean_zero_basis, project_simplex, reassemble, sym_eigen, symmetrize};

pub(crate) struct Spectraplex {
    basis: DMatrix<f64>,
}

/// Schedule for one local run: geometric step decay from `step0` to `step_min`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Schedule {
    pub iterations: usize,
    pub step0: f64,
    pub step_min: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self { iterations: 1500, step0: 0.25, step_min: 1e-7 }
    }
}

impl Spectraplex {
    pub fn new(n: usize) -> Self {
        Self { basis: mean_zero_basis(n) }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn lift(&self, s: &DMatrix<f64>) -> DMatrix<f64> {
        &self.basis * s * self.basis.transpose()
    }

    pub fn reduce(&self, q: &DMatrix<f64>) -> DMatrix<f64> {
        self.basis.transpose() * q * &self.basis
    }

    /// Frobenius-nearest PSD matrix with unit trace.
    pub fn project(&self, s: &DMatrix<f64>) -> DMatrix<f64> {
        let (vals, vecs) = sym_eigen(&symmetrize(s));
        let clipped = project_simplex(vals.as_slice(), 1.0);
        reassemble(&vecs, clipped.into_iter())
    }

    /// Normalize any cone element into the slice; `None` for zero.
    pub fn from_cone(&self, q: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        let s = self.reduce(q);
        let tr = s.trace();
        (tr > 0.0).then(|| self.project(&(s / tr)))
    }

    /// Random start `B B^T / trace` with `B` Gaussian of random rank.
    pub fn random_start<R: Rng>(&self, rng: &mut R) -> DMatrix<f64> {
        let k = self.dim();
        let rank = rng.gen_range(1..=k);
        let b = DMatrix::from_fn(k, rank, |_, _| rng.sample::<f64, _>(StandardNormal));
        let s = &b * b.transpose();
        let tr = s.trace();
        s / tr
    }

    /// Maximize `objective` (value and gradient w.r.t. `Q`) from `start`.
    /// Returns the best slice point seen and its value.
    pub fn maximize<F>(&self, start: DMatrix<f64>, schedule: Schedule, objective: F) -> (DMatrix<f64>, f64)
    where
        F: Fn(&DMatrix<f64>) -> Option<(f64, DMatrix<f64>)>,
    {
        let mut s = start;
        let mut best = (s.clone(), f64::NEG_INFINITY);
        let decay = (schedule.step_min / schedule.step0).powf(1.0 / schedule.iterations.max(1) as f64);
        let mut step = schedule.step0;
        for _ in 0..schedule.iterations {
            let q = self.lift(&s);
            let Some((value, grad_q)) = objective(&q) else { break };
            if value > best.1 {
                best = (s.clone(), value);
            }
            let g = self.reduce(&symmetrize(&grad_q));
            let norm = g.norm();
            if !(norm > 0.0) || !norm.is_finite() {
                break;
            }
            s = self.project(&(&s + g * (step / norm)));
            step *= decay;
        }
        let q = self.lift(&s);
        if let Some((value, _)) = objective(&q) {
            if value > best.1 {
                best = (s, value);
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_start_is_in_slice() {
        let sp = Spectraplex::new(5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = sp.random_start(&mut rng);
        assert!((s.trace() - 1.0).abs() < 1e-12);
        let (vals, _) = sym_eigen(&s);
        assert!(vals[0] > -1e-14);
        let q = sp.lift(&s);
        assert!(q.row_sum().amax() < 1e-12);
    }

    #[test]
    fn maximizes_linear_functional() {
        // max <C, S> over the spectraplex is the top eigenvalue of C.
        let sp = Spectraplex::new(4);
        let c = DMatrix::from_fn(3, 3, |i, j| if i == j { [1.0, 3.0, 2.0][i] } else { 0.0 });
        let lifted = sp.lift(&c);
        let (_, v) = sp.maximize(DMatrix::identity(3, 3) / 3.0, Schedule::default(), |q| {
            Some(((q.component_mul(&lifted)).sum(), lifted.clone()))
        });
        assert!((v - 3.0).abs() < 1e-6, "{v}");
    }
}
