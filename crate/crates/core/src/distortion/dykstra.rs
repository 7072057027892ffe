//! Bisection on the squared distortion with feasibility decided by cyclic
//! Dykstra projections between the PSD cone and the per-pair slabs
//! `w_e <= a_e^T Y a_e <= t w_e`.
//!
//! Feasible levels yield a concrete Gram matrix (upper bound). Infeasible
//! levels are only suspected, never certified here; their accumulated slab
//! corrections are handed to the certificate search, which supplies the
//! certified lower bound.

use nalgebra::DMatrix;

use super::problem::{PrimalPoint, Problem};
use crate::linalg::project_psd;

pub(crate) enum Feasibility {
    Feasible(DMatrix<f64>),
    /// Slab corrections, oriented as off-diagonal certificate entries.
    Suspected(Vec<f64>),
}

/// Run Dykstra at level `t` for at most `max_projections` projections.
/// Also returns the number of projections used.
pub(crate) fn feasibility(
    pb: &Problem,
    t: f64,
    start: &DMatrix<f64>,
    feas_tol: f64,
    max_projections: usize,
) -> (Feasibility, usize) {
    let pairs = pb.pair_count();
    let mut y = start.clone();
    let mut psd_inc = DMatrix::zeros(pb.k, pb.k);
    let mut slab_inc = vec![0.0; pairs];
    let mut used = 0;
    // |a_e|^2 = |e_i - e_j|^2 = 2, so |a_e a_e^T|_F^2 = 4.
    let norm_sq = 4.0;
    while used + pairs + 1 <= max_projections {
        let z = &y + &psd_inc;
        y = project_psd(&z);
        psd_inc = z - &y;
        used += 1;

        let worst = (0..pairs)
            .map(|e| {
                let v = pb.gram_distance(&y, e);
                ((pb.w[e] - v).max(v - t * pb.w[e])) / pb.w[e]
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if worst <= feas_tol {
            return (Feasibility::Feasible(y), used);
        }

        for e in 0..pairs {
            let a = &pb.a[e];
            let val = pb.gram_distance(&y, e) + slab_inc[e] * norm_sq;
            let clamped = val.clamp(pb.w[e], t * pb.w[e]);
            // y <- y + (inc + (clamped - val)/4) a a^T
            let shift = slab_inc[e] + (clamped - val) / norm_sq;
            y.ger(shift, a, a, 1.0);
            slab_inc[e] -= shift;
            used += 1;
        }
    }
    (Feasibility::Suspected(slab_inc.iter().map(|v| -v).collect()), used)
}

pub(crate) struct BisectionOutcome {
    pub primal: PrimalPoint,
    pub last_infeasible: Option<Vec<f64>>,
    pub projections: usize,
}

/// Shrink `[lo_sq, primal]` by bisection until `primal <= (1+rel_tol)^2 lo`.
/// `lo_sq` here is the bisection's working bound, not a certificate.
pub(crate) fn bisect(
    pb: &Problem,
    mut lo_sq: f64,
    rel_tol: f64,
    feas_tol: f64,
    max_projections: usize,
) -> Option<BisectionOutcome> {
    let mut warm = pb.equidistant_start();
    let mut primal = pb.primal_point(&warm)?;
    let mut last_infeasible = None;
    let mut projections = 0;
    let target = (1.0 + rel_tol) * (1.0 + rel_tol);
    for _ in 0..200 {
        if primal.distortion_sq <= target * lo_sq {
            break;
        }
        let mid = (lo_sq * primal.distortion_sq).sqrt();
        let (verdict, used) = feasibility(pb, mid, &warm, feas_tol, max_projections);
        projections += used;
        match verdict {
            Feasibility::Feasible(y) => {
                if let Some(pp) = pb.primal_point(&y) {
                    if pp.distortion_sq < primal.distortion_sq {
                        primal = pp;
                    }
                }
                warm = y;
            }
            Feasibility::Suspected(mult) => {
                lo_sq = mid;
                last_infeasible = Some(mult);
            }
        }
    }
    Some(BisectionOutcome { primal, last_infeasible, projections })
}
