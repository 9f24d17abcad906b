//! Quasi-Newton acceleration of the EM map.
//!
//! The negative log posterior is split as `L = C + R`, where `C` is the
//! quadratic complete-data surrogate built in the E-step (Hessian `A`) and
//! `R` the remainder. `B` tracks the Hessian of `R` through symmetric rank-one
//! secant updates. Following Lange's construction, the change in the remainder
//! gradient between consecutive iterates is `g_k - g_{k-1} - A_{k-1} s`, using
//! `grad L(beta) = grad C(beta | beta)` at every iterate.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linsys::{cholesky, cholesky_solve};
use crate::model::{Dataset, ModelSpec};

/// Smallest shrink factor tried before falling back to the plain EM step.
pub const MIN_SHRINK: f64 = 1.0 / (1u64 << 30) as f64;
/// EM iterations run before the first accelerated proposal.
pub const WARMUP_ITERS: usize = 2;
/// Consecutive proposals with `A + B` indefinite after which `B` is
/// discarded as stale.
pub const INDEFINITE_RESET: usize = 10;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccelDiagnostics {
    pub updates: usize,
    pub skipped_updates: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub resets: usize,
}

#[derive(Debug, Clone)]
pub struct QuasiNewtonState {
    /// Approximation to the remainder Hessian.
    pub b: Array2<f64>,
    pub prev_beta: Option<Array1<f64>>,
    pub prev_grad: Option<Array1<f64>>,
    prev_hessian: Option<Array2<f64>>,
    /// Scale applied to `b` in the last accepted proposal.
    pub shrink: f64,
    /// Number of surrogate evaluations since the last reset.
    pub observed: usize,
    /// Consecutive proposals where the unshrunk `A + B` failed to factor.
    indefinite_streak: usize,
    pub diagnostics: AccelDiagnostics,
}

impl QuasiNewtonState {
    pub fn new(dim: usize) -> Self {
        Self {
            b: Array2::zeros((dim, dim)),
            prev_beta: None,
            prev_grad: None,
            prev_hessian: None,
            shrink: 1.0,
            observed: 0,
            indefinite_streak: 0,
            diagnostics: AccelDiagnostics::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    /// Forgets all curvature information (e.g. after the active set changed).
    pub fn reset(&mut self, dim: usize) {
        let diagnostics = std::mem::take(&mut self.diagnostics);
        *self = Self::new(dim);
        self.diagnostics = diagnostics;
        self.diagnostics.resets += 1;
    }

    /// `B <- B + r r' / (r's)`, skipped when `|r's| < 1e-8 |r| |s|`.
    /// Returns whether the update was applied.
    pub fn rank_one_update(&mut self, s: ArrayView1<f64>, r: ArrayView1<f64>) -> bool {
        let rs = r.dot(&s);
        let rn = r.dot(&r).sqrt();
        let sn = s.dot(&s).sqrt();
        if rs.abs() < 1e-8 * rn * sn || rn == 0.0 || !rs.is_finite() {
            self.diagnostics.skipped_updates += 1;
            return false;
        }
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                self.b[[i, j]] += r[i] * r[j] / rs;
            }
        }
        self.diagnostics.updates += 1;
        true
    }

    /// Records the surrogate at a new iterate and applies the secant update
    /// from the previous one, if any.
    pub fn observe(&mut self, beta: ArrayView1<f64>, grad: ArrayView1<f64>, hessian: ArrayView2<f64>) {
        if let (Some(pb), Some(pg), Some(ph)) = (&self.prev_beta, &self.prev_grad, &self.prev_hessian) {
            let s = &beta - pb;
            if s.iter().any(|v| *v != 0.0) {
                let y = &grad - pg - ph.dot(&s);
                let r = &y - &self.b.dot(&s);
                self.rank_one_update(s.view(), r.view());
            }
        }
        self.prev_beta = Some(beta.to_owned());
        self.prev_grad = Some(grad.to_owned());
        self.prev_hessian = Some(hessian.to_owned());
        self.observed += 1;
    }

    pub fn ready(&self) -> bool {
        self.observed > WARMUP_ITERS && self.diagnostics.updates > 0
    }
}

/// The complete-data Hessian at the current moments: the M-step matrix.
pub fn complete_hessian(
    data: &Dataset,
    active: &[usize],
    omega: ArrayView1<f64>,
    lambda: ArrayView1<f64>,
    spec: &ModelSpec,
) -> Result<Array2<f64>> {
    Ok(crate::linsys::assemble_mstep(data, active, omega, lambda, spec)?.a)
}

/// Outcome of one accelerated proposal.
#[derive(Debug, Clone)]
pub struct AccelProposal {
    pub beta: Array1<f64>,
    pub objective: f64,
    pub shrink: f64,
}

/// Tries `beta - (A + shrink B)^{-1} g` for `shrink = 1, 1/2, ...`; a
/// proposal is accepted when `A + shrink B` factors (positive definite) and
/// its objective is strictly below `target` (the EM step's value). Returns
/// `None` when the shrink underflows `MIN_SHRINK`, or when `A + B` has been
/// indefinite for `INDEFINITE_RESET` proposals in a row, in which case `B` is
/// reset and the caller keeps the EM step.
pub fn accel_step<F: FnMut(ArrayView1<f64>) -> f64>(
    qn: &mut QuasiNewtonState,
    beta: ArrayView1<f64>,
    a: ArrayView2<f64>,
    grad: ArrayView1<f64>,
    target: f64,
    mut objective: F,
) -> Option<AccelProposal> {
    let mut shrink = 1.0;
    let mut full = cholesky(&(&a + &qn.b), 0.0);
    if full.is_none() {
        qn.indefinite_streak += 1;
        if qn.indefinite_streak >= INDEFINITE_RESET {
            let dim = qn.dim();
            qn.reset(dim);
            qn.diagnostics.rejected_steps += 1;
            return None;
        }
    } else {
        qn.indefinite_streak = 0;
    }
    while shrink >= MIN_SHRINK {
        let factor = match full.take() {
            Some(l) => Some(l),
            None if shrink < 1.0 => cholesky(&(&a + &(&qn.b * shrink)), 0.0),
            None => None,
        };
        if let Some(l) = factor {
            let step = cholesky_solve(&l, grad);
            let cand = &beta - &step;
            if cand.iter().all(|v| v.is_finite()) {
                let obj = objective(cand.view());
                if obj < target {
                    qn.shrink = shrink;
                    qn.diagnostics.accepted_steps += 1;
                    return Some(AccelProposal {
                        beta: cand,
                        objective: obj,
                        shrink,
                    });
                }
            }
        }
        shrink *= 0.5;
    }
    qn.diagnostics.rejected_steps += 1;
    None
}
