use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView1, Axis};

use super::{inf_norm, BaselineConfig, BaselineResult, BaselineStatus};
use crate::engine::objective;
use crate::error::{Error, Result};
use crate::families::{likelihood::logistic_cdf, LikelihoodFamily, LikelihoodKind, PenaltyFamily, PenaltyKind};
use crate::linsys::{cholesky, cholesky_solve};
use crate::model::{Dataset, ModelSpec};

/// Consecutive objective increases that count as divergence.
const RISING_LIMIT: usize = 5;
/// Floor on `|beta - mu|` in the local quadratic approximation.
const LQA_FLOOR: f64 = 1e-8;

/// Plain Cholesky solve with no jitter. The system counts as numerically
/// singular when the 1-norm reciprocal condition number
/// `1 / (|A|_1 |A^{-1}|_1)` is below machine epsilon, the usual test of
/// dense solvers; the inverse is formed column by column from the factor.
pub fn solve_strict(a: &Array2<f64>, rhs: ArrayView1<f64>) -> Option<Array1<f64>> {
    if a.iter().chain(rhs.iter()).any(|v| !v.is_finite()) {
        return None;
    }
    let l = cholesky(a, 0.0)?;
    if !(rcond_1norm(a, &l) >= f64::EPSILON) {
        return None;
    }
    let x = cholesky_solve(&l, rhs);
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn col_norm_1(m: &Array2<f64>) -> f64 {
    m.columns().into_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Reciprocal 1-norm condition number of `a` given its Cholesky factor.
pub fn rcond_1norm(a: &Array2<f64>, l: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut inv_norm = 0.0_f64;
    let mut e = Array1::<f64>::zeros(n);
    for j in 0..n {
        e.fill(0.0);
        e[j] = 1.0;
        let col = cholesky_solve(l, e.view());
        inv_norm = inv_norm.max(col.iter().map(|v| v.abs()).sum());
    }
    1.0 / (col_norm_1(a) * inv_norm)
}

/// How the scoring weights and working response are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Arithmetic {
    /// `mu (1 - mu)` from `exp(-|eta|)` and the response entered as
    /// `w (eta - o) + (y - mu)`, as in library GLM fitters.
    Safeguarded,
    /// `mu (1 - mu)` with `1 - mu` by subtraction and
    /// `z = eta + (y - mu) / w`. Breaks down once a fitted probability rounds
    /// to one (`eta > 36.7`).
    Textbook,
}

/// Fisher-scoring weights `mu_i (1 - mu_i)` at linear predictor `eta`.
pub fn irls_weights(eta: ArrayView1<f64>) -> Array1<f64> {
    eta.mapv(|e| {
        let t = (-e.abs()).exp();
        t / ((1.0 + t) * (1.0 + t))
    })
}

/// Local-quadratic prior precision `g'(b) / (b - mu)` (plus the skew term,
/// so that `q (b - mu) - kappa / tau^2 = g'(b)`) with `|b - mu|` floored at
/// `LQA_FLOOR`. Unlike the EM moments it is not capped.
fn lqa_precision(pen: &PenaltyFamily, b: f64) -> f64 {
    let tau = pen.tau();
    let w = (b - pen.mu_beta()).abs().max(LQA_FLOOR);
    match pen.kind() {
        PenaltyKind::Flat => 0.0,
        PenaltyKind::Ridge => 1.0 / (tau * tau),
        PenaltyKind::Lasso => 1.0 / (tau * w),
        PenaltyKind::Hyperbolic { alpha, .. } => alpha / (tau * w),
        PenaltyKind::DoublePareto { a } => (1.0 + a) / (w * (a * tau + w)),
    }
}

/// Classic IRLS for unpenalized logistic regression. No trust region or step
/// control: divergence (five consecutive objective increases or a non-finite
/// iterate) and singular systems are reported through the status.
pub fn irls_logistic(data: &Dataset, config: &BaselineConfig, beta0: ArrayView1<f64>) -> Result<BaselineResult> {
    let spec = ModelSpec::new(LikelihoodFamily::logistic(), PenaltyFamily::flat());
    irls(&spec, data, config, beta0, Arithmetic::Safeguarded)
}

/// IRLS with the penalty's local quadratic approximation added to the
/// weighted least-squares system at every iteration, in textbook arithmetic.
/// Systems are solved with [`solve_strict`], without the jitter ladder the EM
/// solver uses.
pub fn irls_penalized(
    spec: &ModelSpec,
    data: &Dataset,
    config: &BaselineConfig,
    beta0: ArrayView1<f64>,
) -> Result<BaselineResult> {
    irls(spec, data, config, beta0, Arithmetic::Textbook)
}

fn irls(
    spec: &ModelSpec,
    data: &Dataset,
    config: &BaselineConfig,
    beta0: ArrayView1<f64>,
    arithmetic: Arithmetic,
) -> Result<BaselineResult> {
    if spec.likelihood.kind() != LikelihoodKind::Logistic {
        return Err(Error::InvalidParameter("IRLS baselines are implemented for logistic likelihoods".into()));
    }
    spec.check(data)?;
    if beta0.len() != data.p() {
        return Err(Error::DimensionMismatch(format!("start has length {} for {} columns", beta0.len(), data.p())));
    }
    let start = Instant::now();
    let x = data.x();
    let y01 = data.y().mapv(|v| 0.5 * (v + 1.0));
    let pen = &spec.penalty;
    let t2 = pen.tau() * pen.tau();
    let p = data.p();

    let mut beta = beta0.to_owned();
    let mut obj = objective(spec, data, beta.view());
    let mut rising = 0;
    let mut iterations = 0;
    let mut max_grad;
    let status = loop {
        let eta = data.linear_predictor(beta.view());
        let mu = eta.mapv(logistic_cdf);
        let w = match arithmetic {
            Arithmetic::Safeguarded => irls_weights(eta.view()),
            Arithmetic::Textbook => mu.mapv(|m| m * (1.0 - m)),
        };
        let q = Array1::from_shape_fn(p, |j| if spec.is_penalized(j) { lqa_precision(pen, beta[j]) } else { 0.0 });
        let mut grad = x.t().dot(&(&mu - &y01));
        for j in 0..p {
            if spec.is_penalized(j) {
                grad[j] += q[j] * (beta[j] - pen.mu_beta()) - pen.kappa_beta() / t2;
            }
        }
        max_grad = inf_norm(grad.view());
        if !max_grad.is_finite() {
            break BaselineStatus::Diverged;
        }
        if max_grad < config.tol_grad {
            break BaselineStatus::Converged;
        }
        if iterations >= config.max_iter {
            break BaselineStatus::MaxIter;
        }
        // Right-hand side X^T W z for the working response z.
        let offsets = data.offsets();
        let u = Array1::from_shape_fn(data.n(), |i| {
            let e = eta[i] - offsets.map_or(0.0, |o| o[i]);
            match arithmetic {
                Arithmetic::Safeguarded => w[i] * e + (y01[i] - mu[i]),
                Arithmetic::Textbook => w[i] * (e + (y01[i] - mu[i]) / w[i]),
            }
        });
        let mut xw = x.to_owned();
        for (mut row, &wi) in xw.axis_iter_mut(Axis(0)).zip(w.iter()) {
            let r = wi.sqrt();
            row.mapv_inplace(|v| v * r);
        }
        let mut a = xw.t().dot(&xw);
        let mut rhs = x.t().dot(&u);
        for j in 0..p {
            if spec.is_penalized(j) {
                a[[j, j]] += q[j];
                rhs[j] += q[j] * pen.mu_beta() + pen.kappa_beta() / t2;
            }
        }
        let Some(next) = solve_strict(&a, rhs.view()) else {
            break BaselineStatus::Singular;
        };
        iterations += 1;
        if next.iter().any(|v| !v.is_finite()) {
            beta = next;
            break BaselineStatus::Diverged;
        }
        let next_obj = objective(spec, data, next.view());
        beta = next;
        if !next_obj.is_finite() {
            obj = next_obj;
            break BaselineStatus::Diverged;
        }
        rising = if next_obj > obj { rising + 1 } else { 0 };
        obj = next_obj;
        if rising >= RISING_LIMIT {
            break BaselineStatus::Diverged;
        }
    };
    Ok(BaselineResult {
        beta,
        iterations,
        wall_time: start.elapsed().as_secs_f64(),
        status,
        objective: obj,
        max_grad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn weights_at_zero_are_one_quarter() {
        assert_eq!(irls_weights(array![0.0, 0.0, 0.0].view()), array![0.25, 0.25, 0.25]);
    }

    #[test]
    fn lqa_matches_derivative() {
        let pen = PenaltyFamily::double_pareto(2.0, 0.7).unwrap();
        for b in [-2.0, -0.1, 0.3, 4.0] {
            assert!((lqa_precision(&pen, b) * b - pen.deriv(b).unwrap()).abs() < 1e-12);
        }
        let pen = PenaltyFamily::hyperbolic(1.5, 0.5, 2.0).unwrap();
        let t2 = 4.0;
        for b in [-2.0, 0.3] {
            let g = lqa_precision(&pen, b) * b - pen.kappa_beta() / t2;
            assert!((g - pen.deriv(b).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn rcond_of_diagonal() {
        let a = array![[4.0, 0.0], [0.0, 0.5]];
        let l = cholesky(&a, 0.0).unwrap();
        assert!((rcond_1norm(&a, &l) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn strict_solve_flags_ill_conditioning() {
        let a = array![[1.0, 0.0], [0.0, 1e-17]];
        assert!(solve_strict(&a, array![1.0, 1.0].view()).is_none());
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let x = solve_strict(&a, array![1.0, 2.0].view()).unwrap();
        assert!((&a.dot(&x) - &array![1.0, 2.0]).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn single_point_ridge() {
        // One observation x = 1, y = +1, ridge tau = 1: minimize log(1+e^-b) + b^2/2.
        let d = Dataset::new(array![[1.0]], array![1.0], crate::model::Task::Classification).unwrap();
        let spec = ModelSpec::new(LikelihoodFamily::logistic(), PenaltyFamily::ridge(1.0).unwrap());
        let r = irls_penalized(&spec, &d, &BaselineConfig::default(), array![0.0].view()).unwrap();
        assert!(r.converged());
        let b = r.beta[0];
        assert!((-logistic_cdf(-b) + b).abs() < 1e-6);
    }
}
