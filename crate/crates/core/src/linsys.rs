//! Symmetric positive-definite solves for the M-step systems.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::model::{Dataset, ModelSpec};

const JITTER_LADDER: [f64; 6] = [0.0, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4];
/// A pivot this small relative to the original diagonal counts as a failure.
const PIVOT_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct SpdSystem {
    pub a: Array2<f64>,
    pub rhs: Array1<f64>,
}

impl SpdSystem {
    pub fn new(a: Array2<f64>, rhs: Array1<f64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c || r != rhs.len() {
            return Err(Error::DimensionMismatch(format!(
                "system matrix {r}x{c} with right-hand side of length {}",
                rhs.len()
            )));
        }
        Ok(Self { a, rhs })
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn solve(&self) -> Result<Array1<f64>> {
        solve_spd(self)
    }
}

/// Lower Cholesky factor of `a + jitter * diag(a)`, or `None` if a pivot
/// collapses relative to the original diagonal.
pub fn cholesky(a: &Array2<f64>, jitter: f64) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let ajj = a[[j, j]];
        let mut d = ajj * (1.0 + jitter);
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !d.is_finite() || d <= PIVOT_FLOOR * ajj.abs() || d <= 0.0 {
            return None;
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in (j + 1)..n {
            let mut v = a[[i, j]];
            for k in 0..j {
                v -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = v / d;
        }
    }
    Some(l)
}

/// Solves `L L' x = b` for a lower-triangular `L`.
pub fn cholesky_solve(l: &Array2<f64>, b: ArrayView1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = b.to_owned();
    for i in 0..n {
        let mut v = y[i];
        for k in 0..i {
            v -= l[[i, k]] * y[k];
        }
        y[i] = v / l[[i, i]];
    }
    for i in (0..n).rev() {
        let mut v = y[i];
        for k in (i + 1)..n {
            v -= l[[k, i]] * y[k];
        }
        y[i] = v / l[[i, i]];
    }
    y
}

fn inf_norm(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Solves the system with a jitter ladder; each rung is accepted only if the
/// residual against the original matrix passes `1e-8 (1 + |rhs|_inf)`.
pub fn solve_spd(sys: &SpdSystem) -> Result<Array1<f64>> {
    let n = sys.dim();
    if n == 0 {
        return Ok(Array1::zeros(0));
    }
    if sys.a.iter().chain(sys.rhs.iter()).any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    let tol = 1e-8 * (1.0 + inf_norm(&sys.rhs));
    for &eps in &JITTER_LADDER {
        let Some(l) = cholesky(&sys.a, eps) else {
            continue;
        };
        let mut x = cholesky_solve(&l, sys.rhs.view());
        let mut res = &sys.rhs - &sys.a.dot(&x);
        // Iterative refinement against the unjittered matrix.
        for _ in 0..3 {
            if inf_norm(&res) <= tol {
                break;
            }
            let dx = cholesky_solve(&l, res.view());
            let next = &x + &dx;
            let next_res = &sys.rhs - &sys.a.dot(&next);
            if inf_norm(&next_res) >= inf_norm(&res) {
                break;
            }
            x = next;
            res = next_res;
        }
        if x.iter().all(|v| v.is_finite()) && inf_norm(&res) <= tol {
            return Ok(x);
        }
    }
    Err(Error::SingularSystem)
}

/// Builds the M-step system over the columns in `active`:
/// regression `A = X'WX/sigma^2 + Lambda/tau^2`,
/// `rhs = X'(W(y - o) - mu_z w - kappa_z)/sigma^2 + (mu_beta lambda + kappa_beta)/tau^2`;
/// classification uses rows `y_i x_i` and `rhs = X*'(mu_z w + kappa_z - W y o)/sigma^2 + ...`.
/// `lambda` is indexed by original column; unpenalized columns ignore it.
pub fn assemble_mstep(
    data: &Dataset,
    active: &[usize],
    omega: ArrayView1<f64>,
    lambda: ArrayView1<f64>,
    spec: &ModelSpec,
) -> Result<SpdSystem> {
    let n = data.n();
    if omega.len() != n || lambda.len() != data.p() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {n} rows, {} prior weights for {} columns",
            omega.len(),
            lambda.len(),
            data.p()
        )));
    }
    let lik = &spec.likelihood;
    let pen = &spec.penalty;
    let s2 = lik.sigma() * lik.sigma();
    let (mu_z, k_z) = (lik.mu_z(), lik.kappa_z());
    let classification = lik.is_classification();
    let y = data.y();
    let offsets = data.offsets();

    // One pass builds sqrt(w) * x_i (sign-flipped for classification) and
    // accumulates the right-hand side.
    let x = data.x();
    let m = active.len();
    let mut xw = Array2::<f64>::zeros((n, m));
    let mut rhs = Array1::<f64>::zeros(m);
    for i in 0..n {
        let o = offsets.map_or(0.0, |o| o[i]);
        let w = omega[i];
        let (sign, u) = if classification {
            (y[i], (mu_z * w + k_z - w * y[i] * o) / s2)
        } else {
            (1.0, (w * (y[i] - o) - mu_z * w - k_z) / s2)
        };
        let r = (w / s2).sqrt();
        let xi = x.row(i);
        let mut row = xw.row_mut(i);
        for (k, &j) in active.iter().enumerate() {
            let v = xi[j] * sign;
            row[k] = v * r;
            rhs[k] += v * u;
        }
    }
    let mut a = xw.t().dot(&xw);
    let t2 = pen.tau() * pen.tau();
    for (k, &j) in active.iter().enumerate() {
        if !spec.is_penalized(j) {
            continue;
        }
        let l = lambda[j];
        if !l.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "infinite prior precision on active coordinate {j}"
            )));
        }
        a[[k, k]] += l / t2;
        rhs[k] += (pen.mu_beta() * l + pen.kappa_beta()) / t2;
    }
    SpdSystem::new(a, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{LikelihoodFamily, PenaltyFamily};
    use crate::model::Task;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_systems() {
        let s = SpdSystem::new(Array2::eye(3), array![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(solve_spd(&s).unwrap(), array![1.0, 2.0, 3.0]);
        let s = SpdSystem::new(array![[2.0, 0.0], [0.0, 4.0]], array![2.0, 4.0]).unwrap();
        let x = solve_spd(&s).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-15);
        assert!(SpdSystem::new(Array2::eye(2), array![1.0]).is_err());
    }

    #[test]
    fn random_spd_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = Array2::from_shape_fn((10, 10), |_| rng.random_range(-1.0..1.0));
        let a = m.t().dot(&m) + Array2::<f64>::eye(10);
        let b = Array1::from_shape_fn(10, |_| rng.random_range(-5.0..5.0));
        let x = solve_spd(&SpdSystem::new(a.clone(), b.clone()).unwrap()).unwrap();
        let r = &b - &a.dot(&x);
        assert!(r.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn singular_is_reported() {
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        let s = SpdSystem::new(a, array![1.0, 0.0]).unwrap();
        assert_eq!(solve_spd(&s), Err(Error::SingularSystem));
        let s = SpdSystem::new(Array2::zeros((2, 2)), array![1.0, 0.0]).unwrap();
        assert_eq!(solve_spd(&s), Err(Error::SingularSystem));
    }

    #[test]
    fn regression_single_point() {
        let d = Dataset::new(array![[1.0]], array![1.0], Task::Regression).unwrap();
        let spec = ModelSpec::new(LikelihoodFamily::hyperbolic(1.0, 0.0, 1.0).unwrap(), PenaltyFamily::ridge(1.0).unwrap());
        let sys = assemble_mstep(&d, &[0], array![1.0].view(), array![1.0].view(), &spec).unwrap();
        assert_eq!(sys.a, array![[2.0]]);
        assert_eq!(sys.rhs, array![1.0]);
        assert_abs_diff_eq!(solve_spd(&sys).unwrap()[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn classification_single_point() {
        let d = Dataset::new(array![[1.0]], array![1.0], Task::Classification).unwrap();
        let spec = ModelSpec::new(LikelihoodFamily::logistic(), PenaltyFamily::ridge(1.0).unwrap());
        let sys = assemble_mstep(&d, &[0], array![0.25].view(), array![1.0].view(), &spec).unwrap();
        assert_abs_diff_eq!(sys.a[[0, 0]], 1.25);
        assert_abs_diff_eq!(sys.rhs[0], 0.5);
        assert_abs_diff_eq!(solve_spd(&sys).unwrap()[0], 0.4, epsilon = 1e-15);
    }
}
