use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView1};

use super::line_search::{strong_wolfe, Trial};
use super::{inf_norm, BaselineConfig, BaselineResult, BaselineStatus};

/// Dense BFGS on the inverse Hessian with a strong-Wolfe line search
/// (`c1 = 1e-4`, `c2 = 0.9`). A line-search failure ends the run with
/// status `MaxIter`.
pub fn bfgs_minimize<F>(mut fg: F, config: &BaselineConfig, beta0: ArrayView1<f64>) -> BaselineResult
where
    F: FnMut(ArrayView1<f64>) -> (f64, Array1<f64>),
{
    let start = Instant::now();
    let p = beta0.len();
    let mut x = beta0.to_owned();
    let (mut f, mut g) = fg(x.view());
    let mut h = Array2::<f64>::eye(p);
    let mut first = true;
    let mut iterations = 0;
    let mut status = BaselineStatus::MaxIter;
    if !f.is_finite() {
        status = BaselineStatus::Diverged;
    }
    while status == BaselineStatus::MaxIter {
        if inf_norm(g.view()) < config.tol_grad {
            status = BaselineStatus::Converged;
            break;
        }
        if iterations >= config.max_iter {
            break;
        }
        let mut d = -h.dot(&g);
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            h = Array2::eye(p);
            d = -&g;
            slope = g.dot(&d);
        }
        let alpha0 = if first { (1.0 / inf_norm(g.view())).min(1.0) } else { 1.0 };
        let Some(acc) = strong_wolfe(
            |a| {
                let xa = &x + &(&d * a);
                let (fa, ga) = fg(xa.view());
                Trial {
                    value: fa,
                    slope: ga.dot(&d),
                    grad: ga,
                }
            },
            f,
            slope,
            alpha0,
            1e-4,
            0.9,
        ) else {
            break;
        };
        iterations += 1;
        let s = &d * acc.alpha;
        let y = &acc.trial.grad - &g;
        x = &x + &s;
        f = acc.trial.value;
        g = acc.trial.grad;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.dot(&s).sqrt() * y.dot(&y).sqrt() {
            if first {
                h *= sy / y.dot(&y);
                first = false;
            }
            // H <- (I - rho s y') H (I - rho y s') + rho s s'
            let rho = 1.0 / sy;
            let hy = h.dot(&y);
            let yhy = y.dot(&hy);
            for i in 0..p {
                for j in 0..p {
                    h[[i, j]] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
    }
    BaselineResult {
        max_grad: inf_norm(g.view()),
        beta: x,
        iterations,
        wall_time: start.elapsed().as_secs_f64(),
        status,
        objective: f,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use ndarray::array;

    pub(crate) fn rosenbrock(x: ArrayView1<f64>) -> (f64, Array1<f64>) {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = array![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        (f, g)
    }

    #[test]
    fn rosenbrock_from_classic_start() {
        let r = bfgs_minimize(rosenbrock, &BaselineConfig::default(), array![-1.2, 1.0].view());
        assert!(r.converged(), "{r:?}");
        assert!(r.max_grad < 1e-6);
        assert!((r.beta[0] - 1.0).abs() < 1e-5 && (r.beta[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn quadratic() {
        let a = array![[3.0, 1.0], [1.0, 2.0]];
        let b = array![1.0, -1.0];
        let r = bfgs_minimize(
            |x| (0.5 * x.dot(&a.dot(&x)) - b.dot(&x), a.dot(&x) - &b),
            &BaselineConfig::default(),
            array![5.0, 5.0].view(),
        );
        assert!(r.converged());
        assert!((r.beta[0] - 0.6).abs() < 1e-6 && (r.beta[1] + 0.8).abs() < 1e-6);
    }
}
