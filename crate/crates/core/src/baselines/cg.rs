use std::time::Instant;

use ndarray::{Array1, ArrayView1};

use super::line_search::{strong_wolfe, Trial};
use super::{inf_norm, BaselineConfig, BaselineResult, BaselineStatus};

/// Polak-Ribiere (PR+) nonlinear conjugate gradient with a strong-Wolfe line
/// search (`c1 = 1e-4`, `c2 = 0.1`), restarting along the steepest descent
/// direction every `p` iterations or when the direction stops descending.
pub fn nonlinear_cg_minimize<F>(mut fg: F, config: &BaselineConfig, beta0: ArrayView1<f64>) -> BaselineResult
where
    F: FnMut(ArrayView1<f64>) -> (f64, Array1<f64>),
{
    let start = Instant::now();
    let p = beta0.len();
    let mut x = beta0.to_owned();
    let (mut f, mut g) = fg(x.view());
    let mut d = -&g;
    let mut prev_alpha_slope: Option<f64> = None;
    let mut since_restart = 0;
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
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            d = -&g;
            slope = g.dot(&d);
            since_restart = 0;
        }
        // Initial step from the previous decrease, as in Nocedal and Wright.
        let alpha0 = match prev_alpha_slope {
            Some(prev) => (prev / slope).clamp(1e-10, 1e10),
            None => (1.0 / inf_norm(g.view())).min(1.0),
        };
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
            0.1,
        ) else {
            if since_restart > 0 {
                // Retry once along steepest descent before giving up.
                d = -&g;
                since_restart = 0;
                prev_alpha_slope = None;
                continue;
            }
            break;
        };
        iterations += 1;
        let (mut alpha, mut trial) = (acc.alpha, acc.trial);
        // Secant refinement on the slope; exact when the objective is
        // quadratic along the line, which conjugacy relies on.
        if trial.slope.abs() > 1e-3 * slope.abs() && slope != trial.slope {
            let a_s = alpha * slope / (slope - trial.slope);
            if a_s > 0.0 && a_s.is_finite() {
                let xa = &x + &(&d * a_s);
                let (fa, ga) = fg(xa.view());
                let sa = ga.dot(&d);
                if fa <= trial.value && sa.abs() <= 0.1 * slope.abs() {
                    alpha = a_s;
                    trial = Trial { value: fa, slope: sa, grad: ga };
                }
            }
        }
        prev_alpha_slope = Some(alpha * slope);
        x = &x + &(&d * alpha);
        f = trial.value;
        let g_new = trial.grad;
        since_restart += 1;
        let beta_pr = (g_new.dot(&(&g_new - &g)) / g.dot(&g)).max(0.0);
        d = if since_restart >= p || !beta_pr.is_finite() {
            since_restart = 0;
            -&g_new
        } else {
            &d * beta_pr - &g_new
        };
        g = g_new;
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
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn quadratic_in_p_plus_one_iterations() {
        let a = array![[3.0, 1.0], [1.0, 2.0]];
        let b = array![1.0, -1.0];
        let r = nonlinear_cg_minimize(
            |x| (0.5 * x.dot(&a.dot(&x)) - b.dot(&x), a.dot(&x) - &b),
            &BaselineConfig { tol_grad: 1e-8, max_iter: 100 },
            array![5.0, -3.0].view(),
        );
        assert!(r.converged(), "{r:?}");
        assert!(r.iterations <= 3, "{} iterations", r.iterations);
        assert!((r.beta[0] - 0.6).abs() < 1e-8 && (r.beta[1] + 0.8).abs() < 1e-8);
    }

    #[test]
    fn rosenbrock_from_classic_start() {
        let r = nonlinear_cg_minimize(
            super::super::bfgs::tests::rosenbrock,
            &BaselineConfig { tol_grad: 1e-6, max_iter: 20000 },
            array![-1.2, 1.0].view(),
        );
        assert!(r.converged(), "{r:?}");
        assert!((r.beta[0] - 1.0).abs() < 1e-5);
    }
}
