//! Strong-Wolfe line search (bracketing phase plus zoom with safeguarded
//! cubic interpolation).

use ndarray::Array1;

/// Value, directional derivative and full gradient at a trial step.
pub struct Trial {
    pub value: f64,
    pub slope: f64,
    pub grad: Array1<f64>,
}

pub struct Accepted {
    pub alpha: f64,
    pub trial: Trial,
    pub evaluations: usize,
}

const MAX_EVALS: usize = 60;

fn cubic_min(a: f64, fa: f64, ga: f64, b: f64, fb: f64, gb: f64) -> Option<f64> {
    let d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - ga * gb;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
    t.is_finite().then_some(t)
}

/// Searches along a descent direction with slope `g0 < 0` at `alpha = 0`.
/// Besides the strong Wolfe conditions, a point satisfying the curvature
/// condition whose value is within round-off of `f0` is accepted, so the
/// search still terminates when the objective is flat to working precision.
pub fn strong_wolfe<F: FnMut(f64) -> Trial>(
    mut phi: F,
    f0: f64,
    g0: f64,
    alpha0: f64,
    c1: f64,
    c2: f64,
) -> Option<Accepted> {
    if !(g0 < 0.0) {
        return None;
    }
    let flat_slack = 1e-12 * f0.abs().max(1.0);
    let armijo = |a: f64, f: f64| f <= f0 + c1 * a * g0;
    let curvature = |g: f64| g.abs() <= -c2 * g0;
    let approx_ok = |f: f64, g: f64| f <= f0 + flat_slack && curvature(g);

    let mut evals = 0;
    let mut a_prev = 0.0;
    let mut f_prev = f0;
    let mut g_prev = g0;
    let mut a = alpha0;
    let (mut lo, mut hi);
    loop {
        let t = phi(a);
        evals += 1;
        if !t.value.is_finite() {
            // Step into a non-finite region: treat as a failed Armijo test.
            lo = (a_prev, f_prev, g_prev);
            hi = (a, f64::INFINITY, f64::NAN);
            break;
        }
        if !armijo(a, t.value) || (evals > 1 && t.value >= f_prev) {
            if approx_ok(t.value, t.slope) {
                return Some(Accepted { alpha: a, trial: t, evaluations: evals });
            }
            lo = (a_prev, f_prev, g_prev);
            hi = (a, t.value, t.slope);
            break;
        }
        if curvature(t.slope) {
            return Some(Accepted { alpha: a, trial: t, evaluations: evals });
        }
        if t.slope >= 0.0 {
            lo = (a, t.value, t.slope);
            hi = (a_prev, f_prev, g_prev);
            break;
        }
        if evals >= MAX_EVALS {
            return None;
        }
        a_prev = a;
        f_prev = t.value;
        g_prev = t.slope;
        a *= 2.0;
    }
    // Zoom: `lo` always satisfies Armijo with the lowest value seen.
    while evals < MAX_EVALS {
        let (al, fl, gl) = lo;
        let (ah, fh, gh) = hi;
        let width = (ah - al).abs();
        if width < 1e-16 * al.abs().max(1.0) {
            break;
        }
        let mut a = if fh.is_finite() && gh.is_finite() {
            cubic_min(al, fl, gl, ah, fh, gh).unwrap_or(0.5 * (al + ah))
        } else {
            0.5 * (al + ah)
        };
        let (mn, mx) = if al < ah { (al, ah) } else { (ah, al) };
        if !(a > mn + 0.1 * width && a < mx - 0.1 * width) {
            a = 0.5 * (al + ah);
        }
        let t = phi(a);
        evals += 1;
        if t.value.is_finite() && (t.value - fl).abs() <= flat_slack {
            // Values are indistinguishable from round-off: bisect on the slope.
            if curvature(t.slope) {
                return Some(Accepted { alpha: a, trial: t, evaluations: evals });
            }
            if t.slope * (ah - al) >= 0.0 {
                hi = (a, t.value, t.slope);
            } else {
                lo = (a, t.value, t.slope);
            }
            continue;
        }
        if !t.value.is_finite() || !armijo(a, t.value) || t.value >= fl {
            if t.value.is_finite() && approx_ok(t.value, t.slope) {
                return Some(Accepted { alpha: a, trial: t, evaluations: evals });
            }
            hi = (a, t.value, t.slope);
        } else {
            if curvature(t.slope) {
                return Some(Accepted { alpha: a, trial: t, evaluations: evals });
            }
            if t.slope * (ah - al) >= 0.0 {
                hi = lo;
            }
            lo = (a, t.value, t.slope);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn quadratic_exact_step() {
        // phi(a) = (a - 3)^2: slope -6 at 0.
        let r = strong_wolfe(
            |a| Trial {
                value: (a - 3.0) * (a - 3.0),
                slope: 2.0 * (a - 3.0),
                grad: array![2.0 * (a - 3.0)],
            },
            9.0,
            -6.0,
            1.0,
            1e-4,
            0.1,
        )
        .unwrap();
        assert!((r.alpha - 3.0).abs() < 0.3 * 3.0);
        assert!(r.trial.slope.abs() <= 0.6);
    }

    #[test]
    fn rejects_ascent_direction() {
        assert!(strong_wolfe(|_| unreachable!(), 0.0, 1.0, 1.0, 1e-4, 0.9).is_none());
    }
}
