//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Only the verification oracles and the scalar posterior-mean code integrate
//! anything; the fitting algorithms never call into this module.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and limits for one adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// Number of equal pieces the (transformed) interval is cut into before
    /// adaptive refinement starts.
    pub initial_pieces: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            max_intervals: 4000,
            initial_pieces: 8,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (k, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kron += w * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    let kron = kron * half;
    let gauss = gauss * half;
    (kron, (kron - gauss).abs())
}

/// Integrates `f` over the finite interval `[a, b]`, with optional interior
/// break points where the integrand is known to have a kink.
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::IntegrationFailure("non-finite limits".into()));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts: Vec<f64> = vec![lo];
    let pieces = opts.initial_pieces.max(1);
    for k in 1..pieces {
        cuts.push(lo + (hi - lo) * k as f64 / pieces as f64);
    }
    cuts.extend(breaks.iter().copied().filter(|&x| x > lo && x < hi));
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in cuts.windows(2) {
        let (value, error) = kronrod(&mut f, w[0], w[1]);
        total += value;
        total_err += error;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    while total_err > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if !total.is_finite() {
            return Err(Error::IntegrationFailure("integrand is not finite".into()));
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::IntegrationFailure(format!(
                "subdivision limit reached (estimate {total:e}, error {total_err:e})"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            heap.push(worst);
            break;
        }
        let (v1, e1) = kronrod(&mut f, worst.a, mid);
        let (v2, e2) = kronrod(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    if !value.is_finite() {
        return Err(Error::IntegrationFailure("integrand is not finite".into()));
    }
    Ok(QuadResult {
        value: sign * value,
        error,
        intervals: heap.len(),
    })
}

pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult> {
    integrate_with_breaks(f, a, b, &[], opts)
}

/// Integrates over the whole real line using `x = center + scale * t / (1 - t^2)`.
/// `breaks` are given in the original `x` coordinates.
pub fn integrate_real_line<F: FnMut(f64) -> f64>(
    mut f: F,
    center: f64,
    scale: f64,
    breaks: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult> {
    if !(scale > 0.0) {
        return Err(Error::IntegrationFailure("scale must be positive".into()));
    }
    // Inverse of u = t / (1 - t^2): t = 2u / (1 + sqrt(1 + 4u^2)).
    let to_t = |x: f64| {
        let u = (x - center) / scale;
        2.0 * u / (1.0 + (1.0 + 4.0 * u * u).sqrt())
    };
    let tb: Vec<f64> = breaks.iter().map(|&x| to_t(x)).collect();
    integrate_with_breaks(
        |t| {
            let d = 1.0 - t * t;
            let x = center + scale * t / d;
            let jac = scale * (1.0 + t * t) / (d * d);
            let v = f(x) * jac;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        -1.0,
        1.0,
        &tb,
        opts,
    )
}

/// Integrates over `(0, inf)` through the substitution `v = exp(u)`, with
/// `u` itself mapped onto a finite interval around `ln(center)`.
pub fn integrate_positive<F: FnMut(f64) -> f64>(
    mut f: F,
    center: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    let c = if center > 0.0 && center.is_finite() {
        center.ln()
    } else {
        0.0
    };
    integrate_real_line(
        |u| {
            let v = u.exp();
            if v == 0.0 || !v.is_finite() {
                0.0
            } else {
                f(v) * v
            }
        },
        c,
        2.0,
        &[],
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, &QuadOptions::default()).unwrap();
        assert!((r.value - 0.0).abs() < 1e-13);
        let r = integrate(|x| x * x, 0.0, 3.0, &QuadOptions::default()).unwrap();
        assert!((r.value - 9.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_over_real_line() {
        let opts = QuadOptions::with_tol(1e-13, 1e-13);
        let r = integrate_real_line(|x| (-0.5 * x * x).exp(), 3.0, 1.0, &[], &opts).unwrap();
        let exact = (2.0 * std::f64::consts::PI).sqrt();
        assert!((r.value - exact).abs() < 1e-11, "{}", r.value);
    }

    #[test]
    fn kink_with_break_point() {
        let opts = QuadOptions::with_tol(1e-12, 1e-12);
        let r = integrate_real_line(|x| (-(x - 1.0).abs()).exp(), 0.0, 1.0, &[1.0], &opts).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn positive_half_line_with_log_substitution() {
        let opts = QuadOptions::with_tol(1e-13, 1e-12);
        // Gamma(3) = 2
        let r = integrate_positive(|v| v * v * (-v).exp(), 1.0, &opts).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10);
        // integrable singularity at 0: Gamma(1/2) = sqrt(pi)
        let r = integrate_positive(|v| v.powf(-0.5) * (-v).exp(), 1.0, &opts).unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let r = integrate(|x| x, 1.0, 0.0, &QuadOptions::default()).unwrap();
        assert!((r.value + 0.5).abs() < 1e-14);
    }
}
