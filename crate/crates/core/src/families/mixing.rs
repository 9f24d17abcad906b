//! Mixing laws for the latent variance `v` (the reciprocal of the latent
//! precision `omega` or `lambda`), plus the closed-form marginal densities they
//! generate.

use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_positive, QuadOptions};

/// Improper mixing measures reached as limits of proper ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImproperTag {
    /// Flat measure on `v`: the `alpha -> |kappa|` limit of the hyperbolic
    /// family, which yields the hinge loss.
    FlatVariance,
    /// Flat prior on the coefficient itself (no mixture at all).
    FlatPrior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MixingKind {
    PointMass { value: f64 },
    /// Generalized inverse-Gaussian with density proportional to
    /// `v^(psi-1) exp{-(delta^2/v + gamma^2 v)/2}`.
    Gig { psi: f64, gamma: f64, delta: f64 },
    /// Exponential mixing whose rate `s^2/2` has `s ~ Gamma(shape, shape)`.
    /// Produces the generalized double-Pareto law.
    ExponentialGamma { shape: f64 },
    /// Polya law; only used as a marker, its density is never evaluated.
    Polya { alpha: f64, kappa: f64 },
    ImproperLimit(ImproperTag),
}

/// Law of the latent variance `v`. `mean` is `E(v)` when finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingDistribution {
    pub kind: MixingKind,
    pub mean: Option<f64>,
}

impl MixingDistribution {
    pub fn point_mass(value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidParameter(format!("point mass at {value}")));
        }
        Ok(Self {
            kind: MixingKind::PointMass { value },
            mean: Some(value),
        })
    }

    pub fn gig(psi: f64, gamma: f64, delta: f64) -> Result<Self> {
        validate_gig(psi, gamma, delta)?;
        Ok(Self {
            kind: MixingKind::Gig { psi, gamma, delta },
            mean: Some(gig_mean(psi, gamma, delta)),
        })
    }

    pub fn exponential_gamma(shape: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(Error::InvalidParameter(format!("exponential-gamma shape {shape}")));
        }
        let mean = (shape > 2.0).then(|| 2.0 * shape * shape / ((shape - 1.0) * (shape - 2.0)));
        Ok(Self {
            kind: MixingKind::ExponentialGamma { shape },
            mean,
        })
    }

    pub fn polya(alpha: f64, kappa: f64) -> Self {
        Self {
            kind: MixingKind::Polya { alpha, kappa },
            mean: None,
        }
    }

    pub fn improper(tag: ImproperTag) -> Self {
        Self {
            kind: MixingKind::ImproperLimit(tag),
            mean: None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            MixingKind::PointMass { .. } => "point_mass",
            MixingKind::Gig { .. } => "gig",
            MixingKind::ExponentialGamma { .. } => "exponential_gamma",
            MixingKind::Polya { .. } => "polya",
            MixingKind::ImproperLimit(_) => "improper_limit",
        }
    }

    /// Density of `v`. Point masses and the marker kinds have none.
    pub fn density(&self, v: f64) -> Result<f64> {
        match self.kind {
            MixingKind::Gig { psi, gamma, delta } => gig_density(v, psi, gamma, delta),
            MixingKind::ExponentialGamma { shape } => exponential_gamma_density(v, shape),
            _ => Err(Error::UnsupportedMixing(self.name().into())),
        }
    }

    /// The size-biased law `v p(v) / E(v)`, when it stays in the same family.
    pub fn size_biased(&self) -> Result<Self> {
        match self.kind {
            MixingKind::PointMass { .. } => Ok(*self),
            MixingKind::Gig { psi, gamma, delta } => Self::gig(psi + 1.0, gamma, delta),
            _ => Err(Error::UnsupportedMixing(format!(
                "size-biasing of {} is not available in closed form",
                self.name()
            ))),
        }
    }
}

fn validate_gig(psi: f64, gamma: f64, delta: f64) -> Result<()> {
    let finite = psi.is_finite() && gamma.is_finite() && delta.is_finite();
    if !finite || psi < 0.0 || gamma < 0.0 || delta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "GIG parameters must be finite and nonnegative (psi={psi}, gamma={gamma}, delta={delta})"
        )));
    }
    if psi == 0.0 && delta == 0.0 {
        return Err(Error::InvalidParameter("GIG needs psi > 0 or delta > 0".into()));
    }
    if gamma == 0.0 {
        return Err(Error::InvalidParameter(
            "GIG with gamma = 0 and psi >= 0 is not normalizable".into(),
        ));
    }
    Ok(())
}

/// Exponentially scaled modified Bessel function of the second kind,
/// `exp(x) K_nu(x)`, from `int_0^inf exp{-x (cosh t - 1)} cosh(nu t) dt`.
pub fn bessel_k_scaled(nu: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain {
            value: x,
            reason: "Bessel K needs a positive argument".into(),
        });
    }
    let nu = nu.abs();
    // Truncate where the integrand is below exp(-45) relative to its start.
    let mut upper = 1.0_f64;
    while x * (upper.cosh() - 1.0) - nu * upper < 45.0 {
        upper *= 1.5;
        if upper > 800.0 {
            return Err(Error::IntegrationFailure("Bessel K truncation".into()));
        }
    }
    let opts = QuadOptions::with_tol(0.0, 1e-14);
    let r = integrate(
        |t| (-x * (t.cosh() - 1.0) + nu * t).exp() * 0.5 * (1.0 + (-2.0 * nu * t).exp()),
        0.0,
        upper,
        &opts,
    )?;
    Ok(r.value)
}

pub fn ln_bessel_k(nu: f64, x: f64) -> Result<f64> {
    Ok(bessel_k_scaled(nu, x)?.ln() - x)
}

fn gig_ln_normalizer(psi: f64, gamma: f64, delta: f64) -> Result<f64> {
    if delta > 0.0 {
        // Z = 2 K_psi(delta gamma) (delta / gamma)^psi
        Ok(std::f64::consts::LN_2 + ln_bessel_k(psi, delta * gamma)? + psi * (delta / gamma).ln())
    } else {
        // Gamma(shape psi, rate gamma^2 / 2)
        Ok(ln_gamma(psi) - psi * (0.5 * gamma * gamma).ln())
    }
}

fn gig_mean(psi: f64, gamma: f64, delta: f64) -> f64 {
    if delta > 0.0 {
        let x = delta * gamma;
        match (bessel_k_scaled(psi + 1.0, x), bessel_k_scaled(psi, x)) {
            (Ok(num), Ok(den)) => delta / gamma * num / den,
            _ => f64::NAN,
        }
    } else {
        2.0 * psi / (gamma * gamma)
    }
}

/// Normalized generalized inverse-Gaussian density.
pub fn gig_density(v: f64, psi: f64, gamma: f64, delta: f64) -> Result<f64> {
    validate_gig(psi, gamma, delta)?;
    if v < 0.0 || v.is_nan() {
        return Err(Error::Domain {
            value: v,
            reason: "GIG density is supported on v > 0".into(),
        });
    }
    let ln_z = gig_ln_normalizer(psi, gamma, delta)?;
    if v == 0.0 {
        // Continuous extension at the boundary where it exists.
        return if delta > 0.0 || psi > 1.0 {
            Ok(0.0)
        } else if psi == 1.0 {
            Ok((-ln_z).exp())
        } else {
            Err(Error::Domain {
                value: v,
                reason: "GIG density diverges at 0 for psi < 1".into(),
            })
        };
    }
    if v.is_infinite() {
        return Ok(0.0);
    }
    let ln_kernel = (psi - 1.0) * v.ln() - 0.5 * (delta * delta / v + gamma * gamma * v);
    Ok((ln_kernel - ln_z).exp())
}

fn exponential_gamma_density(v: f64, shape: f64) -> Result<f64> {
    if v < 0.0 || v.is_nan() {
        return Err(Error::Domain {
            value: v,
            reason: "mixing density is supported on v > 0".into(),
        });
    }
    let ln_prior_const = shape * shape.ln() - ln_gamma(shape);
    let opts = QuadOptions::with_tol(0.0, 1e-12);
    let r = integrate_positive(
        |s| {
            let ln = 2.0 * s.ln() - std::f64::consts::LN_2 - 0.5 * s * s * v
                + ln_prior_const
                + (shape - 1.0) * s.ln()
                - shape * s;
            ln.exp()
        },
        (shape + 1.0) / (shape + v.sqrt()),
        &opts,
    )?;
    Ok(r.value)
}

/// `(alpha^2 - kappa^2) / (2 alpha) exp{-alpha |theta - mu| + kappa (theta - mu)}`.
pub fn hyperbolic_density(theta: f64, mu: f64, alpha: f64, kappa: f64) -> Result<f64> {
    if !(alpha > kappa.abs()) {
        return Err(Error::Domain {
            value: alpha,
            reason: format!("hyperbolic density needs alpha > |kappa| (kappa = {kappa})"),
        });
    }
    let w = theta - mu;
    Ok((alpha * alpha - kappa * kappa) / (2.0 * alpha) * (-alpha * w.abs() + kappa * w).exp())
}

/// Z-distribution density `e^{alpha w} / (1 + e^w)^{2(alpha - kappa)}` with
/// `w = theta - mu`, normalized by `B(alpha, alpha - 2 kappa)`. When
/// `alpha = 2 kappa` the law is improper and the bare kernel is returned;
/// with `(alpha, kappa) = (1, 1/2)` this is the logistic `e^w / (1 + e^w)`.
pub fn z_density(theta: f64, mu: f64, alpha: f64, kappa: f64) -> Result<f64> {
    let second = alpha - 2.0 * kappa;
    if !(alpha > 0.0) || second < 0.0 || !second.is_finite() {
        return Err(Error::Domain {
            value: alpha,
            reason: format!("Z density needs alpha > 0 and alpha >= 2 kappa (kappa = {kappa})"),
        });
    }
    let w = theta - mu;
    // ln(1 + e^w) computed stably.
    let softplus = if w > 0.0 { w + (-w).exp().ln_1p() } else { w.exp().ln_1p() };
    let ln_kernel = alpha * w - 2.0 * (alpha - kappa) * softplus;
    let ln_norm = if second > 0.0 { ln_beta(alpha, second) } else { 0.0 };
    Ok((ln_kernel - ln_norm).exp())
}

/// Normal density `phi(x | mean, var)`.
pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    (-0.5 * d * d / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_real_line;
    use approx::assert_relative_eq;

    #[test]
    fn gig_exponential_special_case() {
        assert_relative_eq!(gig_density(0.0, 1.0, 1.0, 0.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(
            gig_density(1.0, 1.0, 1.0, 0.0).unwrap(),
            0.5 * (-0.5f64).exp(),
            epsilon = 1e-15
        );
        assert!((gig_density(1.0, 1.0, 1.0, 0.0).unwrap() - 0.3033).abs() < 1e-4);
    }

    #[test]
    fn gig_rejects_negative_argument_and_bad_params() {
        assert!(matches!(gig_density(-1.0, 1.0, 1.0, 0.0), Err(Error::Domain { .. })));
        assert!(gig_density(1.0, 0.0, 1.0, 0.0).is_err());
        assert!(gig_density(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(gig_density(1.0, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn gig_densities_integrate_to_one() {
        let opts = QuadOptions::with_tol(1e-12, 1e-10);
        for &(psi, gamma, delta) in &[(1.0, 1.0, 0.0), (2.5, 0.7, 0.0), (0.5, 1.3, 0.8), (1.0, 2.0, 3.0), (0.0, 1.0, 1.0)] {
            let r = integrate_positive(|v| gig_density(v, psi, gamma, delta).unwrap(), 1.0, &opts).unwrap();
            assert!((r.value - 1.0).abs() < 1e-6, "GIG({psi},{gamma},{delta}) integrates to {}", r.value);
        }
    }

    #[test]
    fn gig_mean_matches_quadrature() {
        let opts = QuadOptions::with_tol(1e-12, 1e-11);
        for &(psi, gamma, delta) in &[(1.0, 1.0, 0.0), (0.5, 1.3, 0.8), (1.5, 2.0, 3.0)] {
            let m = MixingDistribution::gig(psi, gamma, delta).unwrap().mean.unwrap();
            let r = integrate_positive(|v| v * gig_density(v, psi, gamma, delta).unwrap(), 1.0, &opts).unwrap();
            assert_relative_eq!(m, r.value, max_relative = 1e-8);
        }
    }

    #[test]
    fn bessel_half_order_closed_form() {
        // K_{1/2}(x) = sqrt(pi / (2x)) e^{-x}
        for &x in &[0.05, 0.5, 1.0, 7.0, 60.0] {
            let exact = (std::f64::consts::PI / (2.0 * x)).sqrt();
            assert_relative_eq!(bessel_k_scaled(0.5, x).unwrap(), exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn hyperbolic_closed_forms() {
        assert_relative_eq!(hyperbolic_density(0.0, 0.0, 1.0, 0.0).unwrap(), 0.5);
        assert_relative_eq!(
            hyperbolic_density(1.0, 0.0, 1.0, 0.5).unwrap(),
            0.375 * (-0.5f64).exp(),
            max_relative = 1e-14
        );
        assert!((hyperbolic_density(1.0, 0.0, 1.0, 0.5).unwrap() - 0.2274).abs() < 1e-4);
        assert!(hyperbolic_density(0.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn z_density_logistic_kernel() {
        assert_relative_eq!(z_density(0.0, 0.0, 1.0, 0.5).unwrap(), 0.5, epsilon = 1e-15);
        let e2 = 2f64.exp();
        assert_relative_eq!(z_density(2.0, 0.0, 1.0, 0.5).unwrap(), e2 / (1.0 + e2), epsilon = 1e-15);
        assert!((z_density(2.0, 0.0, 1.0, 0.5).unwrap() - 0.8808).abs() < 1e-4);
    }

    #[test]
    fn z_density_symmetric_when_untilted() {
        for &t in &[0.3, 1.0, 2.5] {
            assert_relative_eq!(
                z_density(1.0 + t, 1.0, 1.7, 0.0).unwrap(),
                z_density(1.0 - t, 1.0, 1.7, 0.0).unwrap(),
                max_relative = 1e-13
            );
        }
        assert!(z_density(0.0, 0.0, 1.0, 0.75).is_err());
        assert!(z_density(0.0, 0.0, -1.0, -1.0).is_err());
    }

    #[test]
    fn proper_densities_integrate_to_one() {
        let opts = QuadOptions::with_tol(1e-12, 1e-10);
        for &(a, k) in &[(1.0, 0.0), (1.0, 0.5), (2.0, 1.0), (3.0, -1.5)] {
            let r = integrate_real_line(|t| hyperbolic_density(t, 0.3, a, k).unwrap(), 0.3, 1.0, &[0.3], &opts).unwrap();
            assert!((r.value - 1.0).abs() < 1e-6);
        }
        for &(a, k) in &[(1.0, 0.0), (2.0, 0.5), (1.5, -0.5), (3.0, 1.4)] {
            let r = integrate_real_line(|t| z_density(t, -0.2, a, k).unwrap(), 0.0, 2.0, &[], &opts).unwrap();
            assert!((r.value - 1.0).abs() < 1e-6, "Z({a},{k}) integrates to {}", r.value);
        }
        for &shape in &[1.0, 2.0, 3.0] {
            let r = integrate_positive(|v| exponential_gamma_density(v, shape).unwrap(), 1.0, &opts).unwrap();
            assert!((r.value - 1.0).abs() < 1e-6, "exp-gamma({shape}) integrates to {}", r.value);
        }
    }

    #[test]
    fn size_biased_gig_shifts_index() {
        let m = MixingDistribution::gig(1.0, 1.0, 0.0).unwrap();
        let s = m.size_biased().unwrap();
        assert_eq!(s.kind, MixingKind::Gig { psi: 2.0, gamma: 1.0, delta: 0.0 });
        assert!(MixingDistribution::exponential_gamma(3.0).unwrap().mean.is_some());
        assert!(MixingDistribution::exponential_gamma(2.0).unwrap().mean.is_none());
    }
}
