//! Quadrature oracles: conditional moments and mixture identities evaluated by
//! brute-force integration over the latent variance.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::mixing::{bessel_k_scaled, hyperbolic_density, normal_pdf, MixingKind};
use super::MixtureFamily;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_positive, QuadOptions};

/// `ln p(v)` for the mixing laws with an evaluable density.
fn ln_mixing_density(kind: &MixingKind, v: f64) -> Result<f64> {
    match *kind {
        MixingKind::Gig { psi, gamma, delta } => {
            let ln_z = if delta > 0.0 {
                std::f64::consts::LN_2 + bessel_k_scaled(psi, delta * gamma)?.ln() - delta * gamma
                    + psi * (delta / gamma).ln()
            } else {
                ln_gamma(psi) - psi * (0.5 * gamma * gamma).ln()
            };
            Ok((psi - 1.0) * v.ln() - 0.5 * (delta * delta / v + gamma * gamma * v) - ln_z)
        }
        MixingKind::ExponentialGamma { .. } => {
            let d = super::mixing::MixingDistribution { kind: *kind, mean: None }.density(v)?;
            Ok(d.ln())
        }
        _ => Err(Error::UnsupportedMixing(format!("{kind:?}"))),
    }
}

/// `E(1/v | x)` for `x ~ N(location + tilt v, scale^2 v)`, `v ~ mixing`,
/// computed as a ratio of two integrals over `v`.
pub fn oracle_moment_quadrature<F: MixtureFamily + ?Sized>(fam: &F, x: f64) -> Result<f64> {
    let mixing = fam.mixing();
    let kind = mixing.kind;
    match kind {
        MixingKind::PointMass { value } => return Ok(1.0 / value),
        MixingKind::Gig { .. } | MixingKind::ExponentialGamma { .. } => {}
        _ => return Err(Error::UnsupportedMixing(mixing.name().into())),
    }
    let w = x - fam.location();
    let s = fam.scale();
    let k = fam.tilt();
    // Rough location of the posterior mass of v, used to center the substitution.
    let center = match kind {
        MixingKind::Gig { gamma, delta, .. } => {
            let d = (delta * delta + w * w / (s * s)).sqrt();
            let g = (gamma * gamma + k * k / (s * s)).sqrt();
            (d / g).max(1e-8)
        }
        _ => (w.abs() / s).max(1e-4),
    };
    let ln_joint = |v: f64| -> f64 {
        let m = k * v;
        let var = s * s * v;
        let ln_phi = -0.5 * (w - m) * (w - m) / var - 0.5 * (2.0 * std::f64::consts::PI * var).ln();
        match ln_mixing_density(&kind, v) {
            Ok(lp) => ln_phi + lp,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let shift = ln_joint(center);
    if !shift.is_finite() {
        return Err(Error::IntegrationFailure(format!("joint density not finite at v = {center}")));
    }
    let opts = QuadOptions::with_tol(0.0, 1e-11);
    let den = integrate_positive(|v| (ln_joint(v) - shift).exp(), center, &opts)?;
    let num = integrate_positive(|v| (ln_joint(v) - shift).exp() / v, center, &opts)?;
    Ok(num.value / den.value)
}

/// One closed-form versus quadrature comparison.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IdentityCheck {
    pub identity: String,
    pub parameters: String,
    pub theta: f64,
    pub closed_form: f64,
    pub quadrature: f64,
    pub rel_error: f64,
}

impl IdentityCheck {
    fn new(identity: &str, parameters: String, theta: f64, closed_form: f64, quadrature: f64) -> Self {
        Self {
            identity: identity.into(),
            parameters,
            theta,
            closed_form,
            quadrature,
            rel_error: (closed_form - quadrature).abs() / closed_form.abs(),
        }
    }
}

fn variance_integral<G: Fn(f64) -> f64>(g: G, center: f64) -> Result<f64> {
    let opts = QuadOptions::with_tol(0.0, 1e-12);
    Ok(integrate_positive(g, center, &opts)?.value)
}

/// `int phi(theta | mu + kappa v, v) p_gig(v | 1, 0, sqrt(alpha^2 - kappa^2)) dv`.
pub fn hyperbolic_mixture_quadrature(theta: f64, mu: f64, alpha: f64, kappa: f64) -> Result<f64> {
    let gamma = (alpha * alpha - kappa * kappa).sqrt();
    let w = theta - mu;
    variance_integral(
        |v| normal_pdf(w, kappa * v, v) * super::gig_density(v, 1.0, gamma, 0.0).unwrap_or(0.0),
        (w.abs() / alpha).max(1e-6),
    )
}

/// Hinge limit: `a^{-1} exp{-2 max(a theta, 0) / c} = int phi(theta | -a v, c v) dv`.
pub fn hinge_limit_identity(theta: f64, a: f64, c: f64) -> Result<(f64, f64)> {
    let lhs = (-2.0 * (a * theta).max(0.0) / c).exp() / a;
    let rhs = variance_integral(|v| normal_pdf(theta, -a * v, c * v), (theta.abs() / a).max(1e-6))?;
    Ok((lhs, rhs))
}

/// Check-loss limit at unit scale:
/// `exp{-2 rho_q(theta)} = int phi(theta | (1 - 2q) v, v) exp{-2q(1-q) v} dv`.
pub fn check_loss_limit_identity(theta: f64, q: f64) -> Result<(f64, f64)> {
    let rho = 0.5 * theta.abs() + (q - 0.5) * theta;
    let lhs = (-2.0 * rho).exp();
    let rhs = variance_integral(
        |v| normal_pdf(theta, (1.0 - 2.0 * q) * v, v) * (-2.0 * q * (1.0 - q) * v).exp(),
        theta.abs().max(1e-6),
    )?;
    Ok((lhs, rhs))
}

/// Full table of mixture-identity checks on a grid of `theta` in `[-3, 3]`.
pub fn identity_checks() -> Result<Vec<IdentityCheck>> {
    let thetas: Vec<f64> = (0..=24).map(|k| -3.0 + 0.25 * k as f64).collect();
    let mut out = Vec::new();
    for &(alpha, kappa) in &[(1.0, 0.0), (1.0, 0.5), (2.0, 1.0)] {
        for &t in &thetas {
            out.push(IdentityCheck::new(
                "hyperbolic",
                format!("alpha={alpha},kappa={kappa}"),
                t,
                hyperbolic_density(t, 0.0, alpha, kappa)?,
                hyperbolic_mixture_quadrature(t, 0.0, alpha, kappa)?,
            ));
        }
    }
    for &(a, c) in &[(1.0, 1.0), (0.5, 2.0), (2.0, 0.7)] {
        for &t in &thetas {
            let (lhs, rhs) = hinge_limit_identity(t, a, c)?;
            out.push(IdentityCheck::new("hinge_limit", format!("a={a},c={c}"), t, lhs, rhs));
        }
    }
    for &q in &[0.1, 0.5, 0.9] {
        for &t in &thetas {
            let (lhs, rhs) = check_loss_limit_identity(t, q)?;
            out.push(IdentityCheck::new("check_loss_limit", format!("q={q}"), t, lhs, rhs));
        }
    }
    for &t in &thetas {
        let e = t.exp();
        out.push(IdentityCheck::new(
            "z_logistic",
            "alpha=1,kappa=0.5".into(),
            t,
            e / (1.0 + e),
            super::z_density(t, 0.0, 1.0, 0.5)?,
        ));
    }
    Ok(out)
}
