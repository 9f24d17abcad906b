//! Posterior means for a scalar location parameter under variance-mean
//! mixture priors: a Masreliez-type representation through the size-biased
//! mixing law, and a brute-force quadrature oracle.
//!
//! With `beta | v ~ N(mu + kappa v, tau^2 v)` and `p*(v) = v p(v) / E(v)`,
//! integrating `(beta - mu) = kappa v - tau^2 v d/dbeta log phi` against the
//! posterior and then by parts gives
//!
//! `E(beta | y) = mu + kappa E(v) m*/m - tau^2 E(v) (m*/m) d/dy log m*(y)`,
//!
//! where `m` is the marginal of `y` and `m*` the marginal under the tilted
//! prior `p*(beta) = int phi(beta; mu + kappa v, tau^2 v) p*(v) dv`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{normal_pdf, MixingKind, MixtureFamily, PenaltyFamily, PenaltyKind};
use crate::quadrature::{integrate_positive, integrate_real_line, QuadOptions};

/// Step of the central difference for `d/dy log m*`.
pub const DIFF_STEP: f64 = 1e-5;

const OUTER_TOL: f64 = 1e-13;
const INNER_TOL: f64 = 1e-14;

/// A density symmetric in `y - beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocationLikelihood {
    Gaussian { sigma: f64 },
    Laplace { scale: f64 },
    Logistic { scale: f64 },
}

impl LocationLikelihood {
    /// Parses `gauss`, `laplace` or `logistic`, each with an optional `:scale`.
    pub fn parse(text: &str) -> Result<Self> {
        let (name, scale) = match text.split_once(':') {
            Some((n, s)) => (
                n,
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad scale in '{text}'")))?,
            ),
            None => (text, 1.0),
        };
        let lik = match name {
            "gauss" | "gaussian" => Self::Gaussian { sigma: scale },
            "laplace" => Self::Laplace { scale },
            "logistic" => Self::Logistic { scale },
            _ => return Err(Error::InvalidParameter(format!("unknown location likelihood '{name}'"))),
        };
        lik.validate()?;
        Ok(lik)
    }

    fn scale(&self) -> f64 {
        match *self {
            Self::Gaussian { sigma } => sigma,
            Self::Laplace { scale } | Self::Logistic { scale } => scale,
        }
    }

    fn validate(&self) -> Result<()> {
        let s = self.scale();
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!("likelihood scale must be positive, got {s}")));
        }
        Ok(())
    }

    /// Density at residual `r = y - beta`.
    pub fn density(&self, r: f64) -> f64 {
        match *self {
            Self::Gaussian { sigma } => normal_pdf(r, 0.0, sigma * sigma),
            Self::Laplace { scale } => (-r.abs() / scale).exp() / (2.0 * scale),
            Self::Logistic { scale } => {
                let e = (-r.abs() / scale).exp();
                e / (scale * (1.0 + e) * (1.0 + e))
            }
        }
    }

    /// Whether the density has a kink at zero residual.
    fn kinked(&self) -> bool {
        matches!(self, Self::Laplace { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationProblem {
    pub likelihood: LocationLikelihood,
    pub prior: PenaltyFamily,
    pub y: f64,
}

impl LocationProblem {
    pub fn new(likelihood: LocationLikelihood, prior: PenaltyFamily, y: f64) -> Result<Self> {
        likelihood.validate()?;
        if prior.kind() == PenaltyKind::Flat {
            return Err(Error::UnsupportedPenalty("a flat prior has no marginal".into()));
        }
        if !y.is_finite() {
            return Err(Error::InvalidParameter(format!("observation {y} is not finite")));
        }
        for k in 1..=10 {
            let r = 0.37 * k as f64;
            let (a, b) = (likelihood.density(r), likelihood.density(-r));
            if (a - b).abs() > 1e-14 * a.max(b) {
                return Err(Error::InvalidParameter("likelihood is not symmetric".into()));
            }
        }
        Ok(Self { likelihood, prior, y })
    }

    pub fn with_y(&self, y: f64) -> Self {
        Self { y, ..*self }
    }

    fn breaks(&self, y: f64) -> Vec<f64> {
        let mut b = Vec::new();
        if self.likelihood.kinked() {
            b.push(y);
        }
        if self.prior.is_sparse() {
            b.push(self.prior.mu_beta());
        }
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    fn beta_scale(&self, y: f64) -> f64 {
        self.likelihood
            .scale()
            .max(self.prior.tau())
            .max(0.5 * (y - self.prior.mu_beta()).abs())
    }

    /// `int g(beta) p(y - beta) prior(beta) dbeta` for the given prior density.
    fn against_likelihood<P, G>(&self, y: f64, prior: P, g: G, breaks: &[f64], opts: QuadOptions) -> Result<f64>
    where
        P: Fn(f64) -> Result<f64>,
        G: Fn(f64) -> f64,
    {
        let center = 0.5 * (y + self.prior.mu_beta());
        let mut err = None;
        let r = integrate_real_line(
            |b| match prior(b) {
                Ok(pb) => g(b) * self.likelihood.density(y - b) * pb,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            center,
            self.beta_scale(y),
            breaks,
            &opts,
        )?;
        match err {
            Some(e) => Err(e),
            None => Ok(r.value),
        }
    }
}

/// `m(y) = int p(y - beta) p(beta) dbeta` with the closed-form prior density.
pub fn marginal(problem: &LocationProblem) -> Result<f64> {
    let y = problem.y;
    problem.against_likelihood(y, |b| problem.prior.prior_density(b), |_| 1.0, &problem.breaks(y), QuadOptions::with_tol(0.0, 1e-12))
}

/// Mean `E(v)` of the prior's mixing law.
fn mixing_mean(prior: &PenaltyFamily) -> Result<f64> {
    prior.mixing().mean.ok_or(Error::UndefinedMean)
}

/// Tilted prior density `p*(beta)`: the normal kernel integrated against the
/// size-biased mixing law.
pub fn tilted_prior_density(prior: &PenaltyFamily, beta: f64) -> Result<f64> {
    let mean = mixing_mean(prior)?;
    let (mu, kappa, tau) = (prior.location(), prior.tilt(), prior.scale());
    let t2 = tau * tau;
    let mixing = prior.mixing();
    if let MixingKind::PointMass { value } = mixing.kind {
        return Ok(normal_pdf(beta, mu + kappa * value, t2 * value));
    }
    let biased = mixing.size_biased().ok();
    let w = beta - mu;
    let center = if w == 0.0 { mean } else { ((w * w / t2) * mean).sqrt() };
    let mut err = None;
    let r = integrate_positive(
        |v| {
            let pv = match &biased {
                Some(b) => b.density(v),
                None => mixing.density(v).map(|d| v * d / mean),
            };
            match pv {
                Ok(pv) if pv > 0.0 => normal_pdf(beta, mu + kappa * v, t2 * v) * pv,
                Ok(_) => 0.0,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        },
        center,
        &QuadOptions::with_tol(0.0, INNER_TOL),
    )?;
    match err {
        Some(e) => Err(e),
        None => Ok(r.value),
    }
}

fn tilted_marginal_at(problem: &LocationProblem, y: f64) -> Result<f64> {
    problem.against_likelihood(
        y,
        |b| tilted_prior_density(&problem.prior, b),
        |_| 1.0,
        &problem.breaks(y),
        QuadOptions::with_tol(0.0, OUTER_TOL),
    )
}

/// `m*(y) = int p(y - beta) p*(beta) dbeta`.
pub fn tilted_marginal(problem: &LocationProblem) -> Result<f64> {
    tilted_marginal_at(problem, problem.y)
}

/// Central difference `(m*(y + h) - m*(y - h)) / 2h`, integrated as a single
/// differenced integrand so both terms share the same tilted-prior values.
fn tilted_marginal_slope(problem: &LocationProblem, m_star: f64) -> Result<f64> {
    let (y, h) = (problem.y, DIFF_STEP);
    let lik = problem.likelihood;
    let mut breaks = problem.breaks(y);
    if lik.kinked() {
        breaks.retain(|&b| b != y);
        breaks.extend([y - h, y + h]);
        breaks.sort_by(f64::total_cmp);
    }
    let center = 0.5 * (y + problem.prior.mu_beta());
    let mut err = None;
    let r = integrate_real_line(
        |b| match tilted_prior_density(&problem.prior, b) {
            Ok(pb) => (lik.density(y + h - b) - lik.density(y - h - b)) * pb,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        center,
        problem.beta_scale(y),
        &breaks,
        // Absolute tolerance relative to m*, since the target is d/dy log m*.
        &QuadOptions::with_tol(1e-11 * h * m_star, OUTER_TOL),
    )?;
    match err {
        Some(e) => Err(e),
        None => Ok(r.value / (2.0 * h)),
    }
}

/// Posterior mean through the tilted marginal, with `d/dy log m*` by a
/// central difference of step `DIFF_STEP`.
pub fn masreliez_mean(problem: &LocationProblem) -> Result<f64> {
    let mean = mixing_mean(&problem.prior)?;
    let m = marginal(problem)?;
    let m_star = tilted_marginal(problem)?;
    let slope = tilted_marginal_slope(problem, m_star)?;
    if !(m > 0.0 && m_star > 0.0) {
        return Err(Error::IntegrationFailure(format!("marginal underflowed at y = {}", problem.y)));
    }
    let (mu, kappa, tau) = (problem.prior.location(), problem.prior.tilt(), problem.prior.scale());
    let ratio = m_star / m;
    let dlog = slope / m_star;
    Ok(mu + kappa * mean * ratio - tau * tau * mean * ratio * dlog)
}

/// `E(beta | y) = int beta p(y - beta) p(beta) dbeta / m(y)` by direct
/// quadrature with the closed-form prior.
pub fn oracle_mean(problem: &LocationProblem) -> Result<f64> {
    let y = problem.y;
    let breaks = problem.breaks(y);
    let prior = |b| problem.prior.prior_density(b);
    let m = problem.against_likelihood(y, prior, |_| 1.0, &breaks, QuadOptions::with_tol(0.0, 1e-12))?;
    // The first moment can vanish by symmetry, so its tolerance is absolute
    // on the scale of the mean.
    let mu = problem.prior.mu_beta();
    let opts = QuadOptions::with_tol(1e-12 * m * problem.beta_scale(y), 1e-12);
    let first = problem.against_likelihood(y, prior, |b| b - mu, &breaks, opts)?;
    Ok(mu + first / m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss_ridge(y: f64) -> LocationProblem {
        LocationProblem::new(LocationLikelihood::Gaussian { sigma: 1.0 }, PenaltyFamily::ridge(1.0).unwrap(), y).unwrap()
    }

    #[test]
    fn normal_marginal_values() {
        assert!((marginal(&gauss_ridge(0.0)).unwrap() - normal_pdf(0.0, 0.0, 2.0)).abs() < 1e-12);
        assert!((marginal(&gauss_ridge(1.0)).unwrap() - normal_pdf(1.0, 0.0, 2.0)).abs() < 1e-12);
        let lasso = LocationProblem::new(LocationLikelihood::Gaussian { sigma: 1.0 }, PenaltyFamily::lasso(1.0).unwrap(), 1.3).unwrap();
        let a = marginal(&lasso).unwrap();
        let b = marginal(&lasso.with_y(-1.3)).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn point_mass_tilt_is_identity() {
        let p = gauss_ridge(0.7);
        assert!((tilted_marginal(&p).unwrap() - marginal(&p).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn conjugate_case() {
        let p = gauss_ridge(2.0);
        assert!((masreliez_mean(&p).unwrap() - 1.0).abs() < 1e-8);
        assert!((oracle_mean(&p).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tilted_prior_normalizes() {
        let prior = PenaltyFamily::lasso(1.0).unwrap();
        let r = integrate_real_line(
            |b| tilted_prior_density(&prior, b).unwrap(),
            0.0,
            1.0,
            &[0.0],
            &QuadOptions::with_tol(0.0, 1e-10),
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn undefined_mean_is_reported() {
        let p = LocationProblem::new(
            LocationLikelihood::Gaussian { sigma: 1.0 },
            PenaltyFamily::double_pareto(2.0, 1.0).unwrap(),
            1.0,
        )
        .unwrap();
        assert_eq!(tilted_marginal(&p), Err(Error::UndefinedMean));
        assert!(oracle_mean(&p).unwrap() < 1.0);
    }

    #[test]
    fn flat_prior_rejected() {
        assert!(LocationProblem::new(LocationLikelihood::Laplace { scale: 1.0 }, PenaltyFamily::flat(), 0.0).is_err());
        assert!(LocationLikelihood::parse("cauchy").is_err());
        assert_eq!(LocationLikelihood::parse("laplace:2").unwrap(), LocationLikelihood::Laplace { scale: 2.0 });
    }
}
