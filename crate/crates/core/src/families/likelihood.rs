use serde::{Deserialize, Serialize};

use super::mixing::{ImproperTag, MixingDistribution};
use super::{kinked_moment, sign, MixtureFamily, EPS_KINK, EPS_LIMIT};
use crate::error::{Error, KinkLocation, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LikelihoodKind {
    /// `f(z) = z^2 / sigma^2`
    SquaredError,
    /// `f(z) = |z| / sigma`
    AbsoluteError,
    /// `f(z) = |z| + (2q - 1) z`
    CheckLoss { q: f64 },
    /// `f(z) = 2 max(1 - z, 0)`
    SvmHinge,
    /// `f(z) = log(1 + exp(-z))`
    Logistic,
    /// `f(z) = (alpha |z| - kappa z) / sigma`
    Hyperbolic { alpha: f64, kappa: f64 },
}

/// A loss `f` on the working response `z` together with its mixture
/// representation `z ~ N(mu_z + kappa_z v, sigma^2 v)`, `v ~ mixing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodFamily {
    kind: LikelihoodKind,
    mu_z: f64,
    kappa_z: f64,
    sigma: f64,
    mixing: MixingDistribution,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")))
    }
}

impl LikelihoodFamily {
    pub fn squared_error(sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        // exp(-z^2/sigma^2) is N(0, sigma^2/2): a point mass at v = 1/2.
        Ok(Self {
            kind: LikelihoodKind::SquaredError,
            mu_z: 0.0,
            kappa_z: 0.0,
            sigma,
            mixing: MixingDistribution::point_mass(0.5)?,
        })
    }

    pub fn absolute_error(sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Self {
            kind: LikelihoodKind::AbsoluteError,
            mu_z: 0.0,
            kappa_z: 0.0,
            sigma,
            mixing: MixingDistribution::gig(1.0, 1.0, 0.0)?,
        })
    }

    pub fn check_loss(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!("quantile level must lie in (0,1), got {q}")));
        }
        Ok(Self {
            kind: LikelihoodKind::CheckLoss { q },
            mu_z: 0.0,
            kappa_z: 1.0 - 2.0 * q,
            sigma: 1.0,
            mixing: MixingDistribution::gig(1.0, 2.0 * (q * (1.0 - q)).sqrt(), 0.0)?,
        })
    }

    pub fn svm_hinge() -> Self {
        Self {
            kind: LikelihoodKind::SvmHinge,
            mu_z: 1.0,
            kappa_z: 1.0,
            sigma: 1.0,
            mixing: MixingDistribution::improper(ImproperTag::FlatVariance),
        }
    }

    pub fn logistic() -> Self {
        Self {
            kind: LikelihoodKind::Logistic,
            mu_z: 0.0,
            kappa_z: 0.5,
            sigma: 1.0,
            mixing: MixingDistribution::polya(1.0, 0.5),
        }
    }

    pub fn hyperbolic(alpha: f64, kappa: f64, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if !(alpha > kappa.abs()) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "hyperbolic likelihood needs alpha > |kappa| (alpha={alpha}, kappa={kappa})"
            )));
        }
        Ok(Self {
            kind: LikelihoodKind::Hyperbolic { alpha, kappa },
            mu_z: 0.0,
            kappa_z: sigma * kappa,
            sigma,
            mixing: MixingDistribution::gig(1.0, (alpha * alpha - kappa * kappa).sqrt(), 0.0)?,
        })
    }

    /// Parses the configuration vocabulary: `gauss`, `laplace`, `quantile:q`,
    /// `svm`, `logistic`, `hyperbolic:alpha:kappa`.
    pub fn parse(text: &str, sigma: f64) -> Result<Self> {
        let parts: Vec<&str> = text.trim().split(':').collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad number {s:?} in likelihood {text:?}")))
        };
        match parts.as_slice() {
            ["gauss"] => Self::squared_error(sigma),
            ["laplace"] => Self::absolute_error(sigma),
            ["quantile", q] => Self::check_loss(num(q)?),
            ["svm"] => Ok(Self::svm_hinge()),
            ["logistic"] => Ok(Self::logistic()),
            ["hyperbolic", a, k] => Self::hyperbolic(num(a)?, num(k)?, sigma),
            _ => Err(Error::InvalidParameter(format!("unknown likelihood {text:?}"))),
        }
    }

    pub fn kind(&self) -> LikelihoodKind {
        self.kind
    }
    pub fn mu_z(&self) -> f64 {
        self.mu_z
    }
    pub fn kappa_z(&self) -> f64 {
        self.kappa_z
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn name(&self) -> String {
        match self.kind {
            LikelihoodKind::SquaredError => "gauss".into(),
            LikelihoodKind::AbsoluteError => "laplace".into(),
            LikelihoodKind::CheckLoss { q } => format!("quantile:{q}"),
            LikelihoodKind::SvmHinge => "svm".into(),
            LikelihoodKind::Logistic => "logistic".into(),
            LikelihoodKind::Hyperbolic { alpha, kappa } => format!("hyperbolic:{alpha}:{kappa}"),
        }
    }

    /// Hinge and logistic act on `y_i x_i' beta`; the rest on residuals.
    pub fn is_classification(&self) -> bool {
        matches!(self.kind, LikelihoodKind::SvmHinge | LikelihoodKind::Logistic)
    }

    /// Differentiable everywhere (no kink).
    pub fn is_smooth(&self) -> bool {
        matches!(self.kind, LikelihoodKind::SquaredError | LikelihoodKind::Logistic)
    }

    /// `(alpha, kappa)` of the hyperbolic form `(alpha |w| - kappa w) / sigma`,
    /// `w = z - mu_z`, for the kinked families.
    fn hyperbolic_shape(&self) -> Option<(f64, f64)> {
        match self.kind {
            LikelihoodKind::AbsoluteError => Some((1.0, 0.0)),
            LikelihoodKind::CheckLoss { q } => Some((1.0, 1.0 - 2.0 * q)),
            LikelihoodKind::SvmHinge => Some((1.0, 1.0)),
            LikelihoodKind::Hyperbolic { alpha, kappa } => Some((alpha, kappa)),
            _ => None,
        }
    }

    pub fn value(&self, z: f64) -> f64 {
        match self.kind {
            LikelihoodKind::SquaredError => (z / self.sigma).powi(2),
            LikelihoodKind::Logistic => softplus(-z),
            // 2 max(1 - z, 0) written without the kink formula to stay exact.
            LikelihoodKind::SvmHinge => 2.0 * (1.0 - z).max(0.0),
            _ => {
                let (a, k) = self.hyperbolic_shape().expect("kinked family");
                let w = z - self.mu_z;
                (a * w.abs() - k * w) / self.sigma
            }
        }
    }

    /// Derivative `f'(z)`; refuses points within `EPS_KINK` of a kink.
    pub fn deriv(&self, z: f64) -> Result<f64> {
        match self.kind {
            LikelihoodKind::SquaredError => Ok(2.0 * z / (self.sigma * self.sigma)),
            LikelihoodKind::Logistic => Ok(-logistic_cdf(-z)),
            _ => {
                let (a, k) = self.hyperbolic_shape().expect("kinked family");
                let w = z - self.mu_z;
                if w.abs() <= EPS_KINK {
                    return Err(Error::Kink {
                        location: KinkLocation::Scalar,
                        value: z,
                    });
                }
                Ok((a * sign(w) - k) / self.sigma)
            }
        }
    }

    /// One-sided derivatives `(f'(z-), f'(z+))`; equal away from kinks.
    pub fn deriv_interval(&self, z: f64) -> (f64, f64) {
        match self.deriv(z) {
            Ok(d) => (d, d),
            Err(_) => {
                let (a, k) = self.hyperbolic_shape().expect("kinked family");
                ((-a - k) / self.sigma, (a - k) / self.sigma)
            }
        }
    }

    /// Conditional moment `E(omega | z)` from the identity
    /// `(z - mu_z) omega = kappa_z + sigma^2 f'(z)`.
    pub fn omega(&self, z: f64) -> f64 {
        match self.kind {
            LikelihoodKind::SquaredError => 2.0,
            LikelihoodKind::Logistic => {
                if z.abs() < EPS_LIMIT {
                    0.25
                } else {
                    (0.5 * z).tanh() / (2.0 * z)
                }
            }
            _ => {
                let (a, _) = self.hyperbolic_shape().expect("kinked family");
                kinked_moment(z - self.mu_z, self.sigma, a)
            }
        }
    }
}

impl MixtureFamily for LikelihoodFamily {
    fn location(&self) -> f64 {
        self.mu_z
    }
    fn tilt(&self) -> f64 {
        self.kappa_z
    }
    fn scale(&self) -> f64 {
        self.sigma
    }
    fn mixing(&self) -> &MixingDistribution {
        &self.mixing
    }
    fn moment(&self, x: f64) -> f64 {
        self.omega(x)
    }
}

/// `log(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `1 / (1 + e^{-x})` without overflow.
pub fn logistic_cdf(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
