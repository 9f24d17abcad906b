use serde::{Deserialize, Serialize};

use super::mixing::{ImproperTag, MixingDistribution};
use super::{kinked_moment, sign, MixtureFamily, EPS_KINK, MOMENT_CAP};
use crate::error::{Error, KinkLocation, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PenaltyKind {
    /// No penalty.
    Flat,
    /// `g(b) = (b - mu)^2 / (2 tau^2)`
    Ridge,
    /// `g(b) = |b - mu| / tau`
    Lasso,
    /// `g(b) = (alpha |b - mu| - kappa (b - mu)) / tau`
    Hyperbolic { alpha: f64, kappa: f64 },
    /// `g(b) = (1 + a) log(1 + |b - mu| / (a tau))`
    DoublePareto { a: f64 },
}

/// A penalty `g` with prior mixture `b ~ N(mu_beta + kappa_beta v, tau^2 v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyFamily {
    kind: PenaltyKind,
    mu_beta: f64,
    kappa_beta: f64,
    tau: f64,
    mixing: MixingDistribution,
}

impl PenaltyFamily {
    fn build(kind: PenaltyKind, tau: f64, mu_beta: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        if !mu_beta.is_finite() {
            return Err(Error::InvalidParameter(format!("prior center {mu_beta}")));
        }
        let (kappa_beta, mixing) = match kind {
            PenaltyKind::Flat => (0.0, MixingDistribution::improper(ImproperTag::FlatPrior)),
            PenaltyKind::Ridge => (0.0, MixingDistribution::point_mass(1.0)?),
            PenaltyKind::Lasso => (0.0, MixingDistribution::gig(1.0, 1.0, 0.0)?),
            PenaltyKind::Hyperbolic { alpha, kappa } => {
                if !(alpha > kappa.abs()) || !alpha.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "hyperbolic penalty needs alpha > |kappa| (alpha={alpha}, kappa={kappa})"
                    )));
                }
                (tau * kappa, MixingDistribution::gig(1.0, (alpha * alpha - kappa * kappa).sqrt(), 0.0)?)
            }
            PenaltyKind::DoublePareto { a } => {
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::InvalidParameter(format!("double-Pareto shape must be positive, got {a}")));
                }
                (0.0, MixingDistribution::exponential_gamma(a)?)
            }
        };
        Ok(Self {
            kind,
            mu_beta,
            kappa_beta,
            tau,
            mixing,
        })
    }

    pub fn flat() -> Self {
        Self::build(PenaltyKind::Flat, 1.0, 0.0).expect("flat penalty")
    }
    pub fn ridge(tau: f64) -> Result<Self> {
        Self::build(PenaltyKind::Ridge, tau, 0.0)
    }
    pub fn lasso(tau: f64) -> Result<Self> {
        Self::build(PenaltyKind::Lasso, tau, 0.0)
    }
    pub fn hyperbolic(alpha: f64, kappa: f64, tau: f64) -> Result<Self> {
        Self::build(PenaltyKind::Hyperbolic { alpha, kappa }, tau, 0.0)
    }
    pub fn double_pareto(a: f64, tau: f64) -> Result<Self> {
        Self::build(PenaltyKind::DoublePareto { a }, tau, 0.0)
    }

    /// Same penalty with a different scale.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::build(self.kind, tau, self.mu_beta)
    }

    /// Same penalty centered at `mu_beta`.
    pub fn with_center(&self, mu_beta: f64) -> Result<Self> {
        Self::build(self.kind, self.tau, mu_beta)
    }

    /// Parses `none`, `ridge`, `lasso`, `hyperbolic:alpha:kappa`, `dpareto:a`.
    pub fn parse(text: &str, tau: f64) -> Result<Self> {
        let parts: Vec<&str> = text.trim().split(':').collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad number {s:?} in penalty {text:?}")))
        };
        match parts.as_slice() {
            ["none"] | ["flat"] => Ok(Self::flat()),
            ["ridge"] => Self::ridge(tau),
            ["lasso"] => Self::lasso(tau),
            ["hyperbolic", a, k] => Self::hyperbolic(num(a)?, num(k)?, tau),
            ["dpareto", a] => Self::double_pareto(num(a)?, tau),
            _ => Err(Error::InvalidParameter(format!("unknown penalty {text:?}"))),
        }
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }
    pub fn mu_beta(&self) -> f64 {
        self.mu_beta
    }
    pub fn kappa_beta(&self) -> f64 {
        self.kappa_beta
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn name(&self) -> String {
        match self.kind {
            PenaltyKind::Flat => "none".into(),
            PenaltyKind::Ridge => "ridge".into(),
            PenaltyKind::Lasso => "lasso".into(),
            PenaltyKind::Hyperbolic { alpha, kappa } => format!("hyperbolic:{alpha}:{kappa}"),
            PenaltyKind::DoublePareto { a } => format!("dpareto:{a}"),
        }
    }

    /// Penalties whose mode can sit exactly at `mu_beta`.
    pub fn is_sparse(&self) -> bool {
        matches!(
            self.kind,
            PenaltyKind::Lasso | PenaltyKind::Hyperbolic { .. } | PenaltyKind::DoublePareto { .. }
        )
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self.kind, PenaltyKind::DoublePareto { .. })
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self.kind, PenaltyKind::Flat | PenaltyKind::Ridge)
    }

    fn hyperbolic_shape(&self) -> (f64, f64) {
        match self.kind {
            PenaltyKind::Lasso => (1.0, 0.0),
            PenaltyKind::Hyperbolic { alpha, kappa } => (alpha, kappa),
            _ => unreachable!("not a hyperbolic-type penalty"),
        }
    }

    pub fn value(&self, b: f64) -> f64 {
        let w = b - self.mu_beta;
        match self.kind {
            PenaltyKind::Flat => 0.0,
            PenaltyKind::Ridge => w * w / (2.0 * self.tau * self.tau),
            PenaltyKind::Lasso | PenaltyKind::Hyperbolic { .. } => {
                let (a, k) = self.hyperbolic_shape();
                (a * w.abs() - k * w) / self.tau
            }
            PenaltyKind::DoublePareto { a } => (1.0 + a) * (w.abs() / (a * self.tau)).ln_1p(),
        }
    }

    pub fn deriv(&self, b: f64) -> Result<f64> {
        let w = b - self.mu_beta;
        if self.is_sparse() && w.abs() <= EPS_KINK {
            return Err(Error::Kink {
                location: KinkLocation::Scalar,
                value: b,
            });
        }
        Ok(match self.kind {
            PenaltyKind::Flat => 0.0,
            PenaltyKind::Ridge => w / (self.tau * self.tau),
            PenaltyKind::Lasso | PenaltyKind::Hyperbolic { .. } => {
                let (a, k) = self.hyperbolic_shape();
                (a * sign(w) - k) / self.tau
            }
            PenaltyKind::DoublePareto { a } => (1.0 + a) * sign(w) / (a * self.tau + w.abs()),
        })
    }

    /// Subdifferential of `g` at `mu_beta` as `(lower, upper)`.
    pub fn subgradient_at_center(&self) -> (f64, f64) {
        match self.kind {
            PenaltyKind::Flat | PenaltyKind::Ridge => (0.0, 0.0),
            PenaltyKind::Lasso | PenaltyKind::Hyperbolic { .. } => {
                let (a, k) = self.hyperbolic_shape();
                ((-a - k) / self.tau, (a - k) / self.tau)
            }
            PenaltyKind::DoublePareto { a } => {
                let s = (1.0 + a) / (a * self.tau);
                (-s, s)
            }
        }
    }

    /// Conditional moment `E(lambda | b)` from
    /// `(b - mu_beta) lambda = kappa_beta + tau^2 g'(b)`. Returns infinity at
    /// `b = mu_beta` for sparsity-inducing penalties.
    pub fn lambda(&self, b: f64) -> f64 {
        let w = b - self.mu_beta;
        match self.kind {
            PenaltyKind::Flat => 0.0,
            PenaltyKind::Ridge => 1.0,
            _ if w == 0.0 => f64::INFINITY,
            PenaltyKind::Lasso | PenaltyKind::Hyperbolic { .. } => {
                kinked_moment(w, self.tau, self.hyperbolic_shape().0)
            }
            PenaltyKind::DoublePareto { a } => {
                let t = self.tau;
                (t * t * (1.0 + a) / (w.abs() * (a * t + w.abs()))).min(MOMENT_CAP)
            }
        }
    }

    /// Normalized prior density `exp(-g)` (up to the family's constant).
    pub fn prior_density(&self, b: f64) -> Result<f64> {
        let w = b - self.mu_beta;
        let t = self.tau;
        match self.kind {
            PenaltyKind::Flat => Err(Error::UnsupportedPenalty("flat prior is improper".into())),
            PenaltyKind::Ridge => Ok(super::normal_pdf(w, 0.0, t * t)),
            PenaltyKind::Lasso | PenaltyKind::Hyperbolic { .. } => {
                let (a, k) = self.hyperbolic_shape();
                Ok(super::hyperbolic_density(w / t, 0.0, a, k)? / t)
            }
            PenaltyKind::DoublePareto { a } => Ok(0.5 / t * (1.0 + w.abs() / (a * t)).powf(-(a + 1.0))),
        }
    }
}

impl MixtureFamily for PenaltyFamily {
    fn location(&self) -> f64 {
        self.mu_beta
    }
    fn tilt(&self) -> f64 {
        self.kappa_beta
    }
    fn scale(&self) -> f64 {
        self.tau
    }
    fn mixing(&self) -> &MixingDistribution {
        &self.mixing
    }
    fn moment(&self, x: f64) -> f64 {
        self.lambda(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn all_penalties() -> Vec<PenaltyFamily> {
        vec![
            PenaltyFamily::ridge(0.8).unwrap(),
            PenaltyFamily::lasso(2.0).unwrap(),
            PenaltyFamily::hyperbolic(1.0, 0.3, 1.5).unwrap(),
            PenaltyFamily::double_pareto(2.0, 1.0).unwrap(),
            PenaltyFamily::double_pareto(0.5, 0.3).unwrap().with_center(0.4).unwrap(),
        ]
    }

    #[test]
    fn spot_values() {
        let r = PenaltyFamily::ridge(1.0).unwrap();
        assert_eq!((r.value(2.0), r.deriv(2.0).unwrap()), (2.0, 2.0));
        let l = PenaltyFamily::lasso(2.0).unwrap();
        assert_eq!((l.value(-1.0), l.deriv(-1.0).unwrap()), (0.5, -0.5));
        let d = PenaltyFamily::double_pareto(2.0, 1.0).unwrap();
        assert_relative_eq!(d.value(1.0), 3.0 * 1.5f64.ln(), epsilon = 1e-15);
        assert!((d.value(1.0) - 1.2164).abs() < 1e-4);
        assert_relative_eq!(d.deriv(1.0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn spot_moments() {
        assert_eq!(PenaltyFamily::ridge(3.0).unwrap().lambda(-7.0), 1.0);
        assert_relative_eq!(PenaltyFamily::lasso(1.0).unwrap().lambda(0.5), 2.0);
        assert_relative_eq!(PenaltyFamily::double_pareto(2.0, 1.0).unwrap().lambda(1.0), 1.0);
        assert!(PenaltyFamily::lasso(1.0).unwrap().lambda(0.0).is_infinite());
        assert!(PenaltyFamily::double_pareto(2.0, 1.0).unwrap().lambda(0.0).is_infinite());
        assert_eq!(PenaltyFamily::flat().lambda(0.0), 0.0);
    }

    #[test]
    fn kinks_are_reported() {
        assert!(matches!(PenaltyFamily::lasso(1.0).unwrap().deriv(0.0), Err(Error::Kink { .. })));
        assert_eq!(PenaltyFamily::ridge(1.0).unwrap().deriv(0.0).unwrap(), 0.0);
    }

    #[test]
    fn parse_vocabulary() {
        assert_eq!(PenaltyFamily::parse("dpareto:2", 0.5).unwrap().kind(), PenaltyKind::DoublePareto { a: 2.0 });
        assert_eq!(PenaltyFamily::parse("hyperbolic:1:0.3", 1.0).unwrap().kappa_beta(), 0.3);
        assert!(PenaltyFamily::parse("hyperbolic:0.2:0.3", 1.0).is_err());
        assert!(PenaltyFamily::parse("elastic", 1.0).is_err());
        assert_eq!(PenaltyFamily::parse("none", 1.0).unwrap().kind(), PenaltyKind::Flat);
    }

    proptest! {
        #[test]
        fn moment_identity(b in -20.0f64..20.0, which in 0usize..5) {
            let fam = all_penalties()[which];
            let w = b - fam.mu_beta();
            prop_assume!(w.abs() > 1e-6);
            let lhs = w * fam.lambda(b);
            let rhs = fam.kappa_beta() + fam.tau().powi(2) * fam.deriv(b).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }

        #[test]
        fn derivative_matches_central_difference(b in -8.0f64..8.0, which in 0usize..5) {
            let fam = all_penalties()[which];
            prop_assume!((b - fam.mu_beta()).abs() > 1e-3);
            let h = 1e-6;
            let fd = (fam.value(b + h) - fam.value(b - h)) / (2.0 * h);
            let d = fam.deriv(b).unwrap();
            prop_assert!((fd - d).abs() <= 1e-6 * d.abs().max(1.0));
        }
    }
}
