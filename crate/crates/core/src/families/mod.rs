//! Loss and penalty families written as normal variance-mean mixtures.

pub mod likelihood;
pub mod mixing;
pub mod oracle;
pub mod penalty;

pub use likelihood::{LikelihoodFamily, LikelihoodKind};
pub use mixing::{
    bessel_k_scaled, gig_density, hyperbolic_density, normal_pdf, z_density, ImproperTag,
    MixingDistribution, MixingKind,
};
pub use oracle::{identity_checks, oracle_moment_quadrature, IdentityCheck};
pub use penalty::{PenaltyFamily, PenaltyKind};

/// Half-width of the window around `0/0` points where analytic limits are used.
pub const EPS_LIMIT: f64 = 1e-8;
/// Distance from a kink below which derivatives are refused.
pub const EPS_KINK: f64 = 1e-10;
/// Cap applied to latent precision moments before they reach the M-step.
pub const MOMENT_CAP: f64 = 1e12;

/// Common view of a family as `x ~ N(location + tilt v, scale^2 v)`, `v ~ mixing`.
pub trait MixtureFamily {
    fn location(&self) -> f64;
    fn tilt(&self) -> f64;
    fn scale(&self) -> f64;
    fn mixing(&self) -> &MixingDistribution;
    /// Closed-form `E(1/v | x)`.
    fn moment(&self, x: f64) -> f64;
}

/// `scale * alpha / |w|`, clipped to the moment cap. This is the moment of
/// every family whose negative log density is `(alpha |w| - kappa w) / scale`.
pub(crate) fn kinked_moment(w: f64, scale: f64, alpha: f64) -> f64 {
    let a = w.abs();
    if a == 0.0 {
        return MOMENT_CAP;
    }
    (scale * alpha / a).min(MOMENT_CAP)
}

pub(crate) fn sign(w: f64) -> f64 {
    if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    }
}
