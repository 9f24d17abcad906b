//! Regularized regression and classification through normal variance-mean
//! mixtures: an EM solver with closed-form conditional moments, quasi-Newton
//! acceleration, baseline optimizers, regularization paths and simulation
//! harnesses.

pub mod accel;
pub mod baselines;
pub mod engine;
pub mod error;
pub mod families;
pub mod linsys;
pub mod model;
pub mod multinomial;
pub mod path;
pub mod posterior_mean;
pub mod quadrature;
pub mod simbench;

pub use error::{Error, KinkLocation, Result};
pub use engine::{fit, fit_em, fit_em_accel, FitConfig, FitState, FitStatus};
pub use model::{Dataset, ModelSpec, Task};

/// Library version, echoed in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
