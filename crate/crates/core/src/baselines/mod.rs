//! Competing optimizers: IRLS, penalized IRLS, BFGS and nonlinear conjugate
//! gradient, all driving the same objective as the EM engine.

pub mod bfgs;
pub mod cg;
pub mod irls;
pub mod line_search;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

pub use bfgs::bfgs_minimize;
pub use cg::nonlinear_cg_minimize;
pub use irls::{irls_logistic, irls_penalized};

use crate::engine::{objective, objective_grad};
use crate::model::{Dataset, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineStatus {
    Converged,
    Diverged,
    Singular,
    MaxIter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub tol_grad: f64,
    pub max_iter: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            tol_grad: 1e-6,
            max_iter: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub beta: Array1<f64>,
    pub iterations: usize,
    pub wall_time: f64,
    pub status: BaselineStatus,
    pub objective: f64,
    pub max_grad: f64,
}

impl BaselineResult {
    pub fn converged(&self) -> bool {
        self.status == BaselineStatus::Converged
    }
}

/// Value-and-gradient closure for a smooth model objective. Points where the
/// gradient is undefined report a non-finite value.
pub fn model_objective<'a>(spec: &'a ModelSpec, data: &'a Dataset) -> impl FnMut(ArrayView1<f64>) -> (f64, Array1<f64>) + 'a {
    move |b| {
        let f = objective(spec, data, b);
        match objective_grad(spec, data, b) {
            Ok(g) => (f, g),
            Err(_) => (f64::NAN, Array1::from_elem(b.len(), f64::NAN)),
        }
    }
}

pub(crate) fn inf_norm(v: ArrayView1<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
