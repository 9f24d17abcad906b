use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dataset;

/// `rho_q(theta) = |theta|/2 + (q - 1/2) theta`.
pub fn check_loss(theta: f64, q: f64) -> f64 {
    0.5 * theta.abs() + (q - 0.5) * theta
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub est_error: f64,
    pub oos_check_loss: f64,
    pub model_size: usize,
}

/// Squared estimation error, out-of-sample check loss and number of nonzero
/// coefficients.
pub fn metrics(beta_hat: ArrayView1<f64>, beta_true: ArrayView1<f64>, test: &Dataset, q: f64) -> Result<Metrics> {
    if beta_hat.len() != beta_true.len() || beta_hat.len() != test.p() {
        return Err(Error::DimensionMismatch(format!(
            "estimate {}, truth {}, test design {} columns",
            beta_hat.len(),
            beta_true.len(),
            test.p()
        )));
    }
    let diff = &beta_hat - &beta_true;
    let resid = &test.y() - &test.linear_predictor(beta_hat);
    Ok(Metrics {
        est_error: diff.dot(&diff),
        oos_check_loss: resid.iter().map(|&r| check_loss(r, q)).sum(),
        model_size: beta_hat.iter().filter(|v| **v != 0.0).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Task;
    use ndarray::array;

    #[test]
    fn examples() {
        assert_eq!(check_loss(-3.0, 0.5), 1.5);
        assert_eq!(check_loss(2.0, 0.9), 1.8);
        let test = Dataset::new(array![[1.0, 0.0], [0.0, 1.0]], array![1.0, 3.0], Task::Regression).unwrap();
        let m = metrics(array![1.0, 2.0].view(), array![1.0, 2.0].view(), &test, 0.9).unwrap();
        assert_eq!(m.est_error, 0.0);
        assert_eq!(m.model_size, 2);
        assert!((m.oos_check_loss - 0.9).abs() < 1e-15);
    }
}
