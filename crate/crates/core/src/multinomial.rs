//! Multinomial logistic regression by blockwise conditional maximization.
//! Given the other blocks, class `k` is a binary logistic model with labels
//! `2 I(y_i = k) - 1` and offsets `-c_ik`, `c_ik = log sum_{l != k} exp(x_i' beta_l)`.

use ndarray::{Array1, Array2, ArrayView2};
use serde::Serialize;

use crate::engine::{fit_single, penalty_sum, FitConfig, FitState};
use crate::error::{Error, Result};
use crate::families::LikelihoodKind;
use crate::model::{Dataset, ModelSpec, Task};

#[derive(Debug, Clone, Serialize)]
pub struct MultinomialFit {
    /// One row of coefficients per class.
    pub beta: Array2<f64>,
    /// The final conditional fit of each block.
    pub blocks: Vec<FitState>,
    /// Joint negative log posterior after each sweep, starting value first.
    pub objective_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

impl MultinomialFit {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().unwrap_or(&f64::NAN)
    }
}

fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.map(|a| (a - m).exp()).sum::<f64>().ln()
}

/// `sum_i [log sum_l exp(eta_il) - eta_{i y_i}] + sum_k sum_j g_k(beta_kj)`.
pub fn multinomial_objective(specs: &[ModelSpec], data: &Dataset, beta: ArrayView2<f64>) -> f64 {
    let eta = data.x().dot(&beta.t());
    let nll: f64 = eta
        .rows()
        .into_iter()
        .zip(data.y().iter())
        .map(|(row, &y)| log_sum_exp(row.iter().copied()) - row[y as usize - 1])
        .sum();
    nll + specs
        .iter()
        .zip(beta.rows())
        .map(|(s, b)| penalty_sum(s, b))
        .sum::<f64>()
}

/// Offsets `-c_ik` for block `k`.
fn block_offsets(eta: &Array2<f64>, k: usize) -> Array1<f64> {
    Array1::from_iter(eta.rows().into_iter().map(|row| {
        let others = row.iter().enumerate().filter(|(l, _)| *l != k).map(|(_, &v)| v);
        -log_sum_exp(others)
    }))
}

/// Cyclic blockwise fit. Each block is refit from its current value with a
/// single EM run, so every conditional step can only lower the joint
/// objective. Stops when a sweep changes the objective by less than
/// `tol_obj (1 + |objective|)` or after `max_iter` sweeps.
pub fn fit_multinomial(specs: &[ModelSpec], data: &Dataset, config: &FitConfig) -> Result<MultinomialFit> {
    config.validate()?;
    let Task::Multinomial { classes } = data.task() else {
        return Err(Error::InvalidParameter("multinomial fit needs multinomial labels".into()));
    };
    if specs.len() != classes {
        return Err(Error::DimensionMismatch(format!("{} block specs for {classes} classes", specs.len())));
    }
    if specs.iter().any(|s| s.likelihood.kind() != LikelihoodKind::Logistic) {
        return Err(Error::InvalidParameter("multinomial blocks must use the logistic likelihood".into()));
    }
    let (n, p) = (data.n(), data.p());
    let mut beta = Array2::<f64>::zeros((classes, p));
    let mut blocks: Vec<Option<FitState>> = vec![None; classes];
    let labels: Vec<Array1<f64>> = (0..classes)
        .map(|k| data.y().mapv(|y| if y as usize == k + 1 { 1.0 } else { -1.0 }))
        .collect();

    let mut trace = vec![multinomial_objective(specs, data, beta.view())];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < config.max_iter {
        for k in 0..classes {
            let eta = data.x().dot(&beta.t());
            let block = Dataset::new(data.x().to_owned(), labels[k].clone(), Task::Classification)?
                .with_offsets(block_offsets(&eta, k))?;
            let st = fit_single(&specs[k], &block, config, beta.row(k))?;
            beta.row_mut(k).assign(&st.beta);
            blocks[k] = Some(st);
        }
        sweeps += 1;
        let obj = multinomial_objective(specs, data, beta.view());
        if !obj.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        let prev = *trace.last().expect("trace starts non-empty");
        trace.push(obj);
        if (prev - obj).abs() < config.tol_obj * (1.0 + obj.abs()) {
            converged = true;
            break;
        }
    }
    log::debug!("multinomial fit: {sweeps} sweeps over {n} rows");
    Ok(MultinomialFit {
        beta,
        blocks: blocks.into_iter().map(|b| b.expect("every block fitted")).collect(),
        objective_trace: trace,
        sweeps,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{LikelihoodFamily, PenaltyFamily};
    use ndarray::array;

    #[test]
    fn offsets_exclude_own_class() {
        let eta = array![[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]];
        let o = block_offsets(&eta, 0);
        assert!((o[0] + 2f64.ln()).abs() < 1e-15);
        assert!((o[1] + (2f64.exp() + 3f64.exp()).ln()).abs() < 1e-14);
    }

    #[test]
    fn objective_at_zero_is_n_log_k() {
        let d = Dataset::new(array![[1.0], [2.0], [3.0]], array![1.0, 2.0, 3.0], Task::Multinomial { classes: 3 }).unwrap();
        let s = ModelSpec::new(LikelihoodFamily::logistic(), PenaltyFamily::ridge(1.0).unwrap());
        let v = multinomial_objective(&[s, s, s], &d, Array2::zeros((3, 1)).view());
        assert!((v - 3.0 * 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn rejects_wrong_block_count() {
        let d = Dataset::new(array![[1.0], [2.0]], array![1.0, 2.0], Task::Multinomial { classes: 2 }).unwrap();
        let s = ModelSpec::new(LikelihoodFamily::logistic(), PenaltyFamily::ridge(1.0).unwrap());
        assert!(fit_multinomial(&[s], &d, &FitConfig::default()).is_err());
    }
}
