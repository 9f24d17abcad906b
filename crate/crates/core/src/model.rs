use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{LikelihoodFamily, PenaltyFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    /// Responses coded `-1` / `+1`.
    Classification,
    /// Responses are class labels `1..=classes` stored as floats.
    Multinomial { classes: usize },
}

/// Design matrix, response and optional per-observation offsets added to
/// the linear predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
    task: Task,
    offsets: Option<Array1<f64>>,
    column_names: Vec<String>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>, task: Task) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 || p == 0 {
            return Err(Error::InsufficientData(format!("design is {n} x {p}")));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!("{n} rows but {} responses", y.len())));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("data contain non-finite values".into()));
        }
        match task {
            Task::Regression => {}
            Task::Classification => {
                if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "classification responses must be -1 or +1, found {bad}"
                    )));
                }
            }
            Task::Multinomial { classes } => {
                if classes < 2 {
                    return Err(Error::InvalidParameter("multinomial needs at least 2 classes".into()));
                }
                if let Some(bad) = y
                    .iter()
                    .find(|&&v| v.fract() != 0.0 || v < 1.0 || v > classes as f64)
                {
                    return Err(Error::InvalidParameter(format!(
                        "multinomial labels must lie in 1..={classes}, found {bad}"
                    )));
                }
            }
        }
        let column_names = (0..p).map(|j| format!("x{}", j + 1)).collect();
        Ok(Self {
            x,
            y,
            task,
            offsets: None,
            column_names,
        })
    }

    /// Prepends a column of ones named `intercept`.
    pub fn with_intercept(mut self) -> Self {
        let (n, p) = self.x.dim();
        let mut x = Array2::ones((n, p + 1));
        x.slice_mut(s![.., 1..]).assign(&self.x);
        self.x = x;
        self.column_names.insert(0, "intercept".into());
        self
    }

    pub fn with_offsets(mut self, offsets: Array1<f64>) -> Result<Self> {
        if offsets.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "{} offsets for {} rows",
                offsets.len(),
                self.n()
            )));
        }
        self.offsets = Some(offsets);
        Ok(self)
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} columns",
                names.len(),
                self.p()
            )));
        }
        self.column_names = names;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }
    pub fn p(&self) -> usize {
        self.x.ncols()
    }
    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }
    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }
    pub fn task(&self) -> Task {
        self.task
    }
    pub fn offsets(&self) -> Option<ArrayView1<'_, f64>> {
        self.offsets.as_ref().map(|o| o.view())
    }
    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Rows selected by `idx`, keeping task, names and offsets.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let x = self.x.select(ndarray::Axis(0), idx);
        let y = self.y.select(ndarray::Axis(0), idx);
        let mut d = Self::new(x, y, self.task)?;
        d.column_names = self.column_names.clone();
        if let Some(o) = &self.offsets {
            d.offsets = Some(o.select(ndarray::Axis(0), idx));
        }
        Ok(d)
    }

    /// Linear predictor `X beta + offsets`.
    pub fn linear_predictor(&self, beta: ArrayView1<f64>) -> Array1<f64> {
        let mut eta = self.x.dot(&beta);
        if let Some(o) = &self.offsets {
            eta += o;
        }
        eta
    }
}

/// Likelihood, penalty, and whether column 0 is an unpenalized intercept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub likelihood: LikelihoodFamily,
    pub penalty: PenaltyFamily,
    pub intercept: bool,
}

impl ModelSpec {
    pub fn new(likelihood: LikelihoodFamily, penalty: PenaltyFamily) -> Self {
        Self {
            likelihood,
            penalty,
            intercept: false,
        }
    }

    pub fn with_intercept(mut self, intercept: bool) -> Self {
        self.intercept = intercept;
        self
    }

    pub fn with_penalty(mut self, penalty: PenaltyFamily) -> Self {
        self.penalty = penalty;
        self
    }

    pub fn is_penalized(&self, j: usize) -> bool {
        !(self.intercept && j == 0)
    }

    pub fn check(&self, data: &Dataset) -> Result<()> {
        let classification = self.likelihood.is_classification();
        match data.task() {
            Task::Classification if !classification => Err(Error::InvalidParameter(format!(
                "likelihood {} needs a regression task",
                self.likelihood.name()
            ))),
            Task::Regression if classification => Err(Error::InvalidParameter(format!(
                "likelihood {} needs responses coded -1/+1",
                self.likelihood.name()
            ))),
            Task::Multinomial { .. } => Err(Error::InvalidParameter(
                "multinomial data must be fitted blockwise".into(),
            )),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn validation() {
        assert!(Dataset::new(array![[1.0]], array![0.5], Task::Classification).is_err());
        assert!(Dataset::new(array![[1.0], [2.0]], array![1.0], Task::Regression).is_err());
        assert!(Dataset::new(array![[1.0]], array![3.0], Task::Multinomial { classes: 2 }).is_err());
        assert!(Dataset::new(Array2::zeros((0, 2)), Array1::zeros(0), Task::Regression).is_err());
        let d = Dataset::new(array![[1.0, 2.0]], array![-1.0], Task::Classification).unwrap();
        assert_eq!(d.with_intercept().x(), array![[1.0, 1.0, 2.0]]);
    }

    #[test]
    fn task_compatibility() {
        let d = Dataset::new(array![[1.0]], array![1.0], Task::Classification).unwrap();
        let reg = ModelSpec::new(LikelihoodFamily::squared_error(1.0).unwrap(), PenaltyFamily::flat());
        assert!(reg.check(&d).is_err());
        let cls = ModelSpec::new(LikelihoodFamily::logistic(), PenaltyFamily::flat());
        assert!(cls.check(&d).is_ok());
    }
}
