//! Synthetic designs: factor-model logistic data, covariance-factor logistic
//! data, an orthogonal regression design and the quantile-regression study.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::families::likelihood::logistic_cdf;
use crate::model::{Dataset, Task};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimDesign {
    Factor { n: usize, p: usize, k: usize },
    Orthogonal { n: usize, p: usize },
    CovFactor { n: usize, p: usize, k: usize },
    Quantile { n: usize, p: usize, q: f64, sigma: f64 },
}

impl SimDesign {
    /// Parses `factor:n:p:k`, `orthogonal:n:p`, `cov-factor:n:p:k`,
    /// `quantile:n:p:q:sigma`, or bare `quantile` for the reference size.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown design {text:?}"));
        let parts: Vec<&str> = text.trim().split(':').collect();
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad());
        let real = |s: &str| s.parse::<f64>().map_err(|_| bad());
        Ok(match parts.as_slice() {
            ["factor", n, p, k] => Self::Factor { n: int(n)?, p: int(p)?, k: int(k)? },
            ["orthogonal", n, p] => Self::Orthogonal { n: int(n)?, p: int(p)? },
            ["cov-factor", n, p, k] => Self::CovFactor { n: int(n)?, p: int(p)?, k: int(k)? },
            ["quantile"] => Self::Quantile { n: 50, p: 25, q: 0.9, sigma: 5.0 },
            ["quantile", n, p, q, sigma] => Self::Quantile { n: int(n)?, p: int(p)?, q: real(q)?, sigma: real(sigma)? },
            _ => return Err(bad()),
        })
    }
}

/// A simulated training set, an optional test set and the true coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimData {
    pub train: Dataset,
    pub test: Option<Dataset>,
    pub beta_true: Array1<f64>,
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn normal_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(r))
}

fn normal_vector(r: &mut ChaCha8Rng, len: usize) -> Array1<f64> {
    Array1::from_shape_simple_fn(len, || StandardNormal.sample(r))
}

fn check_dims(n: usize, p: usize, k: usize) -> Result<()> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidParameter(format!("design needs n, p > 0 (n={n}, p={p})")));
    }
    if k > p {
        return Err(Error::InvalidParameter(format!("{k} factors for {p} predictors")));
    }
    Ok(())
}

/// `y_i = +1` with probability `logistic(x_i' beta)`, else `-1`.
pub fn logistic_labels(x: &Array2<f64>, beta: &Array1<f64>, seed: u64, stream: u64) -> Array1<f64> {
    let mut r = rng(seed, stream);
    x.dot(beta)
        .mapv(|eta| if r.random::<f64>() < logistic_cdf(eta) { 1.0 } else { -1.0 })
}

/// Rows `x_i = B f_i + a_i` with `B`, `f_i`, `a_i` standard normal and
/// standard-normal coefficients multiplied by `beta_scale`.
pub fn gen_factor_design_scaled(n: usize, p: usize, k: usize, seed: u64, beta_scale: f64) -> Result<SimData> {
    check_dims(n, p, k)?;
    let mut r0 = rng(seed, 0);
    let b = normal_matrix(&mut r0, p, k);
    let beta = normal_vector(&mut r0, p) * beta_scale;
    let mut r1 = rng(seed, 1);
    let f = normal_matrix(&mut r1, n, k);
    let a = normal_matrix(&mut r1, n, p);
    let x = f.dot(&b.t()) + a;
    let y = logistic_labels(&x, &beta, seed, 2);
    Ok(SimData {
        train: Dataset::new(x, y, Task::Classification)?,
        test: None,
        beta_true: beta,
    })
}

pub fn gen_factor_design(n: usize, p: usize, k: usize, seed: u64) -> Result<SimData> {
    gen_factor_design_scaled(n, p, k, seed, 1.0)
}

/// Rows from `N(0, B B' + Psi)` with `B` (p x k) standard normal and `Psi`
/// diagonal with chi-square(1) entries (or the identity), logistic labels.
pub fn gen_cov_factor(n: usize, p: usize, k: usize, seed: u64, psi_identity: bool) -> Result<SimData> {
    check_dims(n, p, k)?;
    let mut r0 = rng(seed, 0);
    let b = normal_matrix(&mut r0, p, k);
    let chi = ChiSquared::new(1.0).expect("valid degrees of freedom");
    let psi: Array1<f64> = if psi_identity {
        Array1::ones(p)
    } else {
        Array1::from_shape_simple_fn(p, || chi.sample(&mut r0))
    };
    let beta = normal_vector(&mut r0, p);
    let mut r1 = rng(seed, 1);
    let f = normal_matrix(&mut r1, n, k);
    let e = normal_matrix(&mut r1, n, p);
    let x = f.dot(&b.t()) + e * psi.mapv(f64::sqrt);
    let y = logistic_labels(&x, &beta, seed, 2);
    Ok(SimData {
        train: Dataset::new(x, y, Task::Classification)?,
        test: None,
        beta_true: beta,
    })
}

/// Columns orthogonal with squared norm `n`, Gaussian regression responses.
pub fn gen_orthogonal(n: usize, p: usize, seed: u64) -> Result<SimData> {
    check_dims(n, p, 0)?;
    if p > n {
        return Err(Error::InvalidParameter(format!("orthogonal design needs p <= n (p={p}, n={n})")));
    }
    let mut r0 = rng(seed, 0);
    let mut x = normal_matrix(&mut r0, n, p);
    // Modified Gram-Schmidt.
    for j in 0..p {
        for k in 0..j {
            let proj = x.column(j).dot(&x.column(k));
            let ck = x.column(k).to_owned();
            x.column_mut(j).scaled_add(-proj, &ck);
        }
        let norm = x.column(j).dot(&x.column(j)).sqrt();
        x.column_mut(j).mapv_inplace(|v| v / norm);
    }
    x *= (n as f64).sqrt();
    let beta = normal_vector(&mut r0, p);
    let mut r1 = rng(seed, 1);
    let y = x.dot(&beta) + normal_vector(&mut r1, n);
    Ok(SimData {
        train: Dataset::new(x, y, Task::Regression)?,
        test: None,
        beta_true: beta,
    })
}

/// `beta = (5, 4, 3, 2, 1, 0, ...)`, i.i.d. normal design, and errors
/// `sigma (u - Phi^{-1}(q))` so the q-th conditional quantile of `y` is
/// `x' beta`. Train and test sets use independent streams.
pub fn gen_quantile(n: usize, p: usize, q: f64, sigma: f64, seed: u64) -> Result<SimData> {
    check_dims(n, p, 0)?;
    if !(q > 0.0 && q < 1.0) || !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("quantile design needs q in (0,1), sigma > 0 (q={q}, sigma={sigma})")));
    }
    let beta = Array1::from_shape_fn(p, |j| if j < 5 { 5.0 - j as f64 } else { 0.0 });
    let shift = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(q);
    let draw = |stream: u64| -> Result<Dataset> {
        let mut r = rng(seed, stream);
        let x = normal_matrix(&mut r, n, p);
        let u = normal_vector(&mut r, n);
        let y = x.dot(&beta) + u.mapv(|v| sigma * (v - shift));
        Dataset::new(x, y, Task::Regression)
    };
    Ok(SimData {
        train: draw(1)?,
        test: Some(draw(2)?),
        beta_true: beta,
    })
}

/// The quantile study at its reference size: `n = 50`, `p = 25`, `q = 0.9`,
/// `sigma = 5`.
pub fn gen_quantile_sim(seed: u64) -> Result<SimData> {
    gen_quantile(50, 25, 0.9, 5.0, seed)
}

pub fn simulate(design: &SimDesign, seed: u64) -> Result<SimData> {
    match *design {
        SimDesign::Factor { n, p, k } => gen_factor_design(n, p, k, seed),
        SimDesign::Orthogonal { n, p } => gen_orthogonal(n, p, seed),
        SimDesign::CovFactor { n, p, k } => gen_cov_factor(n, p, k, seed, false),
        SimDesign::Quantile { n, p, q, sigma } => gen_quantile(n, p, q, sigma, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_strings() {
        assert_eq!(SimDesign::parse("factor:100:10:3").unwrap(), SimDesign::Factor { n: 100, p: 10, k: 3 });
        assert_eq!(SimDesign::parse("cov-factor:200:50:4").unwrap(), SimDesign::CovFactor { n: 200, p: 50, k: 4 });
        assert_eq!(SimDesign::parse("quantile").unwrap(), SimDesign::Quantile { n: 50, p: 25, q: 0.9, sigma: 5.0 });
        assert!(SimDesign::parse("factor:10").is_err());
        assert!(SimDesign::parse("orthogonal:a:3").is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        assert_eq!(gen_factor_design(50, 5, 2, 9).unwrap(), gen_factor_design(50, 5, 2, 9).unwrap());
        assert_ne!(gen_factor_design(50, 5, 2, 9).unwrap(), gen_factor_design(50, 5, 2, 10).unwrap());
        assert_eq!(gen_quantile_sim(3).unwrap(), gen_quantile_sim(3).unwrap());
    }

    #[test]
    fn quantile_truth_and_split() {
        let s = gen_quantile_sim(1).unwrap();
        assert_eq!(s.beta_true.iter().filter(|v| **v != 0.0).count(), 5);
        let test = s.test.unwrap();
        assert_eq!((s.train.n(), s.train.p(), test.n()), (50, 25, 50));
        assert_ne!(s.train.x(), test.x());
    }

    #[test]
    fn orthogonal_columns() {
        let s = gen_orthogonal(40, 6, 2).unwrap();
        let g = s.train.x().t().dot(&s.train.x());
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 40.0 } else { 0.0 };
                assert!((g[[i, j]] - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_factors_is_iid() {
        let s = gen_factor_design(10, 3, 0, 1).unwrap();
        assert_eq!(s.train.x().dim(), (10, 3));
    }
}
