//! Desk-scale experiments behind the benchmark suites. Every report is
//! serializable; wall-clock fields are named `wall_time` so that
//! [`strip_timing`] can drop them before runs are compared.

use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bench::{bench_cell, bench_run, BenchAlgorithm, BenchProblem, BenchReport, BenchRow, StartKind};
use super::designs::{gen_cov_factor, gen_factor_design, gen_factor_design_scaled, gen_quantile_sim};
use super::metrics::metrics;
use crate::engine::{default_start, fit, fit_single, random_start, FitConfig, FitStatus};
use crate::error::{Error, Result};
use crate::families::{oracle_moment_quadrature, LikelihoodFamily, MixtureFamily, PenaltyFamily};
use crate::model::{Dataset, ModelSpec, Task};
use crate::multinomial::fit_multinomial;
use crate::path::{cv_select_tau, path_fit, CvLoss, PathAlgorithm, PathGrid, PathResult, PointStatus};
use crate::posterior_mean::{masreliez_mean, oracle_mean, LocationLikelihood, LocationProblem};

pub const DEFAULT_SEED: u64 = 1;
/// Coefficient multiplier that makes the factor design nearly separable.
pub const NEAR_SEPARABLE_SCALE: f64 = 2.0;
/// Streams for the multistart robustness runs, apart from other streams.
const ROBUST_STREAM: u64 = 1 << 34;
/// Plain EM needs several thousand iterations on the 5000 x 50 problem.
pub const ROBUST_MAX_ITER: usize = 20_000;

/// Removes every `wall_time` and `workers` field, recursively.
pub fn strip_timing(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => {
            map.remove("wall_time");
            map.remove("workers");
            map.values_mut().for_each(strip_timing);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

/// JSON of `report` without timing fields.
pub fn canonical_json<T: Serialize>(report: &T) -> Result<String> {
    let mut v = serde_json::to_value(report).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    strip_timing(&mut v);
    serde_json::to_string(&v).map_err(|e| Error::InvalidParameter(e.to_string()))
}

fn max_abs_diff(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub family: String,
    pub x: f64,
    pub closed_form: f64,
    pub quadrature: f64,
    pub rel_error: f64,
}

/// 50 points on `[-3, 3]`, offset by half a step so none sits on a kink.
pub fn moment_grid() -> Vec<f64> {
    (0..50).map(|k| -3.0 + 6.0 * (k as f64 + 0.5) / 50.0).collect()
}

/// Closed-form conditional moments against the quadrature oracle for the
/// lasso, two hyperbolic penalties and check-loss likelihoods.
pub fn moment_oracle_suite() -> Result<Vec<MomentCheck>> {
    let mut families: Vec<(String, Box<dyn MixtureFamily + Sync>)> = vec![
        ("lasso".into(), Box::new(PenaltyFamily::lasso(1.0)?)),
        ("hyperbolic:1:0.3".into(), Box::new(PenaltyFamily::hyperbolic(1.0, 0.3, 1.0)?)),
        ("hyperbolic:2:1".into(), Box::new(PenaltyFamily::hyperbolic(2.0, 1.0, 1.0)?)),
    ];
    for q in [0.25, 0.5, 0.9] {
        families.push((format!("check:{q}"), Box::new(LikelihoodFamily::check_loss(q)?)));
    }
    let grid = moment_grid();
    let mut out = Vec::new();
    for (name, fam) in &families {
        let rows: Result<Vec<MomentCheck>> = grid
            .par_iter()
            .map(|&x| {
                let closed_form = fam.moment(x);
                let quadrature = oracle_moment_quadrature(fam.as_ref(), x)?;
                Ok(MomentCheck {
                    family: name.clone(),
                    x,
                    closed_form,
                    quadrature,
                    rel_error: (closed_form - quadrature).abs() / quadrature.abs(),
                })
            })
            .collect();
        out.extend(rows?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneRun {
    pub problem: usize,
    pub likelihood: String,
    pub penalty: String,
    pub accel: bool,
    pub status: FitStatus,
    pub steps: usize,
    /// Largest single-step rise of the objective (negative when every step
    /// decreased it).
    pub max_increase: f64,
}

/// A random `n x p` normal design with regression and classification
/// responses drawn from the same coefficients.
fn random_problem(n: usize, p: usize, seed: u64, stream: u64) -> Result<(Dataset, Dataset)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let x = Array2::from_shape_simple_fn((n, p), &mut draw);
    let beta = Array1::from_shape_simple_fn(p, &mut draw);
    let eta = x.dot(&beta);
    let noise = Array1::from_shape_simple_fn(n, &mut draw);
    let y = &eta + &noise;
    let labels = Array1::from_iter(eta.iter().zip(noise.iter()).map(|(e, z)| if e + z > 0.0 { 1.0 } else { -1.0 }));
    Ok((
        Dataset::new(x.clone(), y, Task::Regression)?,
        Dataset::new(x, labels, Task::Classification)?,
    ))
}

/// EM and accelerated EM traces on `problems` random problems for five
/// likelihoods and three penalties.
pub fn monotone_suite(problems: usize, seed: u64) -> Result<Vec<MonotoneRun>> {
    let likelihoods = [
        LikelihoodFamily::squared_error(1.0)?,
        LikelihoodFamily::absolute_error(1.0)?,
        LikelihoodFamily::check_loss(0.75)?,
        LikelihoodFamily::svm_hinge(),
        LikelihoodFamily::logistic(),
    ];
    let penalties = [
        PenaltyFamily::ridge(1.0)?,
        PenaltyFamily::lasso(1.0)?,
        PenaltyFamily::double_pareto(2.0, 1.0)?,
    ];
    let mut cells = Vec::new();
    for r in 0..problems {
        for lik in likelihoods {
            for pen in penalties {
                for accel in [false, true] {
                    cells.push((r, lik, pen, accel));
                }
            }
        }
    }
    let data: Result<Vec<(Dataset, Dataset)>> = (0..problems).map(|r| random_problem(60, 6, seed, r as u64)).collect();
    let data = data?;
    cells
        .par_iter()
        .map(|&(r, lik, pen, accel)| {
            let d = if lik.is_classification() { &data[r].1 } else { &data[r].0 };
            let spec = ModelSpec::new(lik, pen);
            let cfg = FitConfig { accel, seed, ..FitConfig::default() };
            let st = fit_single(&spec, d, &cfg, default_start(d.p()).view())?;
            let max_increase = st
                .objective_trace
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(MonotoneRun {
                problem: r,
                likelihood: lik.name(),
                penalty: pen.name(),
                accel,
                status: st.status,
                steps: st.objective_trace.len().saturating_sub(1),
                max_increase,
            })
        })
        .collect()
}

fn flat_logistic() -> ModelSpec {
    ModelSpec::new(LikelihoodFamily::logistic(), PenaltyFamily::flat())
}

/// The unpenalized logistic factor-design problem shared by the optimizer
/// comparisons.
pub fn factor_problem(n: usize, p: usize, seed: u64) -> Result<BenchProblem> {
    Ok(BenchProblem {
        name: "factor".into(),
        spec: flat_logistic(),
        data: gen_factor_design(n, p, 10.min(p), seed)?.train,
    })
}

pub fn near_separable_problem(n: usize, p: usize, seed: u64) -> Result<BenchProblem> {
    Ok(BenchProblem {
        name: "near-separable".into(),
        spec: flat_logistic(),
        data: gen_factor_design_scaled(n, p, 10.min(p), seed, NEAR_SEPARABLE_SCALE)?.train,
    })
}

/// All six algorithms from both starts on the factor problem and its
/// near-separable variant.
pub fn logistic_suite(n: usize, p: usize, seed: u64) -> Result<BenchReport> {
    let problems = [factor_problem(n, p, seed)?, near_separable_problem(n, p, seed)?];
    let config = FitConfig { seed, ..FitConfig::default() };
    Ok(bench_run(&problems, &BenchAlgorithm::ALL, &StartKind::ALL, &config))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub rows: Vec<BenchRow>,
    /// Largest infinity-norm distance between any two algorithms' estimates.
    pub max_deviation: f64,
}

/// EM, accelerated EM, BFGS, CG and IRLS from `1e-3 * 1` on the factor
/// problem with `n = 2000`, `p = 20`.
pub fn optimizer_agreement(seed: u64) -> Result<AgreementReport> {
    let prob = factor_problem(2000, 20, seed)?;
    let algos = [BenchAlgorithm::Em, BenchAlgorithm::EmAccel, BenchAlgorithm::Bfgs, BenchAlgorithm::Cg, BenchAlgorithm::Irls];
    let config = FitConfig { seed, ..FitConfig::default() };
    let rows = bench_run(std::slice::from_ref(&prob), &algos, &[StartKind::Fixed], &config).rows;
    let mut max_deviation = 0.0_f64;
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            max_deviation = max_deviation.max(max_abs_diff(a.beta.view(), b.beta.view()));
        }
    }
    Ok(AgreementReport { rows, max_deviation })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub start_index: usize,
    #[serde(flatten)]
    pub cell: BenchRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub rows: Vec<RobustnessRow>,
}

/// EM and accelerated EM from `starts` random points of `[-1, 1]^p` on the
/// factor problem (`n = 5000`, `p = 50`), and IRLS from the same points on
/// its near-separable variant.
pub fn robustness(seed: u64, starts: usize) -> Result<RobustnessReport> {
    let (n, p) = (5000, 50);
    let factor = factor_problem(n, p, seed)?;
    let separable = near_separable_problem(n, p, seed)?;
    let config = FitConfig {
        seed,
        max_iter: ROBUST_MAX_ITER,
        ..FitConfig::default()
    };
    let mut cells = Vec::new();
    for i in 0..starts {
        cells.push((i, &factor, BenchAlgorithm::Em));
        cells.push((i, &factor, BenchAlgorithm::EmAccel));
        cells.push((i, &separable, BenchAlgorithm::Irls));
    }
    let rows = cells
        .par_iter()
        .map(|&(i, prob, algo)| {
            let beta0 = random_start(p, seed, ROBUST_STREAM + i as u64);
            RobustnessRow {
                start_index: i,
                cell: bench_cell(prob, algo, StartKind::RandomCube, beta0.view(), &config),
            }
        })
        .collect();
    Ok(RobustnessReport { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccelerationReport {
    pub em_iterations: usize,
    pub accel_iterations: usize,
    pub em_status: FitStatus,
    pub accel_status: FitStatus,
    pub em_objective: f64,
    pub accel_objective: f64,
    /// Infinity-norm distance between the two estimates.
    pub max_deviation: f64,
    pub em_wall_time: WallTime,
    pub accel_wall_time: WallTime,
}

/// Seconds, serialized under a `wall_time` key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallTime {
    pub wall_time: f64,
}

/// Plain against accelerated EM on the optimizer-agreement problem.
pub fn acceleration_benefit(seed: u64) -> Result<AccelerationReport> {
    let prob = factor_problem(2000, 20, seed)?;
    let start = default_start(prob.data.p());
    let run = |accel| -> Result<(crate::engine::FitState, f64)> {
        let t = Instant::now();
        let st = fit_single(&prob.spec, &prob.data, &FitConfig { accel, seed, ..FitConfig::default() }, start.view())?;
        Ok((st, t.elapsed().as_secs_f64()))
    };
    let (em, t_em) = run(false)?;
    let (acc, t_acc) = run(true)?;
    Ok(AccelerationReport {
        em_iterations: em.iter,
        accel_iterations: acc.iter,
        em_status: em.status,
        accel_status: acc.status,
        em_objective: em.objective(),
        accel_objective: acc.objective(),
        max_deviation: max_abs_diff(em.beta.view(), acc.beta.view()),
        em_wall_time: WallTime { wall_time: t_em },
        accel_wall_time: WallTime { wall_time: t_acc },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    pub em: PathResult,
    pub irls: PathResult,
    /// Grid points where both fits converged.
    pub joint_points: usize,
    /// Largest `EM objective - IRLS objective` over the joint points.
    pub max_excess: f64,
    pub irls_singular: usize,
    pub wall_time: f64,
}

/// Accelerated-EM and penalized-IRLS paths for the double-Pareto penalty
/// (`a = 2`) over `tau` in `[1e-3, 1e3]` on covariance-factor data with
/// `n = 200`, `p = 50`, four factors.
pub fn path_robustness(seed: u64) -> Result<PathReport> {
    let t = Instant::now();
    let data = gen_cov_factor(200, 50, 4, seed, false)?.train;
    let spec = ModelSpec::new(LikelihoodFamily::logistic(), PenaltyFamily::double_pareto(2.0, 1.0)?);
    let grid = PathGrid::default();
    let config = FitConfig { seed, ..FitConfig::default() };
    let em = path_fit(&spec, &data, &grid, &config, PathAlgorithm::EmAccel);
    let irls = path_fit(&spec, &data, &grid, &config, PathAlgorithm::IrlsPen);
    let mut joint_points = 0;
    let mut max_excess = f64::NEG_INFINITY;
    for (a, b) in em.points.iter().zip(irls.points.iter()) {
        if a.status == PointStatus::Converged && b.status == PointStatus::Converged {
            joint_points += 1;
            max_excess = max_excess.max(a.objective - b.objective);
        }
    }
    let irls_singular = irls.points.iter().filter(|p| p.status == PointStatus::Singular).count();
    Ok(PathReport {
        em,
        irls,
        joint_points,
        max_excess,
        irls_singular,
        wall_time: t.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub replicate: usize,
    pub method: String,
    /// Cross-validated `tau`; absent for the unpenalized fit.
    pub tau: Option<f64>,
    pub status: FitStatus,
    pub est_error: f64,
    pub oos_check_loss: f64,
    pub model_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSummary {
    pub method: String,
    pub mean_est_error: f64,
    pub se_est_error: f64,
    pub mean_check_loss: f64,
    pub se_check_loss: f64,
    pub mean_model_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileReport {
    pub rows: Vec<QuantileRow>,
    pub summary: Vec<QuantileSummary>,
}

impl QuantileReport {
    pub fn method(&self, name: &str) -> Option<&QuantileSummary> {
        self.summary.iter().find(|s| s.method == name)
    }
}

pub const QUANTILE_LEVEL: f64 = 0.9;

/// Grid for the cross-validated `tau` of the quantile study.
pub fn quantile_cv_grid() -> PathGrid {
    PathGrid::log_spaced(1e-2, 1e2, 30).expect("valid grid")
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn quantile_replicate(r: usize, seed: u64) -> Result<Vec<QuantileRow>> {
    let rep_seed = seed.wrapping_mul(1_000_003).wrapping_add(r as u64);
    let sim = gen_quantile_sim(rep_seed)?;
    let test = sim.test.as_ref().expect("quantile design has a test set");
    let lik = LikelihoodFamily::check_loss(QUANTILE_LEVEL)?;
    let config = FitConfig { seed: rep_seed, ..FitConfig::default() };
    let start = default_start(sim.train.p());
    let mut rows = Vec::new();
    let mut push = |method: String, tau, st: crate::engine::FitState| -> Result<()> {
        let m = metrics(st.beta.view(), sim.beta_true.view(), test, QUANTILE_LEVEL)?;
        rows.push(QuantileRow {
            replicate: r,
            method,
            tau,
            status: st.status,
            est_error: m.est_error,
            oos_check_loss: m.oos_check_loss,
            model_size: m.model_size,
        });
        Ok(())
    };
    let flat = fit(&ModelSpec::new(lik, PenaltyFamily::flat()), &sim.train, &config, start.view())?;
    push("none".into(), None, flat)?;
    let grid = quantile_cv_grid();
    for pen in [PenaltyFamily::lasso(1.0)?, PenaltyFamily::double_pareto(3.0, 1.0)?] {
        let spec = ModelSpec::new(lik, pen);
        let cv = cv_select_tau(&spec, &sim.train, &grid, 5, &config, CvLoss::CheckLoss { q: QUANTILE_LEVEL })?;
        let chosen = ModelSpec::new(lik, pen.with_tau(cv.tau_star)?);
        let st = fit(&chosen, &sim.train, &config, start.view())?;
        push(pen.name(), Some(cv.tau_star), st)?;
    }
    Ok(rows)
}

/// Quantile regression at `q = 0.9` on `replicates` simulated data sets:
/// unpenalized, and lasso and double-Pareto (`a = 3`) with five-fold
/// cross-validated `tau`.
pub fn quantile_study(replicates: usize, seed: u64) -> Result<QuantileReport> {
    let per_rep: Result<Vec<Vec<QuantileRow>>> = (0..replicates).into_par_iter().map(|r| quantile_replicate(r, seed)).collect();
    let rows: Vec<QuantileRow> = per_rep?.into_iter().flatten().collect();
    let mut summary = Vec::new();
    for method in ["none", "lasso", "dpareto:3"] {
        let sel: Vec<&QuantileRow> = rows.iter().filter(|r| r.method == method).collect();
        let est: Vec<f64> = sel.iter().map(|r| r.est_error).collect();
        let chk: Vec<f64> = sel.iter().map(|r| r.oos_check_loss).collect();
        let (mean_est_error, se_est_error) = mean_se(&est);
        let (mean_check_loss, se_check_loss) = mean_se(&chk);
        summary.push(QuantileSummary {
            method: method.into(),
            mean_est_error,
            se_est_error,
            mean_check_loss,
            se_check_loss,
            mean_model_size: sel.iter().map(|r| r.model_size as f64).sum::<f64>() / sel.len().max(1) as f64,
        });
    }
    Ok(QuantileReport { rows, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasreliezRow {
    pub prior: String,
    pub likelihood: LocationLikelihood,
    pub y: f64,
    pub masreliez: f64,
    /// The exact conjugate mean for the Gaussian-Gaussian rows, the
    /// quadrature posterior mean otherwise.
    pub reference: f64,
    pub exact: bool,
    pub abs_error: f64,
}

/// Posterior means on `y in {-3, ..., 3}`: the Gaussian-Gaussian case
/// against its closed form, and lasso and hyperbolic priors under Gaussian,
/// Laplace and logistic likelihoods against the quadrature oracle.
pub fn masreliez_suite() -> Result<Vec<MasreliezRow>> {
    let ys: Vec<f64> = (-3..=3).map(f64::from).collect();
    let mut cells = Vec::new();
    let gauss = LocationLikelihood::Gaussian { sigma: 1.0 };
    for &y in &ys {
        cells.push((PenaltyFamily::ridge(1.0)?, gauss, y, true));
    }
    let priors = [
        PenaltyFamily::lasso(1.0)?,
        PenaltyFamily::hyperbolic(1.0, 0.3, 1.0)?,
        PenaltyFamily::hyperbolic(2.0, 1.0, 0.8)?,
    ];
    let liks = [gauss, LocationLikelihood::Laplace { scale: 1.0 }, LocationLikelihood::Logistic { scale: 0.7 }];
    for prior in priors {
        for lik in liks {
            for &y in &ys {
                cells.push((prior, lik, y, false));
            }
        }
    }
    cells
        .par_iter()
        .map(|&(prior, lik, y, exact)| {
            let problem = LocationProblem::new(lik, prior, y)?;
            let masreliez = masreliez_mean(&problem)?;
            // Unit prior and noise variances: the posterior mean halves y.
            let reference = if exact { 0.5 * y } else { oracle_mean(&problem)? };
            Ok(MasreliezRow {
                prior: prior.name(),
                likelihood: lik,
                y,
                masreliez,
                reference,
                exact,
                abs_error: (masreliez - reference).abs(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialReport {
    pub binary_beta: Array1<f64>,
    pub difference: Array1<f64>,
    pub max_gap: f64,
    pub objective_trace: Vec<f64>,
    pub max_increase: f64,
    pub sweeps: usize,
    pub converged: bool,
}

/// Two-class blockwise fit against the binary logistic fit of the class
/// difference on a 50 x 3 toy. Both blocks carry ridge priors of scale 1, so
/// the difference has a ridge prior of scale `sqrt(2)`.
pub fn multinomial_reduction(seed: u64) -> Result<MultinomialReport> {
    let sim = gen_factor_design(50, 3, 0, seed)?;
    let x = sim.train.x().to_owned();
    let binary_y = sim.train.y().to_owned();
    let classes = binary_y.mapv(|v| if v > 0.0 { 1.0 } else { 2.0 });
    let multi = Dataset::new(x.clone(), classes, Task::Multinomial { classes: 2 })?;
    let block = ModelSpec::new(LikelihoodFamily::logistic(), PenaltyFamily::ridge(1.0)?);
    let config = FitConfig { seed, tol_obj: 1e-15, tol_grad: 1e-9, ..FitConfig::default() };
    let fit = fit_multinomial(&[block, block], &multi, &config)?;
    let binary = Dataset::new(x, binary_y, Task::Classification)?;
    let diff_spec = ModelSpec::new(LikelihoodFamily::logistic(), PenaltyFamily::ridge(2f64.sqrt())?);
    let b = fit_single(&diff_spec, &binary, &config, default_start(3).view())?;
    let difference = &fit.beta.row(0) - &fit.beta.row(1);
    let max_increase = fit
        .objective_trace
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(MultinomialReport {
        max_gap: max_abs_diff(difference.view(), b.beta.view()),
        binary_beta: b.beta,
        difference,
        objective_trace: fit.objective_trace,
        max_increase,
        sweeps: fit.sweeps,
        converged: fit.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_avoids_zero() {
        let g = moment_grid();
        assert_eq!(g.len(), 50);
        assert!(g.iter().all(|x| x.abs() > 1e-3 && x.abs() < 3.0));
    }

    #[test]
    fn timing_is_stripped() {
        let mut v = serde_json::json!({"a": 1, "wall_time": 2.0, "rows": [{"wall_time": 1.0, "b": 2}], "workers": 4});
        strip_timing(&mut v);
        assert_eq!(v, serde_json::json!({"a": 1, "rows": [{"b": 2}]}));
    }

    #[test]
    fn mean_and_standard_error() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
