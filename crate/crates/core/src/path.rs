//! Warm-started regularization paths over `tau` and cross-validated choice
//! of `tau`.

use ndarray::{Array1, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::irls::irls_penalized;
use crate::baselines::{BaselineConfig, BaselineStatus};
use crate::engine::{default_start, fit_single, objective, restart_points, FailureReason, FitConfig, FitState, FitStatus};
use crate::error::{Error, Result};
use crate::families::likelihood::softplus;
use crate::model::{Dataset, ModelSpec, Task};
use crate::simbench::metrics::check_loss;

/// Stream used for the fold shuffle, kept apart from the restart streams.
const FOLD_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathGrid {
    tau_values: Vec<f64>,
}

impl PathGrid {
    pub fn new(tau_values: Vec<f64>) -> Result<Self> {
        if tau_values.len() < 2 {
            return Err(Error::InvalidParameter(format!("a path needs at least 2 points, got {}", tau_values.len())));
        }
        if tau_values.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::InvalidParameter("grid values must be positive and finite".into()));
        }
        if tau_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("grid must be strictly increasing".into()));
        }
        Ok(Self { tau_values })
    }

    /// `k` points equally spaced in `log(tau)` from `lo` to `hi`.
    pub fn log_spaced(lo: f64, hi: f64, k: usize) -> Result<Self> {
        if k < 2 || !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad grid {lo}:{hi}:{k}")));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let mut v: Vec<f64> = (0..k).map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp()).collect();
        v[0] = lo;
        v[k - 1] = hi;
        Self::new(v)
    }

    /// Parses `lo:hi:K`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || Error::InvalidParameter(format!("grid '{text}' is not lo:hi:K"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let k: usize = parts[2].trim().parse().map_err(|_| bad())?;
        Self::log_spaced(lo, hi, k)
    }

    pub fn values(&self) -> &[f64] {
        &self.tau_values
    }

    pub fn len(&self) -> usize {
        self.tau_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau_values.is_empty()
    }
}

impl Default for PathGrid {
    fn default() -> Self {
        Self::log_spaced(1e-3, 1e3, 100).expect("valid default grid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathAlgorithm {
    Em,
    EmAccel,
    IrlsPen,
}

impl PathAlgorithm {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "em" => Ok(Self::Em),
            "em-accel" => Ok(Self::EmAccel),
            "irls-pen" => Ok(Self::IrlsPen),
            _ => Err(Error::InvalidParameter(format!("unknown path algorithm '{text}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Em => "em",
            Self::EmAccel => "em-accel",
            Self::IrlsPen => "irls-pen",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Converged,
    MaxIter,
    Singular,
    Diverged,
    NonFiniteObjective,
    Error,
}

impl PointStatus {
    pub fn is_good(&self) -> bool {
        matches!(self, Self::Converged | Self::MaxIter)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::MaxIter => "max_iter",
            Self::Singular => "singular",
            Self::Diverged => "diverged",
            Self::NonFiniteObjective => "non_finite_objective",
            Self::Error => "error",
        }
    }

    pub fn from_fit(s: FitStatus) -> Self {
        match s {
            FitStatus::Converged => Self::Converged,
            FitStatus::Running | FitStatus::MaxIter => Self::MaxIter,
            FitStatus::Failed(FailureReason::SingularSystem) => Self::Singular,
            FitStatus::Failed(FailureReason::NonFiniteObjective) => Self::NonFiniteObjective,
        }
    }

    pub fn from_baseline(s: BaselineStatus) -> Self {
        match s {
            BaselineStatus::Converged => Self::Converged,
            BaselineStatus::MaxIter => Self::MaxIter,
            BaselineStatus::Singular => Self::Singular,
            BaselineStatus::Diverged => Self::Diverged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub tau: f64,
    pub log_inv_tau: f64,
    pub beta: Array1<f64>,
    pub objective: f64,
    pub active_size: usize,
    pub status: PointStatus,
    pub iterations: usize,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub algorithm: PathAlgorithm,
    pub points: Vec<PathPoint>,
}

impl PathResult {
    pub fn all_converged(&self) -> bool {
        self.points.iter().all(|p| p.status == PointStatus::Converged)
    }
}

fn spec_at(spec: &ModelSpec, tau: f64) -> Result<ModelSpec> {
    Ok(ModelSpec {
        penalty: spec.penalty.with_tau(tau)?,
        ..*spec
    })
}

/// Distinct local modes carried between neighbouring grid points when EM
/// fits a non-convex penalty.
pub const BEAM_WIDTH: usize = 3;
/// Two solutions closer than this in the infinity norm are one mode.
const MODE_TOL: f64 = 1e-6;

fn em_point(st: FitState, s: &ModelSpec, tau: f64) -> PathPoint {
    PathPoint {
        tau,
        log_inv_tau: -tau.ln(),
        objective: st.objective(),
        active_size: st.beta.iter().filter(|v| **v != s.penalty.mu_beta()).count(),
        status: PointStatus::from_fit(st.status),
        iterations: st.iter,
        beta: st.beta,
        message: None,
    }
}

/// Keeps the best `BEAM_WIDTH` distinct good solutions, lowest objective
/// first (earlier entries win ties).
fn merge_modes(mut pts: Vec<PathPoint>) -> Vec<PathPoint> {
    pts.retain(|p| p.status.is_good() && p.objective.is_finite());
    pts.sort_by(|a, b| a.objective.total_cmp(&b.objective));
    let mut beam: Vec<PathPoint> = Vec::new();
    for p in pts {
        let dup = beam
            .iter()
            .any(|m| m.beta.iter().zip(p.beta.iter()).all(|(a, b)| (a - b).abs() <= MODE_TOL));
        if !dup {
            beam.push(p);
            if beam.len() == BEAM_WIDTH {
                break;
            }
        }
    }
    beam
}

/// Fits one grid point. For EM on a non-convex penalty every warm start is
/// tried as given and with its exact zeros revived at the cold-start value
/// (so coefficients pruned earlier on the path can re-enter), together with
/// the cold start `1e-3 * 1` and the seeded restarts when `config.restarts`
/// is positive. Returns the best point and the beam of distinct modes found;
/// other algorithms use only the first warm start.
fn fit_point(
    spec: &ModelSpec,
    data: &Dataset,
    tau: f64,
    config: &FitConfig,
    algo: PathAlgorithm,
    warm: &[Array1<f64>],
) -> (PathPoint, Vec<PathPoint>) {
    let log_inv_tau = -tau.ln();
    let start = warm[0].view();
    let failed = |msg: String| PathPoint {
        tau,
        log_inv_tau,
        beta: start.to_owned(),
        objective: f64::NAN,
        active_size: 0,
        status: PointStatus::Error,
        iterations: 0,
        message: Some(msg),
    };
    let s = match spec_at(spec, tau) {
        Ok(s) => s,
        Err(e) => return (failed(e.to_string()), Vec::new()),
    };
    let single = |pt: PathPoint| {
        let beam = merge_modes(vec![pt.clone()]);
        (pt, beam)
    };
    match algo {
        PathAlgorithm::Em | PathAlgorithm::EmAccel => {
            let cfg = FitConfig {
                accel: algo == PathAlgorithm::EmAccel,
                ..*config
            };
            if s.penalty.is_convex() {
                return single(match fit_single(&s, data, &cfg, start) {
                    Ok(st) => em_point(st, &s, tau),
                    Err(e) => failed(e.to_string()),
                });
            }
            let cold = default_start(data.p());
            let mut starts: Vec<Array1<f64>> = Vec::new();
            let mut push = |cand: Array1<f64>| {
                if !starts.contains(&cand) {
                    starts.push(cand);
                }
            };
            for w in warm {
                push(w.clone());
                push(Array1::from_shape_fn(data.p(), |j| if w[j] == s.penalty.mu_beta() { cold[j] } else { w[j] }));
            }
            if config.restarts > 0 {
                push(cold);
                restart_points(data.p(), &cfg).into_iter().for_each(&mut push);
            }
            let runs: Vec<Result<FitState>> = starts.par_iter().map(|b| fit_single(&s, data, &cfg, b.view())).collect();
            let mut pts = Vec::with_capacity(runs.len());
            let mut first_err = None;
            for r in runs {
                match r {
                    Ok(st) => pts.push(em_point(st, &s, tau)),
                    Err(e) => {
                        first_err.get_or_insert(e);
                    }
                }
            }
            let beam = merge_modes(pts.clone());
            let best = match beam.first() {
                Some(b) => b.clone(),
                None => match (pts.into_iter().next(), first_err) {
                    (Some(p), _) => p,
                    (None, Some(e)) => failed(e.to_string()),
                    (None, None) => failed("no starting values".into()),
                },
            };
            (best, beam)
        }
        PathAlgorithm::IrlsPen => {
            let bc = BaselineConfig {
                tol_grad: config.tol_grad,
                max_iter: config.max_iter,
            };
            single(match irls_penalized(&s, data, &bc, start) {
                Ok(r) => PathPoint {
                    tau,
                    log_inv_tau,
                    objective: objective(&s, data, r.beta.view()),
                    active_size: r.beta.iter().filter(|v| (**v - s.penalty.mu_beta()).abs() > config.prune_eps).count(),
                    status: PointStatus::from_baseline(r.status),
                    iterations: r.iterations,
                    beta: r.beta,
                    message: None,
                },
                Err(e) => failed(e.to_string()),
            })
        }
    }
}

/// Fits the grid in increasing `tau`, starting the first point at `1e-3 * 1`
/// and every later point from the previous point's solution. For EM on a
/// non-convex penalty the previous point's beam of modes is carried instead,
/// and a backward sweep follows: each point is refitted from its right
/// neighbour's beam and the lower objective is kept, so modes picked up late
/// in the path are carried back to smaller `tau`.
pub fn path_fit(spec: &ModelSpec, data: &Dataset, grid: &PathGrid, config: &FitConfig, algo: PathAlgorithm) -> PathResult {
    let mut warm = vec![default_start(data.p())];
    let mut points = Vec::with_capacity(grid.len());
    let mut beams = Vec::with_capacity(grid.len());
    for &tau in grid.values() {
        let (pt, beam) = fit_point(spec, data, tau, config, algo, &warm);
        if beam.is_empty() {
            log::info!("{} path point tau={tau:e} ended {:?}", algo.name(), pt.status);
        } else {
            warm = beam.iter().map(|m| m.beta.clone()).collect();
        }
        points.push(pt);
        beams.push(beam);
    }
    if algo != PathAlgorithm::IrlsPen && !spec.penalty.is_convex() {
        let single = FitConfig { restarts: 0, ..*config };
        for k in (0..points.len().saturating_sub(1)).rev() {
            if beams[k + 1].is_empty() {
                continue;
            }
            let starts: Vec<Array1<f64>> = beams[k + 1].iter().map(|m| m.beta.clone()).collect();
            let (pt, beam) = fit_point(spec, data, points[k].tau, &single, algo, &starts);
            let better = match (pt.status.is_good(), points[k].status.is_good()) {
                (true, false) => true,
                (true, true) => pt.objective < points[k].objective,
                _ => false,
            };
            let extra: usize = beam.iter().map(|m| m.iterations).sum();
            let mut merged = beam;
            merged.extend(std::mem::take(&mut beams[k]));
            beams[k] = merge_modes(merged);
            if better {
                let iterations = points[k].iterations + extra;
                points[k] = PathPoint { iterations, ..pt };
            }
        }
    }
    PathResult { algorithm: algo, points }
}

/// Fits every grid point independently from the cold start `1e-3 * 1`.
pub fn path_fit_cold(spec: &ModelSpec, data: &Dataset, grid: &PathGrid, config: &FitConfig, algo: PathAlgorithm) -> PathResult {
    let cold = default_start(data.p());
    let points = grid
        .values()
        .par_iter()
        .map(|&tau| fit_point(spec, data, tau, config, algo, std::slice::from_ref(&cold)).0)
        .collect();
    PathResult { algorithm: algo, points }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CvLoss {
    CheckLoss { q: f64 },
    Deviance,
    Squared,
}

impl CvLoss {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown CV loss '{text}'"));
        match text.split_once(':') {
            Some(("check", q)) => {
                let q: f64 = q.parse().map_err(|_| bad())?;
                if !(q > 0.0 && q < 1.0) {
                    return Err(Error::InvalidParameter(format!("quantile {q} outside (0, 1)")));
                }
                Ok(Self::CheckLoss { q })
            }
            None if text == "deviance" => Ok(Self::Deviance),
            None if text == "squared" => Ok(Self::Squared),
            _ => Err(bad()),
        }
    }

    /// Mean loss of `beta` over the rows of `data`.
    pub fn mean_loss(&self, data: &Dataset, beta: ArrayView1<f64>) -> f64 {
        let eta = data.linear_predictor(beta);
        let y = data.y();
        let total: f64 = match *self {
            Self::CheckLoss { q } => y.iter().zip(eta.iter()).map(|(&y, &e)| check_loss(y - e, q)).sum(),
            Self::Squared => y.iter().zip(eta.iter()).map(|(&y, &e)| (y - e) * (y - e)).sum(),
            Self::Deviance => match data.task() {
                Task::Classification => y.iter().zip(eta.iter()).map(|(&y, &e)| 2.0 * softplus(-y * e)).sum(),
                _ => y.iter().zip(eta.iter()).map(|(&y, &e)| (y - e) * (y - e)).sum(),
            },
        };
        total / data.n() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub tau: f64,
    pub fold: usize,
    pub loss: f64,
    pub status: PointStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub tau_star: f64,
    pub folds: usize,
    pub rows: Vec<CvRow>,
    /// Mean validation loss per grid point, in grid order.
    pub mean_loss: Vec<f64>,
    pub std_error: Vec<f64>,
}

/// Seeded fold labels: a shuffled `0..n` assigned round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(FOLD_STREAM);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let mut label = vec![0; n];
    for (k, &i) in idx.iter().enumerate() {
        label[i] = k % folds;
    }
    label
}

/// K-fold cross-validation of `tau` over `grid` using warm-started EM paths
/// on each training split. Points whose fit failed count as infinite loss.
/// Ties go to the smaller `tau`.
pub fn cv_select_tau(
    spec: &ModelSpec,
    data: &Dataset,
    grid: &PathGrid,
    folds: usize,
    config: &FitConfig,
    loss: CvLoss,
) -> Result<CvResult> {
    if folds < 2 {
        return Err(Error::InsufficientData(format!("cross-validation needs at least 2 folds, got {folds}")));
    }
    if data.n() < folds {
        return Err(Error::InsufficientData(format!("{} rows for {folds} folds", data.n())));
    }
    let label = fold_assignment(data.n(), folds, config.seed);
    let algo = if config.accel { PathAlgorithm::EmAccel } else { PathAlgorithm::Em };
    let per_fold: Result<Vec<Vec<CvRow>>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..data.n()).filter(|&i| label[i] != f).collect();
            let valid: Vec<usize> = (0..data.n()).filter(|&i| label[i] == f).collect();
            let tr = data.subset(&train)?;
            let va = data.subset(&valid)?;
            let path = path_fit(spec, &tr, grid, config, algo);
            Ok(path
                .points
                .iter()
                .map(|pt| CvRow {
                    tau: pt.tau,
                    fold: f,
                    loss: if pt.status.is_good() { loss.mean_loss(&va, pt.beta.view()) } else { f64::INFINITY },
                    status: pt.status,
                })
                .collect())
        })
        .collect();
    let per_fold = per_fold?;
    let k = grid.len();
    let mut mean_loss = vec![0.0; k];
    let mut std_error = vec![0.0; k];
    for t in 0..k {
        let vals: Vec<f64> = per_fold.iter().map(|rows| rows[t].loss).collect();
        let m = vals.iter().sum::<f64>() / folds as f64;
        let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (folds - 1) as f64;
        mean_loss[t] = m;
        std_error[t] = (var / folds as f64).sqrt();
    }
    let mut best = 0;
    for t in 1..k {
        if mean_loss[t] < mean_loss[best] {
            best = t;
        }
    }
    let rows = (0..k)
        .flat_map(|t| per_fold.iter().map(move |rows| rows[t].clone()))
        .collect();
    Ok(CvResult {
        tau_star: grid.values()[best],
        folds,
        rows,
        mean_loss,
        std_error,
    })
}
