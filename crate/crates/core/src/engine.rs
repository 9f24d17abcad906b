//! The EM loop: E-step moments, M-step solves, active-set management and
//! convergence control, with optional quasi-Newton acceleration.

use ndarray::{Array1, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accel::{accel_step, AccelDiagnostics, QuasiNewtonState};
use crate::error::{Error, KinkLocation, Result};
use crate::families::{PenaltyKind, MOMENT_CAP};
use crate::linsys::assemble_mstep;
use crate::model::{Dataset, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// KKT tolerance (infinity norm) for smooth likelihoods.
    pub tol_grad: f64,
    /// Relative objective-change tolerance for non-smooth likelihoods.
    pub tol_obj: f64,
    pub max_iter: usize,
    pub prune_eps: f64,
    pub reentry_delta: f64,
    pub max_reentry_rounds: usize,
    pub accel: bool,
    pub seed: u64,
    /// Extra random starts for non-convex penalties.
    pub restarts: usize,
    /// Update a ridge `tau` by conditional maximization after each M-step.
    pub estimate_tau: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            tol_grad: 1e-6,
            tol_obj: 1e-10,
            max_iter: 5000,
            prune_eps: 1e-8,
            reentry_delta: 1e-4,
            max_reentry_rounds: 3,
            accel: true,
            seed: 0,
            restarts: 5,
            estimate_tau: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.tol_grad, self.tol_obj, self.prune_eps, self.reentry_delta];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    SingularSystem,
    NonFiniteObjective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Running,
    Converged,
    MaxIter,
    Failed(FailureReason),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitState {
    pub beta: Array1<f64>,
    pub omega: Array1<f64>,
    /// Prior precision moments; inactive coordinates carry the moment cap.
    pub lambda: Array1<f64>,
    pub active: Vec<usize>,
    /// Number of M-steps taken.
    pub iter: usize,
    pub objective_trace: Vec<f64>,
    pub status: FitStatus,
    pub tau: f64,
    pub kkt_residual: Option<f64>,
    pub reentries: usize,
    pub starts: usize,
    pub accel: Option<AccelDiagnostics>,
}

impl FitState {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().unwrap_or(&f64::NAN)
    }

    pub fn converged(&self) -> bool {
        self.status == FitStatus::Converged
    }

    pub fn failed(&self) -> bool {
        matches!(self.status, FitStatus::Failed(_))
    }
}

pub(crate) fn inf_norm(v: ArrayView1<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// `z_i = y_i - eta_i` (regression) or `z_i = y_i eta_i` (classification),
/// with `eta = X beta + offsets`.
pub fn working_response(spec: &ModelSpec, data: &Dataset, beta: ArrayView1<f64>) -> Array1<f64> {
    let eta = data.linear_predictor(beta);
    working_response_from_eta(spec, data, eta.view())
}

fn working_response_from_eta(spec: &ModelSpec, data: &Dataset, eta: ArrayView1<f64>) -> Array1<f64> {
    let y = data.y();
    if spec.likelihood.is_classification() {
        &y * &eta
    } else {
        &y - &eta
    }
}

fn loss_from_eta(spec: &ModelSpec, data: &Dataset, eta: ArrayView1<f64>) -> f64 {
    working_response_from_eta(spec, data, eta)
        .iter()
        .map(|&z| spec.likelihood.value(z))
        .sum()
}

pub(crate) fn penalty_sum(spec: &ModelSpec, beta: ArrayView1<f64>) -> f64 {
    beta.iter()
        .enumerate()
        .filter(|(j, _)| spec.is_penalized(*j))
        .map(|(_, &b)| spec.penalty.value(b))
        .sum()
}

/// Negative log posterior `sum_i f(z_i) + sum_j g(beta_j)`.
pub fn objective(spec: &ModelSpec, data: &Dataset, beta: ArrayView1<f64>) -> f64 {
    let eta = data.linear_predictor(beta);
    loss_from_eta(spec, data, eta.view()) + penalty_sum(spec, beta)
}

/// Gradient of the data term `sum_i f(z_i)`.
pub fn data_gradient(spec: &ModelSpec, data: &Dataset, beta: ArrayView1<f64>) -> Result<Array1<f64>> {
    let z = working_response(spec, data, beta);
    let y = data.y();
    let mut c = Array1::zeros(data.n());
    for (i, &zi) in z.iter().enumerate() {
        let d = spec.likelihood.deriv(zi).map_err(|_| Error::Kink {
            location: KinkLocation::Observation(i),
            value: zi,
        })?;
        c[i] = if spec.likelihood.is_classification() { d * y[i] } else { -d };
    }
    Ok(data.x().t().dot(&c))
}

/// Gradient of the objective; fails with the first kinked observation or
/// coefficient.
pub fn objective_grad(spec: &ModelSpec, data: &Dataset, beta: ArrayView1<f64>) -> Result<Array1<f64>> {
    let mut g = data_gradient(spec, data, beta)?;
    for j in 0..beta.len() {
        if spec.is_penalized(j) {
            g[j] += spec.penalty.deriv(beta[j]).map_err(|_| Error::Kink {
                location: KinkLocation::Coefficient(j),
                value: beta[j],
            })?;
        }
    }
    Ok(g)
}

/// Componentwise bounds of the subdifferential of the objective, for
/// diagnostics at non-differentiable points.
pub fn objective_subgradient(spec: &ModelSpec, data: &Dataset, beta: ArrayView1<f64>) -> (Array1<f64>, Array1<f64>) {
    let z = working_response(spec, data, beta);
    let y = data.y();
    let x = data.x();
    let p = beta.len();
    let mut lo = Array1::zeros(p);
    let mut hi = Array1::zeros(p);
    for (i, &zi) in z.iter().enumerate() {
        let (a, b) = spec.likelihood.deriv_interval(zi);
        let sgn = if spec.likelihood.is_classification() { y[i] } else { -1.0 };
        for j in 0..p {
            let c = sgn * x[[i, j]];
            let (u, v) = (a * c, b * c);
            lo[j] += u.min(v);
            hi[j] += u.max(v);
        }
    }
    for j in 0..p {
        if !spec.is_penalized(j) {
            continue;
        }
        let (a, b) = match spec.penalty.deriv(beta[j]) {
            Ok(d) => (d, d),
            Err(_) => spec.penalty.subgradient_at_center(),
        };
        lo[j] += a;
        hi[j] += b;
    }
    (lo, hi)
}

/// Conditional moments at `beta`. Inactive and infinite prior moments are
/// returned as `f64::INFINITY`; unpenalized columns get 0.
pub fn e_step(spec: &ModelSpec, data: &Dataset, beta: ArrayView1<f64>, active: &[usize]) -> (Array1<f64>, Array1<f64>) {
    let z = working_response(spec, data, beta);
    let omega = z.mapv(|zi| spec.likelihood.omega(zi));
    let mut lambda = Array1::from_elem(beta.len(), f64::INFINITY);
    for &j in active {
        lambda[j] = if spec.is_penalized(j) { spec.penalty.lambda(beta[j]) } else { 0.0 };
    }
    (omega, lambda)
}

/// Solves the M-step on `active`; other coordinates are pinned at `mu_beta`.
pub fn m_step(
    spec: &ModelSpec,
    data: &Dataset,
    omega: ArrayView1<f64>,
    lambda: ArrayView1<f64>,
    active: &[usize],
) -> Result<Array1<f64>> {
    let sys = assemble_mstep(data, active, omega, lambda, spec)?;
    let sol = sys.solve()?;
    Ok(scatter(spec, data.p(), active, sol.view()))
}

fn scatter(spec: &ModelSpec, p: usize, active: &[usize], values: ArrayView1<f64>) -> Array1<f64> {
    let mut beta = Array1::from_elem(p, spec.penalty.mu_beta());
    for (k, &j) in active.iter().enumerate() {
        beta[j] = values[k];
    }
    beta
}

/// Removes active penalized coordinates within `prune_eps` of `mu_beta` and
/// pins them there. Returns the removed indices.
pub fn prune(spec: &ModelSpec, state: &mut FitState, config: &FitConfig) -> Vec<usize> {
    if !spec.penalty.is_sparse() {
        return Vec::new();
    }
    let mu = spec.penalty.mu_beta();
    let removed: Vec<usize> = state
        .active
        .iter()
        .copied()
        .filter(|&j| spec.is_penalized(j) && (state.beta[j] - mu).abs() < config.prune_eps)
        .collect();
    for &j in &removed {
        state.beta[j] = mu;
        state.lambda[j] = MOMENT_CAP;
    }
    state.active.retain(|j| !removed.contains(j));
    removed
}

/// At apparent convergence, tries `mu_beta +/- delta` for each inactive
/// coordinate (and, for smooth likelihoods, checks the subgradient
/// condition). Improving coordinates are re-activated at the perturbed value.
/// Returns the re-activated indices; the objective trace gains one entry per
/// re-activation.
pub fn reentry_scan(spec: &ModelSpec, data: &Dataset, state: &mut FitState, config: &FitConfig) -> Vec<usize> {
    let p = data.p();
    let mu = spec.penalty.mu_beta();
    let inactive: Vec<usize> = (0..p).filter(|j| !state.active.contains(j)).collect();
    if inactive.is_empty() {
        return Vec::new();
    }
    let x = data.x();
    let g_center = spec.penalty.value(mu);
    let smooth_grad = if spec.likelihood.is_smooth() {
        data_gradient(spec, data, state.beta.view()).ok()
    } else {
        None
    };
    let (sub_lo, sub_hi) = spec.penalty.subgradient_at_center();
    let mut eta = data.linear_predictor(state.beta.view());
    let mut current = state.objective();
    let mut entered = Vec::new();
    for j in inactive {
        let col = x.column(j);
        let threshold = config.tol_obj * (1.0 + current.abs());
        let try_move = |eta: &Array1<f64>, t: f64| -> f64 {
            let trial = eta + &(&col * t);
            current - g_center + spec.penalty.value(mu + t) - loss_from_eta(spec, data, eta.view())
                + loss_from_eta(spec, data, trial.view())
        };
        let mut best: Option<(f64, f64)> = None;
        for t in [config.reentry_delta, -config.reentry_delta] {
            let obj = try_move(&eta, t);
            if obj < current - threshold && best.is_none_or(|(_, b)| obj < b) {
                best = Some((t, obj));
            }
        }
        if best.is_none() {
            if let Some(dg) = &smooth_grad {
                // First-order test: moving up decreases L if dg + g'(0+) < 0.
                let dir = if dg[j] + sub_hi < -config.tol_grad {
                    1.0
                } else if dg[j] + sub_lo > config.tol_grad {
                    -1.0
                } else {
                    0.0
                };
                if dir != 0.0 {
                    let mut t = config.reentry_delta;
                    while t >= 10.0 * config.prune_eps {
                        let obj = try_move(&eta, dir * t);
                        if obj < current {
                            best = Some((dir * t, obj));
                            break;
                        }
                        t *= 0.1;
                    }
                }
            }
        }
        if let Some((t, obj)) = best {
            eta = &eta + &(&col * t);
            state.beta[j] = mu + t;
            state.active.push(j);
            state.objective_trace.push(obj);
            current = obj;
            entered.push(j);
        }
    }
    state.active.sort_unstable();
    state.reentries += entered.len();
    entered
}

/// Conditional maximizer of `tau` for a ridge prior with a flat prior on
/// `log tau`: `tau^2 = (1/p) sum_j lambda_j (beta_j - mu - kappa/lambda_j)^2`,
/// floored at `tau = 1e-6`.
pub fn cm_step_tau(spec: &ModelSpec, state: &FitState) -> Result<f64> {
    if spec.penalty.kind() != PenaltyKind::Ridge {
        return Err(Error::UnsupportedPenalty(format!(
            "{}: tau updates are implemented for ridge only",
            spec.penalty.name()
        )));
    }
    let mu = spec.penalty.mu_beta();
    let k = spec.penalty.kappa_beta();
    let mut sum = 0.0;
    let mut count = 0usize;
    for j in 0..state.beta.len() {
        if !spec.is_penalized(j) {
            continue;
        }
        count += 1;
        let l = state.lambda[j];
        if l.is_finite() && l > 0.0 {
            let r = state.beta[j] - mu - k / l;
            sum += l * r * r;
        }
    }
    if count == 0 {
        return Ok(spec.penalty.tau());
    }
    Ok((sum / count as f64).sqrt().max(1e-6))
}

/// Largest violation of the first-order optimality conditions, or `None`
/// when the likelihood is at a kink.
pub fn kkt_residual(spec: &ModelSpec, data: &Dataset, beta: ArrayView1<f64>, active: &[usize]) -> Option<f64> {
    let dg = data_gradient(spec, data, beta).ok()?;
    let mu = spec.penalty.mu_beta();
    let mut worst = 0.0_f64;
    for j in 0..beta.len() {
        if !spec.is_penalized(j) {
            worst = worst.max(dg[j].abs());
            continue;
        }
        let v = if active.contains(&j) && beta[j] != mu {
            (dg[j] + spec.penalty.deriv(beta[j]).ok()?).abs()
        } else {
            let (lo, hi) = spec.penalty.subgradient_at_center();
            (-dg[j] - hi).max(lo + dg[j]).max(0.0)
        };
        worst = worst.max(v);
    }
    Some(worst)
}

/// The conventional start `beta_j = 1e-3`.
pub fn default_start(p: usize) -> Array1<f64> {
    Array1::from_elem(p, 1e-3)
}

/// A seeded uniform draw from `[-1, 1]^p`.
pub fn random_start(p: usize, seed: u64, stream: u64) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    Array1::from_shape_fn(p, |_| rng.random_range(-1.0..=1.0))
}

fn n_penalized(spec: &ModelSpec, p: usize) -> usize {
    (0..p).filter(|&j| spec.is_penalized(j)).count()
}

/// One EM run from `beta0`, accelerated when `config.accel` is set.
pub fn fit_single(spec: &ModelSpec, data: &Dataset, config: &FitConfig, beta0: ArrayView1<f64>) -> Result<FitState> {
    spec.check(data)?;
    config.validate()?;
    let p = data.p();
    if beta0.len() != p {
        return Err(Error::DimensionMismatch(format!("start has length {} for {p} columns", beta0.len())));
    }
    if beta0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("starting value is not finite".into()));
    }
    if config.estimate_tau && spec.penalty.kind() != PenaltyKind::Ridge {
        return Err(Error::UnsupportedPenalty(format!(
            "{}: tau updates are implemented for ridge only",
            spec.penalty.name()
        )));
    }
    let mut spec = *spec;
    let mu = spec.penalty.mu_beta();
    let sparse = spec.penalty.is_sparse();
    let n_pen = n_penalized(&spec, p) as f64;
    let tau_term = |s: &ModelSpec| if config.estimate_tau { n_pen * s.penalty.tau().ln() } else { 0.0 };
    let full_objective = |s: &ModelSpec, b: ArrayView1<f64>| objective(s, data, b) + tau_term(s);

    let mut beta = beta0.to_owned();
    let active: Vec<usize> = (0..p)
        .filter(|&j| !(sparse && spec.is_penalized(j) && beta[j] == mu))
        .collect();
    let start_obj = full_objective(&spec, beta.view());
    let mut state = FitState {
        beta: beta.clone(),
        omega: Array1::zeros(data.n()),
        lambda: Array1::from_elem(p, MOMENT_CAP),
        active,
        iter: 0,
        objective_trace: vec![start_obj],
        status: FitStatus::Running,
        tau: spec.penalty.tau(),
        kkt_residual: None,
        reentries: 0,
        starts: 1,
        accel: None,
    };
    if !start_obj.is_finite() {
        state.status = FitStatus::Failed(FailureReason::NonFiniteObjective);
        return Ok(state);
    }
    let mut qn = QuasiNewtonState::new(state.active.len());
    let mut reentry_rounds = 0;
    let mut last_change = f64::INFINITY;
    let smooth = spec.likelihood.is_smooth();

    loop {
        // E-step.
        let (omega, lambda) = e_step(&spec, data, state.beta.view(), &state.active);
        let dropped: Vec<usize> = state.active.iter().copied().filter(|&j| lambda[j].is_infinite()).collect();
        if !dropped.is_empty() {
            for &j in &dropped {
                state.beta[j] = mu;
            }
            state.active.retain(|j| !dropped.contains(j));
            qn.reset(state.active.len());
        }
        state.omega = omega;
        state.lambda = lambda.mapv(|l| if l.is_finite() { l } else { MOMENT_CAP });
        let sys = assemble_mstep(data, &state.active, state.omega.view(), lambda.view(), &spec)?;
        let beta_s = state.beta.select(ndarray::Axis(0), &state.active);
        let grad = sys.a.dot(&beta_s) - &sys.rhs;

        let apparent = if smooth {
            inf_norm(grad.view()) < config.tol_grad
        } else {
            last_change < config.tol_obj
        };
        if apparent {
            if reentry_rounds < config.max_reentry_rounds && !reentry_scan(&spec, data, &mut state, config).is_empty() {
                reentry_rounds += 1;
                qn.reset(state.active.len());
                last_change = f64::INFINITY;
                continue;
            }
            state.status = FitStatus::Converged;
            break;
        }
        if state.iter >= config.max_iter {
            state.status = FitStatus::MaxIter;
            break;
        }
        if config.accel {
            qn.observe(beta_s.view(), grad.view(), sys.a.view());
        }

        // M-step.
        let em = match sys.solve() {
            Ok(x) => x,
            Err(_) => {
                state.status = FitStatus::Failed(FailureReason::SingularSystem);
                break;
            }
        };
        state.iter += 1;
        let mut cand = scatter(&spec, p, &state.active, em.view());
        let mut cand_obj = full_objective(&spec, cand.view());
        if config.accel && qn.ready() && cand_obj.is_finite() {
            let active = state.active.clone();
            let target = cand_obj.min(state.objective());
            if let Some(prop) = accel_step(&mut qn, beta_s.view(), sys.a.view(), grad.view(), target, |b| {
                full_objective(&spec, scatter(&spec, p, &active, b).view())
            }) {
                cand = scatter(&spec, p, &state.active, prop.beta.view());
                cand_obj = prop.objective;
            }
        }
        if config.estimate_tau {
            let trial = FitState {
                beta: cand.clone(),
                lambda: state.lambda.clone(),
                ..state.clone()
            };
            let tau = cm_step_tau(&spec, &trial)?;
            let updated = ModelSpec {
                penalty: spec.penalty.with_tau(tau)?,
                ..spec
            };
            let obj = full_objective(&updated, cand.view());
            if obj <= cand_obj {
                spec = updated;
                cand_obj = obj;
                state.tau = tau;
            }
        }
        if !cand_obj.is_finite() {
            state.status = FitStatus::Failed(FailureReason::NonFiniteObjective);
            break;
        }
        let prev = state.objective();
        if cand_obj > prev {
            // No descent left at working precision.
            last_change = 0.0;
            if smooth {
                if reentry_rounds < config.max_reentry_rounds && !reentry_scan(&spec, data, &mut state, config).is_empty() {
                    reentry_rounds += 1;
                    qn.reset(state.active.len());
                    last_change = f64::INFINITY;
                    continue;
                }
                state.status = FitStatus::Converged;
                break;
            }
            continue;
        }
        let old_active = state.active.len();
        beta = cand;
        state.beta = beta.clone();
        if sparse {
            let mut trial = state.clone();
            let removed = prune(&spec, &mut trial, config);
            if !removed.is_empty() {
                let obj = full_objective(&spec, trial.beta.view());
                if obj <= cand_obj {
                    state = trial;
                    cand_obj = obj;
                }
            }
        }
        if state.active.len() != old_active {
            qn.reset(state.active.len());
        }
        last_change = (prev - cand_obj) / (1.0 + cand_obj.abs());
        state.objective_trace.push(cand_obj);
    }
    state.kkt_residual = if config.estimate_tau {
        None
    } else {
        kkt_residual(&spec, data, state.beta.view(), &state.active)
    };
    if config.accel {
        state.accel = Some(qn.diagnostics.clone());
    }
    Ok(state)
}

fn pick_best(runs: Vec<FitState>) -> FitState {
    let total = runs.len();
    let mut best: Option<FitState> = None;
    for r in runs {
        let better = match &best {
            None => true,
            Some(b) => {
                (b.failed() && !r.failed()) || (!r.failed() && r.objective() < b.objective())
            }
        };
        if better {
            best = Some(r);
        }
    }
    let mut best = best.expect("at least one run");
    best.starts = total;
    best
}

/// EM (accelerated per `config.accel`). Non-convex penalties are fitted from
/// `beta0` plus `config.restarts` seeded random starts; the lowest objective
/// wins.
pub fn fit(spec: &ModelSpec, data: &Dataset, config: &FitConfig, beta0: ArrayView1<f64>) -> Result<FitState> {
    if spec.penalty.is_convex() || config.restarts == 0 {
        return fit_single(spec, data, config, beta0);
    }
    let mut starts = vec![beta0.to_owned()];
    starts.extend(restart_points(data.p(), config));
    fit_from_starts(spec, data, config, &starts)
}

/// The seeded random starts used by [`fit`] for non-convex penalties.
pub fn restart_points(p: usize, config: &FitConfig) -> Vec<Array1<f64>> {
    (0..config.restarts as u64).map(|k| random_start(p, config.seed, k + 1)).collect()
}

/// Runs [`fit_single`] from every start and keeps the lowest objective among
/// non-failed runs (the earliest start on ties).
pub fn fit_from_starts(spec: &ModelSpec, data: &Dataset, config: &FitConfig, starts: &[Array1<f64>]) -> Result<FitState> {
    if starts.is_empty() {
        return Err(Error::InvalidParameter("no starting values".into()));
    }
    let runs: Result<Vec<FitState>> = starts
        .par_iter()
        .map(|b| fit_single(spec, data, config, b.view()))
        .collect();
    Ok(pick_best(runs?))
}

/// Plain EM.
pub fn fit_em(spec: &ModelSpec, data: &Dataset, config: &FitConfig, beta0: ArrayView1<f64>) -> Result<FitState> {
    fit(spec, data, &FitConfig { accel: false, ..*config }, beta0)
}

/// Quasi-Newton accelerated EM.
pub fn fit_em_accel(spec: &ModelSpec, data: &Dataset, config: &FitConfig, beta0: ArrayView1<f64>) -> Result<FitState> {
    fit(spec, data, &FitConfig { accel: true, ..*config }, beta0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{LikelihoodFamily, PenaltyFamily};
    use crate::model::Task;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn logistic_ridge() -> ModelSpec {
        ModelSpec::new(LikelihoodFamily::logistic(), PenaltyFamily::ridge(1.0).unwrap())
    }

    #[test]
    fn working_responses() {
        let reg = ModelSpec::new(LikelihoodFamily::squared_error(1.0).unwrap(), PenaltyFamily::flat());
        let d = Dataset::new(array![[1.0], [1.0]], array![1.0, 2.0], Task::Regression).unwrap();
        assert_eq!(working_response(&reg, &d, array![1.0].view()), array![0.0, 1.0]);
        let d = Dataset::new(array![[1.0], [1.0]], array![1.0, -1.0], Task::Classification).unwrap();
        assert_eq!(working_response(&logistic_ridge(), &d, array![2.0].view()), array![2.0, -2.0]);
    }

    #[test]
    fn objective_values() {
        let d = Dataset::new(array![[1.0, 0.5], [0.3, 1.0]], array![1.0, -1.0], Task::Classification).unwrap();
        assert_abs_diff_eq!(objective(&logistic_ridge(), &d, array![0.0, 0.0].view()), 2.0 * 2f64.ln(), epsilon = 1e-15);
        let q = ModelSpec::new(LikelihoodFamily::check_loss(0.9).unwrap(), PenaltyFamily::lasso(2.0).unwrap());
        let d = Dataset::new(array![[2.0]], array![1.0], Task::Regression).unwrap();
        // z = 1 - 2 * 0.25 = 0.5: f = 0.5 + 0.8 * 0.5, g = 0.25 / 2
        assert_abs_diff_eq!(objective(&q, &d, array![0.25].view()), 0.9 + 0.125, epsilon = 1e-15);
    }

    #[test]
    fn gradient_examples() {
        let d = Dataset::new(ndarray::Array2::eye(2), array![1.0, 1.0], Task::Classification).unwrap();
        let flat = ModelSpec::new(LikelihoodFamily::logistic(), PenaltyFamily::flat());
        assert_eq!(objective_grad(&flat, &d, array![0.0, 0.0].view()).unwrap(), array![-0.5, -0.5]);
        let lasso = ModelSpec::new(LikelihoodFamily::logistic(), PenaltyFamily::lasso(1.0).unwrap());
        assert!(matches!(
            objective_grad(&lasso, &d, array![0.0, 1.0].view()),
            Err(Error::Kink { location: KinkLocation::Coefficient(0), .. })
        ));
    }

    #[test]
    fn e_step_examples() {
        let d = Dataset::new(array![[1.0, 2.0], [3.0, -1.0]], array![1.0, -1.0], Task::Classification).unwrap();
        let (w, l) = e_step(&logistic_ridge(), &d, array![0.0, 0.0].view(), &[0, 1]);
        assert_eq!(w, array![0.25, 0.25]);
        assert_eq!(l, array![1.0, 1.0]);
        let q = ModelSpec::new(LikelihoodFamily::check_loss(0.9).unwrap(), PenaltyFamily::ridge(1.0).unwrap());
        let d = Dataset::new(array![[1.0]], array![0.5], Task::Regression).unwrap();
        assert_eq!(e_step(&q, &d, array![0.0].view(), &[0]).0, array![2.0]);
    }

    #[test]
    fn prune_examples() {
        let spec = ModelSpec::new(LikelihoodFamily::logistic(), PenaltyFamily::lasso(1.0).unwrap());
        let cfg = FitConfig::default();
        let mut st = FitState {
            beta: array![1e-12, 0.5],
            omega: Array1::zeros(1),
            lambda: array![1.0, 1.0],
            active: vec![0, 1],
            iter: 0,
            objective_trace: vec![0.0],
            status: FitStatus::Running,
            tau: 1.0,
            kkt_residual: None,
            reentries: 0,
            starts: 1,
            accel: None,
        };
        assert_eq!(prune(&spec, &mut st, &cfg), vec![0]);
        assert_eq!(st.active, vec![1]);
        assert_eq!(st.beta[0], 0.0);
        assert!(prune(&spec, &mut st, &cfg).is_empty());
    }

    #[test]
    fn tau_cm_step() {
        let spec = ModelSpec::new(LikelihoodFamily::logistic(), PenaltyFamily::ridge(1.0).unwrap());
        let mut st = FitState {
            beta: array![2.0],
            omega: Array1::zeros(1),
            lambda: array![1.0],
            active: vec![0],
            iter: 0,
            objective_trace: vec![0.0],
            status: FitStatus::Running,
            tau: 1.0,
            kkt_residual: None,
            reentries: 0,
            starts: 1,
            accel: None,
        };
        assert_abs_diff_eq!(cm_step_tau(&spec, &st).unwrap(), 2.0, epsilon = 1e-15);
        st.beta[0] = 0.0;
        assert_eq!(cm_step_tau(&spec, &st).unwrap(), 1e-6);
        let lasso = spec.with_penalty(PenaltyFamily::lasso(1.0).unwrap());
        assert!(matches!(cm_step_tau(&lasso, &st), Err(Error::UnsupportedPenalty(_))));
    }
}
