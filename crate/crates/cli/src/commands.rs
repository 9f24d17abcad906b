use std::fmt::Write as _;
use std::time::Instant;

use ndarray::Array1;
use serde::Serialize;
use varmix::engine::{default_start, fit, objective, FitConfig, FitState, FitStatus};
use varmix::families::{identity_checks, LikelihoodFamily, LikelihoodKind, PenaltyFamily, PenaltyKind};
use varmix::multinomial::fit_multinomial;
use varmix::path::{cv_select_tau, path_fit, CvLoss, PathAlgorithm, PathGrid, PathResult, PointStatus};
use varmix::posterior_mean::{masreliez_mean, oracle_mean, LocationLikelihood, LocationProblem};
use varmix::simbench::experiments::{self as ex, QuantileReport};
use varmix::simbench::{bench_cell, simulate, BenchAlgorithm, BenchProblem, BenchReport, SimDesign, StartKind};
use varmix::{Dataset, ModelSpec, Task};

use crate::args::*;
use crate::error::{usage, CliError, Result};
use crate::io::{emit, read_csv, to_json, write_dataset_csv, TaskArg};
use crate::report::{Coefficient, FitReport, Report, Timings};

/// Tolerances for the identity-check table.
const IDENTITY_TOL: f64 = 1e-5;
const LOGISTIC_TOL: f64 = 1e-12;

/// Whether the command finished without a model failure.
pub type Success = bool;

fn fit_config(s: &SolverArgs) -> FitConfig {
    FitConfig {
        tol_grad: s.tol_grad,
        tol_obj: s.tol_obj,
        max_iter: s.max_iter,
        accel: s.accel == Switch::On,
        seed: s.seed,
        restarts: s.restarts,
        ..FitConfig::default()
    }
}

fn model_spec(m: &ModelArgs, intercept: bool) -> Result<ModelSpec> {
    let likelihood = LikelihoodFamily::parse(&m.likelihood, m.sigma).map_err(usage)?;
    let penalty = PenaltyFamily::parse(&m.penalty, m.tau).map_err(usage)?;
    Ok(ModelSpec::new(likelihood, penalty).with_intercept(intercept))
}

fn load(d: &DataArgs, spec: &ModelSpec) -> Result<Dataset> {
    let task = d.task.unwrap_or(if spec.likelihood.is_classification() {
        TaskArg::Classification
    } else {
        TaskArg::Regression
    });
    let data = read_csv(&d.data, &d.response, task)?;
    Ok(if d.intercept { data.with_intercept() } else { data })
}

fn coefficients(names: &[String], beta: &Array1<f64>, class: Option<usize>) -> Vec<Coefficient> {
    names
        .iter()
        .zip(beta.iter())
        .map(|(name, &value)| Coefficient {
            name: name.clone(),
            class,
            value,
        })
        .collect()
}

fn fit_status_name(s: FitStatus) -> &'static str {
    PointStatus::from_fit(s).name()
}

fn is_failure(status: &str) -> bool {
    !matches!(status, "converged" | "max_iter")
}

pub fn run_fit(args: &FitArgs) -> Result<Success> {
    let t = Instant::now();
    let spec = model_spec(&args.model, args.data.intercept)?;
    let data = load(&args.data, &spec)?;
    if !matches!(data.task(), Task::Multinomial { .. }) {
        spec.check(&data).map_err(usage)?;
    }
    let mut config = fit_config(&args.solver);
    if args.algo == AlgoArg::EmAccel {
        config.accel = true;
    }
    let names = data.column_names().to_vec();

    let mut report = FitReport {
        version: varmix::VERSION.into(),
        seed: args.solver.seed,
        config: args.clone(),
        algorithm: String::new(),
        status: String::new(),
        coefficients: Vec::new(),
        active: Vec::new(),
        objective: f64::NAN,
        objective_trace: Vec::new(),
        iterations: 0,
        kkt_residual: None,
        message: None,
        timings: Timings { wall_time: 0.0 },
    };

    if let Task::Multinomial { classes } = data.task() {
        if !matches!(args.algo, AlgoArg::Em | AlgoArg::EmAccel) {
            return Err(CliError::Usage("multinomial fits use --algo em or em-accel".into()));
        }
        let specs = vec![spec; classes];
        let m = fit_multinomial(&specs, &data, &config)?;
        let failed = m.blocks.iter().map(|b| b.status).find(|s| matches!(s, FitStatus::Failed(_)));
        report.algorithm = "blockwise-em".into();
        report.status = match failed {
            Some(s) => fit_status_name(s).into(),
            None if m.converged => "converged".into(),
            None => "max_iter".into(),
        };
        for (k, block) in m.blocks.iter().enumerate() {
            report.coefficients.extend(coefficients(&names, &m.beta.row(k).to_owned(), Some(k + 1)));
            report.active.extend(block.active.iter().map(|&j| format!("{}[{}]", names[j], k + 1)));
        }
        report.objective = m.objective();
        report.objective_trace = m.objective_trace;
        report.iterations = m.sweeps;
    } else if matches!(args.algo, AlgoArg::Em | AlgoArg::EmAccel) {
        let st: FitState = fit(&spec, &data, &config, default_start(data.p()).view())?;
        report.algorithm = if config.accel { "em-accel" } else { "em" }.into();
        report.status = fit_status_name(st.status).into();
        report.coefficients = coefficients(&names, &st.beta, None);
        report.active = st.active.iter().map(|&j| names[j].clone()).collect();
        report.objective = st.objective();
        report.kkt_residual = st.kkt_residual;
        report.iterations = st.iter;
        report.objective_trace = st.objective_trace;
    } else {
        let algo = match args.algo {
            AlgoArg::Irls => BenchAlgorithm::Irls,
            AlgoArg::IrlsPen => BenchAlgorithm::IrlsPen,
            AlgoArg::Bfgs => BenchAlgorithm::Bfgs,
            _ => BenchAlgorithm::Cg,
        };
        if algo == BenchAlgorithm::Irls && spec.penalty.kind() != PenaltyKind::Flat {
            return Err(CliError::Usage("--algo irls fits the unpenalized model; use irls-pen with a penalty".into()));
        }
        let beta0 = default_start(data.p());
        let problem = BenchProblem {
            name: args.data.data.display().to_string(),
            spec,
            data,
        };
        let row = bench_cell(&problem, algo, StartKind::Fixed, beta0.view(), &config);
        report.algorithm = algo.name().into();
        report.status = row.status.name().into();
        report.coefficients = coefficients(&names, &row.beta, None);
        report.active = names.clone();
        report.objective_trace = vec![objective(&problem.spec, &problem.data, beta0.view()), row.objective];
        report.objective = row.objective;
        report.kkt_residual = row.max_grad.is_finite().then_some(row.max_grad);
        report.iterations = row.iterations;
        report.message = row.message;
    }
    if !report.objective.is_finite() && !is_failure(&report.status) {
        report.status = PointStatus::NonFiniteObjective.name().into();
    }
    report.timings.wall_time = t.elapsed().as_secs_f64();
    if is_failure(&report.status) {
        log::error!("fit ended with status {}", report.status);
    }
    emit(args.output.as_deref(), &to_json(&report)?)?;
    Ok(!is_failure(&report.status))
}

#[derive(Debug, Serialize)]
struct PathSummary {
    path: PathResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    cv: Option<varmix::path::CvResult>,
    /// Coefficients at the cross-validated tau, from the full-data path.
    #[serde(skip_serializing_if = "Option::is_none")]
    selected: Option<Vec<Coefficient>>,
}

fn default_cv_loss(spec: &ModelSpec) -> CvLoss {
    if let LikelihoodKind::CheckLoss { q } = spec.likelihood.kind() {
        CvLoss::CheckLoss { q }
    } else if spec.likelihood.is_classification() {
        CvLoss::Deviance
    } else {
        CvLoss::Squared
    }
}

pub fn run_path(args: &PathArgs) -> Result<Success> {
    let t = Instant::now();
    let spec = model_spec(&args.model, args.data.intercept)?;
    let data = load(&args.data, &spec)?;
    spec.check(&data).map_err(usage)?;
    let grid = PathGrid::parse(&args.grid).map_err(usage)?;
    let config = fit_config(&args.solver);
    let algo = match args.algo {
        PathAlgoArg::Em => PathAlgorithm::Em,
        PathAlgoArg::EmAccel => PathAlgorithm::EmAccel,
        PathAlgoArg::IrlsPen => PathAlgorithm::IrlsPen,
    };
    let loss = match &args.cv_loss {
        Some(text) => CvLoss::parse(text).map_err(usage)?,
        None => default_cv_loss(&spec),
    };
    let path = path_fit(&spec, &data, &grid, &config, algo);
    let names = data.column_names().to_vec();
    let (cv, selected) = match args.cv {
        Some(folds) => {
            let cv = cv_select_tau(&spec, &data, &grid, folds, &config, loss)?;
            let pick = path.points.iter().find(|p| p.tau == cv.tau_star).map(|p| coefficients(&names, &p.beta, None));
            (Some(cv), pick)
        }
        None => (None, None),
    };

    if let Some(csv) = &args.csv {
        let mut out = String::new();
        match &cv {
            Some(cv) => {
                out.push_str("tau,fold,loss,status\n");
                for r in &cv.rows {
                    let _ = writeln!(out, "{},{},{},{}", r.tau, r.fold, r.loss, r.status.name());
                }
            }
            None => {
                out.push_str("tau,objective,active_size,status,iterations");
                for n in &names {
                    let _ = write!(out, ",{n}");
                }
                out.push('\n');
                for p in &path.points {
                    let _ = write!(out, "{},{},{},{},{}", p.tau, p.objective, p.active_size, p.status.name(), p.iterations);
                    for b in &p.beta {
                        let _ = write!(out, ",{b}");
                    }
                    out.push('\n');
                }
            }
        }
        std::fs::write(csv, out).map_err(|e| CliError::io(csv, e))?;
    }
    let ok = path.points.iter().all(|p| p.status.is_good()) || algo == PathAlgorithm::IrlsPen;
    let summary = PathSummary { path, cv, selected };
    let report = Report::new("path", Some(args.solver.seed), args, summary, t.elapsed().as_secs_f64());
    emit(args.output.as_deref(), &to_json(&report)?)?;
    Ok(ok)
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    design: SimDesign,
    n: usize,
    p: usize,
    beta_true: Vec<f64>,
}

pub fn run_simulate(args: &SimulateArgs) -> Result<Success> {
    let t = Instant::now();
    let design = SimDesign::parse(&args.design).map_err(usage)?;
    let sim = simulate(&design, args.seed).map_err(usage)?;
    write_dataset_csv(&args.output, &sim.train)?;
    match (&args.test_output, &sim.test) {
        (Some(path), Some(test)) => write_dataset_csv(path, test)?,
        (Some(_), None) => log::warn!("design {} has no test set; --test-output ignored", args.design),
        _ => {}
    }
    let summary = SimulateSummary {
        design,
        n: sim.train.n(),
        p: sim.train.p(),
        beta_true: sim.beta_true.to_vec(),
    };
    let report = Report::new("simulate", Some(args.seed), args, summary, t.elapsed().as_secs_f64());
    emit(args.report.as_deref(), &to_json(&report)?)?;
    Ok(true)
}

fn path_report_csv(r: &ex::PathReport) -> String {
    let mut out = String::from("algorithm,tau,status,objective,active_size,iterations\n");
    for path in [&r.em, &r.irls] {
        for p in &path.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                path.algorithm.name(),
                p.tau,
                p.status.name(),
                p.objective,
                p.active_size,
                p.iterations
            );
        }
    }
    out
}

fn quantile_csv(r: &QuantileReport) -> String {
    let mut out = String::from("replicate,method,tau,status,est_error,oos_check_loss,model_size\n");
    for row in &r.rows {
        let tau = row.tau.map(|t| t.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.replicate,
            row.method,
            tau,
            fit_status_name(row.status),
            row.est_error,
            row.oos_check_loss,
            row.model_size
        );
    }
    out
}

pub fn run_bench(args: &BenchArgs) -> Result<Success> {
    let t = Instant::now();
    let s = args.seed;
    let write_csv = |text: String| -> Result<()> {
        match &args.csv {
            Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
            None => Ok(()),
        }
    };
    let json = match args.suite {
        Suite::LogisticSmall | Suite::LogisticLarge => {
            let (n, p) = if args.suite == Suite::LogisticSmall { (2000, 20) } else { (5000, 50) };
            let r: BenchReport = ex::logistic_suite(n, p, s)?;
            write_csv(r.to_csv())?;
            to_json(&Report::new("bench", Some(s), args, r, t.elapsed().as_secs_f64()))?
        }
        Suite::PathDpareto => {
            let r = ex::path_robustness(s)?;
            write_csv(path_report_csv(&r))?;
            to_json(&Report::new("bench", Some(s), args, r, t.elapsed().as_secs_f64()))?
        }
        Suite::QuantileTable3 => {
            let r = ex::quantile_study(args.replicates, s)?;
            write_csv(quantile_csv(&r))?;
            to_json(&Report::new("bench", Some(s), args, r, t.elapsed().as_secs_f64()))?
        }
    };
    emit(args.output.as_deref(), &json)?;
    Ok(true)
}

pub fn run_experiment(args: &ExperimentArgs) -> Result<Success> {
    let t = Instant::now();
    let s = args.seed;
    let wrap = |r: &dyn erased::Json| -> Result<String> { r.json(args, t.elapsed().as_secs_f64()) };
    let json = match args.name {
        Experiment::Moments => wrap(&ex::moment_oracle_suite()?)?,
        Experiment::Identities => wrap(&identity_checks()?)?,
        Experiment::Monotone => wrap(&ex::monotone_suite(args.size.unwrap_or(20), s)?)?,
        Experiment::Agreement => wrap(&ex::optimizer_agreement(s)?)?,
        Experiment::Robustness => wrap(&ex::robustness(s, args.size.unwrap_or(10))?)?,
        Experiment::Acceleration => wrap(&ex::acceleration_benefit(s)?)?,
        Experiment::Path => wrap(&ex::path_robustness(s)?)?,
        Experiment::Quantile => wrap(&ex::quantile_study(args.size.unwrap_or(50), s)?)?,
        Experiment::Masreliez => wrap(&ex::masreliez_suite()?)?,
        Experiment::Multinomial => wrap(&ex::multinomial_reduction(s)?)?,
    };
    emit(args.output.as_deref(), &json)?;
    Ok(true)
}

/// Lets `run_experiment` wrap reports of different types in one match.
mod erased {
    use serde::Serialize;

    use crate::args::ExperimentArgs;
    use crate::error::Result;
    use crate::io::to_json;
    use crate::report::Report;

    pub trait Json {
        fn json(&self, args: &ExperimentArgs, wall_time: f64) -> Result<String>;
    }

    impl<T: Serialize> Json for T {
        fn json(&self, args: &ExperimentArgs, wall_time: f64) -> Result<String> {
            to_json(&Report::new("experiment", Some(args.seed), args, self, wall_time))
        }
    }
}

#[derive(Debug, Serialize)]
struct PosteriorMeanRow {
    y: f64,
    mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<f64>,
}

pub fn run_posterior_mean(args: &PosteriorMeanArgs) -> Result<Success> {
    let t = Instant::now();
    let prior = PenaltyFamily::parse(&args.prior, args.tau).map_err(usage)?;
    let lik = LocationLikelihood::parse(&args.likelihood).map_err(usage)?;
    let base = LocationProblem::new(lik, prior, 0.0).map_err(usage)?;
    let rows = args
        .y
        .iter()
        .map(|&y| {
            let problem = base.with_y(y);
            Ok(PosteriorMeanRow {
                y,
                mean: masreliez_mean(&problem)?,
                oracle: if args.oracle { Some(oracle_mean(&problem)?) } else { None },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = Report::new("posterior-mean", None, args, rows, t.elapsed().as_secs_f64());
    emit(args.output.as_deref(), &to_json(&report)?)?;
    Ok(true)
}

pub fn run_identity_check(args: &IdentityArgs) -> Result<Success> {
    let t = Instant::now();
    let rows = identity_checks()?;
    let mut table = format!(
        "{:<14} {:<24} {:>6} {:>14} {:>14} {:>10}  result\n",
        "identity", "parameters", "theta", "closed form", "quadrature", "error"
    );
    let mut failures = 0;
    for r in &rows {
        let (err, tol) = if r.identity == "z_logistic" {
            ((r.closed_form - r.quadrature).abs(), LOGISTIC_TOL)
        } else {
            (r.rel_error, IDENTITY_TOL)
        };
        let pass = err <= tol;
        failures += usize::from(!pass);
        let _ = writeln!(
            table,
            "{:<14} {:<24} {:>6.2} {:>14.6e} {:>14.6e} {:>10.2e}  {}",
            r.identity,
            r.parameters,
            r.theta,
            r.closed_form,
            r.quadrature,
            err,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    let _ = write!(table, "{} checks, {} failed", rows.len(), failures);
    emit(None, &table)?;
    if let Some(path) = &args.output {
        let report = Report::new("identity-check", None, args, &rows, t.elapsed().as_secs_f64());
        emit(Some(path), &to_json(&report)?)?;
    }
    Ok(failures == 0)
}
