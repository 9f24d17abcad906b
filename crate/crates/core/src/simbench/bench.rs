//! Benchmark harness: every (problem, algorithm, start) cell, run
//! concurrently, never aborting on a failing baseline.

use std::time::Instant;

use ndarray::{Array1, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    bfgs_minimize, irls_logistic, irls_penalized, model_objective, nonlinear_cg_minimize, BaselineConfig,
    BaselineResult,
};
use crate::engine::{default_start, fit_single, objective_subgradient, random_start, FitConfig};
use crate::error::{Error, Result};
use crate::model::{Dataset, ModelSpec};
use crate::path::PointStatus;

/// Random-start streams sit above the restart and fold streams.
const START_STREAM: u64 = 1 << 33;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchAlgorithm {
    Em,
    EmAccel,
    Irls,
    IrlsPen,
    Bfgs,
    Cg,
}

impl BenchAlgorithm {
    pub const ALL: [Self; 6] = [Self::Em, Self::EmAccel, Self::Irls, Self::IrlsPen, Self::Bfgs, Self::Cg];

    pub fn parse(text: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == text)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm '{text}'")))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Em => "em",
            Self::EmAccel => "em-accel",
            Self::Irls => "irls",
            Self::IrlsPen => "irls-pen",
            Self::Bfgs => "bfgs",
            Self::Cg => "cg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StartKind {
    #[serde(rename = "fixed_1e-3")]
    Fixed,
    #[serde(rename = "random_cube")]
    RandomCube,
}

impl StartKind {
    pub const ALL: [Self; 2] = [Self::Fixed, Self::RandomCube];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Fixed => "fixed_1e-3",
            Self::RandomCube => "random_cube",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchProblem {
    pub name: String,
    pub spec: ModelSpec,
    pub data: Dataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub algorithm: BenchAlgorithm,
    pub problem: String,
    pub start: StartKind,
    pub status: PointStatus,
    pub iterations: usize,
    pub wall_time: f64,
    pub objective: f64,
    /// Largest KKT violation: the distance of zero from each coordinate's
    /// subdifferential.
    pub max_grad: f64,
    pub beta: Array1<f64>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub workers: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn cell(&self, problem: &str, algorithm: BenchAlgorithm, start: StartKind) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.problem == problem && r.algorithm == algorithm && r.start == start)
    }

    /// CSV with one line per cell; coefficients are omitted.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("algorithm,problem,start,status,iterations,wall_time,objective,max_grad\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.algorithm.name(),
                r.problem,
                r.start.name(),
                r.status.name(),
                r.iterations,
                r.wall_time,
                r.objective,
                r.max_grad
            ));
        }
        out
    }
}

/// The start shared by every algorithm on problem `index`.
pub fn bench_start(p: usize, start: StartKind, seed: u64, index: usize) -> Array1<f64> {
    match start {
        StartKind::Fixed => default_start(p),
        StartKind::RandomCube => random_start(p, seed, START_STREAM + index as u64),
    }
}

pub fn kkt_residual(spec: &ModelSpec, data: &Dataset, beta: ArrayView1<f64>) -> f64 {
    let (lo, hi) = objective_subgradient(spec, data, beta);
    let r = lo.iter().zip(hi.iter()).fold(0.0_f64, |m, (&l, &h)| m.max(l.max(0.0)).max((-h).max(0.0)));
    if beta.iter().all(|v| v.is_finite()) {
        r
    } else {
        f64::NAN
    }
}

fn run_cell(problem: &BenchProblem, algo: BenchAlgorithm, beta0: ArrayView1<f64>, config: &FitConfig) -> Result<(PointStatus, usize, Array1<f64>)> {
    let (spec, data) = (&problem.spec, &problem.data);
    let bc = BaselineConfig {
        tol_grad: config.tol_grad,
        max_iter: config.max_iter,
    };
    let from_baseline = |r: BaselineResult| (PointStatus::from_baseline(r.status), r.iterations, r.beta);
    Ok(match algo {
        BenchAlgorithm::Em | BenchAlgorithm::EmAccel => {
            let cfg = FitConfig {
                accel: algo == BenchAlgorithm::EmAccel,
                ..*config
            };
            let st = fit_single(spec, data, &cfg, beta0)?;
            (PointStatus::from_fit(st.status), st.iter, st.beta)
        }
        BenchAlgorithm::Irls => from_baseline(irls_logistic(data, &bc, beta0)?),
        BenchAlgorithm::IrlsPen => from_baseline(irls_penalized(spec, data, &bc, beta0)?),
        BenchAlgorithm::Bfgs => from_baseline(bfgs_minimize(model_objective(spec, data), &bc, beta0)),
        BenchAlgorithm::Cg => from_baseline(nonlinear_cg_minimize(model_objective(spec, data), &bc, beta0)),
    })
}

/// Runs one algorithm from `beta0` and records the outcome; errors become
/// rows with status `error`.
pub fn bench_cell(
    prob: &BenchProblem,
    algo: BenchAlgorithm,
    start: StartKind,
    beta0: ArrayView1<f64>,
    config: &FitConfig,
) -> BenchRow {
    let t = Instant::now();
    let res = run_cell(prob, algo, beta0, config);
    let wall_time = t.elapsed().as_secs_f64();
    let (status, iterations, beta, message) = match res {
        Ok((s, it, b)) => (s, it, b, None),
        Err(e) => (PointStatus::Error, 0, beta0.to_owned(), Some(e.to_string())),
    };
    let objective = crate::engine::objective(&prob.spec, &prob.data, beta.view());
    let max_grad = kkt_residual(&prob.spec, &prob.data, beta.view());
    BenchRow {
        algorithm: algo,
        problem: prob.name.clone(),
        start,
        status,
        iterations,
        wall_time,
        objective,
        max_grad,
        beta,
        message,
    }
}

/// Runs every cell. Random-cube starts are drawn once per problem from
/// `config.seed`, so all algorithms share them. Rows come back in
/// problem, algorithm, start order.
pub fn bench_run(
    problems: &[BenchProblem],
    algorithms: &[BenchAlgorithm],
    starts: &[StartKind],
    config: &FitConfig,
) -> BenchReport {
    let mut cells = Vec::new();
    for (pi, prob) in problems.iter().enumerate() {
        for &algo in algorithms {
            for &start in starts {
                cells.push((pi, prob, algo, start));
            }
        }
    }
    let rows = cells
        .par_iter()
        .map(|&(pi, prob, algo, start)| {
            let beta0 = bench_start(prob.data.p(), start, config.seed, pi);
            bench_cell(prob, algo, start, beta0.view(), config)
        })
        .collect();
    BenchReport {
        workers: rayon::current_num_threads(),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{LikelihoodFamily, PenaltyFamily};
    use crate::simbench::gen_factor_design;

    #[test]
    fn names_round_trip() {
        for a in BenchAlgorithm::ALL {
            assert_eq!(BenchAlgorithm::parse(a.name()).unwrap(), a);
        }
        assert!(BenchAlgorithm::parse("newton").is_err());
    }

    #[test]
    fn every_cell_is_reported() {
        let sim = gen_factor_design(200, 4, 2, 3).unwrap();
        let prob = BenchProblem {
            name: "toy".into(),
            spec: ModelSpec::new(LikelihoodFamily::logistic(), PenaltyFamily::flat()),
            data: sim.train,
        };
        let r = bench_run(&[prob], &BenchAlgorithm::ALL, &StartKind::ALL, &FitConfig::default());
        assert_eq!(r.rows.len(), 12);
        assert!(r.cell("toy", BenchAlgorithm::Cg, StartKind::RandomCube).is_some());
        assert_eq!(r.to_csv().lines().count(), 13);
    }

    #[test]
    fn random_start_is_shared_and_seeded() {
        let a = bench_start(5, StartKind::RandomCube, 9, 0);
        assert_eq!(a, bench_start(5, StartKind::RandomCube, 9, 0));
        assert_ne!(a, bench_start(5, StartKind::RandomCube, 9, 1));
        assert!(a.iter().all(|v| v.abs() <= 1.0));
    }
}
