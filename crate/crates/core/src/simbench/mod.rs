//! Simulation designs, evaluation metrics and the benchmark harness.

pub mod bench;
pub mod designs;
pub mod experiments;
pub mod metrics;

pub use designs::{gen_cov_factor, gen_factor_design, gen_quantile_sim, simulate, SimData, SimDesign};
pub use metrics::{check_loss, metrics, Metrics};
pub use bench::{bench_cell, bench_run, BenchAlgorithm, BenchProblem, BenchReport, BenchRow, StartKind};
