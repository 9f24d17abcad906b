use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::io::TaskArg;

#[derive(Debug, Parser)]
#[command(name = "varmix", version, about = "Penalized regression and classification through variance-mean mixtures")]
pub struct Cli {
    /// Worker threads for bench, path and cross-validation runs.
    #[arg(long, global = true, env = "VARMIX_WORKERS")]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model to a CSV file.
    Fit(FitArgs),
    /// Fit a regularization path over a grid of tau, optionally with cross-validation.
    Path(PathArgs),
    /// Write a simulated data set.
    Simulate(SimulateArgs),
    /// Run a benchmark suite.
    Bench(BenchArgs),
    /// Run one of the validation experiments and emit its report.
    Experiment(ExperimentArgs),
    /// Posterior mean of a location parameter under a mixture prior.
    PosteriorMean(PosteriorMeanArgs),
    /// Check the mixture identities by quadrature and print a table.
    IdentityCheck(IdentityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgoArg {
    Em,
    EmAccel,
    Irls,
    IrlsPen,
    Bfgs,
    Cg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathAlgoArg {
    Em,
    EmAccel,
    IrlsPen,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the response column.
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Defaults to classification for logistic and svm likelihoods.
    #[arg(long, value_enum)]
    pub task: Option<TaskArg>,
    /// Prepend an unpenalized intercept column.
    #[arg(long)]
    pub intercept: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    /// gauss, laplace, quantile:q, svm, logistic or hyperbolic:alpha:kappa.
    #[arg(long)]
    pub likelihood: String,
    /// none, ridge, lasso, hyperbolic:alpha:kappa or dpareto:a.
    #[arg(long, default_value = "none")]
    pub penalty: String,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "on")]
    pub accel: Switch,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_grad: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_obj: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    /// Random restarts for non-convex penalties.
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum, default_value = "em")]
    pub algo: AlgoArg,
    /// Report path; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PathArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Log-spaced grid lo:hi:K.
    #[arg(long, default_value = "1e-3:1e3:25")]
    pub grid: String,
    #[arg(long, value_enum, default_value = "em-accel")]
    pub algo: PathAlgoArg,
    /// Number of cross-validation folds.
    #[arg(long)]
    pub cv: Option<usize>,
    /// check:q, deviance or squared. Defaults to check loss for quantile
    /// likelihoods, deviance for classification and squared error otherwise.
    #[arg(long)]
    pub cv_loss: Option<String>,
    /// Table with one row per grid point (and fold, under cross-validation).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// factor:n:p:k, orthogonal:n:p, cov-factor:n:p:k, quantile or quantile:n:p:q:sigma.
    #[arg(long)]
    pub design: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Training set CSV.
    #[arg(long)]
    pub output: PathBuf,
    /// Test set CSV, for designs that have one.
    #[arg(long)]
    pub test_output: Option<PathBuf>,
    /// Summary JSON (design, seed, true coefficients); standard output when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    LogisticSmall,
    LogisticLarge,
    PathDpareto,
    QuantileTable3,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Replicates for the quantile suite.
    #[arg(long, default_value_t = 50)]
    pub replicates: usize,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Moments,
    Identities,
    Monotone,
    Agreement,
    Robustness,
    Acceleration,
    Path,
    Quantile,
    Masreliez,
    Multinomial,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ExperimentArgs {
    #[arg(long, value_enum)]
    pub name: Experiment,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Problems (monotone), starts (robustness) or replicates (quantile).
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PosteriorMeanArgs {
    /// lasso, ridge, hyperbolic:alpha:kappa or dpareto:a.
    #[arg(long)]
    pub prior: String,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// gauss, laplace or logistic, with an optional :scale.
    #[arg(long, default_value = "gauss")]
    pub likelihood: String,
    /// Observations, comma separated.
    #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub y: Vec<f64>,
    /// Also compute the posterior mean by direct quadrature.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct IdentityArgs {
    /// Also write the checks as JSON.
    #[arg(long)]
    pub output: Option<PathBuf>,
}
