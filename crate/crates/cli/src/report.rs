use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    /// Class label for multinomial fits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub wall_time: f64,
}

/// Everything the `fit` command knows about one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub version: String,
    pub seed: u64,
    pub config: crate::args::FitArgs,
    pub algorithm: String,
    pub status: String,
    pub coefficients: Vec<Coefficient>,
    /// Names of the coefficients left free by pruning (`name[class]` for
    /// multinomial fits).
    pub active: Vec<String>,
    pub objective: f64,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub kkt_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub timings: Timings,
}

/// Report wrapper for the other commands: the echoed configuration and a
/// command-specific result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<C, R> {
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub config: C,
    pub result: R,
    pub timings: Timings,
}

impl<C, R> Report<C, R> {
    pub fn new(command: &str, seed: Option<u64>, config: C, result: R, wall_time: f64) -> Self {
        Self {
            version: varmix::VERSION.into(),
            command: command.into(),
            seed,
            config,
            result,
            timings: Timings { wall_time },
        }
    }
}
