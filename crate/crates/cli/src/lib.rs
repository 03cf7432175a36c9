//! Experiment runner behind the `delaykinetic` binary.

pub mod config;
pub mod run;

use delaykinetic::Error;
use serde_json::{json, Value};

pub use config::{ConfigError, Experiment, ExperimentConfig};
pub use run::run_experiment;

/// Exit status for configuration errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status when an integration diverged.
pub const EXIT_DIVERGENCE: i32 = 3;
/// Exit status when a Picard iteration did not converge.
pub const EXIT_NON_CONVERGENCE: i32 = 4;

/// Exit status and machine-readable record for a failed run.
pub fn error_record(err: &anyhow::Error) -> (i32, Value) {
    let message = format!("{err:#}");
    if err.downcast_ref::<ConfigError>().is_some() {
        return (EXIT_CONFIG, json!({"error": "config", "exit_code": EXIT_CONFIG, "message": message}));
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Divergence { step, time, .. }) => (
            EXIT_DIVERGENCE,
            json!({"error": "divergence", "exit_code": EXIT_DIVERGENCE, "message": message, "step": step, "time": time}),
        ),
        Some(Error::NonConvergence { iterations, last, .. }) => (
            EXIT_NON_CONVERGENCE,
            json!({
                "error": "non_convergence",
                "exit_code": EXIT_NON_CONVERGENCE,
                "message": message,
                "iterations": iterations,
                "last_residual": last,
            }),
        ),
        _ => (1, json!({"error": "runtime", "exit_code": 1, "message": message})),
    }
}
