//! Scenario sampling, Monte Carlo campaigns and their tabular output.

pub mod campaigns;
pub mod config;
pub mod sampling;
pub mod table;

pub use campaigns::{
    mean_std, rigid_ris_gain_siso, run_convergence, run_element_landscape, run_gain_vs_dmax,
    run_gain_vs_paths, run_hyperparameter_sweep, ConvergenceRun, DmaxSweep, ExperimentSetup,
    HyperparameterSweep, Landscape, Link, PathSweep, SweepParameter, SweepSpec, TrialRecord,
    TOOL_VERSION,
};
pub use config::{
    db_to_linear, dbm_to_watts, linear_to_db, ConfigFile, MethodKind, ResolvedScenario,
    ScenarioConfig, SolverSettings,
};
pub use sampling::sample_scenario;
pub use table::{Cell, OutputFormat, Table};

use crate::error::{FimError, Result};

/// Runs `job` on a dedicated pool of `threads` workers (1 = serial).
pub fn with_threads<T, F>(threads: usize, job: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| FimError::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}
