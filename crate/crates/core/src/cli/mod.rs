//! Configuration files, figure presets and result emission, plus the run
//! drivers behind the `qsr` binary.

pub mod config;
pub mod emit;
pub mod presets;

use std::path::PathBuf;

use crate::ensemble::{run_ensemble, sweep, Execution, SweepAxis};
use crate::error::{Error, Result};
use crate::integrator::{simulate_trajectory, Stepper};

pub use config::{load_config, parse_config, RunConfig};
pub use emit::{Emitter, Format};
pub use presets::{preset, ExperimentPreset, PresetName};

/// Process exit status for an error: 2 configuration, 3 numeric
/// instability, 4 io.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numeric() {
        3
    } else if matches!(err, Error::Io(_)) {
        4
    } else {
        2
    }
}

/// Command-line settings layered over a config file or preset.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub stepper: Option<Stepper>,
    pub omega_d: Option<f64>,
    pub n_realizations: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, run: &mut RunConfig) -> Result<()> {
        if let Some(s) = self.seed {
            run.ensemble.master_seed = s;
        }
        if let Some(s) = self.stepper {
            run.ensemble.base.stepper = s;
        }
        if let Some(w) = self.omega_d {
            run.ensemble.base.drive.omega_d = w;
        }
        if let Some(n) = self.n_realizations {
            run.ensemble.n_realizations = n;
        }
        run.validate()
    }
}

/// Files written by a run and the sweep points that failed.
#[derive(Debug, Default)]
pub struct Report {
    pub paths: Vec<PathBuf>,
    pub failures: Vec<(f64, Error)>,
}

impl Report {
    /// The error to exit with, if any point failed.
    pub fn first_failure(&self) -> Option<&Error> {
        self.failures.first().map(|(_, e)| e)
    }
}

/// Peak-search band used when none is given: [Ω/2, 3Ω/2].
pub fn default_band(run: &RunConfig) -> (f64, f64) {
    let omega = run.base().omega();
    (0.5 * omega, 1.5 * omega)
}

/// Dumps realization 0 of the ensemble.
pub fn simulate(run: &RunConfig, emitter: &Emitter) -> Result<Report> {
    run.validate()?;
    let traj = simulate_trajectory(run.base(), run.ensemble.seed_of(0))?;
    Ok(Report { paths: emitter.trajectory(&traj, run)?, failures: Vec::new() })
}

pub fn ensemble(run: &RunConfig, exec: &Execution, emitter: &Emitter) -> Result<Report> {
    let out = run_ensemble(&run.ensemble, &run.analysis, exec)?;
    Ok(Report { paths: emitter.ensemble(&out, run)?, failures: Vec::new() })
}

/// Runs every axis point; failed points are reported and skipped.
pub fn sweep_run(run: &RunConfig, axis: &SweepAxis, band: (f64, f64), exec: &Execution, emitter: &Emitter) -> Result<Report> {
    run.validate()?;
    let points = sweep(&run.ensemble, axis, &run.analysis, exec)?;
    let paths = emitter.sweep(&points, axis, band, run)?;
    let failures = points
        .into_iter()
        .filter_map(|p| p.result.err().map(|e| (p.value, e)))
        .collect();
    Ok(Report { paths, failures })
}

pub fn run_preset(preset: &ExperimentPreset, exec: &Execution, emitter: &Emitter) -> Result<Report> {
    sweep_run(&preset.run, &preset.axis, preset.band, exec, emitter)
}
