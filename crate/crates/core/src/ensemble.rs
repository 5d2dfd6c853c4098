//! Parallel, reproducible ensembles of trajectories and parameter sweeps.
//!
//! Realization `i` always integrates with seed `derive_seed(master_seed, i)`,
//! workers share nothing, and per-realization spectra are reduced in index
//! order on one thread. Results are therefore bit-identical for any worker
//! count.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{simulate_trajectory, Component, SimulationConfig, Trajectory};
use crate::noise::derive_seed;
use crate::spectra::{apply_estimator, average_spectra, Estimator, PsdEstimator, Spectrum, Window};

/// Realizations per ensemble unless configured otherwise.
pub const DEFAULT_REALIZATIONS: usize = 50;
pub const DEFAULT_MASTER_SEED: u64 = 20_100_421;
/// Master-seed offset between consecutive sweep points (2⁶⁴/φ).
pub const SWEEP_SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;
/// Master seeds are 63-bit so they fit a signed config integer.
pub const MAX_MASTER_SEED: u64 = i64::MAX as u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub base: SimulationConfig,
    pub n_realizations: usize,
    pub master_seed: u64,
}

impl EnsembleConfig {
    pub fn new(base: SimulationConfig) -> Self {
        Self { base, n_realizations: DEFAULT_REALIZATIONS, master_seed: DEFAULT_MASTER_SEED }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_realizations == 0 {
            return Err(Error::InvalidConfig("run.n_realizations must be >= 1".into()));
        }
        if self.master_seed > MAX_MASTER_SEED {
            return Err(Error::InvalidConfig(format!("run.master_seed must be <= {MAX_MASTER_SEED}")));
        }
        self.base.validate()
    }

    pub fn seed_of(&self, index: usize) -> u64 {
        derive_seed(self.master_seed, index as u64)
    }
}

/// What to estimate from each realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub components: Vec<Component>,
    pub window: Window,
    pub estimator: Estimator,
}

impl Default for Analysis {
    fn default() -> Self {
        Self { components: vec![Component::X], window: Window::default(), estimator: Estimator::default() }
    }
}

impl Analysis {
    pub fn of(components: &[Component]) -> Self {
        Self { components: components.to_vec(), ..Self::default() }
    }
}

/// Execution knobs that never change results.
#[derive(Debug, Clone, Copy, Default)]
pub struct Execution {
    /// Worker threads; `None` uses the machine's parallelism.
    pub threads: Option<usize>,
    /// Keep every trajectory in the output.
    pub keep_trajectories: bool,
    /// Keep every per-realization spectrum in the output.
    pub keep_periodograms: bool,
}

impl Execution {
    pub fn threads(n: usize) -> Self {
        Self { threads: Some(n), ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOutput {
    /// Ensemble spectra, one per requested component in request order.
    pub spectra: Vec<Spectrum>,
    /// `periodograms[i][c]`: realization `i`, component `c`; empty unless kept.
    pub periodograms: Vec<Vec<Spectrum>>,
    pub trajectories: Vec<Trajectory>,
}

impl EnsembleOutput {
    pub fn spectrum(&self, component: Component) -> Option<&Spectrum> {
        self.spectra.iter().find(|s| s.component == Some(component))
    }
}

struct Realization {
    spectra: Vec<Spectrum>,
    trajectory: Option<Trajectory>,
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

/// Runs `cfg.n_realizations` trajectories and averages their spectra.
///
/// A diverging realization aborts the ensemble; the error names the lowest
/// failing index, independent of scheduling.
pub fn run_ensemble(cfg: &EnsembleConfig, analysis: &Analysis, exec: &Execution) -> Result<EnsembleOutput> {
    cfg.validate()?;
    if analysis.components.is_empty() {
        return Err(Error::InvalidConfig("at least one spectral component is required".into()));
    }
    let base = &cfg.base;
    let estimator = PsdEstimator::new(base.n_recorded(), base.sample_interval(), analysis.window)?;
    let eps0 = base.eps0();
    let first_failure = AtomicUsize::new(usize::MAX);

    let work = |i: usize| -> Option<Result<Realization>> {
        // indices above a known failure are skipped; lower ones still run so
        // the reported index is the minimum
        if i > first_failure.load(Ordering::Relaxed) {
            return None;
        }
        let result = simulate_trajectory(base, cfg.seed_of(i)).and_then(|traj| {
            let spectra = analysis
                .components
                .iter()
                .map(|&c| {
                    estimator
                        .spectrum(&traj.series(c, &base.qubit, eps0), Some(c))
                        .map(|s| apply_estimator(s, analysis.estimator))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Realization { spectra, trajectory: exec.keep_trajectories.then_some(traj) })
        });
        if result.is_err() {
            first_failure.fetch_min(i, Ordering::Relaxed);
        }
        Some(result)
    };

    let results: Vec<Option<Result<Realization>>> =
        pool(exec.threads)?.install(|| (0..cfg.n_realizations).into_par_iter().map(work).collect());

    let mut realizations = Vec::with_capacity(results.len());
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Some(Ok(r)) => realizations.push(r),
            Some(Err(e)) => return Err(Error::Realization { index, source: Box::new(e) }),
            None => unreachable!("realization skipped without an earlier failure"),
        }
    }

    let spectra = (0..analysis.components.len())
        .map(|c| {
            let column: Vec<Spectrum> = realizations.iter().map(|r| r.spectra[c].clone()).collect();
            average_spectra(&column)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut output = EnsembleOutput { spectra, periodograms: Vec::new(), trajectories: Vec::new() };
    for r in realizations {
        if exec.keep_periodograms {
            output.periodograms.push(r.spectra);
        }
        if let Some(t) = r.trajectory {
            output.trajectories.push(t);
        }
    }
    Ok(output)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    NoiseIntensityD,
    NoiseTau,
    DriveFAc,
    DriveOmegaD,
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParameter::NoiseIntensityD => "noise_intensity_d",
            SweepParameter::NoiseTau => "noise_tau",
            SweepParameter::DriveFAc => "drive_f_ac",
            SweepParameter::DriveOmegaD => "drive_omega_d",
        })
    }
}

impl FromStr for SweepParameter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noise_intensity_d" | "d" | "D" => Ok(SweepParameter::NoiseIntensityD),
            "noise_tau" | "tau" => Ok(SweepParameter::NoiseTau),
            "drive_f_ac" | "f_ac" => Ok(SweepParameter::DriveFAc),
            "drive_omega_d" | "omega_d" => Ok(SweepParameter::DriveOmegaD),
            other => Err(Error::InvalidConfig(format!("unknown sweep parameter '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

impl SweepAxis {
    pub fn new(parameter: SweepParameter, values: &[f64]) -> Self {
        Self { parameter, values: values.to_vec() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("sweep axis has no values".into()));
        }
        for &v in &self.values {
            let ok = match self.parameter {
                SweepParameter::NoiseIntensityD | SweepParameter::NoiseTau | SweepParameter::DriveFAc => {
                    v >= 0.0 && v.is_finite()
                }
                SweepParameter::DriveOmegaD => v > 0.0 && v.is_finite(),
            };
            if !ok {
                return Err(Error::InvalidConfig(format!("{} cannot take value {v}", self.parameter)));
            }
        }
        Ok(())
    }

    /// Configuration of axis point `index`: parameter set and master seed
    /// offset by `index · SWEEP_SEED_STRIDE` (kept to 63 bits).
    pub fn point(&self, cfg: &EnsembleConfig, index: usize) -> EnsembleConfig {
        let mut out = cfg.clone();
        let v = self.values[index];
        match self.parameter {
            SweepParameter::NoiseIntensityD => out.base.noise.intensity_d = v,
            SweepParameter::NoiseTau => out.base.noise.tau = v,
            SweepParameter::DriveFAc => out.base.drive.f_ac = v,
            SweepParameter::DriveOmegaD => out.base.drive.omega_d = v,
        }
        out.master_seed =
            cfg.master_seed.wrapping_add((index as u64).wrapping_mul(SWEEP_SEED_STRIDE)) & MAX_MASTER_SEED;
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub config: EnsembleConfig,
    pub result: Result<EnsembleOutput>,
}

/// One independent ensemble per axis value, in axis order. A failing point
/// is recorded and the sweep moves on.
pub fn sweep(cfg: &EnsembleConfig, axis: &SweepAxis, analysis: &Analysis, exec: &Execution) -> Result<Vec<SweepPoint>> {
    axis.validate()?;
    Ok((0..axis.values.len())
        .map(|i| {
            let config = axis.point(cfg, i);
            let result = run_ensemble(&config, analysis, exec);
            SweepPoint { value: axis.values[i], config, result }
        })
        .collect())
}
