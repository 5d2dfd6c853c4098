//! The four figure presets.
//!
//! All presets run 50 Heun realizations from `DEFAULT_MASTER_SEED` at the
//! optimal point f_dc = 0.5 (Ω = Δ = 1.4). The Itô–Euler stepper pumps the
//! Bloch norm at rate 2λ²D and diverges at the upper end of the D sweep,
//! so the figure runs integrate in the Stratonovich sense.

use std::fmt;
use std::str::FromStr;

use crate::cli::config::RunConfig;
use crate::ensemble::{Analysis, EnsembleConfig, SweepAxis, SweepParameter};
use crate::error::{Error, Result};
use crate::integrator::{Component, SimulationConfig, Stepper};
use crate::model::{DrivePlan, QubitParams};
use crate::noise::NoiseSpec;

/// White-noise intensities of the D sweeps.
pub const D_SWEEP: [f64; 4] = [1e-7, 1e-6, 1e-5, 1e-4];
/// Correlation times of the τ sweeps.
pub const TAU_SWEEP: [f64; 3] = [0.0, 2.0, 5.0];
/// Noise intensity held fixed in the τ sweeps.
pub const TAU_SWEEP_D: f64 = 1e-6;
/// Drive amplitude of the driven presets.
pub const DRIVE_F_AC: f64 = 0.005;
/// Noise coupling of the undriven presets.
pub const UNDRIVEN_COUPLING: f64 = 60.0;
/// Noise coupling of the driven presets.
pub const DRIVEN_COUPLING: f64 = 120.0;
/// Band holding the interlevel peak at Ω = 1.4.
pub const INTERLEVEL_BAND: (f64, f64) = (0.7, 2.1);
/// Band holding the Rabi peak at I_pΦ₀·f_ac/2 = 0.5.
pub const RABI_BAND: (f64, f64) = (0.25, 0.9);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetName {
    Fig1a,
    Fig1b,
    Fig2a,
    Fig2b,
}

impl PresetName {
    pub const ALL: [PresetName; 4] = [PresetName::Fig1a, PresetName::Fig1b, PresetName::Fig2a, PresetName::Fig2b];
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PresetName::Fig1a => "fig1a",
            PresetName::Fig1b => "fig1b",
            PresetName::Fig2a => "fig2a",
            PresetName::Fig2b => "fig2b",
        })
    }
}

impl FromStr for PresetName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.to_string() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// A preset resolved to a runnable sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: PresetName,
    pub run: RunConfig,
    pub axis: SweepAxis,
    /// Band searched for the peak reported in the SR curve.
    pub band: (f64, f64),
}

impl ExperimentPreset {
    pub fn resolve(name: PresetName) -> Self {
        let driven = matches!(name, PresetName::Fig2a | PresetName::Fig2b);
        let qubit = QubitParams::default();
        let mut drive = DrivePlan::default();
        if driven {
            drive.f_ac = DRIVE_F_AC;
            drive.omega_d = crate::model::interlevel_splitting(&qubit, drive.eps0(&qubit));
        }
        let (axis, noise_d) = match name {
            PresetName::Fig1a | PresetName::Fig2a => (SweepAxis::new(SweepParameter::NoiseIntensityD, &D_SWEEP), D_SWEEP[0]),
            PresetName::Fig1b | PresetName::Fig2b => (SweepAxis::new(SweepParameter::NoiseTau, &TAU_SWEEP), TAU_SWEEP_D),
        };
        let coupling = if driven { DRIVEN_COUPLING } else { UNDRIVEN_COUPLING };
        let noise = NoiseSpec { coupling_lambda: coupling, ..NoiseSpec::white(noise_d) };
        let mut base = SimulationConfig::new(qubit, drive, noise);
        base.stepper = Stepper::HeunStratonovich;
        let (component, band) = if driven { (Component::Z, RABI_BAND) } else { (Component::X, INTERLEVEL_BAND) };
        let run = RunConfig { ensemble: EnsembleConfig::new(base), analysis: Analysis::of(&[component]) };
        ExperimentPreset { name, run, axis, band }
    }

    /// Applies a master seed override.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.run.ensemble.master_seed = seed;
        self
    }

    /// Every sweep point as a validated configuration.
    pub fn points(&self) -> Result<Vec<RunConfig>> {
        (0..self.axis.values.len())
            .map(|i| {
                let run = RunConfig { ensemble: self.axis.point(&self.run.ensemble, i), analysis: self.run.analysis.clone() };
                run.validate().map(|_| run)
            })
            .collect()
    }
}

/// Resolves a preset by name.
pub fn preset(name: &str) -> Result<ExperimentPreset> {
    Ok(ExperimentPreset::resolve(name.parse()?))
}
