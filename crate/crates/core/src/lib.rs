//! Stochastic Bloch-equation simulator for a flux qubit driven by classical
//! white or Ornstein–Uhlenbeck flux noise.
//!
//! The crate integrates noisy Bloch trajectories, averages their power
//! spectra over reproducible parallel ensembles and extracts the
//! stochastic-resonance observables (peak height, position and width as a
//! function of noise intensity or correlation time).

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod integrator;
pub mod model;
pub mod noise;
pub mod spectra;

pub use ensemble::{
    run_ensemble, sweep, Analysis, EnsembleConfig, EnsembleOutput, Execution, SweepAxis, SweepParameter,
    SweepPoint,
};
pub use error::{Error, Result};
pub use integrator::{simulate_trajectory, Component, SimulationConfig, Stepper, Trajectory};
pub use model::{BlochState, DrivePlan, QubitParams};
pub use noise::{derive_seed, NoiseSpec};
pub use spectra::{find_peak, periodogram, sr_curve, Estimator, PeakInfo, Spectrum, SrPoint, Window};
