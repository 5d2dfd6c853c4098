//! Stochastic Bloch equations in the energy eigenbasis:
//!
//! ```text
//! dX/dt = −C·Y − Γ_φ·X                + (ε₀/Ω)·Y·δξ
//! dY/dt =  A·Z + C·X − Γ_φ·Y          − ((Δ/Ω)·Z + (ε₀/Ω)·X)·δξ
//! dZ/dt = −A·Y − Γ_r·(Z − Z_eq)       + (Δ/Ω)·Y·δξ
//! ```
//!
//! with δξ = λ·δf_n. The noise term is linear and antisymmetric in the state,
//! so it generates rotations of the Bloch vector about the axis
//! (Δ/Ω, 0, −ε₀/Ω).
//!
//! Two steppers are provided. [`Stepper::ItoEuler`] is Euler–Maruyama on the
//! equations read as Itô SDEs. [`Stepper::HeunStratonovich`] is the
//! predictor–corrector that converges to the Stratonovich solution, which is
//! the white-noise limit of physical (finite-τ) flux noise.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    circulating_current, drive_bias, equilibrium_z, interlevel_splitting, BlochState, DrivePlan,
    QubitParams, STATE_TOLERANCE,
};
use crate::noise::{NoiseDriver, NoiseSpec};

/// Hard bound on |s|; exceeding it means the step size is unstable.
pub const NORM_BOUND: f64 = 10.0;

/// Upper limit on the per-step noise inflation 2λ²D·dt.
pub const STABILITY_LIMIT: f64 = 0.1;

pub const DEFAULT_DT: f64 = 0.005;
pub const DEFAULT_STRIDE: usize = 2;
pub const DEFAULT_TRANSIENT: f64 = 100.0;
/// Recorded samples per trajectory under default settings.
pub const DEFAULT_RECORDED: usize = 1 << 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepper {
    #[default]
    #[serde(alias = "ito")]
    ItoEuler,
    #[serde(alias = "heun")]
    HeunStratonovich,
}

impl fmt::Display for Stepper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stepper::ItoEuler => "ito_euler",
            Stepper::HeunStratonovich => "heun_stratonovich",
        })
    }
}

impl FromStr for Stepper {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ito" | "ito_euler" => Ok(Stepper::ItoEuler),
            "heun" | "heun_stratonovich" => Ok(Stepper::HeunStratonovich),
            other => Err(Error::InvalidConfig(format!("unknown stepper '{other}'"))),
        }
    }
}

/// Everything needed to integrate one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub qubit: QubitParams,
    pub drive: DrivePlan,
    pub noise: NoiseSpec,
    pub dt: f64,
    pub t_total: f64,
    /// Initial stretch `[0, t_transient)` that is integrated but not recorded.
    pub t_transient: f64,
    pub record_stride: usize,
    pub initial_state: BlochState,
    pub stepper: Stepper,
}

impl SimulationConfig {
    /// Default run settings for the given physics: thermal initial state,
    /// 100 ns transient and a recorded window of 2¹³ samples.
    pub fn new(qubit: QubitParams, drive: DrivePlan, noise: NoiseSpec) -> Self {
        let omega = interlevel_splitting(&qubit, drive.eps0(&qubit));
        let z_eq = equilibrium_z(omega, qubit.temperature);
        Self {
            qubit,
            drive,
            noise,
            dt: DEFAULT_DT,
            t_total: default_t_total(DEFAULT_DT, DEFAULT_STRIDE, DEFAULT_TRANSIENT),
            t_transient: DEFAULT_TRANSIENT,
            record_stride: DEFAULT_STRIDE,
            initial_state: BlochState::new(0.0, 0.0, z_eq),
            stepper: Stepper::default(),
        }
    }

    pub fn eps0(&self) -> f64 {
        self.drive.eps0(&self.qubit)
    }

    pub fn omega(&self) -> f64 {
        interlevel_splitting(&self.qubit, self.eps0())
    }

    pub fn z_eq(&self) -> f64 {
        equilibrium_z(self.omega(), self.qubit.temperature)
    }

    /// Total number of integration steps.
    pub fn n_steps(&self) -> usize {
        (self.t_total / self.dt).round() as usize
    }

    /// First recorded step index.
    pub fn first_recorded_step(&self) -> usize {
        // guard against t_transient/dt landing a hair above an integer
        (self.t_transient / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    pub fn n_recorded(&self) -> usize {
        let (n, k0) = (self.n_steps(), self.first_recorded_step());
        if n < k0 {
            0
        } else {
            (n - k0) / self.record_stride + 1
        }
    }

    /// Spacing of recorded samples.
    pub fn sample_interval(&self) -> f64 {
        self.dt * self.record_stride as f64
    }

    /// Per-step noise inflation 2λ²D·dt checked by the stability guard.
    pub fn noise_inflation(&self) -> f64 {
        2.0 * self.noise.coupling_lambda.powi(2) * self.noise.intensity_d * self.dt
    }

    pub fn validate(&self) -> Result<()> {
        self.qubit.validate()?;
        self.drive.validate()?;
        self.noise.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("run.dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_transient >= 0.0) {
            return Err(Error::InvalidConfig("run.t_transient must be >= 0".into()));
        }
        if !(self.t_transient < self.t_total && self.t_total.is_finite()) {
            return Err(Error::InvalidConfig(
                "run.t_transient must be < run.t_total".into(),
            ));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig("run.record_stride must be >= 1".into()));
        }
        let nyquist = std::f64::consts::PI / self.sample_interval();
        if !(nyquist > self.omega()) {
            return Err(Error::InvalidConfig(format!(
                "Nyquist bound violated: pi/(dt*record_stride) = {nyquist} must exceed Omega = {}",
                self.omega()
            )));
        }
        if self.n_recorded() < 2 {
            return Err(Error::InvalidConfig(
                "recorded window holds fewer than 2 samples".into(),
            ));
        }
        let s = &self.initial_state;
        if !s.is_finite() || s.norm() > 1.0 + STATE_TOLERANCE {
            return Err(Error::InvalidConfig(
                "run.initial_state must lie in the Bloch ball".into(),
            ));
        }
        let inflation = self.noise_inflation();
        if inflation > STABILITY_LIMIT {
            let per_dt = inflation / self.dt;
            return Err(Error::StabilityGuard {
                value: inflation,
                limit: STABILITY_LIMIT,
                max_dt: STABILITY_LIMIT / per_dt,
            });
        }
        Ok(())
    }
}

/// `t_total` giving exactly `DEFAULT_RECORDED` samples after the transient.
pub fn default_t_total(dt: f64, stride: usize, t_transient: f64) -> f64 {
    t_transient + ((DEFAULT_RECORDED - 1) * stride) as f64 * dt
}

/// Bloch vector component, or the circulating current built from X and Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    X,
    Y,
    Z,
    #[serde(rename = "I", alias = "current")]
    Current,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Component::X => "X",
            Component::Y => "Y",
            Component::Z => "Z",
            Component::Current => "I",
        })
    }
}

impl FromStr for Component {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Component::X),
            "y" | "Y" => Ok(Component::Y),
            "z" | "Z" => Ok(Component::Z),
            "i" | "I" | "current" => Ok(Component::Current),
            other => Err(Error::InvalidConfig(format!("unknown component '{other}'"))),
        }
    }
}

/// Recorded samples of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<BlochState>,
    pub seed: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sample_interval(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    /// Time series of one component. `Current` uses `qubit` and `eps0`.
    pub fn series(&self, component: Component, qubit: &QubitParams, eps0: f64) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| match component {
                Component::X => s.x,
                Component::Y => s.y,
                Component::Z => s.z,
                Component::Current => circulating_current(qubit, eps0, s),
            })
            .collect()
    }
}

/// Precomputed coefficients of the Bloch equations for one configuration.
#[derive(Debug, Clone, Copy)]
pub struct BlochModel {
    qubit: QubitParams,
    drive: DrivePlan,
    omega: f64,
    z_eq: f64,
    /// ε₀/Ω
    bias_ratio: f64,
    /// Δ/Ω
    tunnel_ratio: f64,
}

impl BlochModel {
    pub fn new(qubit: &QubitParams, drive: &DrivePlan) -> Self {
        let eps0 = drive.eps0(qubit);
        let omega = interlevel_splitting(qubit, eps0);
        Self {
            qubit: *qubit,
            drive: *drive,
            omega,
            z_eq: equilibrium_z(omega, qubit.temperature),
            bias_ratio: eps0 / omega,
            tunnel_ratio: qubit.delta / omega,
        }
    }

    #[inline]
    pub fn drift(&self, s: &BlochState, t: f64) -> BlochState {
        let eps1 = drive_bias(&self.qubit, &self.drive, t);
        let a = -eps1 * self.tunnel_ratio;
        let c = -self.omega - eps1 * self.bias_ratio;
        let q = &self.qubit;
        BlochState::new(
            -c * s.y - q.gamma_phi * s.x,
            a * s.z + c * s.x - q.gamma_phi * s.y,
            -a * s.y - q.gamma_r * (s.z - self.z_eq),
        )
    }

    #[inline]
    pub fn noise_generator(&self, s: &BlochState) -> BlochState {
        BlochState::new(
            self.bias_ratio * s.y,
            -self.tunnel_ratio * s.z - self.bias_ratio * s.x,
            self.tunnel_ratio * s.y,
        )
    }

    #[inline]
    pub fn em_step(&self, s: &BlochState, t: f64, dt: f64, dw: f64) -> BlochState {
        *s + self.drift(s, t) * dt + self.noise_generator(s) * dw
    }

    #[inline]
    pub fn heun_step(&self, s: &BlochState, t: f64, dt: f64, dw: f64) -> BlochState {
        let f0 = self.drift(s, t);
        let g0 = self.noise_generator(s);
        let guess = *s + f0 * dt + g0 * dw;
        let f1 = self.drift(&guess, t + dt);
        let g1 = self.noise_generator(&guess);
        *s + (f0 + f1) * (0.5 * dt) + (g0 + g1) * (0.5 * dw)
    }

    #[inline]
    pub fn step(&self, stepper: Stepper, s: &BlochState, t: f64, dt: f64, dw: f64) -> BlochState {
        match stepper {
            Stepper::ItoEuler => self.em_step(s, t, dt, dw),
            Stepper::HeunStratonovich => self.heun_step(s, t, dt, dw),
        }
    }
}

/// Deterministic right-hand side (δξ = 0).
pub fn drift(s: &BlochState, t: f64, q: &QubitParams, d: &DrivePlan) -> BlochState {
    BlochModel::new(q, d).drift(s, t)
}

/// Direction multiplying δξ: ((ε₀/Ω)Y, −(Δ/Ω)Z − (ε₀/Ω)X, (Δ/Ω)Y).
pub fn noise_generator(s: &BlochState, q: &QubitParams, eps0: f64) -> BlochState {
    let omega = interlevel_splitting(q, eps0);
    let (b, r) = (eps0 / omega, q.delta / omega);
    BlochState::new(b * s.y, -r * s.z - b * s.x, r * s.y)
}

/// Euler–Maruyama step `s + drift·dt + g(s)·dW`, where `dw` already carries λ.
pub fn em_step(s: &BlochState, t: f64, dt: f64, dw: f64, cfg: &SimulationConfig) -> BlochState {
    BlochModel::new(&cfg.qubit, &cfg.drive).em_step(s, t, dt, dw)
}

/// Heun predictor–corrector step averaging drift and noise direction.
pub fn heun_step(s: &BlochState, t: f64, dt: f64, dw: f64, cfg: &SimulationConfig) -> BlochState {
    BlochModel::new(&cfg.qubit, &cfg.drive).heun_step(s, t, dt, dw)
}

/// Integrates one realization. The noise stream is seeded from `seed`
/// alone, so the result is a pure function of `(cfg, seed)`.
pub fn simulate_trajectory(cfg: &SimulationConfig, seed: u64) -> Result<Trajectory> {
    cfg.validate()?;
    let driver = NoiseDriver::new(&cfg.noise, cfg.dt, seed)?;
    integrate(cfg, driver, seed)
}

/// Integration loop with an explicit noise driver.
pub(crate) fn integrate(cfg: &SimulationConfig, mut driver: NoiseDriver, seed: u64) -> Result<Trajectory> {
    let model = BlochModel::new(&cfg.qubit, &cfg.drive);
    let n_steps = cfg.n_steps();
    let k0 = cfg.first_recorded_step();
    let stride = cfg.record_stride;
    let lambda = cfg.noise.coupling_lambda;
    let dt = cfg.dt;
    let capacity = cfg.n_recorded();
    let mut times = Vec::with_capacity(capacity);
    let mut states = Vec::with_capacity(capacity);

    let mut s = cfg.initial_state;
    let bound_sqr = NORM_BOUND * NORM_BOUND;
    for k in 0..=n_steps {
        if k >= k0 && (k - k0).is_multiple_of(stride) {
            times.push(k as f64 * dt);
            states.push(s);
        }
        if k == n_steps {
            break;
        }
        let t = k as f64 * dt;
        let dw = lambda * driver.next_increment();
        s = model.step(cfg.stepper, &s, t, dt, dw);
        let n2 = s.norm_sqr();
        if !(n2 <= bound_sqr) {
            return Err(Error::NumericOverflow {
                time: t + dt,
                norm: n2.sqrt(),
            });
        }
    }
    Ok(Trajectory { times, states, seed })
}
