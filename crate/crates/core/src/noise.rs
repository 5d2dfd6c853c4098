//! Classical flux noise δf_n(t): Gaussian white noise with
//! ⟨δf(t)δf(t′)⟩ = 2D δ(t − t′) and the Ornstein–Uhlenbeck process
//! τ dδf/dt = −δf + ζ(t) driven by white ζ of the same intensity D.
//!
//! The OU path is advanced with its exact Gaussian transition kernel, so the
//! only discretization error left in a simulation is the Bloch integrator's.
//!
//! Random streams are ChaCha8 generators seeded from [`derive_seed`], which
//! makes every trajectory's noise a pure function of `(master_seed, index)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deterministic, seekable random stream backing every noise path.
pub type NoiseRng = ChaCha8Rng;

/// Builds the stream for a child seed.
pub fn stream_from_seed(seed: u64) -> NoiseRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer (Steele, Lea & Flood). Bijective on `u64`.
pub const fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed of trajectory `index` under `master_seed`:
///
/// `h(m, i) = splitmix64(splitmix64(m) ^ splitmix64(i ^ 0xD1B5_4A32_D192_ED03))`
///
/// Each argument is whitened separately before mixing, so neighbouring
/// masters and neighbouring indices never produce related seeds.
pub const fn derive_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ splitmix64(index ^ 0xD1B5_4A32_D192_ED03))
}

/// Noise intensity, correlation time and coupling to the qubit bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Intensity D in ns (GHz⁻¹).
    pub intensity_d: f64,
    /// Correlation time τ in ns; 0 selects white noise.
    pub tau: f64,
    /// λ in δξ = λ·δf_n, energy units.
    pub coupling_lambda: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            intensity_d: 0.0,
            tau: 0.0,
            coupling_lambda: 200.0,
        }
    }
}

impl NoiseSpec {
    pub fn white(intensity_d: f64) -> Self {
        Self { intensity_d, ..Self::default() }
    }

    pub fn colored(intensity_d: f64, tau: f64) -> Self {
        Self { intensity_d, tau, ..Self::default() }
    }

    pub fn is_white(&self) -> bool {
        self.tau == 0.0
    }

    /// Stationary OU variance D/τ.
    pub fn stationary_variance(&self) -> f64 {
        self.intensity_d / self.tau
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.intensity_d >= 0.0 && self.intensity_d.is_finite()) {
            return Err(Error::InvalidConfig("noise.intensity_d must be >= 0".into()));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidConfig("noise.tau must be >= 0".into()));
        }
        if !(self.coupling_lambda > 0.0 && self.coupling_lambda.is_finite()) {
            return Err(Error::InvalidConfig("noise.coupling_lambda must be > 0".into()));
        }
        Ok(())
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("dt must be > 0, got {dt}")))
    }
}

fn gaussian(rng: &mut NoiseRng) -> f64 {
    StandardNormal.sample(rng)
}

/// One white-noise increment ∫δf dt over a step: N(0, 2·D·dt).
pub fn white_increment(spec: &NoiseSpec, dt: f64, rng: &mut NoiseRng) -> Result<f64> {
    check_dt(dt)?;
    if !spec.is_white() {
        return Err(Error::InvalidConfig("white_increment requires tau = 0".into()));
    }
    let xi = gaussian(rng);
    Ok((2.0 * spec.intensity_d * dt).sqrt() * xi)
}

/// A single OU path: current value plus the stream that advances it.
#[derive(Debug, Clone)]
pub struct NoisePathState {
    pub value: f64,
    rng: NoiseRng,
}

/// Conditional moments of one exact OU step of length `dt`.
#[derive(Debug, Clone, Copy)]
struct OuKernel {
    decay: f64,
    /// sd of the endpoint given the start.
    end_sd: f64,
    /// Mean of ∫f over the step per unit start value.
    integral_gain: f64,
    /// Regression of the integral on the endpoint innovation.
    integral_on_end: f64,
    /// Residual sd of the integral.
    integral_sd: f64,
}

impl OuKernel {
    fn new(spec: &NoiseSpec, dt: f64) -> Self {
        let var = spec.stationary_variance();
        let tau = spec.tau;
        let u = dt / tau;
        // em = e^{-u} - 1, kept in expm1 form to avoid cancellation for dt << tau
        let em = (-u).exp_m1();
        let decay = 1.0 + em;
        let end_var = var * (-(-2.0 * u).exp_m1());
        // Var ∫f = var τ² (2u − 3 + 4e^{-u} − e^{-2u}) = var τ² (2(u + em) − em²)
        let int_var = (var * tau * tau * (2.0 * (u + em) - em * em)).max(0.0);
        // Cov(f_end, ∫f) = var τ (1 − e^{-u})²
        let cov = var * tau * em * em;
        let (integral_on_end, resid) = if end_var > 0.0 {
            (cov / end_var, (int_var - cov * cov / end_var).max(0.0))
        } else {
            (0.0, 0.0)
        };
        Self {
            decay,
            end_sd: end_var.sqrt(),
            integral_gain: -tau * em,
            integral_on_end,
            integral_sd: resid.sqrt(),
        }
    }
}

/// Starts an OU path in its stationary law N(0, D/τ).
pub fn ou_init(spec: &NoiseSpec, mut rng: NoiseRng) -> Result<NoisePathState> {
    if !(spec.tau > 0.0) {
        return Err(Error::InvalidConfig("OU noise requires tau > 0".into()));
    }
    let value = spec.stationary_variance().sqrt() * gaussian(&mut rng);
    Ok(NoisePathState { value, rng })
}

impl NoisePathState {
    /// Path pinned at `value` (used for noiseless checks and tests).
    pub fn with_value(value: f64, rng: NoiseRng) -> Self {
        Self { value, rng }
    }

    /// Exact update f′ = f e^{−dt/τ} + √((D/τ)(1 − e^{−2dt/τ}))·N(0,1).
    pub fn ou_step(&mut self, spec: &NoiseSpec, dt: f64) -> Result<f64> {
        check_ou(spec, dt)?;
        let k = OuKernel::new(spec, dt);
        self.value = k.decay * self.value + k.end_sd * gaussian(&mut self.rng);
        Ok(self.value)
    }

    /// Advances one step and returns the exact integral ∫f dt over it,
    /// sampled jointly with the new endpoint.
    pub fn ou_step_integrated(&mut self, spec: &NoiseSpec, dt: f64) -> Result<f64> {
        check_ou(spec, dt)?;
        let k = OuKernel::new(spec, dt);
        Ok(self.advance(&k))
    }

    fn advance(&mut self, k: &OuKernel) -> f64 {
        let start = self.value;
        let e1 = k.end_sd * gaussian(&mut self.rng);
        let e2 = k.integral_sd * gaussian(&mut self.rng);
        self.value = k.decay * start + e1;
        k.integral_gain * start + k.integral_on_end * e1 + e2
    }
}

fn check_ou(spec: &NoiseSpec, dt: f64) -> Result<()> {
    check_dt(dt)?;
    if !(spec.tau > 0.0) {
        return Err(Error::InvalidConfig("OU noise requires tau > 0".into()));
    }
    Ok(())
}

/// Per-step noise source consumed by the integrator. Each call yields the
/// integrated noise ∫δf dt over the next step, without the λ factor.
#[derive(Debug, Clone)]
pub struct NoiseDriver {
    kind: DriverKind,
}

#[derive(Debug, Clone)]
enum DriverKind {
    Silent,
    White { scale: f64, rng: NoiseRng },
    Ou { path: NoisePathState, kernel: OuKernel },
}

impl NoiseDriver {
    /// Driver for `spec` at step `dt`, seeded from `seed`. OU paths start
    /// from their stationary law.
    pub fn new(spec: &NoiseSpec, dt: f64, seed: u64) -> Result<Self> {
        spec.validate()?;
        check_dt(dt)?;
        let rng = stream_from_seed(seed);
        let kind = if spec.is_white() {
            if spec.intensity_d == 0.0 {
                DriverKind::Silent
            } else {
                DriverKind::White {
                    scale: (2.0 * spec.intensity_d * dt).sqrt(),
                    rng,
                }
            }
        } else {
            DriverKind::Ou {
                path: ou_init(spec, rng)?,
                kernel: OuKernel::new(spec, dt),
            }
        };
        Ok(Self { kind })
    }

    #[inline]
    pub fn next_increment(&mut self) -> f64 {
        match &mut self.kind {
            DriverKind::Silent => 0.0,
            DriverKind::White { scale, rng } => *scale * gaussian(rng),
            DriverKind::Ou { path, kernel } => path.advance(kernel),
        }
    }
}

/// `n_steps` consecutive integrated increments ∫δf dt, as the integrator
/// would draw them for `seed`.
pub fn noise_path(spec: &NoiseSpec, n_steps: usize, dt: f64, seed: u64) -> Result<Vec<f64>> {
    if n_steps == 0 {
        return Err(Error::InvalidConfig("noise_path needs n_steps >= 1".into()));
    }
    let mut driver = NoiseDriver::new(spec, dt, seed)?;
    Ok((0..n_steps).map(|_| driver.next_increment()).collect())
}
