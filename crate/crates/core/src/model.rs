//! Static qubit model: parameters, drive, Bloch vector and the closed-form
//! quantities derived from them.
//!
//! Units: ħ = 1. Energies and rates are angular frequencies in ns⁻¹ (quoted
//! as "GHz"), times are in ns. The flux bias and drive amplitude are reduced
//! fluxes and are converted to energy through `ip_phi0`.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on `|z| <= 1` before a state is rejected.
pub const STATE_TOLERANCE: f64 = 1e-6;

/// Device and bath parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    /// Persistent-current energy scale I_p·Φ₀.
    pub ip_phi0: f64,
    /// Tunnelling splitting Δ.
    pub delta: f64,
    /// Dephasing rate Γ_φ.
    pub gamma_phi: f64,
    /// Relaxation rate Γ_r.
    pub gamma_r: f64,
    /// Bath temperature in energy units; 0 is allowed.
    pub temperature: f64,
}

impl Default for QubitParams {
    fn default() -> Self {
        Self {
            ip_phi0: 200.0,
            delta: 1.4,
            gamma_phi: 0.1,
            gamma_r: 0.1,
            temperature: 0.0,
        }
    }
}

impl QubitParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.delta > 0.0, "qubit.delta must be > 0"),
            (self.ip_phi0 > 0.0, "qubit.ip_phi0 must be > 0"),
            (self.gamma_phi >= 0.0, "qubit.gamma_phi must be >= 0"),
            (self.gamma_r >= 0.0, "qubit.gamma_r must be >= 0"),
            (self.temperature >= 0.0, "qubit.temperature must be >= 0"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::InvalidConfig(msg.into()));
            }
        }
        let finite = [
            self.ip_phi0,
            self.delta,
            self.gamma_phi,
            self.gamma_r,
            self.temperature,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidConfig("qubit parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Flux bias and harmonic drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivePlan {
    /// Reduced dc flux f_dc; 0.5 is the optimal point.
    pub f_dc: f64,
    /// Reduced ac flux amplitude.
    pub f_ac: f64,
    /// Drive angular frequency; only meaningful when `f_ac > 0`.
    pub omega_d: f64,
}

impl Default for DrivePlan {
    fn default() -> Self {
        Self {
            f_dc: 0.5,
            f_ac: 0.0,
            omega_d: 0.0,
        }
    }
}

impl DrivePlan {
    pub fn validate(&self) -> Result<()> {
        if !self.f_dc.is_finite() {
            return Err(Error::InvalidConfig("drive.f_dc must be finite".into()));
        }
        if !(self.f_ac >= 0.0 && self.f_ac.is_finite()) {
            return Err(Error::InvalidConfig("drive.f_ac must be >= 0".into()));
        }
        if self.f_ac > 0.0 && !(self.omega_d > 0.0 && self.omega_d.is_finite()) {
            return Err(Error::InvalidConfig(
                "drive.omega_d must be > 0 when drive.f_ac > 0".into(),
            ));
        }
        Ok(())
    }

    /// Static bias ε₀ for this plan.
    pub fn eps0(&self, q: &QubitParams) -> f64 {
        bias_from_flux(q, self.f_dc)
    }
}

/// Pauli vector of the density matrix in the energy eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochState {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(&self, other: &BlochState) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_sqr(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for BlochState {
    type Output = BlochState;
    fn add(self, rhs: BlochState) -> BlochState {
        BlochState::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for BlochState {
    type Output = BlochState;
    fn sub(self, rhs: BlochState) -> BlochState {
        BlochState::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for BlochState {
    type Output = BlochState;
    fn mul(self, k: f64) -> BlochState {
        BlochState::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Static interlevel distance Ω = √(ε₀² + Δ²).
pub fn interlevel_splitting(q: &QubitParams, eps0: f64) -> f64 {
    eps0.hypot(q.delta)
}

/// Bias energy ε = I_pΦ₀ (f − ½).
pub fn bias_from_flux(q: &QubitParams, f_dc: f64) -> f64 {
    q.ip_phi0 * (f_dc - 0.5)
}

/// Ac bias ε₁(t) = I_pΦ₀ · f_ac · sin(ω_d t).
pub fn drive_bias(q: &QubitParams, d: &DrivePlan, t: f64) -> f64 {
    if d.f_ac == 0.0 {
        return 0.0;
    }
    q.ip_phi0 * d.f_ac * (d.omega_d * t).sin()
}

/// Eigenbasis drive coefficients `(A, C)` at time `t`:
/// A = −ε₁Δ/Ω and C = −Ω − ε₁ε₀/Ω.
pub fn drive_coefficients(q: &QubitParams, d: &DrivePlan, t: f64) -> (f64, f64) {
    let eps0 = d.eps0(q);
    let omega = interlevel_splitting(q, eps0);
    let eps1 = drive_bias(q, d, t);
    (-eps1 * q.delta / omega, -omega - eps1 * eps0 / omega)
}

/// Thermal equilibrium polarisation Z_eq = tanh(Ω / 2T); exactly 1 at T = 0.
pub fn equilibrium_z(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        1.0
    } else {
        (omega / (2.0 * temperature)).tanh()
    }
}

/// Upper and lower level occupations `(P₊, P₋) = ((1 − z)/2, (1 + z)/2)`.
pub fn occupation_probabilities(s: &BlochState) -> Result<(f64, f64)> {
    if !(s.z.abs() <= 1.0 + STATE_TOLERANCE) {
        return Err(Error::InvalidState(format!("|z| = {} exceeds 1", s.z.abs())));
    }
    let upper = (1.0 - s.z) / 2.0;
    Ok((upper, 1.0 - upper))
}

/// Circulating current in units of I_p: (Δ/Ω)·x − (ε₀/Ω)·z.
pub fn circulating_current(q: &QubitParams, eps0: f64, s: &BlochState) -> f64 {
    let omega = interlevel_splitting(q, eps0);
    (q.delta / omega) * s.x - (eps0 / omega) * s.z
}
