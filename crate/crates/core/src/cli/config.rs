//! Sectioned TOML run configuration: `[qubit]`, `[drive]`, `[noise]`, `[run]`.
//!
//! Every key is optional. `parse_config` materializes all defaults and
//! validates the result; `RunConfig::echo` renders the fully materialized
//! configuration back to TOML, and parsing that echo yields the same
//! `RunConfig`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::{Analysis, EnsembleConfig, DEFAULT_MASTER_SEED, DEFAULT_REALIZATIONS};
use crate::error::{Error, Result};
use crate::integrator::{
    default_t_total, Component, SimulationConfig, Stepper, DEFAULT_DT, DEFAULT_STRIDE, DEFAULT_TRANSIENT,
};
use crate::model::{equilibrium_z, interlevel_splitting, BlochState, DrivePlan, QubitParams};
use crate::noise::NoiseSpec;
use crate::spectra::{Estimator, Window};

/// Marker lines bracketing a config echo inside emitted CSV files.
pub const ECHO_BEGIN: &str = "# --- config ---";
pub const ECHO_END: &str = "# --- end config ---";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub qubit: QubitSection,
    #[serde(default)]
    pub drive: DriveSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ip_phi0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_dc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_ac: Option<f64>,
    /// Defaults to the interlevel splitting Ω when `f_ac > 0`, else 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_d: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intensity_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_lambda: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Defaults to the length giving 2¹³ recorded samples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_total: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_transient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,
    /// `[x, y, z]`; defaults to `[0, 0, Z_eq]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stepper: Option<Stepper>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_realizations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<Component>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator: Option<Estimator>,
}

/// A resolved, validated run: ensemble settings plus spectral analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub ensemble: EnsembleConfig,
    pub analysis: Analysis,
}

impl Default for RunConfig {
    fn default() -> Self {
        ConfigFile::default().resolve().expect("defaults are valid")
    }
}

impl ConfigFile {
    /// Fills in defaults and validates.
    pub fn resolve(&self) -> Result<RunConfig> {
        let dq = QubitParams::default();
        let qubit = QubitParams {
            ip_phi0: self.qubit.ip_phi0.unwrap_or(dq.ip_phi0),
            delta: self.qubit.delta.unwrap_or(dq.delta),
            gamma_phi: self.qubit.gamma_phi.unwrap_or(dq.gamma_phi),
            gamma_r: self.qubit.gamma_r.unwrap_or(dq.gamma_r),
            temperature: self.qubit.temperature.unwrap_or(dq.temperature),
        };
        qubit.validate()?;

        let dd = DrivePlan::default();
        let f_dc = self.drive.f_dc.unwrap_or(dd.f_dc);
        let f_ac = self.drive.f_ac.unwrap_or(dd.f_ac);
        let omega = interlevel_splitting(&qubit, DrivePlan { f_dc, ..dd }.eps0(&qubit));
        let omega_d = self.drive.omega_d.unwrap_or(if f_ac > 0.0 { omega } else { dd.omega_d });
        let drive = DrivePlan { f_dc, f_ac, omega_d };

        let dn = NoiseSpec::default();
        let noise = NoiseSpec {
            intensity_d: self.noise.intensity_d.unwrap_or(dn.intensity_d),
            tau: self.noise.tau.unwrap_or(dn.tau),
            coupling_lambda: self.noise.coupling_lambda.unwrap_or(dn.coupling_lambda),
        };

        let r = &self.run;
        let dt = r.dt.unwrap_or(DEFAULT_DT);
        let record_stride = r.record_stride.unwrap_or(DEFAULT_STRIDE);
        let t_transient = r.t_transient.unwrap_or(DEFAULT_TRANSIENT);
        let t_total = r.t_total.unwrap_or_else(|| default_t_total(dt, record_stride, t_transient));
        let initial_state = match r.initial_state {
            Some([x, y, z]) => BlochState::new(x, y, z),
            None => BlochState::new(0.0, 0.0, equilibrium_z(omega, qubit.temperature)),
        };
        let base = SimulationConfig {
            qubit,
            drive,
            noise,
            dt,
            t_total,
            t_transient,
            record_stride,
            initial_state,
            stepper: r.stepper.unwrap_or_default(),
        };
        let ensemble = EnsembleConfig {
            base,
            n_realizations: r.n_realizations.unwrap_or(DEFAULT_REALIZATIONS),
            master_seed: r.master_seed.unwrap_or(DEFAULT_MASTER_SEED),
        };
        let da = Analysis::default();
        let analysis = Analysis {
            components: r.components.clone().unwrap_or(da.components),
            window: r.window.unwrap_or(da.window),
            estimator: r.estimator.unwrap_or(da.estimator),
        };
        let run = RunConfig { ensemble, analysis };
        run.validate()?;
        Ok(run)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.analysis.components.is_empty() {
            return Err(Error::InvalidConfig("run.components must not be empty".into()));
        }
        self.ensemble.validate()
    }

    pub fn base(&self) -> &SimulationConfig {
        &self.ensemble.base
    }

    /// Fully materialized file form.
    pub fn to_file(&self) -> ConfigFile {
        let b = &self.ensemble.base;
        let s = b.initial_state;
        ConfigFile {
            qubit: QubitSection {
                ip_phi0: Some(b.qubit.ip_phi0),
                delta: Some(b.qubit.delta),
                gamma_phi: Some(b.qubit.gamma_phi),
                gamma_r: Some(b.qubit.gamma_r),
                temperature: Some(b.qubit.temperature),
            },
            drive: DriveSection { f_dc: Some(b.drive.f_dc), f_ac: Some(b.drive.f_ac), omega_d: Some(b.drive.omega_d) },
            noise: NoiseSection {
                intensity_d: Some(b.noise.intensity_d),
                tau: Some(b.noise.tau),
                coupling_lambda: Some(b.noise.coupling_lambda),
            },
            run: RunSection {
                dt: Some(b.dt),
                t_total: Some(b.t_total),
                t_transient: Some(b.t_transient),
                record_stride: Some(b.record_stride),
                initial_state: Some([s.x, s.y, s.z]),
                stepper: Some(b.stepper),
                n_realizations: Some(self.ensemble.n_realizations),
                master_seed: Some(self.ensemble.master_seed),
                window: Some(self.analysis.window),
                components: Some(self.analysis.components.clone()),
                estimator: Some(self.analysis.estimator),
            },
        }
    }

    /// TOML rendering of every setting, defaults included.
    pub fn echo(&self) -> String {
        toml::to_string(&self.to_file()).expect("config is serializable")
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses raw TOML text into a validated `RunConfig`.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    if text.trim().is_empty() {
        return Err(Error::InvalidConfig("config text is empty".into()));
    }
    let file: ConfigFile = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        Error::Parse { line, column, message: e.message().trim().to_string() }
    })?;
    file.resolve()
}

/// Pulls the config echo out of an emitted CSV or structured file. Plain
/// TOML is returned unchanged.
pub fn extract_config(text: &str) -> Result<String> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        return v
            .get("config")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| Error::InvalidConfig("structured file has no config echo".into()));
    }
    let Some(start) = text.lines().position(|l| l == ECHO_BEGIN) else {
        return Ok(text.to_string());
    };
    let mut out = String::new();
    for line in text.lines().skip(start + 1).take_while(|l| *l != ECHO_END) {
        let body = line.strip_prefix('#').unwrap_or(line);
        out.push_str(body.strip_prefix(' ').unwrap_or(body));
        out.push('\n');
    }
    Ok(out)
}

/// Reads a config from disk: a TOML file or any file written by `emit`.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&extract_config(&text)?)
}
