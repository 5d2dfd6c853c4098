//! Plot-ready output: comma-separated tables with `#` metadata headers, or
//! one structured JSON document per run.
//!
//! Floats are written with 17 significant digits (`{:.16e}` in CSV, the
//! shortest round-trip form in JSON), so every file parses back to the
//! exact binary values. Each file embeds the fully materialized config
//! echo; feeding the file back through `--config` reproduces it byte for
//! byte.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::cli::config::{RunConfig, ECHO_BEGIN, ECHO_END};
use crate::ensemble::{EnsembleOutput, SweepAxis, SweepPoint};
use crate::error::{Error, Result};
use crate::integrator::{Component, Trajectory};
use crate::spectra::{find_peak, PeakInfo, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Structured,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Structured => "structured",
        })
    }
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "structured" | "json" => Ok(Format::Structured),
            other => Err(Error::InvalidConfig(format!("unknown output format '{other}'"))),
        }
    }
}

/// Full-precision decimal.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Axis value as it appears in file names.
pub fn axis_label(v: f64) -> String {
    format!("{v:e}")
}

/// `<prefix>_<component>[_<axisvalue>].csv`
pub fn spectrum_file_name(prefix: &str, component: Component, axis_value: Option<f64>) -> String {
    match axis_value {
        Some(v) => format!("{prefix}_{component}_{}.csv", axis_label(v)),
        None => format!("{prefix}_{component}.csv"),
    }
}

fn header(kind: &str, fields: &[(&str, String)], run: &RunConfig) -> String {
    let mut out = format!("# qsr {kind}\n");
    for (k, v) in fields {
        let _ = writeln!(out, "# {k} = {v}");
    }
    out.push_str("# units = omega and t in 1/ns and ns; spectral values arbitrary (relative)\n");
    out.push_str(ECHO_BEGIN);
    out.push('\n');
    for line in run.echo().lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            let _ = writeln!(out, "# {line}");
        }
    }
    out.push_str(ECHO_END);
    out.push('\n');
    out
}

fn run_fields(run: &RunConfig) -> Vec<(&'static str, String)> {
    vec![
        ("master_seed", run.ensemble.master_seed.to_string()),
        ("n_realizations", run.ensemble.n_realizations.to_string()),
    ]
}

/// One spectrum with its metadata header.
pub fn spectrum_csv(spec: &Spectrum, run: &RunConfig) -> String {
    let mut fields = vec![("component", spec.component.map_or("-".into(), |c| c.to_string()))];
    fields.extend(run_fields(run));
    let mut out = header("spectrum", &fields, run);
    out.push_str("omega,value\n");
    for (w, v) in spec.frequencies.iter().zip(&spec.values) {
        let _ = writeln!(out, "{},{}", float(*w), float(*v));
    }
    out
}

/// Trajectory dump with columns t,X,Y,Z,I.
pub fn trajectory_csv(traj: &Trajectory, run: &RunConfig) -> String {
    let mut fields = run_fields(run);
    fields.push(("seed", traj.seed.to_string()));
    let mut out = header("trajectory", &fields, run);
    out.push_str("t,X,Y,Z,I\n");
    let base = run.base();
    let current = traj.series(Component::Current, &base.qubit, base.eps0());
    for ((t, s), i) in traj.times.iter().zip(&traj.states).zip(current) {
        let _ = writeln!(out, "{},{},{},{},{}", float(*t), float(s.x), float(s.y), float(s.z), float(i));
    }
    out
}

/// Peak summary of one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SrRow {
    pub value: f64,
    pub peak: Option<PeakInfo>,
    pub status: &'static str,
}

fn status_of(err: &Error) -> &'static str {
    match err {
        Error::NoLocalMaximum { .. } => "no_local_maximum",
        Error::BandTooNarrow { .. } => "band_too_narrow",
        e if e.is_numeric() => "numeric_overflow",
        Error::StabilityGuard { .. } => "stability_guard",
        Error::InvalidConfig(_) | Error::InvalidState(_) => "invalid_config",
        _ => "failed",
    }
}

/// Peak of `component` in `band` for every sweep point, in axis order.
pub fn sr_rows(points: &[SweepPoint], component: Component, band: (f64, f64)) -> Vec<SrRow> {
    points
        .iter()
        .map(|p| {
            let peak = p.result.as_ref().map_err(Clone::clone).and_then(|out| {
                let spec = out
                    .spectrum(component)
                    .ok_or_else(|| Error::InvalidConfig(format!("component {component} not analysed")))?;
                find_peak(spec, band)
            });
            match peak {
                Ok(peak) => SrRow { value: p.value, peak: Some(peak), status: "ok" },
                Err(e) => SrRow { value: p.value, peak: None, status: status_of(&e) },
            }
        })
        .collect()
}

/// Peak height, position and width against the swept parameter.
pub fn sr_curve_csv(rows: &[SrRow], axis: &SweepAxis, component: Component, band: (f64, f64), run: &RunConfig) -> String {
    let mut fields = vec![
        ("axis", axis.parameter.to_string()),
        ("component", component.to_string()),
        ("band", format!("{};{}", float(band.0), float(band.1))),
    ];
    fields.extend(run_fields(run));
    let mut out = header("sr_curve", &fields, run);
    out.push_str("value,height,frequency,fwhm,status\n");
    for r in rows {
        let (h, f, w) = r.peak.map_or((f64::NAN, f64::NAN, f64::NAN), |p| (p.height, p.frequency, p.fwhm));
        let _ = writeln!(out, "{},{},{},{},{}", float(r.value), float(h), float(f), float(w), r.status);
    }
    out
}

#[derive(Serialize)]
struct SpectrumDoc {
    component: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    axis_value: Option<f64>,
    master_seed: u64,
    n_realizations: usize,
    config: String,
    omega: Vec<f64>,
    value: Vec<f64>,
}

#[derive(Serialize)]
struct AxisDoc {
    parameter: String,
    values: Vec<f64>,
    band: [f64; 2],
    component: String,
}

#[derive(Serialize)]
struct TrajectoryDoc {
    seed: u64,
    t: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    i: Vec<f64>,
}

#[derive(Serialize)]
struct Document {
    kind: &'static str,
    config: String,
    master_seed: u64,
    n_realizations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    axis: Option<AxisDoc>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    spectra: Vec<SpectrumDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sr_curve: Option<Vec<SrRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trajectory: Option<TrajectoryDoc>,
}

impl Document {
    fn new(kind: &'static str, run: &RunConfig) -> Self {
        Self {
            kind,
            config: run.echo(),
            master_seed: run.ensemble.master_seed,
            n_realizations: run.ensemble.n_realizations,
            axis: None,
            spectra: Vec::new(),
            sr_curve: None,
            trajectory: None,
        }
    }

    fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document is serializable");
        s.push('\n');
        s
    }
}

fn spectrum_doc(spec: &Spectrum, axis_value: Option<f64>, run: &RunConfig) -> SpectrumDoc {
    SpectrumDoc {
        component: spec.component.map_or("-".into(), |c| c.to_string()),
        axis_value,
        master_seed: run.ensemble.master_seed,
        n_realizations: run.ensemble.n_realizations,
        config: run.echo(),
        omega: spec.frequencies.clone(),
        value: spec.values.clone(),
    }
}

/// Writes results under `dir` with file names starting with `prefix`.
#[derive(Debug, Clone)]
pub struct Emitter {
    pub dir: PathBuf,
    pub prefix: String,
    pub format: Format,
}

impl Emitter {
    pub fn new(dir: impl Into<PathBuf>, prefix: &str, format: Format) -> Self {
        Self { dir: dir.into(), prefix: prefix.to_string(), format }
    }

    fn write(&self, name: &str, content: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir).map_err(|e| io_err(&self.dir, e))?;
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    fn structured_name(&self) -> String {
        format!("{}.json", self.prefix)
    }

    pub fn trajectory(&self, traj: &Trajectory, run: &RunConfig) -> Result<Vec<PathBuf>> {
        match self.format {
            Format::Csv => Ok(vec![self.write(&format!("{}_trajectory.csv", self.prefix), &trajectory_csv(traj, run))?]),
            Format::Structured => {
                let base = run.base();
                let col = |c| traj.series(c, &base.qubit, base.eps0());
                let mut doc = Document::new("trajectory", run);
                doc.trajectory = Some(TrajectoryDoc {
                    seed: traj.seed,
                    t: traj.times.clone(),
                    x: col(Component::X),
                    y: col(Component::Y),
                    z: col(Component::Z),
                    i: col(Component::Current),
                });
                Ok(vec![self.write(&self.structured_name(), &doc.render())?])
            }
        }
    }

    pub fn ensemble(&self, output: &EnsembleOutput, run: &RunConfig) -> Result<Vec<PathBuf>> {
        match self.format {
            Format::Csv => output
                .spectra
                .iter()
                .map(|s| {
                    let comp = s.component.unwrap_or(Component::X);
                    self.write(&spectrum_file_name(&self.prefix, comp, None), &spectrum_csv(s, run))
                })
                .collect(),
            Format::Structured => {
                let mut doc = Document::new("ensemble", run);
                doc.spectra = output.spectra.iter().map(|s| spectrum_doc(s, None, run)).collect();
                Ok(vec![self.write(&self.structured_name(), &doc.render())?])
            }
        }
    }

    /// Spectra of every successful point plus the peak summary. `run` is the
    /// unswept base configuration.
    pub fn sweep(&self, points: &[SweepPoint], axis: &SweepAxis, band: (f64, f64), run: &RunConfig) -> Result<Vec<PathBuf>> {
        let component = run.analysis.components[0];
        let rows = sr_rows(points, component, band);
        let point_run = |p: &SweepPoint| RunConfig { ensemble: p.config.clone(), analysis: run.analysis.clone() };
        match self.format {
            Format::Csv => {
                let mut paths = Vec::new();
                for p in points {
                    let Ok(out) = &p.result else { continue };
                    let prun = point_run(p);
                    for s in &out.spectra {
                        let comp = s.component.unwrap_or(Component::X);
                        let name = spectrum_file_name(&self.prefix, comp, Some(p.value));
                        paths.push(self.write(&name, &spectrum_csv(s, &prun))?);
                    }
                }
                paths.push(self.write("sr_curve.csv", &sr_curve_csv(&rows, axis, component, band, run))?);
                Ok(paths)
            }
            Format::Structured => {
                let mut doc = Document::new("sweep", run);
                doc.axis = Some(AxisDoc {
                    parameter: axis.parameter.to_string(),
                    values: axis.values.clone(),
                    band: [band.0, band.1],
                    component: component.to_string(),
                });
                for p in points {
                    if let Ok(out) = &p.result {
                        let prun = point_run(p);
                        doc.spectra.extend(out.spectra.iter().map(|s| spectrum_doc(s, Some(p.value), &prun)));
                    }
                }
                doc.sr_curve = Some(rows);
                Ok(vec![self.write(&self.structured_name(), &doc.render())?])
            }
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}
