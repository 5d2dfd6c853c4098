//! Python bindings: configuration, trajectories, ensemble spectra, sweeps
//! and the figure presets.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

use qsr_core::cli::{self, Emitter, ExperimentPreset, Format, Overrides, RunConfig};
use qsr_core::ensemble::{self, Execution, SweepAxis, SweepParameter};
use qsr_core::spectra::{self, PeakInfo, Spectrum, Window};
use qsr_core::{Component, Error, Stepper, Trajectory};

fn to_py(err: Error) -> PyErr {
    match cli::exit_code(&err) {
        3 => PyArithmeticError::new_err(err.to_string()),
        4 => PyOSError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

/// Validated run configuration: qubit, drive, noise and run settings.
#[pyclass(name = "RunConfig", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRunConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyRunConfig {
    /// Defaults for every key, optionally overridden by TOML text.
    #[new]
    #[pyo3(signature = (toml = None))]
    fn new(toml: Option<&str>) -> PyResult<Self> {
        let inner = match toml {
            Some(text) => cli::parse_config(text).map_err(to_py)?,
            None => RunConfig::default(),
        };
        Ok(Self { inner })
    }

    /// Reads a TOML file or any file written by `qsr`.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: cli::load_config(std::path::Path::new(path)).map_err(to_py)? })
    }

    /// Copy with the given settings replaced.
    #[pyo3(signature = (seed = None, stepper = None, omega_d = None, n_realizations = None))]
    fn replace(&self, seed: Option<u64>, stepper: Option<&str>, omega_d: Option<f64>, n_realizations: Option<usize>) -> PyResult<Self> {
        let stepper = stepper.map(parse::<Stepper>).transpose()?;
        let mut inner = self.inner.clone();
        Overrides { seed, stepper, omega_d, n_realizations }.apply(&mut inner).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn echo(&self) -> String {
        self.inner.echo()
    }

    #[getter]
    fn master_seed(&self) -> u64 {
        self.inner.ensemble.master_seed
    }

    #[getter]
    fn n_realizations(&self) -> usize {
        self.inner.ensemble.n_realizations
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.base().omega()
    }

    #[getter]
    fn n_recorded(&self) -> usize {
        self.inner.base().n_recorded()
    }

    #[getter]
    fn components(&self) -> Vec<String> {
        self.inner.analysis.components.iter().map(ToString::to_string).collect()
    }

    fn __repr__(&self) -> String {
        format!("RunConfig(\n{})", self.inner.echo())
    }

    fn __eq__(&self, other: PyRef<'_, Self>) -> bool {
        self.inner == other.inner
    }
}

#[pyclass(name = "Trajectory", frozen)]
struct PyTrajectory {
    inner: Trajectory,
    config: RunConfig,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    /// One recorded component: "X", "Y", "Z" or "I".
    fn series(&self, component: &str) -> PyResult<Vec<f64>> {
        let base = self.config.base();
        Ok(self.inner.series(parse(component)?, &base.qubit, base.eps0()))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "PeakInfo", frozen, get_all)]
struct PyPeakInfo {
    frequency: f64,
    height: f64,
    fwhm: f64,
    bin: usize,
}

impl From<PeakInfo> for PyPeakInfo {
    fn from(p: PeakInfo) -> Self {
        Self { frequency: p.frequency, height: p.height, fwhm: p.fwhm, bin: p.bin }
    }
}

#[pymethods]
impl PyPeakInfo {
    fn __repr__(&self) -> String {
        format!("PeakInfo(frequency={}, height={}, fwhm={}, bin={})", self.frequency, self.height, self.fwhm, self.bin)
    }
}

/// One-sided power spectral density on the grid ω_k = 2πk/(N·Δt).
#[pyclass(name = "Spectrum", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySpectrum {
    inner: Spectrum,
}

#[pymethods]
impl PySpectrum {
    #[getter]
    fn frequencies(&self) -> Vec<f64> {
        self.inner.frequencies.clone()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }

    #[getter]
    fn n_realizations(&self) -> usize {
        self.inner.n_realizations
    }

    #[getter]
    fn component(&self) -> Option<String> {
        self.inner.component.map(|c| c.to_string())
    }

    #[getter]
    fn bin_width(&self) -> f64 {
        self.inner.bin_width()
    }

    fn find_peak(&self, lo: f64, hi: f64) -> PyResult<PyPeakInfo> {
        Ok(spectra::find_peak(&self.inner, (lo, hi)).map_err(to_py)?.into())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Realization 0 of the ensemble, or the trajectory for an explicit seed.
#[pyfunction]
#[pyo3(signature = (config, seed = None))]
fn simulate(py: Python<'_>, config: PyRef<'_, PyRunConfig>, seed: Option<u64>) -> PyResult<PyTrajectory> {
    let run = config.inner.clone();
    let seed = seed.unwrap_or_else(|| run.ensemble.seed_of(0));
    let inner = py.detach(|| qsr_core::simulate_trajectory(run.base(), seed)).map_err(to_py)?;
    Ok(PyTrajectory { inner, config: run })
}

fn spectra_by_component(out: ensemble::EnsembleOutput) -> BTreeMap<String, PySpectrum> {
    out.spectra
        .into_iter()
        .map(|s| (s.component.map_or_else(String::new, |c: Component| c.to_string()), PySpectrum { inner: s }))
        .collect()
}

/// Ensemble-averaged spectra keyed by component.
#[pyfunction]
#[pyo3(signature = (config, threads = None))]
fn run_ensemble(py: Python<'_>, config: PyRef<'_, PyRunConfig>, threads: Option<usize>) -> PyResult<BTreeMap<String, PySpectrum>> {
    let run = config.inner.clone();
    let exec = Execution { threads, ..Execution::default() };
    let out = py.detach(|| ensemble::run_ensemble(&run.ensemble, &run.analysis, &exec)).map_err(to_py)?;
    Ok(spectra_by_component(out))
}

/// One ensemble per value; failed points come back as error strings.
#[pyfunction]
#[pyo3(signature = (config, parameter, values, threads = None))]
fn sweep(
    py: Python<'_>,
    config: PyRef<'_, PyRunConfig>,
    parameter: &str,
    values: Vec<f64>,
    threads: Option<usize>,
) -> PyResult<Vec<(f64, Py<PyAny>)>> {
    let run = config.inner.clone();
    let axis = SweepAxis::new(parse::<SweepParameter>(parameter)?, &values);
    let exec = Execution { threads, ..Execution::default() };
    let points = py.detach(|| ensemble::sweep(&run.ensemble, &axis, &run.analysis, &exec)).map_err(to_py)?;
    points
        .into_iter()
        .map(|p| {
            let obj = match p.result {
                Ok(out) => spectra_by_component(out).into_pyobject(py)?.into_any().unbind(),
                Err(e) => e.to_string().into_pyobject(py)?.into_any().unbind(),
            };
            Ok((p.value, obj))
        })
        .collect()
}

/// Periodogram of a uniformly sampled series.
#[pyfunction]
#[pyo3(signature = (series, dt, window = "hann"))]
fn periodogram(series: Vec<f64>, dt: f64, window: &str) -> PyResult<PySpectrum> {
    let window: Window = parse(window)?;
    Ok(PySpectrum { inner: spectra::periodogram(&series, dt, window).map_err(to_py)? })
}

/// Peak height per value; None where no peak was found.
#[pyfunction]
fn sr_curve(values: Vec<f64>, spectra: Vec<PyRef<'_, PySpectrum>>, lo: f64, hi: f64) -> PyResult<Vec<(f64, Option<f64>)>> {
    if values.len() != spectra.len() {
        return Err(PyValueError::new_err("values and spectra differ in length"));
    }
    let results: Vec<(f64, Spectrum)> = values.into_iter().zip(spectra.iter().map(|s| s.inner.clone())).collect();
    let curve = spectra::sr_curve(&results, (lo, hi)).map_err(to_py)?;
    Ok(curve.iter().map(|p| (p.value, p.height())).collect())
}

/// Base config, swept parameter, values and peak band of a figure preset.
#[pyfunction]
fn preset(name: &str) -> PyResult<(PyRunConfig, String, Vec<f64>, (f64, f64))> {
    let p = ExperimentPreset::resolve(parse(name)?);
    Ok((PyRunConfig { inner: p.run }, p.axis.parameter.to_string(), p.axis.values, p.band))
}

/// Runs a preset and writes its files; returns the written paths.
#[pyfunction]
#[pyo3(signature = (name, out_dir, format = "csv", seed = None, threads = None))]
fn run_preset(py: Python<'_>, name: &str, out_dir: &str, format: &str, seed: Option<u64>, threads: Option<usize>) -> PyResult<Vec<String>> {
    let mut p = ExperimentPreset::resolve(parse(name)?);
    Overrides { seed, ..Overrides::default() }.apply(&mut p.run).map_err(to_py)?;
    let emitter = Emitter::new(out_dir, name, parse::<Format>(format)?);
    let exec = Execution { threads, ..Execution::default() };
    let report = py.detach(|| cli::run_preset(&p, &exec, &emitter)).map_err(to_py)?;
    if let Some(err) = report.first_failure() {
        return Err(to_py(err.clone()));
    }
    Ok(report.paths.iter().map(|p| p.display().to_string()).collect())
}

#[pyfunction]
fn derive_seed(master_seed: u64, index: u64) -> u64 {
    qsr_core::derive_seed(master_seed, index)
}

#[pymodule]
mod qsr {
    #[pymodule_export]
    use super::{
        derive_seed, periodogram, preset, run_ensemble, run_preset, simulate, sr_curve, sweep, PyPeakInfo, PyRunConfig,
        PySpectrum, PyTrajectory,
    };
}
