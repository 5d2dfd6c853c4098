//! Spectral estimation for recorded trajectories.
//!
//! Spectra are one-sided power spectral densities of the mean-subtracted,
//! windowed series. The abscissa is angular frequency ω (ns⁻¹); the values
//! are densities per unit cyclic frequency, so that
//! `Σ S(ω_k) · Δω / 2π` equals the series variance for a rectangular window.
//! Absolute levels are arbitrary for comparison purposes: only ratios and
//! orderings between spectra carry meaning.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{Component, SimulationConfig, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Rect,
    #[default]
    Hann,
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Window::Rect => "rect",
            Window::Hann => "hann",
        })
    }
}

impl FromStr for Window {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rect" => Ok(Window::Rect),
            "hann" => Ok(Window::Hann),
            other => Err(Error::InvalidConfig(format!("unknown window '{other}'"))),
        }
    }
}

/// How per-realization spectra are combined. Only `Power` is a PSD; the
/// amplitude mode averages |X(ω)| instead of |X(ω)|² and exists for
/// comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    Power,
    Amplitude,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Power => "power",
            Estimator::Amplitude => "amplitude",
        })
    }
}

/// One-sided spectrum on the grid ω_k = k·Δω, k = 0..=N/2.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
    pub n_realizations: usize,
    pub component: Option<Component>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Grid spacing Δω.
    pub fn bin_width(&self) -> f64 {
        self.frequencies.get(1).copied().unwrap_or(0.0)
    }

    /// Index of the bin nearest to `omega`.
    pub fn bin_of(&self, omega: f64) -> usize {
        let k = (omega / self.bin_width()).round().max(0.0) as usize;
        k.min(self.len().saturating_sub(1))
    }

    /// ∫ S dω/2π, the variance carried by the spectrum.
    pub fn integrated_power(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.bin_width() / (2.0 * PI)
    }

    /// Mean value over bins with ω in `[lo, hi)`.
    pub fn band_mean(&self, lo: f64, hi: f64) -> Option<f64> {
        let (sum, n) = self
            .frequencies
            .iter()
            .zip(&self.values)
            .filter(|(w, _)| **w >= lo && **w < hi)
            .fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
}

/// Reusable periodogram for a fixed length and sample interval.
#[derive(Clone)]
pub struct PsdEstimator {
    len: usize,
    dt_sample: f64,
    taper: Vec<f64>,
    taper_power: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PsdEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PsdEstimator")
            .field("len", &self.len)
            .field("dt_sample", &self.dt_sample)
            .finish()
    }
}

/// Largest power of two not exceeding `n`.
pub fn fft_length(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        1 << (usize::BITS - 1 - n.leading_zeros())
    }
}

impl PsdEstimator {
    /// Estimator for series of `series_len` samples; the series is truncated
    /// to the largest power of two.
    pub fn new(series_len: usize, dt_sample: f64, window: Window) -> Result<Self> {
        if series_len < 2 {
            return Err(Error::SeriesTooShort { len: series_len });
        }
        if !(dt_sample > 0.0) {
            return Err(Error::InvalidConfig("sample interval must be > 0".into()));
        }
        let len = fft_length(series_len);
        let taper: Vec<f64> = match window {
            Window::Rect => vec![1.0; len],
            // periodic Hann
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
        };
        let taper_power = taper.iter().map(|w| w * w).sum();
        let fft = FftPlanner::new().plan_fft_forward(len);
        Ok(Self { len, dt_sample, taper, taper_power, fft })
    }

    pub fn fft_len(&self) -> usize {
        self.len
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let dw = 2.0 * PI / (self.len as f64 * self.dt_sample);
        (0..=self.len / 2).map(|k| k as f64 * dw).collect()
    }

    /// One-sided PSD values of the leading `fft_len()` samples of `series`.
    pub fn psd(&self, series: &[f64]) -> Result<Vec<f64>> {
        if series.len() < self.len {
            return Err(Error::SeriesTooShort { len: series.len() });
        }
        let data = &series[..self.len];
        let mean = data.iter().sum::<f64>() / self.len as f64;
        let mut buf: Vec<Complex<f64>> = data
            .iter()
            .zip(&self.taper)
            .map(|(x, w)| Complex::new((x - mean) * w, 0.0))
            .collect();
        self.fft.process(&mut buf);
        let half = self.len / 2;
        let scale = self.dt_sample / self.taper_power;
        Ok((0..=half)
            .map(|k| {
                let p = buf[k].norm_sqr() * scale;
                if k == 0 || k == half {
                    p
                } else {
                    2.0 * p
                }
            })
            .collect())
    }

    pub fn spectrum(&self, series: &[f64], component: Option<Component>) -> Result<Spectrum> {
        Ok(Spectrum {
            frequencies: self.frequencies(),
            values: self.psd(series)?,
            n_realizations: 1,
            component,
        })
    }
}

/// Single-series periodogram.
pub fn periodogram(series: &[f64], dt_sample: f64, window: Window) -> Result<Spectrum> {
    PsdEstimator::new(series.len(), dt_sample, window)?.spectrum(series, None)
}

/// Mean of equally gridded spectra in slice order, weighted by their
/// realization counts.
pub fn average_spectra(spectra: &[Spectrum]) -> Result<Spectrum> {
    let first = spectra.first().ok_or(Error::GridMismatch)?;
    let mut sums = vec![0.0; first.len()];
    let mut total = 0usize;
    for s in spectra {
        if s.frequencies != first.frequencies {
            return Err(Error::GridMismatch);
        }
        let w = s.n_realizations as f64;
        for (acc, v) in sums.iter_mut().zip(&s.values) {
            *acc += w * v;
        }
        total += s.n_realizations;
    }
    let inv = 1.0 / total as f64;
    Ok(Spectrum {
        frequencies: first.frequencies.clone(),
        values: sums.into_iter().map(|v| v * inv).collect(),
        n_realizations: total,
        component: first.component,
    })
}

/// Converts per-realization PSDs to the requested estimator before averaging.
pub(crate) fn apply_estimator(mut s: Spectrum, estimator: Estimator) -> Spectrum {
    if estimator == Estimator::Amplitude {
        s.values.iter_mut().for_each(|v| *v = v.sqrt());
    }
    s
}

/// Ensemble-averaged spectrum of `component` over `trajectories`, reduced in
/// slice order.
pub fn ensemble_psd(
    trajectories: &[Trajectory],
    component: Component,
    window: Window,
    cfg: &SimulationConfig,
) -> Result<Spectrum> {
    ensemble_spectrum(trajectories, component, window, Estimator::Power, cfg)
}

pub fn ensemble_spectrum(
    trajectories: &[Trajectory],
    component: Component,
    window: Window,
    estimator: Estimator,
    cfg: &SimulationConfig,
) -> Result<Spectrum> {
    let first = trajectories.first().ok_or(Error::GridMismatch)?;
    if trajectories.iter().any(|t| t.times != first.times) {
        return Err(Error::GridMismatch);
    }
    let est = PsdEstimator::new(first.len(), first.sample_interval(), window)?;
    let eps0 = cfg.eps0();
    let per: Vec<Spectrum> = trajectories
        .iter()
        .map(|t| {
            est.spectrum(&t.series(component, &cfg.qubit, eps0), Some(component))
                .map(|s| apply_estimator(s, estimator))
        })
        .collect::<Result<_>>()?;
    average_spectra(&per)
}

/// Location, height and width of a spectral peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakInfo {
    pub frequency: f64,
    pub height: f64,
    pub fwhm: f64,
    /// Index of the largest bin.
    pub bin: usize,
}

/// Largest local maximum inside `band = (lo, hi)`, refined by a parabola
/// through the top three bins. The width is measured at half the refined
/// height by linear interpolation, continuing past the band if needed.
pub fn find_peak(spec: &Spectrum, band: (f64, f64)) -> Result<PeakInfo> {
    let (lo, hi) = band;
    let idx: Vec<usize> = (0..spec.len())
        .filter(|&k| spec.frequencies[k] >= lo && spec.frequencies[k] <= hi)
        .collect();
    if idx.len() < 5 {
        return Err(Error::BandTooNarrow { lo, hi, bins: idx.len() });
    }
    let (first, last) = (idx[0], idx[idx.len() - 1]);
    let mut top = first;
    for &k in &idx {
        if spec.values[k] > spec.values[top] {
            top = k;
        }
    }
    if top == first || top == last {
        return Err(Error::NoLocalMaximum { lo, hi });
    }
    let v = &spec.values;
    let (ym, y0, yp) = (v[top - 1], v[top], v[top + 1]);
    let curvature = ym - 2.0 * y0 + yp;
    let offset = if curvature < 0.0 { 0.5 * (ym - yp) / curvature } else { 0.0 };
    let dw = spec.bin_width();
    let frequency = spec.frequencies[top] + offset * dw;
    let height = y0 - 0.25 * (ym - yp) * offset;

    let half = 0.5 * height;
    let left = {
        let mut k = top;
        while k > 0 && v[k] > half {
            k -= 1;
        }
        if v[k] > half {
            spec.frequencies[k]
        } else {
            let frac = (half - v[k]) / (v[k + 1] - v[k]);
            spec.frequencies[k] + frac * dw
        }
    };
    let right = {
        let mut k = top;
        while k + 1 < v.len() && v[k] > half {
            k += 1;
        }
        if v[k] > half {
            spec.frequencies[k]
        } else {
            let frac = (v[k - 1] - half) / (v[k - 1] - v[k]);
            spec.frequencies[k - 1] + frac * dw
        }
    };
    Ok(PeakInfo { frequency, height, fwhm: (right - left).max(f64::MIN_POSITIVE), bin: top })
}

/// One point of a stochastic-resonance curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SrPoint {
    pub value: f64,
    pub peak: Result<PeakInfo>,
}

impl SrPoint {
    pub fn height(&self) -> Option<f64> {
        self.peak.as_ref().ok().map(|p| p.height)
    }
}

/// Peak height per noise setting, in input order. Failed peak searches are
/// kept as errors on their point.
pub fn sr_curve(results: &[(f64, Spectrum)], band: (f64, f64)) -> Result<Vec<SrPoint>> {
    let mut distinct: Vec<f64> = results.iter().map(|(v, _)| *v).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InvalidConfig(
            "an SR curve needs at least 3 distinct noise values".into(),
        ));
    }
    Ok(results
        .iter()
        .map(|(value, spec)| SrPoint { value: *value, peak: find_peak(spec, band) })
        .collect())
}

/// Index of the largest height, if every point has one.
pub fn curve_argmax(points: &[SrPoint]) -> Option<usize> {
    let heights: Option<Vec<f64>> = points.iter().map(SrPoint::height).collect();
    let heights = heights?;
    (0..heights.len()).max_by(|&a, &b| heights[a].total_cmp(&heights[b]))
}
