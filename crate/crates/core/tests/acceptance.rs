//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criterion 7 asks for an S_Z line at Ω = 1.4 at the optimal point. With
//! ε₀ = 0 the equations are invariant under (X, Y, t, f) → (−X, −Y,
//! t + π/ω_d, −f), which leaves Z with only even drive harmonics (a line
//! at 2ω_d) plus the Rabi feature; no Ω line can appear. That criterion is
//! evaluated and reported as it stands and listed in `EXPECTED_FAILURES`;
//! every other failure makes the target fail.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use qsr_core::cli::emit::{Emitter, Format};
use qsr_core::cli::presets::{ExperimentPreset, PresetName, D_SWEEP, INTERLEVEL_BAND, RABI_BAND};
use qsr_core::cli::run_preset;
use qsr_core::ensemble::{run_ensemble, sweep, Analysis, EnsembleConfig, Execution, SweepPoint, DEFAULT_MASTER_SEED};
use qsr_core::integrator::{simulate_trajectory, Component, SimulationConfig, Stepper};
use qsr_core::model::{BlochState, DrivePlan, QubitParams};
use qsr_core::noise::{ou_init, stream_from_seed, NoiseSpec};
use qsr_core::spectra::{find_peak, PeakInfo, Spectrum};

const EXPECTED_FAILURES: &[u32] = &[7];

const SEEDS: [u64; 3] = [DEFAULT_MASTER_SEED, DEFAULT_MASTER_SEED + 1, DEFAULT_MASTER_SEED + 2];
const OMEGA: f64 = 1.4;
const RABI: f64 = 0.5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn preset_sweep(name: PresetName, seed: u64) -> (ExperimentPreset, Vec<SweepPoint>) {
    let p = ExperimentPreset::resolve(name).with_seed(seed);
    let pts = sweep(&p.run.ensemble, &p.axis, &p.run.analysis, &Execution::default()).expect("preset sweep");
    (p, pts)
}

fn spectrum_of(p: &SweepPoint, c: Component) -> &Spectrum {
    p.result.as_ref().expect("ensemble").spectrum(c).expect("component")
}

fn lossless() -> QubitParams {
    QubitParams { gamma_phi: 0.0, gamma_r: 0.0, ..QubitParams::default() }
}

fn deterministic(q: QubitParams, drive: DrivePlan, dt: f64, t_end: f64, s0: BlochState) -> SimulationConfig {
    let mut cfg = SimulationConfig::new(q, drive, NoiseSpec::white(0.0));
    cfg.dt = dt;
    cfg.record_stride = 1;
    cfg.t_transient = 0.0;
    cfg.t_total = t_end;
    cfg.initial_state = s0;
    cfg.stepper = Stepper::HeunStratonovich;
    cfg
}

// 1. free precession, max error ≤ 1e-4 at dt = 1e-3 over 100 ns, ~4× on halving
fn free_precession() -> Outcome {
    let err = |dt: f64| {
        let cfg = deterministic(lossless(), DrivePlan::default(), dt, 100.0, BlochState::new(1.0, 0.0, 0.0));
        let omega = cfg.omega();
        let tr = simulate_trajectory(&cfg, 0).unwrap();
        tr.times.iter().zip(&tr.states).map(|(t, s)| (s.x - (omega * t).cos()).abs()).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(1e-3), err(5e-4));
    let ratio = e1 / e2;
    outcome(e1 <= 1e-4 && (3.5..=4.5).contains(&ratio), format!("max err {e1:.3e} at dt=1e-3, halving ratio {ratio:.3}"))
}

// 2. relaxation from the centre, |Z − (1 − e^{−Γ_r t})| ≤ 1e-4
fn relaxation() -> Outcome {
    let q = QubitParams::default();
    let cfg = deterministic(q, DrivePlan::default(), 1e-3, 100.0, BlochState::new(0.0, 0.0, 0.0));
    let tr = simulate_trajectory(&cfg, 0).unwrap();
    let err = tr
        .times
        .iter()
        .zip(&tr.states)
        .map(|(t, s)| (s.z - (1.0 - (-q.gamma_r * t).exp())).abs())
        .fold(0.0, f64::max);
    outcome(err <= 1e-4, format!("max err {err:.3e}"))
}

// 3. resonant drive, Z envelope frequency within 5% of I_pΦ₀·f_ac/2
fn rabi_frequency() -> Outcome {
    let f_ac = 0.005;
    let drive = DrivePlan { f_dc: 0.5, f_ac, omega_d: OMEGA };
    let dt = 1e-3;
    let cfg = deterministic(lossless(), drive, dt, 200.0, BlochState::new(0.0, 0.0, 1.0));
    let tr = simulate_trajectory(&cfg, 0).unwrap();
    // moving average over one drive period removes the fast ripple
    let w = (2.0 * std::f64::consts::PI / OMEGA / dt).round() as usize;
    let mut prefix = vec![0.0];
    for s in &tr.states {
        prefix.push(prefix.last().unwrap() + s.z);
    }
    let smooth: Vec<(f64, f64)> = (0..tr.len() - w)
        .map(|i| (tr.times[i] + 0.5 * w as f64 * dt, (prefix[i + w] - prefix[i]) / w as f64))
        .collect();
    let crossings: Vec<f64> = smooth
        .windows(2)
        .filter(|p| p[0].1 * p[1].1 < 0.0)
        .map(|p| p[0].0 + (p[1].0 - p[0].0) * p[0].1 / (p[0].1 - p[1].1))
        .collect();
    if crossings.len() < 4 {
        return outcome(false, format!("only {} envelope zero crossings", crossings.len()));
    }
    // half period = slope of crossing time against crossing index
    let n = crossings.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = crossings.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, t) in crossings.iter().enumerate() {
        sxy += (i as f64 - mx) * (t - my);
        sxx += (i as f64 - mx).powi(2);
    }
    let freq = std::f64::consts::PI / (sxy / sxx);
    let target = QubitParams::default().ip_phi0 * f_ac / 2.0;
    let rel = (freq / target - 1.0).abs();
    outcome(rel <= 0.05, format!("envelope {freq:.4} rad/ns vs {target} ({:.2}%)", 100.0 * rel))
}

// 4. OU variance within 3% of D/τ, decay rate within 5% of 1/τ
fn ou_statistics() -> Outcome {
    let (d, tau, dt, n) = (1e-6, 2.0, 0.1, 2_000_000);
    let spec = NoiseSpec::colored(d, tau);
    let mut path = ou_init(&spec, stream_from_seed(DEFAULT_MASTER_SEED)).unwrap();
    let xs: Vec<f64> = (0..n).map(|_| path.ou_step(&spec, dt).unwrap()).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let c0: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let var = c0 / (n - 1) as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for k in 1..=20 {
        let ck: f64 = xs.iter().zip(&xs[k..]).map(|(a, b)| (a - mean) * (b - mean)).sum();
        let lag = k as f64 * dt;
        sxy += lag * (ck / c0).ln();
        sxx += lag * lag;
    }
    let rate = -sxy / sxx;
    let (ev, er) = ((var * tau / d - 1.0).abs(), (rate * tau - 1.0).abs());
    outcome(
        ev <= 0.03 && er <= 0.05,
        format!("variance off by {:.2}%, decay rate off by {:.2}% over {} correlation times", 100.0 * ev, 100.0 * er, (n as f64 * dt / tau) as u64),
    )
}

// 5. S_X peak within 2 bins of Ω at every D, interior SR maximum, 3 seeds
fn fig1a() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for seed in SEEDS {
        let (p, pts) = preset_sweep(PresetName::Fig1a, seed);
        let peaks: Vec<_> = pts.iter().map(|pt| find_peak(spectrum_of(pt, Component::X), p.band)).collect();
        let mut heights = Vec::new();
        for (pt, peak) in pts.iter().zip(&peaks) {
            match peak {
                Ok(pk) => {
                    let bins = (pk.frequency - OMEGA).abs() / spectrum_of(pt, Component::X).bin_width();
                    if bins > 2.0 {
                        pass = false;
                        notes.push(format!("seed {seed} D={:e}: peak {:.3} is {bins:.1} bins off", pt.value, pk.frequency));
                    }
                    heights.push(pk.height);
                }
                Err(e) => {
                    pass = false;
                    notes.push(format!("seed {seed} D={:e}: {e}", pt.value));
                    heights.push(f64::NAN);
                }
            }
        }
        let arg = argmax(&heights);
        if arg == 0 || arg == heights.len() - 1 {
            pass = false;
        }
        notes.push(format!("seed {seed}: max at D={:e}", D_SWEEP[arg]));
    }
    outcome(pass, notes.join("; "))
}

fn argmax(xs: &[f64]) -> usize {
    (0..xs.len()).filter(|&i| xs[i].is_finite()).max_by(|&a, &b| xs[a].total_cmp(&xs[b])).unwrap_or(0)
}

// 6. heights strictly decreasing in τ beyond the 3-seed SE, shift ≤ 2 bins
fn tau_sweeps() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, comp) in [(PresetName::Fig1b, Component::X), (PresetName::Fig2b, Component::Z)] {
        let mut heights = vec![Vec::new(); 3];
        let mut max_shift: f64 = 0.0;
        for seed in SEEDS {
            let (p, pts) = preset_sweep(name, seed);
            let peaks: Vec<PeakInfo> = match pts.iter().map(|pt| find_peak(spectrum_of(pt, comp), p.band)).collect() {
                Ok(v) => v,
                Err(e) => {
                    pass = false;
                    notes.push(format!("{name} seed {seed}: {e}"));
                    continue;
                }
            };
            for (i, pk) in peaks.iter().enumerate() {
                heights[i].push(pk.height);
            }
            let f: Vec<f64> = peaks.iter().map(|pk| pk.frequency).collect();
            let spread = f.iter().cloned().fold(f64::MIN, f64::max) - f.iter().cloned().fold(f64::MAX, f64::min);
            max_shift = max_shift.max(spread / spectrum_of(&pts[0], comp).bin_width());
        }
        let stats: Vec<(f64, f64)> = heights.iter().map(|h| mean_se(h)).collect();
        for w in stats.windows(2) {
            let gap = w[0].0 - w[1].0;
            let se = (w[0].1.powi(2) + w[1].1.powi(2)).sqrt();
            if !(gap > se) {
                pass = false;
            }
        }
        if max_shift > 2.0 {
            pass = false;
        }
        let hs: Vec<String> = stats.iter().map(|(m, s)| format!("{m:.3e}±{s:.1e}")).collect();
        notes.push(format!("{name}: heights {} shift {max_shift:.2} bins", hs.join(" > ")));
    }
    outcome(pass, notes.join("; "))
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

// 7. S_Z Rabi peak within 20% of 0.5 and a line within 2 bins of Ω;
//    Rabi height non-monotonic in D with an interior maximum
fn fig2a(pts: &[SweepPoint]) -> (Outcome, usize) {
    let rabi: Vec<_> = pts.iter().map(|pt| find_peak(spectrum_of(pt, Component::Z), RABI_BAND)).collect();
    // a point whose Rabi peak has been washed out cannot be the maximum
    let heights: Vec<f64> = rabi.iter().map(|r| r.as_ref().map_or(f64::NAN, |p| p.height)).collect();
    let best = argmax(&heights);
    let interior = best != 0 && best != heights.len() - 1 && heights[best].is_finite();
    let spec = spectrum_of(&pts[best], Component::Z);
    let rabi_ok = rabi[best].as_ref().is_ok_and(|p| (p.frequency - RABI).abs() <= 0.2 * RABI);
    let omega_peak = find_peak(spec, INTERLEVEL_BAND);
    let omega_ok = omega_peak.as_ref().is_ok_and(|p| (p.frequency - OMEGA).abs() <= 2.0 * spec.bin_width());
    let hs: Vec<String> = heights.iter().map(|h| format!("{h:.3e}")).collect();
    let omega_note = match &omega_peak {
        Ok(p) => format!("largest S_Z peak in [0.7, 2.1] at {:.3}", p.frequency),
        Err(e) => e.to_string(),
    };
    let detail = format!(
        "Rabi heights vs D [{}], max at D={:e} (interior: {interior}); Rabi peak at {:.3} (ok: {rabi_ok}); Omega line ok: {omega_ok} ({omega_note})",
        hs.join(", "),
        D_SWEEP[best],
        rabi[best].as_ref().map_or(f64::NAN, |p| p.frequency),
    );
    (outcome(interior && rabi_ok && omega_ok, detail), best)
}

// 8. late-window Rabi peak at the optimal D beats the noiseless run ≥ 3×
fn persistence(d_opt: f64) -> Outcome {
    let mut run = ExperimentPreset::resolve(PresetName::Fig2a).run;
    let half = 655.36;
    run.ensemble.base.t_transient = half;
    run.ensemble.base.t_total = 2.0 * half;
    let late = |d: f64| {
        let mut cfg: EnsembleConfig = run.ensemble.clone();
        cfg.base.noise.intensity_d = d;
        run_ensemble(&cfg, &Analysis::of(&[Component::Z]), &Execution::default()).unwrap().spectra.remove(0)
    };
    let noisy = late(d_opt);
    let quiet = late(0.0);
    let peak = match find_peak(&noisy, RABI_BAND) {
        Ok(p) => p,
        Err(e) => return outcome(false, format!("no late-window Rabi peak at D={d_opt:e}: {e}")),
    };
    let reference = band_max(&quiet, RABI_BAND);
    let ratio = peak.height / reference;
    let gamma = QubitParams::default().gamma_r;
    outcome(
        ratio >= 3.0 && 2.0 * half >= 50.0 / gamma,
        format!("window [{half}, {}] ns, D={d_opt:e} peak {:.3e} vs noiseless {reference:.3e} (x{ratio:.3e})", 2.0 * half, peak.height),
    )
}

fn band_max(s: &Spectrum, (lo, hi): (f64, f64)) -> f64 {
    s.frequencies.iter().zip(&s.values).filter(|(w, _)| **w >= lo && **w <= hi).map(|(_, v)| *v).fold(0.0, f64::max)
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

// 9. byte-identical preset output for 1, 2 and 8 threads
fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let preset = ExperimentPreset::resolve(PresetName::Fig1a);
    let mut outputs = Vec::new();
    for threads in [1, 2, 8] {
        for format in [Format::Csv, Format::Structured] {
            let dir = tmp.path().join(format!("{threads}_{format}"));
            let emitter = Emitter::new(&dir, "fig1a", format);
            run_preset(&preset, &Execution { threads: Some(threads), ..Execution::default() }, &emitter).unwrap();
            outputs.push((threads, format, read_dir(&dir)));
        }
    }
    let mut pass = true;
    for (threads, format, files) in &outputs[2..] {
        let reference = &outputs.iter().find(|o| o.0 == 1 && o.1 == *format).unwrap().2;
        if files != reference {
            pass = false;
            eprintln!("  {threads} threads ({format}) differ from 1 thread");
        }
    }
    let n_files: usize = outputs.iter().filter(|o| o.0 == 1).map(|o| o.2.len()).sum();
    outcome(pass, format!("{n_files} files compared across 1, 2, 8 threads"))
}

// 10. OU with τ = 1e-3 matches white noise within 3 SE per decade band
fn white_limit() -> Outcome {
    let preset = ExperimentPreset::resolve(PresetName::Fig1a);
    let exec = Execution { keep_periodograms: true, ..Execution::default() };
    let analysis = Analysis::of(&[Component::X]);
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for i in 0..D_SWEEP.len() {
        let white = preset.axis.point(&preset.run.ensemble, i);
        let mut colored = white.clone();
        colored.base.noise.tau = 1e-3;
        let a = run_ensemble(&white, &analysis, &exec).unwrap();
        let b = run_ensemble(&colored, &analysis, &exec).unwrap();
        // full decades only; the partial decade below the sampling Nyquist
        // sees OU noise roll off as 1/(1 + ω²τ²), folded content included
        let nyquist = *a.spectra[0].frequencies.last().unwrap();
        let mut lo = 0.1;
        while 10.0 * lo <= nyquist {
            let hi = 10.0 * lo;
            let (ma, sa) = band_stats(&a.periodograms, lo, hi);
            let (mb, sb) = band_stats(&b.periodograms, lo, hi);
            let z = (ma - mb).abs() / (sa * sa + sb * sb).sqrt();
            if z.is_finite() {
                worst = worst.max(z);
                compared += 1;
            }
            lo = hi;
        }
    }
    outcome(worst <= 3.0 && compared > 0, format!("{compared} decade bands, worst deviation {worst:.2} SE"))
}

fn band_stats(periodograms: &[Vec<Spectrum>], lo: f64, hi: f64) -> (f64, f64) {
    let per: Vec<f64> = periodograms.iter().map(|p| p[0].band_mean(lo, hi).unwrap_or(f64::NAN)).collect();
    mean_se(&per)
}

fn main() {
    let mut results: Vec<(u32, &str, f64, Outcome)> = Vec::new();
    let mut record = |id: u32, name: &'static str, start: Instant, o: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id:>2} {name} [{secs:.1}s]: {}", o.detail);
        results.push((id, name, secs, o));
    };

    let t = Instant::now();
    record(1, "free precession", t, free_precession());
    let t = Instant::now();
    record(2, "relaxation", t, relaxation());
    let t = Instant::now();
    record(3, "Rabi frequency", t, rabi_frequency());
    let t = Instant::now();
    record(4, "OU statistics", t, ou_statistics());
    let t = Instant::now();
    record(5, "fig1a SR maximum", t, fig1a());
    let t = Instant::now();
    record(6, "fig1b/fig2b colored-noise suppression", t, tau_sweeps());
    let t = Instant::now();
    let (_, fig2a_pts) = preset_sweep(PresetName::Fig2a, DEFAULT_MASTER_SEED);
    let (o, best) = fig2a(&fig2a_pts);
    record(7, "fig2a Rabi and interlevel peaks", t, o);
    let t = Instant::now();
    record(8, "persistent Rabi oscillations", t, persistence(D_SWEEP[best]));
    let t = Instant::now();
    record(9, "determinism across threads", t, determinism());
    let t = Instant::now();
    record(10, "white-noise limit", t, white_limit());

    let unexpected: Vec<u32> =
        results.iter().filter(|r| !r.3.pass && !EXPECTED_FAILURES.contains(&r.0)).map(|r| r.0).collect();
    let passed = results.iter().filter(|r| r.3.pass).count();
    println!("{passed}/{} criteria passed", results.len());
    for r in results.iter().filter(|r| !r.3.pass && EXPECTED_FAILURES.contains(&r.0)) {
        println!("criterion {} fails as documented: S_Z carries no line at Omega when eps0 = 0", r.0);
    }
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
