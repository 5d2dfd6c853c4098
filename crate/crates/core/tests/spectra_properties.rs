use qsr_core::cli::presets::{ExperimentPreset, PresetName};
use qsr_core::ensemble::{run_ensemble, Analysis, Execution};
use qsr_core::integrator::Component;
use qsr_core::spectra::{average_spectra, find_peak, sr_curve, Window};

#[test]
fn window_choice_moves_fig1a_peaks_by_at_most_one_bin() {
    let p = ExperimentPreset::resolve(PresetName::Fig1a);
    for i in 0..p.axis.values.len() {
        let cfg = p.axis.point(&p.run.ensemble, i);
        let peak = |window| {
            let analysis = Analysis { window, ..Analysis::of(&[Component::X]) };
            let out = run_ensemble(&cfg, &analysis, &Execution::default()).unwrap();
            let spec = out.spectra[0].clone();
            (find_peak(&spec, p.band).unwrap(), spec.bin_width())
        };
        let ((hann, dw), (rect, _)) = (peak(Window::Hann), peak(Window::Rect));
        let moved = (hann.frequency - rect.frequency).abs() / dw;
        assert!(moved <= 1.0, "D = {}: {moved} bins", p.axis.values[i]);
    }
}

#[test]
fn union_average_is_the_weighted_mean() {
    let mut cfg = ExperimentPreset::resolve(PresetName::Fig1b).run.ensemble;
    cfg.n_realizations = 6;
    let exec = Execution { keep_periodograms: true, ..Execution::default() };
    let out = run_ensemble(&cfg, &Analysis::of(&[Component::X]), &exec).unwrap();
    let column: Vec<_> = out.periodograms.iter().map(|p| p[0].clone()).collect();
    let (a, b) = (average_spectra(&column[..2]).unwrap(), average_spectra(&column[2..]).unwrap());
    let merged = average_spectra(&[a, b]).unwrap();
    assert_eq!(merged.n_realizations, 6);
    for (m, full) in merged.values.iter().zip(&out.spectra[0].values) {
        assert!((m - full).abs() <= 1e-12 * full.abs().max(f64::MIN_POSITIVE), "{m} vs {full}");
    }
}

#[test]
fn fig1a_sr_curve_peaks_inside_the_sweep() {
    let p = ExperimentPreset::resolve(PresetName::Fig1a);
    let results: Vec<_> = (0..p.axis.values.len())
        .map(|i| {
            let cfg = p.axis.point(&p.run.ensemble, i);
            let out = run_ensemble(&cfg, &p.run.analysis, &Execution::default()).unwrap();
            (p.axis.values[i], out.spectra[0].clone())
        })
        .collect();
    let curve = sr_curve(&results, p.band).unwrap();
    let best = qsr_core::spectra::curve_argmax(&curve).unwrap();
    assert!(best > 0 && best < curve.len() - 1, "max at index {best}");
}
