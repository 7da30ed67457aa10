//! Shared fixtures for the benchmarks.

use readout_core::fit::{model_values, Dataset, DatasetKind, FitSpec, PhysicalParams};
use readout_core::ReadoutParams;

/// Parameters close to those of the reference experiment.
pub fn reference() -> PhysicalParams {
    PhysicalParams {
        gamma_deph_mhz: 1.55,
        i_sat_mw_cm2: 12.0,
        chi: 2.7,
        scale_f: 4.1,
        ..PhysicalParams::default()
    }
}

/// Near-resonant read at 95 mW/cm².
pub fn readout() -> ReadoutParams {
    reference().readout(95.0, 1.7).expect("reference parameters are valid")
}

/// One wavepacket and one saturation curve generated from [`reference`] with 3% error bars.
pub fn fit_data() -> Vec<Dataset> {
    let truth = reference();
    let settings = FitSpec::new(Vec::new(), truth).settings;
    let t: Vec<f64> = (0..=160).map(f64::from).collect();
    let i_r = vec![5.0, 10.0, 20.0, 32.0, 52.0, 68.0, 80.0, 95.0, 127.0, 160.0, 200.0];
    let sets = [
        ("wavepacket", DatasetKind::Wavepacket { delta_mhz: 1.7, i_r_mw_cm2: 95.0 }, t),
        ("saturation", DatasetKind::Saturation { delta_mhz: 1.7 }, i_r),
    ];
    sets.into_iter()
        .map(|(name, kind, x)| {
            let n = x.len();
            let mut d = Dataset::new(name, kind, x, vec![0.0; n], vec![1.0; n]);
            let m = model_values(&truth, &d, settings, 0).expect("model evaluates");
            let peak = m.iter().cloned().fold(0.0, f64::max);
            d.sigma = m.iter().map(|v| 0.03 * v.max(1e-3 * peak)).collect();
            d.y = m;
            d
        })
        .collect()
}
