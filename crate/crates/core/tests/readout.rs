use proptest::prelude::*;

use readout_core::units::{to_angular, DEFAULT_GAMMA_NAT_MHZ};
use readout_core::{
    amplitude_b, evolve, integrate_pc, pc_density, reconstruct_b, saturation_curve, Horizon, IntegrationSettings,
    IntensityModel, ReadoutParams, StepControl,
};

fn params(omega: f64, delta: f64, chi: f64) -> ReadoutParams {
    ReadoutParams {
        omega,
        delta,
        gamma_nat: to_angular(DEFAULT_GAMMA_NAT_MHZ),
        chi,
        gamma_deph: to_angular(1.55),
        tau: 0.05,
        scale_f: 4.1,
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn window_integral_matches_fine_simpson_rule() {
    for (omega, delta) in [(70.0, 10.7), (150.0, 161.5), (5.0, 0.0), (300.0, -80.0)] {
        let p = params(omega, delta, 2.7);
        // 0.01 ns spacing over 160 ns.
        let reference = simpson(|t| pc_density(t, &p), 0.0, 0.16, 16_000);
        let got = integrate_pc(&p, Horizon::Finite(0.16), 1e-10).unwrap();
        assert!(((got.value - reference) / reference).abs() < 1e-8, "{omega} {delta}: {} vs {reference}", got.value);
        assert!(got.abs_error <= 1e-9 * got.value);
    }
}

#[test]
fn saturation_curves_share_their_large_intensity_limit() {
    let model = IntensityModel::new(12.0, to_angular(DEFAULT_GAMMA_NAT_MHZ)).unwrap();
    let settings = IntegrationSettings::default();
    let grid = [1e4, 1e5, 1e6];
    let near = saturation_curve(&params(1.0, to_angular(1.7), 2.7), &model, &grid, settings).unwrap();
    let far = saturation_curve(&params(1.0, to_angular(25.7), 2.7), &model, &grid, settings).unwrap();
    let (a, b) = (near.ordinate[2], far.ordinate[2]);
    assert!(((a - b) / a).abs() < 1e-3, "{a} vs {b}");
    assert!(near.ordinate.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn oracle_reproduces_closed_form(
        omega in 1.0f64..400.0,
        delta in -300.0f64..300.0,
        chi in 1.0f64..6.0,
    ) {
        let p = params(omega, delta, chi);
        let t_end = 10.0 / p.gamma_nat;
        let tr = evolve(&p, t_end, 101, StepControl::new(1e-10, 1e-14)).unwrap();
        let bb = reconstruct_b(&tr);
        let exact: Vec<f64> = tr.times.iter().map(|&t| amplitude_b(t, &p).norm_sqr()).collect();
        let peak = exact.iter().cloned().fold(0.0, f64::max);
        for (b, e) in bb.iter().zip(&exact) {
            prop_assert!((b.norm_sqr() - e).abs() <= 1e-6 * e.max(1e-6 * peak));
        }
        for w in tr.norms().windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10);
        }
    }

    #[test]
    fn density_is_even_in_detuning(omega in 1.0f64..300.0, delta in 0.0f64..300.0, t in 0.0f64..0.3) {
        let a = pc_density(t, &params(omega, delta, 2.7));
        let b = pc_density(t, &params(omega, -delta, 2.7));
        prop_assert!((a - b).abs() <= 1e-13 * a.max(1e-300));
    }
}
