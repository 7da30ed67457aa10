use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use readout_core::fit::{fit, model_values, profile, Dataset, DatasetKind, FitSpec, ParamId, PhysicalParams};
use readout_core::IntegrationSettings;

const FOUR: [ParamId; 4] = [ParamId::GammaDeph, ParamId::ISat, ParamId::Chi, ParamId::ScaleF];

fn truth() -> PhysicalParams {
    PhysicalParams {
        gamma_deph_mhz: 1.55,
        i_sat_mw_cm2: 12.0,
        chi: 2.7,
        scale_f: 4.1,
        ..PhysicalParams::default()
    }
}

fn settings() -> IntegrationSettings {
    FitSpec::new(Vec::new(), truth()).settings
}

fn with_model(mut d: Dataset, p: &PhysicalParams) -> Dataset {
    let m = model_values(p, &d, settings(), 0).unwrap();
    let peak = m.iter().cloned().fold(0.0, f64::max);
    d.sigma = m.iter().map(|v| 0.03 * v.max(1e-3 * peak)).collect();
    d.y = m;
    d
}

fn wavepacket(delta: f64, i_r: f64) -> Dataset {
    let t: Vec<f64> = (0..=160).map(f64::from).collect();
    let n = t.len();
    let kind = DatasetKind::Wavepacket { delta_mhz: delta, i_r_mw_cm2: i_r };
    with_model(Dataset::new(format!("wp_{delta}_{i_r}"), kind, t, vec![0.0; n], vec![1.0; n]), &truth())
}

fn saturation(delta: f64) -> Dataset {
    let grid = vec![5.0, 10.0, 20.0, 32.0, 52.0, 68.0, 80.0, 95.0, 127.0, 160.0, 200.0];
    let n = grid.len();
    let kind = DatasetKind::Saturation { delta_mhz: delta };
    with_model(Dataset::new(format!("sat_{delta}"), kind, grid, vec![0.0; n], vec![1.0; n]), &truth())
}

fn combined() -> Vec<Dataset> {
    let mut v = Vec::new();
    for i_r in [32.0, 68.0, 95.0] {
        v.push(wavepacket(1.7, i_r));
    }
    for i_r in [52.0, 80.0, 160.0] {
        v.push(wavepacket(25.7, i_r));
    }
    v.push(saturation(1.7));
    v.push(saturation(25.7));
    v
}

fn add_noise(sets: &[Dataset], seed: u64) -> Vec<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sets.iter()
        .map(|d| {
            let mut d = d.clone();
            for (y, s) in d.y.iter_mut().zip(&d.sigma) {
                let e: f64 = StandardNormal.sample(&mut rng);
                *y += s * e;
            }
            d
        })
        .collect()
}

#[test]
fn result_does_not_depend_on_data_order() {
    let data = add_noise(&combined(), 3);
    let spec = FitSpec::new(FOUR.to_vec(), PhysicalParams::default());
    let a = fit(&data, &spec).unwrap();

    let mut shuffled: Vec<Dataset> = data.iter().rev().cloned().collect();
    for d in &mut shuffled {
        let n = d.x.len();
        let order: Vec<usize> = (0..n).map(|i| (7 * i + 3) % n).collect();
        let pick = |v: &Vec<f64>| order.iter().map(|&i| v[i]).collect::<Vec<f64>>();
        if n % 7 != 0 {
            d.x = pick(&d.x);
            d.y = pick(&d.y);
            d.sigma = pick(&d.sigma);
        }
    }
    let b = fit(&shuffled, &spec).unwrap();
    for id in FOUR {
        let (x, y) = (a.values.get(id), b.values.get(id));
        assert!(((x - y) / x).abs() < 1e-12, "{id:?}: {x} vs {y}");
    }
}

#[test]
fn reported_errors_match_observed_scatter() {
    let clean = combined();
    let spec = FitSpec::new(FOUR.to_vec(), PhysicalParams::default());
    let mut values = vec![Vec::new(); 4];
    let mut sigmas = [0.0; 4];
    let seeds = 100;
    for seed in 0..seeds {
        let res = fit(&add_noise(&clean, 1000 + seed), &spec).unwrap();
        assert!(res.converged);
        for (j, id) in FOUR.iter().enumerate() {
            values[j].push(res.values.get(*id));
            sigmas[j] += res.estimate(*id).unwrap().sigma / seeds as f64;
        }
    }
    for j in 0..4 {
        let m = values[j].iter().sum::<f64>() / seeds as f64;
        let sd = (values[j].iter().map(|v| (v - m).powi(2)).sum::<f64>() / (seeds as f64 - 1.0)).sqrt();
        let ratio = sigmas[j] / sd;
        assert!((0.5..=2.0).contains(&ratio), "{:?}: reported {} observed {sd}", FOUR[j], sigmas[j]);
    }
}

#[test]
fn chi_profile_is_curved_and_sharper_with_combined_data() {
    let grid = [2.6, 2.7, 2.8];
    let curvature = |data: &[Dataset]| {
        let spec = FitSpec::new(FOUR.to_vec(), truth());
        let prof = profile(ParamId::Chi, &grid, data, &spec).unwrap();
        assert!(prof.iter().all(|p| p.converged));
        (prof[0].chi2 + prof[2].chi2 - 2.0 * prof[1].chi2) / (0.1 * 0.1)
    };
    let full = curvature(&combined());
    let single = curvature(&[wavepacket(1.7, 95.0)]);
    assert!(full > 0.0 && single >= 0.0);
    assert!(single < 0.5 * full, "single {single} vs combined {full}");
}

#[test]
fn masked_points_are_ignored() {
    let mut d = wavepacket(1.7, 95.0);
    let mut spoiled = d.clone();
    spoiled.y[40] *= 50.0;
    let mut mask = vec![true; d.x.len()];
    mask[40] = false;
    spoiled = spoiled.with_mask(mask.clone());
    d = d.with_mask(mask);
    let spec = FitSpec::new(vec![ParamId::Chi, ParamId::ScaleF], PhysicalParams { chi: 2.0, ..truth() });
    let a = fit(&[d], &spec).unwrap();
    let b = fit(&[spoiled], &spec).unwrap();
    assert_eq!(a.values, b.values);
    assert_eq!(a.n_points, 160);
}

#[test]
fn spectrum_scale_is_recovered() {
    let planted = PhysicalParams { scale_f: 4.8, ..truth() };
    let deltas: Vec<f64> = (-40..=40).step_by(4).map(f64::from).collect();
    let n = deltas.len();
    let kind = DatasetKind::Spectrum { i_r_mw_cm2: 127.0 };
    let d = with_model(Dataset::new("spec", kind, deltas, vec![0.0; n], vec![1.0; n]), &planted);
    let spec = FitSpec::new(vec![ParamId::ScaleF], truth());
    let res = fit(&[d], &spec).unwrap();
    assert!((res.values.scale_f - 4.8).abs() < 1e-8);
}

#[test]
fn unweighted_mode_recovers_noiseless_truth() {
    let data = vec![wavepacket(1.7, 95.0), saturation(25.7)];
    let mut spec = FitSpec::new(vec![ParamId::Chi, ParamId::ScaleF], PhysicalParams { chi: 2.0, scale_f: 1.0, ..truth() });
    spec.weighted = false;
    let res = fit(&data, &spec).unwrap();
    assert!(res.converged);
    assert!((res.values.chi / 2.7 - 1.0).abs() < 1e-4, "{:?}", res.values);
    assert!((res.values.scale_f / 4.1 - 1.0).abs() < 1e-4);
}

#[test]
fn upper_bounds_are_respected() {
    use readout_core::fit::Bound;
    let data = vec![wavepacket(1.7, 95.0)];
    let mut spec = FitSpec::new(vec![ParamId::Chi, ParamId::ScaleF], PhysicalParams { chi: 1.5, ..truth() });
    spec.bounds.push((ParamId::Chi, Bound { lower: 1.0, upper: Some(2.0) }));
    let res = fit(&data, &spec).unwrap();
    assert!(res.values.chi <= 2.0 && res.values.chi > 1.99, "{}", res.values.chi);
    let chi = res.estimate(ParamId::Chi).unwrap();
    assert!(chi.at_bound && chi.sigma == 0.0);
    assert!(res.estimate(ParamId::ScaleF).unwrap().sigma > 0.0);
}
