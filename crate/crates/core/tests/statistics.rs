use readout_core::stats::{
    analyze, conditional_wavepacket, ingest, synthesize_log, Channel, StatsError, SynthDesign, TimeWindow,
};
use readout_core::units::{to_angular, DEFAULT_GAMMA_NAT_MHZ};
use readout_core::ReadoutParams;

fn params(omega: f64) -> ReadoutParams {
    ReadoutParams {
        omega,
        delta: to_angular(1.7),
        gamma_nat: to_angular(DEFAULT_GAMMA_NAT_MHZ),
        chi: 2.7,
        gamma_deph: to_angular(1.55),
        tau: 0.05,
        scale_f: 4.1,
    }
}

fn noisy_design(n_trials: u64) -> SynthDesign {
    SynthDesign {
        n_trials,
        p1: 0.05,
        background_per_ns: 2e-5,
        ..SynthDesign::default()
    }
}

#[test]
fn probabilities_match_naive_recount() {
    let design = SynthDesign {
        background_per_ns: 3e-4,
        ..noisy_design(20_000)
    };
    let log = synthesize_log(&params(92.0), &design, 5).unwrap();
    let store = log.store();
    let (w1, w2) = (design.herald_window(), design.read_window());
    let s = analyze(&store, w1, w2).unwrap();

    let mut per_trial = vec![Vec::new(); design.n_trials as usize];
    for e in &log.events {
        per_trial[e.trial as usize].push(*e);
    }
    let mut n = [0u64; 5];
    for events in &per_trial {
        let hit = |ch: Channel, w: TimeWindow| events.iter().any(|e| e.channel == ch && w.contains(e.t_ns));
        let (a1, b1) = (hit(Channel::F1A, w1), hit(Channel::F1B, w1));
        let (a2, b2) = (hit(Channel::F2A, w2), hit(Channel::F2B, w2));
        n[0] += u64::from(a1 || b1);
        n[1] += u64::from(a2 || b2);
        n[2] += u64::from(a1 && b1);
        n[3] += u64::from(a2 && b2);
        n[4] += u64::from((a1 || b1) && (a2 || b2));
    }
    let c = s.counts;
    assert_eq!([c.n1, c.n2, c.n11, c.n22, c.n12], n);
    assert!(c.n11 > 0 && c.n22 > 0);
}

#[test]
fn generator_output_round_trips_through_csv() {
    let design = noisy_design(5_000);
    let log = synthesize_log(&params(92.0), &design, 6).unwrap();
    let store = log.store();
    let mut buf = Vec::new();
    store.write_csv(&mut buf).unwrap();
    let (back, report) = ingest(buf.as_slice(), design.trial_window, Some(design.n_trials)).unwrap();
    assert!(report.header_seen);
    assert!(report.malformed.is_empty());
    assert_eq!(report.duplicates, 0);
    assert_eq!(back, store);
}

#[test]
fn same_seed_same_log() {
    let design = noisy_design(3_000);
    let a = synthesize_log(&params(92.0), &design, 11).unwrap();
    let b = synthesize_log(&params(92.0), &design, 11).unwrap();
    let c = synthesize_log(&params(92.0), &design, 12).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.events, c.events);
}

#[test]
fn uncertainties_shrink_as_inverse_square_root() {
    let se = |n: u64| {
        let design = noisy_design(n);
        let log = synthesize_log(&params(92.0), &design, 21).unwrap();
        let s = analyze(&log.store(), design.herald_window(), design.read_window()).unwrap();
        (s.uncertainties.p1, s.uncertainties.p12, s.uncertainties.g12.unwrap())
    };
    let (a, b) = (se(20_000), se(80_000));
    for (x, y) in [(a.0, b.0), (a.1, b.1), (a.2, b.2)] {
        let ratio = x / y;
        assert!((ratio - 2.0).abs() < 0.3, "ratio {ratio}");
    }
}

#[test]
fn dark_read_leaves_field_two_empty() {
    let design = SynthDesign {
        n_trials: 10_000,
        p1: 0.5,
        ..SynthDesign::default()
    };
    let log = synthesize_log(&params(0.0), &design, 1).unwrap();
    assert_eq!(log.pc_total, 0.0);
    assert!(log.events.iter().all(|e| e.channel.field() == 1));
    let wp = conditional_wavepacket(&log.store(), design.herald_window(), design.read_window(), 1).unwrap();
    assert!(wp.pc.iter().all(|&p| p == 0.0));
}

#[test]
fn oversized_scale_is_a_model_error() {
    let p = ReadoutParams { scale_f: 1e4, ..params(92.0) };
    let err = synthesize_log(&p, &SynthDesign::default(), 1).unwrap_err();
    assert!(matches!(err, StatsError::PcAboveOne(v) if v > 1.0));
}

#[test]
fn background_free_cross_correlation_is_inverse_herald_rate() {
    // Every field-2 click is heralded, so p12 = p2 and g12 = 1/p1.
    let design = SynthDesign {
        n_trials: 200_000,
        p1: 0.01,
        ..SynthDesign::default()
    };
    let log = synthesize_log(&params(92.0), &design, 31).unwrap();
    let s = analyze(&log.store(), design.herald_window(), design.read_window()).unwrap();
    assert_eq!(s.counts.n12, s.counts.n2);
    let g = s.g12.unwrap();
    assert!((g - 1.0 / s.p1).abs() < 1e-9 * g);
    let pc = s.pc_total.unwrap();
    assert!((pc - log.pc_total).abs() < 3.0 * s.uncertainties.pc_total.unwrap());
}

#[test]
fn wider_bins_sum_narrow_bins() {
    let design = SynthDesign {
        n_trials: 50_000,
        p1: 0.2,
        background_per_ns: 1e-5,
        ..SynthDesign::default()
    };
    let store = synthesize_log(&params(92.0), &design, 41).unwrap().store();
    let one = conditional_wavepacket(&store, design.herald_window(), design.read_window(), 1).unwrap();
    let three = conditional_wavepacket(&store, design.herald_window(), design.read_window(), 3).unwrap();
    for (i, c) in three.n_coinc.iter().enumerate() {
        assert_eq!(*c, one.n_coinc[3 * i..3 * i + 3].iter().sum::<u64>());
    }
}
