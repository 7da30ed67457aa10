use std::fs::File;

use serde::Serialize;

use readout_core::analytic::{detuning_spectrum, pc_curve, saturation_curve};
use readout_core::fit::{fit, profile, Dataset, FitResult, FitSpec, ParamId, PhysicalParams};
use readout_core::stats::{
    analyze, conditional_wavepacket, ingest, synthesize_log, write_events, BinnedWavepacket, CorrelationSummary,
    IngestReport, SynthDesign, TimeWindow,
};
use readout_core::superradiance::{
    chi_closed_form, chi_monte_carlo, chi_quadrature, extraction_ceiling, ChiEstimate, EnsembleGeometry, RegimeFlags,
};
use readout_core::units::{ns_to_us, to_angular};
use readout_core::{IntensityModel, ReadoutParams};

use crate::config::{check_grid, Checker, DatasetConfig, ParamsConfig, ReadPoint, ScenarioConfig};
use crate::error::CliError;
use crate::run::Run;

fn intensity_model(p: &ParamsConfig) -> Result<IntensityModel, CliError> {
    IntensityModel::new(p.i_sat_mw_cm2, to_angular(p.gamma_nat_mhz)).map_err(|e| CliError::Validation(e.to_string()))
}

fn readout_params(p: &ParamsConfig, point: &ReadPoint) -> Result<ReadoutParams, CliError> {
    let omega = match (point.i_r_mw_cm2, point.omega_mhz) {
        (Some(i), _) => intensity_model(p)?
            .rabi_from_intensity(i)
            .map_err(|e| CliError::Validation(e.to_string()))?,
        (None, Some(w)) => to_angular(w),
        (None, None) => return Err(CliError::Validation("read point has neither intensity nor Rabi frequency".into())),
    };
    ReadoutParams {
        omega,
        delta: to_angular(point.delta_mhz),
        gamma_nat: to_angular(p.gamma_nat_mhz),
        chi: p.chi,
        gamma_deph: to_angular(p.gamma_deph_mhz),
        tau: ns_to_us(p.tau_ns),
        scale_f: p.scale_f,
    }
    .validate()
    .map_err(|e| CliError::Validation(e.to_string()))
}

fn point_label(point: &ReadPoint) -> String {
    match (point.i_r_mw_cm2, point.omega_mhz) {
        (Some(i), _) => format!("d{}_i{}", point.delta_mhz, i),
        (None, Some(w)) => format!("d{}_w{}", point.delta_mhz, w),
        _ => format!("d{}", point.delta_mhz),
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(CliError::runtime)?;
    Ok(buf)
}

pub fn wavepacket(cfg: &ScenarioConfig, run: &mut Run) -> Result<(), CliError> {
    let w = &cfg.wavepacket;
    let mut c = Checker::default();
    cfg.params.check(&mut c);
    c.require(!w.runs.is_empty(), "wavepacket.runs", "no runs given");
    for (i, r) in w.runs.iter().enumerate() {
        r.check(&mut c, &format!("wavepacket.runs[{i}]"));
    }
    c.require(w.t_start_ns.is_finite() && w.t_start_ns >= 0.0, "wavepacket.t_start_ns", "must be >= 0");
    c.require(w.t_end_ns.is_finite() && w.t_end_ns > w.t_start_ns, "wavepacket.t_end_ns", "must exceed t_start_ns");
    c.require(w.spacing_ns.is_finite() && w.spacing_ns > 0.0, "wavepacket.spacing_ns", "must be > 0");
    let steps = (w.t_end_ns - w.t_start_ns) / w.spacing_ns;
    c.require(
        (steps - steps.round()).abs() < 1e-9 * steps.max(1.0),
        "wavepacket.spacing_ns",
        "must divide the time window evenly",
    );
    let labels: Vec<String> = w.runs.iter().map(point_label).collect();
    for (i, l) in labels.iter().enumerate() {
        c.require(!labels[..i].contains(l), &format!("wavepacket.runs[{i}]"), "duplicate run");
    }
    c.finish()?;
    let n_points = steps.round() as usize + 1;
    let params: Vec<ReadoutParams> = w
        .runs
        .iter()
        .map(|r| readout_params(&cfg.params, r))
        .collect::<Result<_, _>>()?;

    for (p, label) in params.iter().zip(&labels) {
        let curve = pc_curve(p, ns_to_us(w.t_start_ns), ns_to_us(w.t_end_ns), n_points).map_err(CliError::runtime)?;
        let name = format!("wavepacket_{label}.csv");
        run.write(&name, &csv_bytes(|b| curve.write_csv(b))?)?;
        let (i, peak) = curve.peak();
        run.say(format!("{name}: peak p_c {peak:.4e} per ns at {} ns", curve.times_ns[i]));
    }
    Ok(())
}

pub fn sweep_intensity(cfg: &ScenarioConfig, run: &mut Run) -> Result<(), CliError> {
    let s = &cfg.sweep_intensity;
    let mut c = Checker::default();
    cfg.params.check(&mut c);
    check_grid(&mut c, &s.delta_mhz, "sweep_intensity.delta_mhz", false);
    check_grid(&mut c, &s.i_r_mw_cm2, "sweep_intensity.i_r_mw_cm2", true);
    s.integration.check(&mut c, "sweep_intensity.integration");
    c.finish()?;
    let model = intensity_model(&cfg.params)?;
    for &delta in &s.delta_mhz {
        let base = readout_params(&cfg.params, &ReadPoint { delta_mhz: delta, i_r_mw_cm2: Some(0.0), omega_mhz: None })?;
        let curve = saturation_curve(&base, &model, &s.i_r_mw_cm2, s.integration.settings()).map_err(CliError::runtime)?;
        let name = format!("saturation_d{delta}.csv");
        run.write(&name, &csv_bytes(|b| curve.write_csv(b))?)?;
        let max = curve.ordinate.iter().cloned().fold(0.0, f64::max);
        run.say(format!("{name}: {} points, max P_c {max:.4e}", curve.ordinate.len()));
    }
    Ok(())
}

pub fn sweep_detuning(cfg: &ScenarioConfig, run: &mut Run) -> Result<(), CliError> {
    let s = &cfg.sweep_detuning;
    let mut c = Checker::default();
    cfg.params.check(&mut c);
    check_grid(&mut c, &s.i_r_mw_cm2, "sweep_detuning.i_r_mw_cm2", true);
    check_grid(&mut c, &s.delta_mhz, "sweep_detuning.delta_mhz", false);
    s.integration.check(&mut c, "sweep_detuning.integration");
    c.finish()?;
    let model = intensity_model(&cfg.params)?;
    let base = readout_params(&cfg.params, &ReadPoint { delta_mhz: 0.0, i_r_mw_cm2: Some(0.0), omega_mhz: None })?;
    for &i_r in &s.i_r_mw_cm2 {
        let curve =
            detuning_spectrum(&base, &model, i_r, &s.delta_mhz, s.integration.settings()).map_err(CliError::runtime)?;
        let name = format!("spectrum_i{i_r}.csv");
        run.write(&name, &csv_bytes(|b| curve.write_csv(b))?)?;
        let (imax, max) = curve
            .ordinate
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        run.say(format!("{name}: max P_c {max:.4e} at {} MHz", curve.abscissa[imax]));
    }
    Ok(())
}

#[derive(Serialize)]
struct ChiReport {
    geometry: EnsembleGeometry,
    regime: RegimeFlags,
    warnings: Vec<String>,
    seed: u64,
    estimates: Vec<ChiEstimate>,
    extraction_ceiling: f64,
}

pub fn chi(cfg: &ScenarioConfig, run: &mut Run) -> Result<(), CliError> {
    let g = &cfg.chi;
    let mut c = Checker::default();
    c.require(g.n_atoms.is_finite() && g.n_atoms >= 0.0, "chi.n_atoms", "must be >= 0");
    c.require(g.waist_m.is_finite() && g.waist_m > 0.0, "chi.waist_m", "must be > 0");
    c.require(g.length_m.is_finite() && g.length_m > 0.0, "chi.length_m", "must be > 0");
    c.require(g.k_per_m.is_finite() && g.k_per_m > 0.0, "chi.k_per_m", "must be > 0");
    c.require(g.mc_samples >= 100, "chi.mc_samples", "must be >= 100");
    c.finish()?;
    let geom = EnsembleGeometry::new(g.n_atoms, g.waist_m, g.length_m, g.k_per_m)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let warnings = geom.regime_warnings();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let closed = chi_closed_form(&geom);
    let quad = chi_quadrature(&geom).map_err(CliError::runtime)?;
    let mc = chi_monte_carlo(&geom, g.mc_samples, run.seed).map_err(CliError::runtime)?;
    for e in [&closed, &quad, &mc] {
        run.say(format!("chi ({:?}): {:.6} +- {:.6}", e.method, e.value, e.standard_error));
    }
    let report = ChiReport {
        geometry: geom,
        regime: geom.regime(),
        warnings,
        seed: run.seed,
        extraction_ceiling: extraction_ceiling(closed.value).map_err(CliError::runtime)?,
        estimates: vec![closed, quad, mc],
    };
    run.write_json("chi.json", &report)
}

#[derive(Serialize)]
struct SynthTruth {
    params: ReadoutParams,
    design: SynthDesign,
    seed: u64,
    pc_total: f64,
    bin_probabilities: Vec<f64>,
}

pub fn synth(cfg: &ScenarioConfig, run: &mut Run) -> Result<(), CliError> {
    let s = &cfg.synth;
    let mut c = Checker::default();
    cfg.params.check(&mut c);
    s.read.check(&mut c, "synth.read");
    c.require(s.n_trials > 0, "synth.n_trials", "must be > 0");
    c.require(s.p1 > 0.0 && s.p1 <= 1.0, "synth.p1", format!("must lie in (0, 1], got {}", s.p1));
    c.require(
        s.background_per_ns.is_finite() && s.background_per_ns >= 0.0,
        "synth.background_per_ns",
        "must be >= 0",
    );
    c.require(s.trial_window_ns > 0, "synth.trial_window_ns", "must be > 0");
    c.require(s.read_duration_ns >= 1, "synth.read_duration_ns", "must be >= 1");
    c.require(
        s.read_start_ns >= 0 && s.read_start_ns + s.read_duration_ns <= s.trial_window_ns,
        "synth.read_start_ns",
        "read window must fit in the trial window",
    );
    let herald = s.read_start_ns as f64 - cfg.params.tau_ns;
    c.require(herald >= 0.0, "params.tau_ns", "herald would fall before the trial starts");
    c.finish()?;
    let params = readout_params(&cfg.params, &s.read)?;
    let design = SynthDesign {
        n_trials: s.n_trials,
        p1: s.p1,
        read_start_ns: s.read_start_ns,
        read_duration_ns: s.read_duration_ns,
        background_per_ns: s.background_per_ns,
        trial_window: TimeWindow::new(0, s.trial_window_ns).map_err(|e| CliError::Validation(e.to_string()))?,
    };
    let log = synthesize_log(&params, &design, run.seed).map_err(CliError::runtime)?;
    run.write("events.csv", &csv_bytes(|b| write_events(&log.events, b))?)?;
    run.say(format!(
        "events.csv: {} events over {} trials, P_c {:.4e}",
        log.events.len(),
        design.n_trials,
        log.pc_total
    ));
    run.write_json(
        "synth_truth.json",
        &SynthTruth {
            params,
            design,
            seed: run.seed,
            pc_total: log.pc_total,
            bin_probabilities: log.bin_probabilities,
        },
    )
}

#[derive(Serialize)]
struct StatsReport<'a> {
    summary: &'a CorrelationSummary,
    ingest: &'a IngestReport,
    n_heralds: u64,
}

/// Half-width, in bins, of the window used to estimate the expected count per bin.
const SIGMA_SMOOTH_HALF: usize = 2;

fn dataset_csv(wp: &BinnedWavepacket) -> Result<Vec<u8>, CliError> {
    csv_bytes(|b| {
        use std::io::Write;
        writeln!(b, "x,y,sigma")?;
        let h = wp.n_heralds as f64;
        let n = wp.len();
        for i in 0..n {
            let centre = 0.5 * (wp.t_lo_ns[i] + wp.t_hi_ns[i]) as f64;
            // Poisson sigma from the mean count of the neighbouring bins. Any estimate that
            // includes the bin's own count down-weights upward fluctuations and drags
            // weighted fits low.
            let (lo, hi) = (i.saturating_sub(SIGMA_SMOOTH_HALF), (i + SIGMA_SMOOTH_HALF + 1).min(n));
            let others = (lo..hi).filter(|&j| j != i);
            let k = (hi - lo - 1).max(1) as f64;
            let mean = others.map(|j| wp.n_coinc[j]).sum::<u64>() as f64 / k;
            let sigma = mean.max(1.0).sqrt() / h;
            writeln!(b, "{centre},{},{sigma}", wp.pc[i])?;
        }
        Ok(())
    })
}

pub fn stats(cfg: &ScenarioConfig, run: &mut Run) -> Result<(), CliError> {
    let s = &cfg.stats;
    let mut c = Checker::default();
    c.require(s.events_csv.is_some(), "stats.events_csv", "required");
    c.require(s.trial_window_ns > 0, "stats.trial_window_ns", "must be > 0");
    for (name, w) in [("stats.herald_window_ns", s.herald_window_ns), ("stats.read_window_ns", s.read_window_ns)] {
        c.require(
            w[0] >= 0 && w[1] > w[0] && w[1] <= s.trial_window_ns,
            name,
            format!("[{}, {}) must be a non-empty range inside the trial window", w[0], w[1]),
        );
    }
    c.require(s.pc_bin_ns >= 1, "stats.pc_bin_ns", "must be >= 1");
    c.require(s.g12_bin_ns >= 1, "stats.g12_bin_ns", "must be >= 1");
    c.finish()?;
    let trial_window = TimeWindow::new(0, s.trial_window_ns).map_err(|e| CliError::Validation(e.to_string()))?;
    let w1 = TimeWindow::new(s.herald_window_ns[0], s.herald_window_ns[1]).map_err(|e| CliError::Validation(e.to_string()))?;
    let w2 = TimeWindow::new(s.read_window_ns[0], s.read_window_ns[1]).map_err(|e| CliError::Validation(e.to_string()))?;

    let path = run.resolve_input(s.events_csv.as_ref().expect("checked"));
    let file = File::open(&path).map_err(|e| CliError::Runtime(format!("cannot open {}: {e}", path.display())))?;
    let (store, report) = ingest(std::io::BufReader::new(file), trial_window, s.n_trials).map_err(|e| match e {
        readout_core::StatsError::Input(m) => CliError::Validation(format!("stats.n_trials: {m}")),
        other => CliError::runtime(other),
    })?;
    for m in &report.malformed {
        eprintln!("warning: {}:{}: {}", path.display(), m.line, m.message);
    }
    if report.unknown_channel > 0 || report.outside_window > 0 || report.duplicates > 0 {
        eprintln!(
            "warning: {} unknown-channel, {} out-of-window and {} duplicate records skipped",
            report.unknown_channel, report.outside_window, report.duplicates
        );
    }
    let summary = analyze(&store, w1, w2).map_err(CliError::runtime)?;
    let wp = conditional_wavepacket(&store, w1, w2, s.pc_bin_ns).map_err(CliError::runtime)?;
    let g12 = conditional_wavepacket(&store, w1, w2, s.g12_bin_ns).map_err(CliError::runtime)?;
    run.write_json(
        "summary.json",
        &StatsReport {
            summary: &summary,
            ingest: &report,
            n_heralds: wp.n_heralds,
        },
    )?;
    run.write("wavepacket.csv", &csv_bytes(|b| wp.write_csv(b))?)?;
    run.write("g12.csv", &csv_bytes(|b| g12.write_csv(b))?)?;
    run.write("wavepacket_dataset.csv", &dataset_csv(&wp)?)?;
    let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |g| format!("{g:.4}"));
    run.say(format!(
        "{} trials: p1 {:.4e}, p2 {:.4e}, p12 {:.4e}, g12 {} (quantum: {}), R {}",
        summary.n_trials,
        summary.p1,
        summary.p2,
        summary.p12,
        fmt(summary.g12),
        summary.quantum_g12,
        fmt(summary.r_cs)
    ));
    Ok(())
}

fn load_dataset(d: &DatasetConfig, index: usize, run: &Run) -> Result<Dataset, CliError> {
    let path = format!("fit.datasets[{index}]");
    let inline = d.x.is_some() || d.y.is_some() || d.sigma.is_some();
    let (x, y, sigma, mask) = match (&d.file, inline) {
        (Some(_), true) => {
            return Err(CliError::Validation(format!("config field `{path}`: give either file or inline arrays")))
        }
        (None, false) => return Err(CliError::Validation(format!("config field `{path}`: no data given"))),
        (None, true) => match (&d.x, &d.y, &d.sigma) {
            (Some(x), Some(y), Some(s)) => (x.clone(), y.clone(), s.clone(), d.mask.clone()),
            _ => return Err(CliError::Validation(format!("config field `{path}`: x, y and sigma are all required"))),
        },
        (Some(file), false) => {
            let full = run.resolve_input(file);
            let mut rdr = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .from_path(&full)
                .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", full.display())))?;
            let headers = rdr.headers().map_err(CliError::runtime)?.clone();
            let col = |name: &str| headers.iter().position(|h| h == name);
            let (Some(ix), Some(iy), Some(is)) = (col("x"), col("y"), col("sigma")) else {
                return Err(CliError::Validation(format!(
                    "{}: header must contain x, y and sigma columns",
                    full.display()
                )));
            };
            let im = col("mask");
            let (mut x, mut y, mut s, mut m) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for (line, rec) in rdr.records().enumerate() {
                let rec = rec.map_err(CliError::runtime)?;
                let num = |i: usize| -> Result<f64, CliError> {
                    rec.get(i).unwrap_or("").parse::<f64>().map_err(|e| {
                        CliError::Validation(format!("{}:{}: {e}", full.display(), line + 2))
                    })
                };
                x.push(num(ix)?);
                y.push(num(iy)?);
                s.push(num(is)?);
                if let Some(i) = im {
                    m.push(num(i)? != 0.0);
                }
            }
            let mask = im.map(|_| m).or_else(|| d.mask.clone());
            (x, y, s, mask)
        }
    };
    let dataset = Dataset {
        name: d.name.clone(),
        kind: d.kind,
        x,
        y,
        sigma,
        mask,
    };
    dataset
        .validate()
        .map_err(|e| CliError::Validation(format!("config field `{path}`: {e}")))?;
    Ok(dataset)
}

#[derive(Serialize)]
struct FitReport<'a> {
    free: &'a [ParamId],
    datasets: Vec<&'a str>,
    result: &'a FitResult,
}

pub fn fit_cmd(cfg: &ScenarioConfig, run: &mut Run) -> Result<(), CliError> {
    let Some(f) = &cfg.fit else {
        return Err(CliError::Validation("config field `fit`: required for the fit subcommand".into()));
    };
    let mut c = Checker::default();
    cfg.params.check(&mut c);
    c.require(!f.datasets.is_empty(), "fit.datasets", "no datasets given");
    c.require(!f.free.is_empty(), "fit.free", "no free parameters");
    c.require(f.max_iter > 0, "fit.max_iter", "must be > 0");
    f.integration.check(&mut c, "fit.integration");
    for (id, v) in &f.init {
        c.finite(*v, &format!("fit.init.{}", id.name()));
    }
    if let Some(p) = &f.profile {
        check_grid(&mut c, &p.grid, "fit.profile.grid", false);
    }
    c.finish()?;
    let datasets: Vec<Dataset> = f
        .datasets
        .iter()
        .enumerate()
        .map(|(i, d)| load_dataset(d, i, run))
        .collect::<Result<_, _>>()?;

    let mut init = cfg.params.physical();
    let neutral = PhysicalParams::default();
    for id in &f.free {
        init.set(*id, f.init.get(id).copied().unwrap_or(neutral.get(*id)));
    }
    let mut spec = FitSpec::new(f.free.clone(), init);
    spec.bounds = f.bounds();
    spec.weighted = f.weighted;
    spec.max_iter = f.max_iter;
    spec.settings = f.integration.settings();

    let result = fit(&datasets, &spec).map_err(|e| match e {
        readout_core::FitError::Input(m) => CliError::Validation(m),
        other => CliError::runtime(other),
    })?;
    if !result.converged {
        eprintln!("warning: fit did not converge within {} iterations; reporting the best point", f.max_iter);
    }
    for e in &result.estimates {
        run.say(format!("{} = {:.6} +- {:.6}{}", e.id.name(), e.value, e.sigma, if e.at_bound { " (at bound)" } else { "" }));
    }
    run.say(format!("reduced chi2 {:.4}, {} iterations", result.reduced_chi2, result.iterations));
    run.write_json(
        "fit_result.json",
        &FitReport {
            free: &f.free,
            datasets: datasets.iter().map(|d| d.name.as_str()).collect(),
            result: &result,
        },
    )?;

    if let Some(p) = &f.profile {
        let points = profile(p.param, &p.grid, &datasets, &spec).map_err(|e| match e {
            readout_core::FitError::Input(m) => CliError::Validation(format!("fit.profile: {m}")),
            other => CliError::runtime(other),
        })?;
        let bytes = csv_bytes(|b| {
            use std::io::Write;
            writeln!(b, "{},chi2,converged", p.param.name())?;
            for q in &points {
                writeln!(b, "{},{},{}", q.value, q.chi2, q.converged)?;
            }
            Ok(())
        })?;
        run.write("profile.csv", &bytes)?;
    }
    Ok(())
}
