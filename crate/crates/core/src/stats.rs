//! Detection-log ingestion, counting statistics and synthetic log generation.
//!
//! Each trial holds at most a handful of time-tagged clicks on four detectors: two
//! behind a beamsplitter for field 1 (F1A, F1B) and two for field 2 (F2A, F2B).

use std::fmt;
use std::io::{self, Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::analytic::pc_density;
use crate::quadrature::{self, Tolerance};
use crate::units::{ns_to_us, ReadoutParams};

/// Length of the detector-on period of one trial, ns.
pub const DEFAULT_TRIAL_WINDOW_NS: i64 = 1500;

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("no trials: statistics are undefined")]
    NoTrials,
    #[error("no heralds in the field-1 window: conditional statistics are undefined")]
    NoHeralds,
    #[error("invalid input: {0}")]
    Input(String),
    #[error("model inconsistency: P_c = {0} exceeds 1")]
    PcAboveOne(f64),
    #[error("wavepacket integration failed: {0}")]
    Model(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Channel {
    F1A,
    F1B,
    F2A,
    F2B,
}

impl Channel {
    pub fn field(self) -> u8 {
        match self {
            Channel::F1A | Channel::F1B => 1,
            Channel::F2A | Channel::F2B => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::F1A => "F1A",
            Channel::F1B => "F1B",
            Channel::F2A => "F2A",
            Channel::F2B => "F2B",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "F1A" => Ok(Channel::F1A),
            "F1B" => Ok(Channel::F1B),
            "F2A" => Ok(Channel::F2A),
            "F2B" => Ok(Channel::F2B),
            other => Err(format!("unknown channel {other:?}")),
        }
    }
}

/// One detector click. Orders by trial, then time, then channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub trial: u64,
    pub t_ns: i64,
    pub channel: Channel,
}

/// Half-open time window [start_ns, end_ns).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start_ns: i64,
    pub end_ns: i64,
}

impl TimeWindow {
    pub fn new(start_ns: i64, end_ns: i64) -> Result<Self, StatsError> {
        if end_ns <= start_ns {
            return Err(StatsError::Input(format!("empty window [{start_ns}, {end_ns})")));
        }
        Ok(TimeWindow { start_ns, end_ns })
    }

    pub fn contains(&self, t: i64) -> bool {
        t >= self.start_ns && t < self.end_ns
    }

    pub fn len(&self) -> i64 {
        self.end_ns - self.start_ns
    }

    pub fn is_empty(&self) -> bool {
        self.end_ns <= self.start_ns
    }

    pub fn within(&self, outer: &TimeWindow) -> bool {
        self.start_ns >= outer.start_ns && self.end_ns <= outer.end_ns
    }
}

impl Default for TimeWindow {
    fn default() -> Self {
        TimeWindow {
            start_ns: 0,
            end_ns: DEFAULT_TRIAL_WINDOW_NS,
        }
    }
}

/// Events of all trials, sorted and free of duplicates.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EventStore {
    events: Vec<DetectionEvent>,
    n_trials: u64,
    trial_window: TimeWindow,
}

impl EventStore {
    /// Builds a store; `n_trials` defaults to the largest trial id plus one.
    /// Returns the store and the number of duplicates dropped.
    pub fn from_events(
        mut events: Vec<DetectionEvent>,
        n_trials: Option<u64>,
        trial_window: TimeWindow,
    ) -> Result<(Self, usize), StatsError> {
        events.sort_unstable();
        let before = events.len();
        events.dedup();
        let duplicates = before - events.len();
        let needed = events.last().map_or(0, |e| e.trial + 1);
        let n_trials = match n_trials {
            Some(n) if n < needed => {
                return Err(StatsError::Input(format!(
                    "n_trials = {n} but events reference trial {}",
                    needed - 1
                )))
            }
            Some(n) => n,
            None => needed,
        };
        Ok((
            EventStore {
                events,
                n_trials,
                trial_window,
            },
            duplicates,
        ))
    }

    pub fn events(&self) -> &[DetectionEvent] {
        &self.events
    }

    pub fn n_trials(&self) -> u64 {
        self.n_trials
    }

    pub fn trial_window(&self) -> TimeWindow {
        self.trial_window
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Non-empty trials as (trial id, events) in increasing trial order.
    pub fn trials(&self) -> impl Iterator<Item = (u64, &[DetectionEvent])> {
        self.events
            .chunk_by(|a, b| a.trial == b.trial)
            .map(|chunk| (chunk[0].trial, chunk))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        write_events(&self.events, out)
    }
}

pub fn write_events<W: Write>(events: &[DetectionEvent], mut out: W) -> io::Result<()> {
    writeln!(out, "trial,channel,t_ns")?;
    for e in events {
        writeln!(out, "{},{},{}", e.trial, e.channel, e.t_ns)?;
    }
    Ok(())
}

/// A line that could not be turned into an event.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalformedLine {
    pub line: u64,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub header_seen: bool,
    pub accepted: usize,
    pub malformed: Vec<MalformedLine>,
    pub unknown_channel: usize,
    pub outside_window: usize,
    pub duplicates: usize,
}

/// Reads `trial,channel,t_ns` records. Bad lines are reported, not fatal.
pub fn ingest<R: Read>(
    input: R,
    trial_window: TimeWindow,
    n_trials: Option<u64>,
) -> Result<(EventStore, IngestReport), StatsError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut report = IngestReport::default();
    let mut events = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                if let csv::ErrorKind::Io(_) = e.kind() {
                    return Err(StatsError::Io(io::Error::other(e.to_string())));
                }
                let line = e.position().map_or(0, |p| p.line());
                report.malformed.push(MalformedLine {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        let is_first = std::mem::replace(&mut first, false);
        if is_first && record.get(0) == Some("trial") {
            report.header_seen = true;
            continue;
        }
        if record.len() != 3 {
            report.malformed.push(MalformedLine {
                line,
                message: format!("expected 3 fields, found {}", record.len()),
            });
            continue;
        }
        let trial = match record[0].parse::<u64>() {
            Ok(v) => v,
            Err(e) => {
                report.malformed.push(MalformedLine {
                    line,
                    message: format!("trial {:?}: {e}", &record[0]),
                });
                continue;
            }
        };
        let t_ns = match record[2].parse::<i64>() {
            Ok(v) => v,
            Err(e) => {
                report.malformed.push(MalformedLine {
                    line,
                    message: format!("t_ns {:?}: {e}", &record[2]),
                });
                continue;
            }
        };
        let channel = match record[1].parse::<Channel>() {
            Ok(c) => c,
            Err(_) => {
                report.unknown_channel += 1;
                continue;
            }
        };
        if !trial_window.contains(t_ns) {
            report.outside_window += 1;
            continue;
        }
        events.push(DetectionEvent { trial, t_ns, channel });
    }
    let (store, duplicates) = EventStore::from_events(events, n_trials, trial_window)?;
    report.duplicates = duplicates;
    report.accepted = store.len();
    Ok((store, report))
}

/// Trial counts behind the probabilities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub n1: u64,
    pub n2: u64,
    pub n11: u64,
    pub n22: u64,
    pub n12: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Uncertainties {
    pub p1: f64,
    pub p2: f64,
    pub p11: f64,
    pub p22: f64,
    pub p12: f64,
    pub g11: Option<f64>,
    pub g22: Option<f64>,
    pub g12: Option<f64>,
    pub r_cs: Option<f64>,
    pub pc_total: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub n_trials: u64,
    pub counts: Counts,
    pub window1: TimeWindow,
    pub window2: TimeWindow,
    pub p1: f64,
    pub p2: f64,
    pub p11: f64,
    pub p22: f64,
    pub p12: f64,
    pub g11: Option<f64>,
    pub g22: Option<f64>,
    pub g12: Option<f64>,
    pub r_cs: Option<f64>,
    /// p12 / p1.
    pub pc_total: Option<f64>,
    pub quantum_g12: bool,
    pub cauchy_schwarz_violated: bool,
    pub uncertainties: Uncertainties,
}

fn binomial_se(p: f64, n: f64) -> f64 {
    (p * (1.0 - p) / n).sqrt()
}

/// Single and joint detection probabilities per trial. Correlation fields are left
/// undefined; see [`correlations`].
pub fn probabilities(
    store: &EventStore,
    window1: TimeWindow,
    window2: TimeWindow,
) -> Result<CorrelationSummary, StatsError> {
    if store.n_trials() == 0 {
        return Err(StatsError::NoTrials);
    }
    let outer = store.trial_window();
    for w in [window1, window2] {
        if w.is_empty() || !w.within(&outer) {
            return Err(StatsError::Input(format!(
                "window [{}, {}) is empty or outside the trial window [{}, {})",
                w.start_ns, w.end_ns, outer.start_ns, outer.end_ns
            )));
        }
    }
    let mut c = Counts::default();
    for (_, events) in store.trials() {
        let mut seen = [false; 4];
        for e in events {
            let w = if e.channel.field() == 1 { &window1 } else { &window2 };
            if w.contains(e.t_ns) {
                seen[e.channel as usize] = true;
            }
        }
        let f1 = seen[0] || seen[1];
        let f2 = seen[2] || seen[3];
        c.n1 += u64::from(f1);
        c.n2 += u64::from(f2);
        c.n11 += u64::from(seen[0] && seen[1]);
        c.n22 += u64::from(seen[2] && seen[3]);
        c.n12 += u64::from(f1 && f2);
    }
    let n = store.n_trials() as f64;
    let p = |k: u64| k as f64 / n;
    let (p1, p2, p11, p22, p12) = (p(c.n1), p(c.n2), p(c.n11), p(c.n22), p(c.n12));
    Ok(CorrelationSummary {
        n_trials: store.n_trials(),
        counts: c,
        window1,
        window2,
        p1,
        p2,
        p11,
        p22,
        p12,
        g11: None,
        g22: None,
        g12: None,
        r_cs: None,
        pc_total: None,
        quantum_g12: false,
        cauchy_schwarz_violated: false,
        uncertainties: Uncertainties {
            p1: binomial_se(p1, n),
            p2: binomial_se(p2, n),
            p11: binomial_se(p11, n),
            p22: binomial_se(p22, n),
            p12: binomial_se(p12, n),
            ..Uncertainties::default()
        },
    })
}

/// Fills g11, g22, g12, R and p_c; quantities with a zero denominator stay undefined.
pub fn correlations(summary: &CorrelationSummary) -> CorrelationSummary {
    let mut s = *summary;
    let u = summary.uncertainties;
    let auto = |pij: f64, pi: f64, sij: f64, si: f64| {
        (pi > 0.0).then(|| {
            let g = pij / (pi * pi);
            let se = ((sij / (pi * pi)).powi(2) + (2.0 * g * si / pi).powi(2)).sqrt();
            (g, se)
        })
    };
    let g11 = auto(s.p11, s.p1, u.p11, u.p1);
    let g22 = auto(s.p22, s.p2, u.p22, u.p2);
    let g12 = (s.p1 > 0.0 && s.p2 > 0.0).then(|| {
        let g = s.p12 / (s.p1 * s.p2);
        let se = ((u.p12 / (s.p1 * s.p2)).powi(2) + (g * u.p1 / s.p1).powi(2) + (g * u.p2 / s.p2).powi(2)).sqrt();
        (g, se)
    });
    s.g11 = g11.map(|x| x.0);
    s.g22 = g22.map(|x| x.0);
    s.g12 = g12.map(|x| x.0);
    s.uncertainties.g11 = g11.map(|x| x.1);
    s.uncertainties.g22 = g22.map(|x| x.1);
    s.uncertainties.g12 = g12.map(|x| x.1);

    s.r_cs = None;
    s.uncertainties.r_cs = None;
    s.cauchy_schwarz_violated = false;
    if let (Some((a, sa)), Some((b, sb)), Some((g, sg))) = (g11, g22, g12) {
        if a > 0.0 && b > 0.0 {
            let r = g * g / (a * b);
            let se = ((2.0 * g * sg / (a * b)).powi(2) + (r * sa / a).powi(2) + (r * sb / b).powi(2)).sqrt();
            s.r_cs = Some(r);
            s.uncertainties.r_cs = Some(se);
        }
        s.cauchy_schwarz_violated = g * g > a * b;
    }
    s.quantum_g12 = s.g12.is_some_and(|g| g > 2.0);

    if s.counts.n1 > 0 {
        let pc = s.counts.n12 as f64 / s.counts.n1 as f64;
        s.pc_total = Some(pc);
        s.uncertainties.pc_total = Some(binomial_se(pc, s.counts.n1 as f64));
    } else {
        s.pc_total = None;
        s.uncertainties.pc_total = None;
    }
    s
}

/// [`probabilities`] followed by [`correlations`].
pub fn analyze(store: &EventStore, window1: TimeWindow, window2: TimeWindow) -> Result<CorrelationSummary, StatsError> {
    probabilities(store, window1, window2).map(|s| correlations(&s))
}

/// Conditional field-2 detection probability resolved in time after a herald.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinnedWavepacket {
    /// Bin edges relative to the start of the read window, ns.
    pub t_lo_ns: Vec<i64>,
    pub t_hi_ns: Vec<i64>,
    /// Field-2 events in heralded trials.
    pub n_coinc: Vec<u64>,
    /// Field-2 events in all trials.
    pub n_field2: Vec<u64>,
    pub pc: Vec<f64>,
    pub pc_se: Vec<f64>,
    pub g12: Vec<Option<f64>>,
    pub n_heralds: u64,
    pub n_trials: u64,
    pub read_start_ns: i64,
    pub bin_width_ns: i64,
}

impl BinnedWavepacket {
    pub fn len(&self) -> usize {
        self.pc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pc.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t_lo_ns,t_hi_ns,pc,g12,n_coinc")?;
        for i in 0..self.len() {
            let g = self.g12[i].map_or(String::new(), |g| g.to_string());
            writeln!(out, "{},{},{},{},{}", self.t_lo_ns[i], self.t_hi_ns[i], self.pc[i], g, self.n_coinc[i])?;
        }
        Ok(())
    }
}

/// Bins field-2 clicks of heralded trials over `read_window`.
///
/// A trial is heralded by any field-1 click in `herald_window`. p_c per bin is the
/// number of field-2 clicks in heralded trials divided by the number of heralds;
/// g12 per bin divides that by the unconditional click probability per trial.
pub fn conditional_wavepacket(
    store: &EventStore,
    herald_window: TimeWindow,
    read_window: TimeWindow,
    bin_width_ns: i64,
) -> Result<BinnedWavepacket, StatsError> {
    if bin_width_ns < 1 {
        return Err(StatsError::Input(format!("bin width must be >= 1 ns, got {bin_width_ns}")));
    }
    if store.n_trials() == 0 {
        return Err(StatsError::NoTrials);
    }
    let n_bins = (read_window.len() / bin_width_ns) as usize;
    if n_bins == 0 {
        return Err(StatsError::Input("read window shorter than one bin".into()));
    }
    let span_end = read_window.start_ns + n_bins as i64 * bin_width_ns;
    let mut n_coinc = vec![0u64; n_bins];
    let mut n_field2 = vec![0u64; n_bins];
    let mut n_heralds = 0u64;
    for (_, events) in store.trials() {
        let heralded = events
            .iter()
            .any(|e| e.channel.field() == 1 && herald_window.contains(e.t_ns));
        n_heralds += u64::from(heralded);
        for e in events.iter().filter(|e| e.channel.field() == 2) {
            if e.t_ns >= read_window.start_ns && e.t_ns < span_end {
                let bin = ((e.t_ns - read_window.start_ns) / bin_width_ns) as usize;
                n_field2[bin] += 1;
                if heralded {
                    n_coinc[bin] += 1;
                }
            }
        }
    }
    if n_heralds == 0 {
        return Err(StatsError::NoHeralds);
    }
    let h = n_heralds as f64;
    let n = store.n_trials() as f64;
    let pc: Vec<f64> = n_coinc.iter().map(|&c| c as f64 / h).collect();
    let pc_se = pc.iter().map(|&p| binomial_se(p.min(1.0), h)).collect();
    let g12 = pc
        .iter()
        .zip(&n_field2)
        .map(|(&p, &m)| (m > 0).then(|| p / (m as f64 / n)))
        .collect();
    Ok(BinnedWavepacket {
        t_lo_ns: (0..n_bins as i64).map(|i| i * bin_width_ns).collect(),
        t_hi_ns: (1..=n_bins as i64).map(|i| i * bin_width_ns).collect(),
        n_coinc,
        n_field2,
        pc,
        pc_se,
        g12,
        n_heralds,
        n_trials: store.n_trials(),
        read_start_ns: read_window.start_ns,
        bin_width_ns,
    })
}

/// Trial layout and noise levels for [`synthesize_log`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthDesign {
    pub n_trials: u64,
    /// Herald probability per trial.
    pub p1: f64,
    /// Start of the read pulse within the trial, ns.
    pub read_start_ns: i64,
    /// Length of the read window over which the photon can be emitted, ns.
    pub read_duration_ns: i64,
    /// Uncorrelated click rate per channel, per ns.
    pub background_per_ns: f64,
    pub trial_window: TimeWindow,
}

impl Default for SynthDesign {
    fn default() -> Self {
        SynthDesign {
            n_trials: 100_000,
            p1: 0.0036,
            read_start_ns: 200,
            read_duration_ns: 160,
            background_per_ns: 0.0,
            trial_window: TimeWindow::default(),
        }
    }
}

impl SynthDesign {
    /// Field-1 window: from the start of the trial up to the read pulse.
    pub fn herald_window(&self) -> TimeWindow {
        TimeWindow {
            start_ns: self.trial_window.start_ns,
            end_ns: self.read_start_ns,
        }
    }

    pub fn read_window(&self) -> TimeWindow {
        TimeWindow {
            start_ns: self.read_start_ns,
            end_ns: self.read_start_ns + self.read_duration_ns,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticLog {
    pub events: Vec<DetectionEvent>,
    /// Probability of a field-2 click in each 1 ns bin after the read start, given a herald.
    pub bin_probabilities: Vec<f64>,
    /// Sum of `bin_probabilities`.
    pub pc_total: f64,
    pub design: SynthDesign,
}

/// ∫ p_c over each 1 ns bin of [0, n_bins) ns.
pub fn bin_probabilities(params: &ReadoutParams, n_bins: usize) -> Result<Vec<f64>, StatsError> {
    let params = params.validate().map_err(|e| StatsError::Model(e.to_string()))?;
    (0..n_bins)
        .map(|b| {
            let lo = ns_to_us(b as f64);
            let hi = ns_to_us(b as f64 + 1.0);
            quadrature::integrate(|t| pc_density(t, &params), lo, hi, Tolerance { abs: 1e-16, rel: 1e-10 }, 200)
                .map(|o| o.value)
                .map_err(|e| StatsError::Model(e.to_string()))
        })
        .collect()
}

/// Generates a detection log from the analytic wavepacket.
///
/// Per trial a herald click lands on F1A or F1B with probability p1 at τ before the
/// read start. A heralded trial emits a field-2 photon with probability P_c over the
/// read window, its 1 ns bin drawn from the wavepacket, on F2A or F2B. Background
/// clicks are Poisson on every channel across the trial window.
pub fn synthesize_log(params: &ReadoutParams, design: &SynthDesign, seed: u64) -> Result<SyntheticLog, StatsError> {
    if !(design.p1 > 0.0 && design.p1 <= 1.0) {
        return Err(StatsError::Input(format!("p1 must lie in (0, 1], got {}", design.p1)));
    }
    if !(design.background_per_ns >= 0.0 && design.background_per_ns.is_finite()) {
        return Err(StatsError::Input(format!(
            "background rate must be >= 0, got {}",
            design.background_per_ns
        )));
    }
    if design.read_duration_ns < 1 || !design.read_window().within(&design.trial_window) {
        return Err(StatsError::Input("read window must lie inside the trial window".into()));
    }
    let herald_t = design.read_start_ns - (params.tau * 1e3).round() as i64;
    if !design.trial_window.contains(herald_t) {
        return Err(StatsError::Input(format!(
            "herald time {herald_t} ns falls outside the trial window"
        )));
    }

    let probs = bin_probabilities(params, design.read_duration_ns as usize)?;
    let pc_total: f64 = probs.iter().sum();
    if pc_total > 1.0 {
        return Err(StatsError::PcAboveOne(pc_total));
    }
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cdf.push(acc);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let background_mean = design.background_per_ns * design.trial_window.len() as f64;
    let background = if background_mean > 0.0 {
        Some(Poisson::new(background_mean).map_err(|e| StatsError::Input(e.to_string()))?)
    } else {
        None
    };
    let mut events = Vec::new();
    let mut trial_events = Vec::new();
    for trial in 0..design.n_trials {
        trial_events.clear();
        if rng.random::<f64>() < design.p1 {
            let channel = if rng.random::<bool>() { Channel::F1A } else { Channel::F1B };
            trial_events.push(DetectionEvent { trial, t_ns: herald_t, channel });
            let u = rng.random::<f64>();
            if u < pc_total {
                let bin = cdf.partition_point(|&c| c <= u).min(probs.len() - 1);
                let channel = if rng.random::<bool>() { Channel::F2A } else { Channel::F2B };
                trial_events.push(DetectionEvent {
                    trial,
                    t_ns: design.read_start_ns + bin as i64,
                    channel,
                });
            }
        }
        if let Some(dist) = &background {
            for channel in [Channel::F1A, Channel::F1B, Channel::F2A, Channel::F2B] {
                let k = dist.sample(&mut rng) as u64;
                for _ in 0..k {
                    let t = rng.random_range(design.trial_window.start_ns..design.trial_window.end_ns);
                    trial_events.push(DetectionEvent { trial, t_ns: t, channel });
                }
            }
        }
        trial_events.sort_unstable();
        trial_events.dedup();
        events.extend_from_slice(&trial_events);
    }
    Ok(SyntheticLog {
        events,
        bin_probabilities: probs,
        pc_total,
        design: *design,
    })
}

impl SyntheticLog {
    pub fn store(&self) -> EventStore {
        EventStore::from_events(self.events.clone(), Some(self.design.n_trials), self.design.trial_window)
            .expect("generator output is consistent")
            .0
    }
}
