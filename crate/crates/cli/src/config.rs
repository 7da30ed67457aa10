//! Scenario configuration: JSON, schema version 1, unit-suffixed keys, unknown keys rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use readout_core::analytic::{Horizon, IntegrationSettings};
use readout_core::fit::{Bound, DatasetKind, ParamId, PhysicalParams};
use readout_core::stats::DEFAULT_TRIAL_WINDOW_NS;
use readout_core::units::{ns_to_us, DEFAULT_GAMMA_NAT_MHZ, DEFAULT_TAU_NS};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Output directory, relative to the working directory.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub wavepacket: WavepacketConfig,
    #[serde(default)]
    pub sweep_intensity: IntensitySweepConfig,
    #[serde(default)]
    pub sweep_detuning: DetuningSweepConfig,
    #[serde(default)]
    pub chi: ChiConfig,
    #[serde(default)]
    pub synth: SynthConfig,
    #[serde(default)]
    pub stats: StatsConfig,
    #[serde(default)]
    pub fit: Option<FitConfig>,
}

/// Model parameters in user units; the intensity model is I_s together with Γ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub gamma_nat_mhz: f64,
    pub i_sat_mw_cm2: f64,
    pub chi: f64,
    pub gamma_deph_mhz: f64,
    pub tau_ns: f64,
    pub scale_f: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig {
            gamma_nat_mhz: DEFAULT_GAMMA_NAT_MHZ,
            i_sat_mw_cm2: 12.0,
            chi: 2.7,
            gamma_deph_mhz: 1.55,
            tau_ns: DEFAULT_TAU_NS,
            scale_f: 4.1,
        }
    }
}

impl ParamsConfig {
    pub fn physical(&self) -> PhysicalParams {
        PhysicalParams {
            gamma_deph_mhz: self.gamma_deph_mhz,
            i_sat_mw_cm2: self.i_sat_mw_cm2,
            chi: self.chi,
            scale_f: self.scale_f,
            tau_ns: self.tau_ns,
            gamma_nat_mhz: self.gamma_nat_mhz,
        }
    }
}

/// One curve; exactly one of the intensity and the Rabi frequency is given.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadPoint {
    pub delta_mhz: f64,
    #[serde(default)]
    pub i_r_mw_cm2: Option<f64>,
    /// Ω/2π in MHz, bypassing the intensity model.
    #[serde(default)]
    pub omega_mhz: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WavepacketConfig {
    pub runs: Vec<ReadPoint>,
    pub t_start_ns: f64,
    pub t_end_ns: f64,
    pub spacing_ns: f64,
}

impl Default for WavepacketConfig {
    fn default() -> Self {
        let run = |delta_mhz, i_r| ReadPoint {
            delta_mhz,
            i_r_mw_cm2: Some(i_r),
            omega_mhz: None,
        };
        WavepacketConfig {
            runs: vec![
                run(1.7, 32.0),
                run(1.7, 68.0),
                run(1.7, 95.0),
                run(25.7, 52.0),
                run(25.7, 80.0),
                run(25.7, 160.0),
            ],
            t_start_ns: 0.0,
            t_end_ns: 160.0,
            spacing_ns: 1.0,
        }
    }
}

/// Integration window for P_c; `window_ns: null` integrates to infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrationConfig {
    pub window_ns: Option<f64>,
    pub rel_tol: f64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            window_ns: Some(160.0),
            rel_tol: 1e-9,
        }
    }
}

impl IntegrationConfig {
    pub fn settings(&self) -> IntegrationSettings {
        IntegrationSettings {
            horizon: self.window_ns.map_or(Horizon::Infinite, |w| Horizon::Finite(ns_to_us(w))),
            rel_tol: self.rel_tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntensitySweepConfig {
    pub delta_mhz: Vec<f64>,
    pub i_r_mw_cm2: Vec<f64>,
    pub integration: IntegrationConfig,
}

impl Default for IntensitySweepConfig {
    fn default() -> Self {
        IntensitySweepConfig {
            delta_mhz: vec![1.7, 25.7],
            i_r_mw_cm2: (1..=40).map(|i| 5.0 * i as f64).collect(),
            integration: IntegrationConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetuningSweepConfig {
    pub i_r_mw_cm2: Vec<f64>,
    pub delta_mhz: Vec<f64>,
    pub integration: IntegrationConfig,
}

impl Default for DetuningSweepConfig {
    fn default() -> Self {
        DetuningSweepConfig {
            i_r_mw_cm2: vec![24.0, 127.0],
            delta_mhz: (-40..=40).map(f64::from).collect(),
            integration: IntegrationConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChiConfig {
    pub n_atoms: f64,
    pub waist_m: f64,
    pub length_m: f64,
    pub k_per_m: f64,
    pub mc_samples: usize,
}

impl Default for ChiConfig {
    fn default() -> Self {
        ChiConfig {
            n_atoms: 2e6,
            waist_m: 1e-4,
            length_m: 1e-3,
            k_per_m: 1e7,
            mc_samples: 1_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub read: ReadPoint,
    pub n_trials: u64,
    pub p1: f64,
    pub read_start_ns: i64,
    pub read_duration_ns: i64,
    pub background_per_ns: f64,
    pub trial_window_ns: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            read: ReadPoint {
                delta_mhz: 1.7,
                i_r_mw_cm2: Some(95.0),
                omega_mhz: None,
            },
            n_trials: 1_000_000,
            p1: 0.0036,
            read_start_ns: 200,
            read_duration_ns: 160,
            background_per_ns: 0.0,
            trial_window_ns: DEFAULT_TRIAL_WINDOW_NS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatsConfig {
    /// Event log, relative to the config file (or the working directory without one).
    pub events_csv: Option<PathBuf>,
    /// Total trials; defaults to the largest trial id in the log plus one.
    pub n_trials: Option<u64>,
    pub trial_window_ns: i64,
    pub herald_window_ns: [i64; 2],
    pub read_window_ns: [i64; 2],
    pub pc_bin_ns: i64,
    pub g12_bin_ns: i64,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            events_csv: None,
            n_trials: None,
            trial_window_ns: DEFAULT_TRIAL_WINDOW_NS,
            herald_window_ns: [0, 200],
            read_window_ns: [200, 360],
            pc_bin_ns: 1,
            g12_bin_ns: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    pub kind: DatasetKind,
    /// CSV with header `x,y,sigma` and an optional `mask` column (0/1), relative to
    /// the config file. Mutually exclusive with inline arrays.
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub x: Option<Vec<f64>>,
    #[serde(default)]
    pub y: Option<Vec<f64>>,
    #[serde(default)]
    pub sigma: Option<Vec<f64>>,
    #[serde(default)]
    pub mask: Option<Vec<bool>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub lower: f64,
    #[serde(default)]
    pub upper: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub param: ParamId,
    pub grid: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub datasets: Vec<DatasetConfig>,
    #[serde(default = "default_free")]
    pub free: Vec<ParamId>,
    /// Starting values of free parameters; unspecified ones start from neutral defaults.
    #[serde(default)]
    pub init: BTreeMap<ParamId, f64>,
    #[serde(default)]
    pub bounds: BTreeMap<ParamId, BoundConfig>,
    #[serde(default = "default_true")]
    pub weighted: bool,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "fit_integration")]
    pub integration: IntegrationConfig,
    #[serde(default)]
    pub profile: Option<ProfileConfig>,
}

fn default_free() -> Vec<ParamId> {
    vec![ParamId::GammaDeph, ParamId::ISat, ParamId::Chi, ParamId::ScaleF]
}

fn default_true() -> bool {
    true
}

fn default_max_iter() -> usize {
    200
}

fn fit_integration() -> IntegrationConfig {
    IntegrationConfig {
        window_ns: Some(160.0),
        rel_tol: 1e-10,
    }
}

impl FitConfig {
    pub fn bounds(&self) -> Vec<(ParamId, Bound)> {
        self.bounds
            .iter()
            .map(|(id, b)| (*id, Bound { lower: b.lower, upper: b.upper }))
            .collect()
    }
}

/// Parses a config, reporting the JSON path of the offending field.
pub fn parse(text: &str) -> Result<ScenarioConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Validation(format!("config field `{path}`: {}", e.into_inner()))
    })?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(CliError::Validation(format!(
            "config field `schema_version`: unsupported version {} (expected {SCHEMA_VERSION})",
            cfg.schema_version
        )));
    }
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text)
}

/// Collects every violated constraint with its config path.
#[derive(Default)]
pub struct Checker {
    problems: Vec<String>,
}

impl Checker {
    pub fn require(&mut self, ok: bool, path: &str, message: impl std::fmt::Display) {
        if !ok {
            self.problems.push(format!("config field `{path}`: {message}"));
        }
    }

    pub fn finite(&mut self, value: f64, path: &str) {
        self.require(value.is_finite(), path, format!("must be finite, got {value}"));
    }

    pub fn finish(self) -> Result<(), CliError> {
        if self.problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(self.problems.join("\n")))
        }
    }
}

impl ParamsConfig {
    pub fn check(&self, c: &mut Checker) {
        let p = self;
        c.require(p.gamma_nat_mhz.is_finite() && p.gamma_nat_mhz > 0.0, "params.gamma_nat_mhz", format!("must be > 0, got {}", p.gamma_nat_mhz));
        c.require(p.i_sat_mw_cm2.is_finite() && p.i_sat_mw_cm2 > 0.0, "params.i_sat_mw_cm2", format!("must be > 0, got {}", p.i_sat_mw_cm2));
        c.require(p.chi.is_finite() && p.chi >= 1.0, "params.chi", format!("must be >= 1, got {}", p.chi));
        c.require(p.gamma_deph_mhz.is_finite() && p.gamma_deph_mhz >= 0.0, "params.gamma_deph_mhz", format!("must be >= 0, got {}", p.gamma_deph_mhz));
        c.require(p.tau_ns.is_finite() && p.tau_ns >= 0.0, "params.tau_ns", format!("must be >= 0, got {}", p.tau_ns));
        c.require(p.scale_f.is_finite() && p.scale_f >= 0.0, "params.scale_f", format!("must be >= 0, got {}", p.scale_f));
    }
}

impl ReadPoint {
    pub fn check(&self, c: &mut Checker, path: &str) {
        c.finite(self.delta_mhz, &format!("{path}.delta_mhz"));
        match (self.i_r_mw_cm2, self.omega_mhz) {
            (Some(i), None) => c.require(i.is_finite() && i >= 0.0, &format!("{path}.i_r_mw_cm2"), format!("must be >= 0, got {i}")),
            (None, Some(w)) => c.require(w.is_finite() && w >= 0.0, &format!("{path}.omega_mhz"), format!("must be >= 0, got {w}")),
            _ => c.require(false, path, "give exactly one of i_r_mw_cm2 and omega_mhz"),
        }
    }
}

impl IntegrationConfig {
    pub fn check(&self, c: &mut Checker, path: &str) {
        if let Some(w) = self.window_ns {
            c.require(w.is_finite() && w > 0.0, &format!("{path}.window_ns"), format!("must be > 0 or null, got {w}"));
        }
        c.require(
            self.rel_tol > 0.0 && self.rel_tol < 1.0,
            &format!("{path}.rel_tol"),
            format!("must lie in (0, 1), got {}", self.rel_tol),
        );
    }
}

pub fn check_grid(c: &mut Checker, grid: &[f64], path: &str, nonnegative: bool) {
    c.require(!grid.is_empty(), path, "grid is empty");
    for (i, v) in grid.iter().enumerate() {
        let ok = v.is_finite() && (!nonnegative || *v >= 0.0);
        c.require(ok, &format!("{path}[{i}]"), format!("invalid value {v}"));
    }
}
