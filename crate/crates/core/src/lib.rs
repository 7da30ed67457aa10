//! Readout of a stored collective excitation from a cold-atom ensemble: closed-form
//! wavepackets, a brute-force amplitude integrator, cooperativity estimates, photon
//! counting statistics and global least-squares fits.

pub mod analytic;
pub mod bessel;
pub mod fit;
pub mod oracle;
pub mod quadrature;
pub mod stats;
pub mod superradiance;
pub mod units;

pub use analytic::{
    alpha_pair, amplitude_b, detuning_spectrum, integrate_pc, pc_at, pc_curve, pc_density,
    saturation_curve, AlphaPair, AnalyticError, Horizon, IntegrationSettings, SweepCurve,
    SweepKind, WavepacketCurve, WINDOW_160NS,
};
pub use units::{FrequencyValue, IntensityModel, ParamError, ReadoutParams};
pub use oracle::{evolve, norm_decay_check, reconstruct_b, AmplitudeTrajectory, OracleError, StepControl};
pub use fit::{fit, profile, residuals, Dataset, DatasetKind, FitError, FitResult, FitSpec, ParamId, PhysicalParams};
pub use stats::{
    analyze, conditional_wavepacket, ingest, synthesize_log, BinnedWavepacket, Channel, CorrelationSummary,
    DetectionEvent, EventStore, StatsError, SynthDesign, TimeWindow,
};
pub use superradiance::{
    chi_closed_form, chi_monte_carlo, chi_quadrature, extraction_ceiling, ChiEstimate, EnsembleGeometry,
    SuperradianceError,
};
