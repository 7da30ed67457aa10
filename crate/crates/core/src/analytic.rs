//! Closed-form readout wavepacket, its time integral and parameter sweeps.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::quadrature::{self, QuadratureError, Tolerance};
use crate::units::{to_angular, us_to_ns, IntensityModel, ParamError, ReadoutParams};

/// Largest |zt/2| for which sinh(zt/2)/z is taken from its Taylor series.
const SERIES_RADIUS: f64 = 1e-2;

/// Intervals allowed per doubling segment in [`integrate_pc`].
const SEGMENT_BUDGET: usize = 2000;

/// Doubling segments tried before an infinite horizon is declared divergent.
const MAX_SEGMENTS: usize = 80;

#[derive(Debug, thiserror::Error)]
pub enum AnalyticError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("relative tolerance must lie in (0, 1e-2], got {0}")]
    Tolerance(f64),
    #[error("invalid horizon {0} us")]
    Horizon(f64),
    #[error("P_c integral did not converge: estimate {estimate:e}, error {abs_error:e}")]
    NotConverged { estimate: f64, abs_error: f64 },
    #[error("integrand not finite at t = {0} us")]
    NonFinite(f64),
}

impl From<QuadratureError> for AnalyticError {
    fn from(e: QuadratureError) -> Self {
        match e {
            QuadratureError::NotConverged { estimate, abs_error } => {
                AnalyticError::NotConverged { estimate, abs_error }
            }
            QuadratureError::NonFinite { at } => AnalyticError::NonFinite(at),
            QuadratureError::InvalidInterval { a, b } => {
                AnalyticError::Grid(format!("invalid interval [{a}, {b}]"))
            }
        }
    }
}

/// Exponents α± of the driven, damped readout dynamics, rad/µs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaPair {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
}

/// Computes α± from Ω, Δ and χΓ.
///
/// With T = (Ω² + Δ²)/2 − (χΓ)²/8 and P = |Δ|χΓ/2 the pair satisfies α₋² − α₊² = 2T and
/// α₊α₋ = P. The larger root is taken from hypot(T, P) ± T without cancellation and the
/// smaller one from the product.
pub fn alpha_pair(omega: f64, delta: f64, chi_gamma: f64) -> AlphaPair {
    let t = 0.5 * (omega * omega + delta * delta) - 0.125 * chi_gamma * chi_gamma;
    let p = 0.5 * delta.abs() * chi_gamma;
    let s = t.hypot(p);
    if t >= 0.0 {
        let alpha_minus = (s + t).sqrt();
        let alpha_plus = if alpha_minus > 0.0 { p / alpha_minus } else { 0.0 };
        AlphaPair {
            alpha_plus,
            alpha_minus,
        }
    } else {
        let alpha_plus = (s - t).sqrt();
        let alpha_minus = if alpha_plus > 0.0 { p / alpha_plus } else { 0.0 };
        AlphaPair {
            alpha_plus,
            alpha_minus,
        }
    }
}

impl AlphaPair {
    pub fn of(params: &ReadoutParams) -> Self {
        alpha_pair(params.omega, params.delta, params.chi_gamma())
    }

    /// z = α₊ + iα₋.
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.alpha_plus, self.alpha_minus)
    }
}

/// e^{−χΓt/4}·sinh(zt/2)/z, computed without overflow.
fn damped_sinh_over_z(t: f64, z: Complex64, chi_gamma: f64) -> Complex64 {
    let quarter = 0.25 * chi_gamma;
    let w = z * (0.5 * t);
    if w.norm() < SERIES_RADIUS {
        let w2 = w * w;
        let series = 1.0 + w2 * (1.0 / 6.0 + w2 * (1.0 / 120.0 + w2 / 5040.0));
        return series * (0.5 * t * (-quarter * t).exp());
    }
    let grow = w - quarter * t;
    let shrink = -w - quarter * t;
    // Real parts are ≤ 0 whenever α₊ ≤ χΓ/2; the clamp only guards rounding.
    let e1 = Complex64::from_polar(grow.re.min(0.0).exp(), grow.im);
    let e2 = Complex64::from_polar(shrink.re.min(0.0).exp(), shrink.im);
    (e1 - e2) * 0.5 / z
}

/// Read-photon amplitude B(t) at t ≥ 0 µs, without the constant global phase.
pub fn amplitude_b(t: f64, params: &ReadoutParams) -> Complex64 {
    if params.omega == 0.0 || t <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let alpha = AlphaPair::of(params);
    let core = damped_sinh_over_z(t, alpha.z(), params.chi_gamma());
    let carrier = Complex64::from_polar(1.0, -0.5 * params.delta * t);
    Complex64::new(0.0, params.omega) * carrier * core
}

/// B(t) including a global phase factor e^{−iφ}, φ = (ω_s − ω_g)τ.
pub fn amplitude_b_with_phase(t: f64, params: &ReadoutParams, phase: f64) -> Complex64 {
    amplitude_b(t, params) * Complex64::from_polar(1.0, -phase)
}

/// F·e^{−γ²(t+τ)²}·|B(t)|², a probability density per µs.
pub fn pc_density(t: f64, params: &ReadoutParams) -> f64 {
    let b = amplitude_b(t, params).norm_sqr();
    if b == 0.0 {
        return 0.0;
    }
    let s = params.gamma_deph * (t + params.tau);
    params.scale_f * (-s * s).exp() * b
}

/// Conditional detection probability in a 1 ns bin at time t (µs).
pub fn pc_at(t: f64, params: &ReadoutParams) -> f64 {
    pc_density(t, params) * 1e-3
}

/// p_c sampled on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavepacketCurve {
    /// Grid times, ns.
    pub times_ns: Vec<f64>,
    /// p_c per ns at each grid time.
    pub values: Vec<f64>,
    pub params: ReadoutParams,
}

impl WavepacketCurve {
    pub fn spacing_ns(&self) -> f64 {
        if self.times_ns.len() < 2 {
            0.0
        } else {
            self.times_ns[1] - self.times_ns[0]
        }
    }

    /// Trapezoidal integral of the sampled curve (dimensionless).
    pub fn trapezoid(&self) -> f64 {
        self.times_ns
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum()
    }

    /// Index and value of the largest sample.
    pub fn peak(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t_ns,pc_per_ns")?;
        for (t, v) in self.times_ns.iter().zip(&self.values) {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }
}

/// Samples p_c on `n_points` uniformly spaced times in [t_start, t_end] µs.
pub fn pc_curve(
    params: &ReadoutParams,
    t_start: f64,
    t_end: f64,
    n_points: usize,
) -> Result<WavepacketCurve, AnalyticError> {
    let params = params.validate()?;
    if !(t_start.is_finite() && t_end.is_finite()) || t_start < 0.0 || t_end <= t_start {
        return Err(AnalyticError::Grid(format!(
            "need 0 <= t_start < t_end, got [{t_start}, {t_end}]"
        )));
    }
    if n_points < 2 {
        return Err(AnalyticError::Grid(format!("need at least 2 points, got {n_points}")));
    }
    let step = (t_end - t_start) / (n_points - 1) as f64;
    let mut times_ns = Vec::with_capacity(n_points);
    let mut values = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let t = if i == n_points - 1 { t_end } else { t_start + i as f64 * step };
        times_ns.push(us_to_ns(t));
        values.push(pc_at(t, &params));
    }
    Ok(WavepacketCurve {
        times_ns,
        values,
        params,
    })
}

/// Upper integration limit for P_c.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Horizon {
    /// Integrate over [0, t] µs.
    Finite(f64),
    /// Integrate until the analytic tail bound is negligible.
    Infinite,
}

/// The detection window of the experiment, 160 ns.
pub const WINDOW_160NS: Horizon = Horizon::Finite(0.16);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcIntegral {
    pub value: f64,
    pub abs_error: f64,
    /// Upper limit actually integrated to, µs.
    pub upper_limit: f64,
}

/// Bound on ∫_T^∞ p_c dt (dimensionless) from |B|² ≤ (Ω/|z|)² e^{−(χΓ/2−α₊)t}.
fn tail_bound(params: &ReadoutParams, alpha: &AlphaPair, t: f64) -> f64 {
    let kappa = 0.5 * params.chi_gamma();
    let g2 = params.gamma_deph * params.gamma_deph;
    let s = t + params.tau;
    let gauss = (-g2 * s * s).exp();
    let slope_g = 2.0 * g2 * s;
    let omega2 = params.omega * params.omega;
    let zabs = alpha.z().norm();

    let mut bound = f64::INFINITY;
    let decay = kappa - alpha.alpha_plus;
    if zabs > 0.0 && (decay > 0.0 || slope_g > 0.0) {
        let rate = decay.max(0.0);
        bound = omega2 / (zabs * zabs) * (-rate * t).exp() / (rate + slope_g);
    }
    // |sinh(w)/z| ≤ (t/2)e^{|w|}, useful when |z| is small.
    let b = kappa - zabs;
    if b > 0.0 {
        let poly = t * t / b + 2.0 * t / (b * b) + 2.0 / (b * b * b);
        bound = bound.min(0.25 * omega2 * (-b * t).exp() * poly);
    }
    params.scale_f * gauss * bound
}

/// P_c = ∫ p_c dt over the horizon, with estimated relative error ≤ `rel_tol`.
///
/// The range is covered by doubling segments starting at min(2/χΓ, 1/γ); for an
/// infinite horizon integration stops once the tail bound falls below rel_tol times
/// the running estimate.
pub fn integrate_pc(
    params: &ReadoutParams,
    horizon: Horizon,
    rel_tol: f64,
) -> Result<PcIntegral, AnalyticError> {
    let params = params.validate()?;
    if !(rel_tol > 0.0 && rel_tol <= 1e-2) {
        return Err(AnalyticError::Tolerance(rel_tol));
    }
    let limit = match horizon {
        Horizon::Finite(h) if h.is_finite() && h > 0.0 => Some(h),
        Horizon::Finite(h) => return Err(AnalyticError::Horizon(h)),
        Horizon::Infinite => None,
    };
    if params.omega == 0.0 || params.scale_f == 0.0 {
        return Ok(PcIntegral {
            value: 0.0,
            abs_error: 0.0,
            upper_limit: limit.unwrap_or(0.0),
        });
    }

    let alpha = AlphaPair::of(&params);
    let mut first = 2.0 / params.chi_gamma();
    if params.gamma_deph > 0.0 {
        first = first.min(1.0 / params.gamma_deph);
    }
    let inner_tol = 0.1 * rel_tol;
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut lo = 0.0;
    let mut width = first;

    for _ in 0..MAX_SEGMENTS {
        let mut hi = lo + width;
        if let Some(h) = limit {
            hi = hi.min(h);
        }
        let tol = Tolerance {
            abs: inner_tol * total,
            rel: inner_tol,
        };
        let seg = quadrature::integrate(|t| pc_density(t, &params), lo, hi, tol, SEGMENT_BUDGET)
            .map_err(|e| match e {
                QuadratureError::NotConverged { estimate, abs_error } => AnalyticError::NotConverged {
                    estimate: total + estimate,
                    abs_error: total_err + abs_error,
                },
                other => other.into(),
            })?;
        total += seg.value;
        total_err += seg.abs_error;
        lo = hi;
        width *= 2.0;

        let done = match limit {
            Some(h) => lo >= h,
            None => total > 0.0 && tail_bound(&params, &alpha, lo) < rel_tol * total,
        };
        if done {
            if total_err > rel_tol * total {
                return Err(AnalyticError::NotConverged {
                    estimate: total,
                    abs_error: total_err,
                });
            }
            return Ok(PcIntegral {
                value: total,
                abs_error: total_err,
                upper_limit: lo,
            });
        }
    }
    Err(AnalyticError::NotConverged {
        estimate: total,
        abs_error: total_err + tail_bound(&params, &alpha, lo),
    })
}

/// Horizon and tolerance used for every point of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationSettings {
    pub horizon: Horizon,
    pub rel_tol: f64,
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        IntegrationSettings {
            horizon: WINDOW_160NS,
            rel_tol: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepKind {
    /// Abscissa is the read intensity, mW/cm².
    Intensity,
    /// Abscissa is the read detuning Δ/2π, MHz.
    Detuning,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub kind: SweepKind,
    pub abscissa: Vec<f64>,
    pub ordinate: Vec<f64>,
    /// Parameters held fixed during the sweep; the swept field keeps its base value.
    pub base: ReadoutParams,
    pub settings: IntegrationSettings,
}

impl SweepCurve {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        match self.kind {
            SweepKind::Intensity => writeln!(out, "I_mW_cm2,Pc")?,
            SweepKind::Detuning => writeln!(out, "Delta_MHz,Pc")?,
        }
        for (x, y) in self.abscissa.iter().zip(&self.ordinate) {
            writeln!(out, "{x},{y}")?;
        }
        Ok(())
    }
}

/// P_c versus read intensity (mW/cm²) at the base detuning.
pub fn saturation_curve(
    base: &ReadoutParams,
    model: &IntensityModel,
    i_r_list: &[f64],
    settings: IntegrationSettings,
) -> Result<SweepCurve, AnalyticError> {
    let mut ordinate = Vec::with_capacity(i_r_list.len());
    for &i_r in i_r_list {
        let omega = model.rabi_from_intensity(i_r)?;
        let pc = integrate_pc(&base.with_omega(omega), settings.horizon, settings.rel_tol)?;
        ordinate.push(pc.value);
    }
    Ok(SweepCurve {
        kind: SweepKind::Intensity,
        abscissa: i_r_list.to_vec(),
        ordinate,
        base: *base,
        settings,
    })
}

/// P_c versus read detuning Δ/2π (MHz) at fixed intensity.
pub fn detuning_spectrum(
    base: &ReadoutParams,
    model: &IntensityModel,
    i_r: f64,
    delta_mhz_list: &[f64],
    settings: IntegrationSettings,
) -> Result<SweepCurve, AnalyticError> {
    let omega = model.rabi_from_intensity(i_r)?;
    let fixed = base.with_omega(omega);
    let mut ordinate = Vec::with_capacity(delta_mhz_list.len());
    for &d in delta_mhz_list {
        let pc = integrate_pc(&fixed.with_delta(to_angular(d)), settings.horizon, settings.rel_tol)?;
        ordinate.push(pc.value);
    }
    Ok(SweepCurve {
        kind: SweepKind::Detuning,
        abscissa: delta_mhz_list.to_vec(),
        ordinate,
        base: fixed,
        settings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{ns_to_us, DEFAULT_GAMMA_NAT_MHZ, DEFAULT_TAU_NS};

    fn reference(delta_mhz: f64, i_r: f64) -> ReadoutParams {
        let gamma = to_angular(DEFAULT_GAMMA_NAT_MHZ);
        let model = IntensityModel::new(12.0, gamma).unwrap();
        ReadoutParams {
            omega: model.rabi_from_intensity(i_r).unwrap(),
            delta: to_angular(delta_mhz),
            gamma_nat: gamma,
            chi: 2.7,
            gamma_deph: to_angular(1.55),
            tau: ns_to_us(DEFAULT_TAU_NS),
            scale_f: 4.1,
        }
    }

    #[test]
    fn alpha_at_zero_rabi_frequency() {
        let a = alpha_pair(0.0, -3.0, 8.0);
        assert!((a.alpha_plus - 4.0).abs() < 1e-15);
        assert!((a.alpha_minus - 3.0).abs() < 1e-15);
        let b = alpha_pair(0.0, 0.0, 8.0);
        assert_eq!(b.alpha_minus, 0.0);
        assert!((b.alpha_plus - 4.0).abs() < 1e-15);
    }

    #[test]
    fn alpha_on_resonance() {
        let a = alpha_pair(2.0, 0.0, 2.0);
        assert_eq!(a.alpha_plus, 0.0);
        assert!((a.alpha_minus - 3f64.sqrt()).abs() < 1e-15);
        let over = alpha_pair(0.5, 0.0, 2.0);
        assert_eq!(over.alpha_minus, 0.0);
        assert!((over.alpha_plus - (1.0f64 - 0.25).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_point_uses_series() {
        // Ω = χΓ/2, Δ = 0: z = 0.
        let p = ReadoutParams {
            omega: 1.0,
            delta: 0.0,
            gamma_nat: 2.0,
            chi: 1.0,
            gamma_deph: 0.0,
            tau: 0.0,
            scale_f: 1.0,
        };
        let a = AlphaPair::of(&p);
        assert_eq!((a.alpha_plus, a.alpha_minus), (0.0, 0.0));
        let t = 0.7;
        let b = amplitude_b(t, &p);
        let expected = p.omega * 0.5 * t * (-0.5 * t).exp();
        assert!((b.im - expected).abs() < 1e-15);
        assert!(b.re.abs() < 1e-15);
    }

    #[test]
    fn series_and_exponential_branches_agree() {
        let p = reference(1.7, 95.0);
        let z = AlphaPair::of(&p).z();
        let t = 2.0 * SERIES_RADIUS / z.norm();
        let inside = damped_sinh_over_z(t * 0.999_999, z, p.chi_gamma());
        let outside = damped_sinh_over_z(t * 1.000_001, z, p.chi_gamma());
        assert!((inside - outside).norm() / inside.norm() < 1e-5);
    }

    #[test]
    fn amplitude_trivial_cases() {
        let p = reference(1.7, 95.0);
        assert_eq!(amplitude_b(0.0, &p), Complex64::new(0.0, 0.0));
        let dark = p.with_omega(0.0);
        for t in [0.0, 0.01, 1.0] {
            assert_eq!(amplitude_b(t, &dark).norm(), 0.0);
        }
    }

    #[test]
    fn no_overflow_at_long_times() {
        let detuned = reference(25.7, 160.0);
        let t = 200.0 / detuned.chi_gamma();
        let b = amplitude_b(t, &detuned);
        assert!(b.re.is_finite() && b.im.is_finite());
        let p = reference(1.7, 95.0);
        let b = amplitude_b(t, &p);
        let peak = amplitude_b(0.02, &p).norm();
        assert!(b.norm() < 1e-6 * peak, "{} vs {}", b.norm(), peak);
        let far = amplitude_b(1e6, &p);
        assert_eq!(far.norm(), 0.0);
    }

    #[test]
    fn global_phase_cancels() {
        let p = reference(1.7, 68.0);
        for k in 1..50 {
            let t = k as f64 * 0.003;
            let a = amplitude_b(t, &p).norm_sqr();
            let b = amplitude_b_with_phase(t, &p, 1.234).norm_sqr();
            assert!((a - b).abs() <= 1e-15 * a);
        }
    }

    #[test]
    fn pc_without_dephasing_is_scaled_amplitude() {
        let p = ReadoutParams {
            gamma_deph: 0.0,
            ..reference(1.7, 95.0)
        };
        let t = 0.02;
        assert_eq!(pc_density(t, &p), p.scale_f * amplitude_b(t, &p).norm_sqr());
        assert_eq!(pc_at(0.0, &p), 0.0);
    }

    #[test]
    fn curve_grid_and_validation() {
        let p = reference(1.7, 95.0);
        let c = pc_curve(&p, 0.0, 0.16, 161).unwrap();
        assert_eq!(c.times_ns.len(), 161);
        assert_eq!(c.values[0], 0.0);
        assert!((c.spacing_ns() - 1.0).abs() < 1e-12);
        assert_eq!(c.times_ns[160], 160.0);
        assert!(c.values.iter().all(|v| *v >= 0.0));

        let dark = pc_curve(&p.with_omega(0.0), 0.0, 0.16, 2).unwrap();
        assert_eq!(dark.values, vec![0.0, 0.0]);

        assert!(matches!(pc_curve(&p, 0.0, 0.16, 1), Err(AnalyticError::Grid(_))));
        assert!(matches!(pc_curve(&p, 0.1, 0.1, 5), Err(AnalyticError::Grid(_))));
        let bad = ReadoutParams { chi: 0.2, ..p };
        assert!(matches!(pc_curve(&bad, 0.0, 0.1, 5), Err(AnalyticError::Param(_))));
    }

    #[test]
    fn csv_headers() {
        let p = reference(1.7, 95.0);
        let c = pc_curve(&p, 0.0, 0.002, 3).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t_ns,pc_per_ns\n0,0\n1,"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn integral_trivia_and_errors() {
        let p = reference(1.7, 95.0);
        assert_eq!(integrate_pc(&p.with_omega(0.0), WINDOW_160NS, 1e-8).unwrap().value, 0.0);
        assert!(matches!(integrate_pc(&p, WINDOW_160NS, 0.0), Err(AnalyticError::Tolerance(_))));
        assert!(matches!(integrate_pc(&p, WINDOW_160NS, 0.1), Err(AnalyticError::Tolerance(_))));
        assert!(matches!(integrate_pc(&p, Horizon::Finite(-1.0), 1e-6), Err(AnalyticError::Horizon(_))));
    }

    #[test]
    fn integral_is_linear_in_scale() {
        let p = reference(1.7, 95.0);
        let a = integrate_pc(&p, WINDOW_160NS, 1e-10).unwrap().value;
        let b = integrate_pc(&p.with_scale(2.0 * p.scale_f), WINDOW_160NS, 1e-10).unwrap().value;
        assert!((b / a - 2.0).abs() < 1e-12);
    }

    #[test]
    fn paper_magnitudes() {
        // Reference values from an independent dense-grid evaluation.
        let pc = integrate_pc(&reference(1.7, 95.0), WINDOW_160NS, 1e-10).unwrap().value;
        assert!((pc - 0.02067).abs() < 5e-5, "{pc}");
        let far = integrate_pc(&reference(25.7, 95.0), WINDOW_160NS, 1e-10).unwrap().value;
        assert!((far - 0.00612).abs() < 5e-5, "{far}");
    }

    #[test]
    fn infinite_horizon_exceeds_window_slightly() {
        let p = reference(1.7, 95.0);
        let finite = integrate_pc(&p, WINDOW_160NS, 1e-10).unwrap();
        let inf = integrate_pc(&p, Horizon::Infinite, 1e-10).unwrap();
        assert!(inf.value >= finite.value);
        assert!((inf.value - finite.value) / finite.value < 1e-3);
        assert!(inf.upper_limit > 0.0);

        // Without dephasing the tail is purely exponential.
        let slow = ReadoutParams { gamma_deph: 0.0, ..reference(25.7, 24.0) };
        let v = integrate_pc(&slow, Horizon::Infinite, 1e-9).unwrap();
        assert!(v.value.is_finite() && v.value > 0.0);
    }

    #[test]
    fn sweeps() {
        let gamma = to_angular(DEFAULT_GAMMA_NAT_MHZ);
        let model = IntensityModel::new(12.0, gamma).unwrap();
        let base = reference(1.7, 0.0);
        let s = saturation_curve(&base, &model, &[0.0], IntegrationSettings::default()).unwrap();
        assert_eq!(s.ordinate, vec![0.0]);

        let spec = detuning_spectrum(&base, &model, 0.0, &[-5.0, 0.0, 5.0], IntegrationSettings::default()).unwrap();
        assert_eq!(spec.ordinate, vec![0.0; 3]);

        let err = saturation_curve(&base, &model, &[10.0, -1.0], IntegrationSettings::default()).unwrap_err();
        assert!(matches!(err, AnalyticError::Param(_)));

        let mut buf = Vec::new();
        spec.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("Delta_MHz,Pc\n-5,0\n"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn alpha_identities(omega in 0.0f64..400.0, delta in -700.0f64..700.0, chi_gamma in 1e-3f64..200.0) {
                let a = alpha_pair(omega, delta, chi_gamma);
                prop_assert!(a.alpha_plus >= 0.0 && a.alpha_minus >= 0.0);
                let prod = delta.abs() * chi_gamma / 2.0;
                let diff = omega * omega + delta * delta - chi_gamma * chi_gamma / 4.0;
                let scale = omega * omega + delta * delta + chi_gamma * chi_gamma / 4.0;
                prop_assert!((a.alpha_plus * a.alpha_minus - prod).abs() <= 1e-12 * scale);
                prop_assert!((a.alpha_minus.powi(2) - a.alpha_plus.powi(2) - diff).abs() <= 1e-12 * scale);
                if omega > 0.0 {
                    prop_assert!(a.alpha_plus < chi_gamma / 2.0);
                }
            }

            #[test]
            fn detuning_sign_does_not_change_density(
                omega in 0.0f64..300.0, delta in 0.0f64..400.0, chi in 1.0f64..5.0, t in 0.0f64..0.5
            ) {
                let p = ReadoutParams {
                    omega, delta, gamma_nat: 32.67, chi, gamma_deph: 9.7, tau: 0.05, scale_f: 4.1,
                };
                let a = pc_density(t, &p);
                let b = pc_density(t, &p.with_delta(-delta));
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
                prop_assert!(a >= 0.0 && a.is_finite());
            }
        }
    }
}
