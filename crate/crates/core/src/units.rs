//! Physical parameters and unit conventions shared by every module.
//!
//! Internally all angular frequencies are in rad/µs and all times in µs, which keeps
//! the exponents that appear in the wavepacket formula of order one. User-facing values
//! are ordinary frequencies in MHz, times in ns and intensities in mW/cm².

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Natural linewidth Γ/2π of the cesium D2 line, in MHz.
pub const DEFAULT_GAMMA_NAT_MHZ: f64 = 5.2;

/// Delay between the heralding detection and the start of the read pulse, in ns.
pub const DEFAULT_TAU_NS: f64 = 50.0;

/// Converts an ordinary frequency in MHz to an angular frequency in rad/µs.
pub fn to_angular(f_mhz: f64) -> f64 {
    2.0 * PI * f_mhz
}

/// Converts an angular frequency in rad/µs back to MHz.
pub fn to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

pub fn ns_to_us(t_ns: f64) -> f64 {
    t_ns * 1e-3
}

pub fn us_to_ns(t_us: f64) -> f64 {
    t_us * 1e3
}

/// A frequency tagged with its unit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FrequencyValue {
    /// Ordinary frequency in MHz.
    Mhz(f64),
    /// Angular frequency in rad/µs.
    RadPerUs(f64),
}

impl FrequencyValue {
    pub fn angular(self) -> f64 {
        match self {
            FrequencyValue::Mhz(f) => to_angular(f),
            FrequencyValue::RadPerUs(w) => w,
        }
    }

    pub fn mhz(self) -> f64 {
        match self {
            FrequencyValue::Mhz(f) => f,
            FrequencyValue::RadPerUs(w) => to_mhz(w),
        }
    }
}

/// One violated parameter invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub reason: String,
}

/// Parameter validation failure listing every offending field.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub struct ParamError {
    pub violations: Vec<Violation>,
}

impl ParamError {
    fn single(field: &'static str, reason: impl Into<String>) -> Self {
        ParamError {
            violations: vec![Violation {
                field,
                reason: reason.into(),
            }],
        }
    }

    /// Names of the rejected fields, in declaration order.
    pub fn fields(&self) -> Vec<&'static str> {
        self.violations.iter().map(|v| v.field).collect()
    }
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid parameters: ")?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{}: {}", v.field, v.reason)?;
        }
        Ok(())
    }
}

/// Every symbol entering the wavepacket formula, in internal units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutParams {
    /// Rabi frequency Ω of the read field, rad/µs.
    pub omega: f64,
    /// Read detuning Δ, rad/µs (signed).
    pub delta: f64,
    /// Natural linewidth Γ, rad/µs.
    pub gamma_nat: f64,
    /// Cooperativity χ.
    pub chi: f64,
    /// Gaussian dephasing rate γ, rad/µs.
    pub gamma_deph: f64,
    /// Write-to-read delay τ, µs.
    pub tau: f64,
    /// Overall detection scale F.
    pub scale_f: f64,
}

impl ReadoutParams {
    /// Checks every invariant and returns the parameters unchanged when they hold.
    pub fn validate(self) -> Result<Self, ParamError> {
        let mut violations = Vec::new();
        let mut check = |field: &'static str, value: f64, ok: bool, reason: &str| {
            if !value.is_finite() {
                violations.push(Violation {
                    field,
                    reason: format!("must be finite, got {value}"),
                });
            } else if !ok {
                violations.push(Violation {
                    field,
                    reason: format!("{reason}, got {value}"),
                });
            }
        };
        check("omega", self.omega, self.omega >= 0.0, "must be >= 0");
        check("delta", self.delta, true, "");
        check("gamma_nat", self.gamma_nat, self.gamma_nat > 0.0, "must be > 0");
        check("chi", self.chi, self.chi >= 1.0, "must be >= 1");
        check("gamma_deph", self.gamma_deph, self.gamma_deph >= 0.0, "must be >= 0");
        check("tau", self.tau, self.tau >= 0.0, "must be >= 0");
        check("scale_f", self.scale_f, self.scale_f >= 0.0, "must be >= 0");
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(ParamError { violations })
        }
    }

    /// Superradiant decay rate χΓ.
    pub fn chi_gamma(&self) -> f64 {
        self.chi * self.gamma_nat
    }

    pub fn with_omega(self, omega: f64) -> Self {
        ReadoutParams { omega, ..self }
    }

    pub fn with_delta(self, delta: f64) -> Self {
        ReadoutParams { delta, ..self }
    }

    pub fn with_scale(self, scale_f: f64) -> Self {
        ReadoutParams { scale_f, ..self }
    }
}

/// Relation between read intensity and Rabi frequency, (Ω/Γ)² = I_r / (2 I_s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensityModel {
    /// Saturation intensity I_s, mW/cm².
    pub i_sat: f64,
    /// Natural linewidth Γ, rad/µs.
    pub gamma_nat: f64,
}

impl IntensityModel {
    pub fn new(i_sat: f64, gamma_nat: f64) -> Result<Self, ParamError> {
        if !(i_sat.is_finite() && i_sat > 0.0) {
            return Err(ParamError::single("i_sat", format!("must be > 0, got {i_sat}")));
        }
        if !(gamma_nat.is_finite() && gamma_nat > 0.0) {
            return Err(ParamError::single(
                "gamma_nat",
                format!("must be > 0, got {gamma_nat}"),
            ));
        }
        Ok(IntensityModel { i_sat, gamma_nat })
    }

    /// Rabi frequency in rad/µs for a read intensity in mW/cm².
    pub fn rabi_from_intensity(&self, i_r: f64) -> Result<f64, ParamError> {
        if !(i_r.is_finite() && i_r >= 0.0) {
            return Err(ParamError::single("i_r", format!("must be >= 0, got {i_r}")));
        }
        Ok(self.gamma_nat * (i_r / (2.0 * self.i_sat)).sqrt())
    }

    /// Inverse of [`rabi_from_intensity`](Self::rabi_from_intensity).
    pub fn intensity_from_rabi(&self, omega: f64) -> f64 {
        2.0 * self.i_sat * (omega / self.gamma_nat).powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ReadoutParams {
        ReadoutParams {
            omega: 60.0,
            delta: to_angular(1.7),
            gamma_nat: to_angular(DEFAULT_GAMMA_NAT_MHZ),
            chi: 2.7,
            gamma_deph: to_angular(1.55),
            tau: ns_to_us(DEFAULT_TAU_NS),
            scale_f: 4.1,
        }
    }

    #[test]
    fn rabi_equals_gamma_at_twice_saturation() {
        let gamma = to_angular(5.2);
        let model = IntensityModel::new(12.0, gamma).unwrap();
        let omega = model.rabi_from_intensity(24.0).unwrap();
        assert!((omega - gamma).abs() <= 1e-15 * gamma);
        let unit = IntensityModel::new(7.3, 1.0).unwrap();
        assert_eq!(unit.rabi_from_intensity(14.6).unwrap(), 1.0);
        assert_eq!(model.rabi_from_intensity(0.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_intensity_is_a_domain_error() {
        let model = IntensityModel::new(12.0, 30.0).unwrap();
        let err = model.rabi_from_intensity(-1.0).unwrap_err();
        assert_eq!(err.fields(), vec!["i_r"]);
        assert!(IntensityModel::new(0.0, 30.0).is_err());
    }

    #[test]
    fn angular_conversion_examples() {
        assert_eq!(to_angular(0.0), 0.0);
        assert!((to_angular(1.7) - 10.681415).abs() < 1e-6);
        assert_eq!(to_angular(25.7), 2.0 * PI * 25.7);
        assert_eq!(FrequencyValue::Mhz(1.0).angular(), 2.0 * PI);
        assert_eq!(FrequencyValue::RadPerUs(2.0 * PI).mhz(), 1.0);
    }

    #[test]
    fn validation_accepts_and_names_fields() {
        let p = sample();
        assert_eq!(p.validate().unwrap(), p);

        let bad_chi = ReadoutParams { chi: 0.5, ..p };
        assert_eq!(bad_chi.validate().unwrap_err().fields(), vec!["chi"]);

        let bad_gamma = ReadoutParams { gamma_nat: 0.0, ..p };
        assert_eq!(bad_gamma.validate().unwrap_err().fields(), vec!["gamma_nat"]);

        let several = ReadoutParams {
            omega: -1.0,
            tau: f64::NAN,
            scale_f: -2.0,
            ..p
        };
        let err = several.validate().unwrap_err();
        assert_eq!(err.fields(), vec!["omega", "tau", "scale_f"]);
        assert!(err.to_string().contains("scale_f"));
    }

    #[test]
    fn negative_detuning_is_allowed() {
        let p = sample().with_delta(-40.0);
        assert!(p.validate().is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn angular_round_trip(f in -1e4f64..1e4) {
                let back = to_mhz(to_angular(f));
                prop_assert!((back - f).abs() <= 1e-14 * f.abs().max(f64::MIN_POSITIVE));
            }

            #[test]
            fn doubling_intensity_doubles_rabi_squared(i_r in 1e-6f64..1e4, i_s in 0.1f64..100.0) {
                let model = IntensityModel::new(i_s, 32.67).unwrap();
                let a = model.rabi_from_intensity(i_r).unwrap();
                let b = model.rabi_from_intensity(2.0 * i_r).unwrap();
                prop_assert!(((a * a) / (b * b) - 0.5).abs() <= 1e-14);
            }
        }
    }
}
