//! Cooperativity χ of a cold Gaussian cloud from its geometry, and the branching
//! consequences of a given χ.
//!
//! The pair kernel is the normalized disk integral over transverse photon wavevectors
//! q (|q| ≤ k) with both longitudinal branches ±k_z,
//!
//! K(d) = (1/2πk²) ∬ d²q Re[e^{−ik d_z} e^{iq·d⊥} (e^{ik_z d_z} + e^{−ik_z d_z})],
//!
//! which reduces to 2cos(k d_z) ∫₀¹ s J0(k|d⊥|s) cos(k d_z √(1−s²)) ds. χ = 1 + N⟨K⟩ with
//! the average taken over atom pairs drawn from the cloud density.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bessel::j0;
use crate::quadrature::{self, GaussLegendre, QuadratureError, Tolerance};

/// Number of independent batches behind every Monte Carlo standard error.
pub const MC_BATCHES: usize = 30;

const MIN_SAMPLES: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum SuperradianceError {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("need at least {MIN_SAMPLES} samples, got {0}")]
    SampleCount(usize),
    #[error("chi must be >= 1, got {0}")]
    Chi(f64),
    #[error("kernel quadrature failed: {0}")]
    Quadrature(#[from] QuadratureError),
}

/// Gaussian cloud: transverse rms radius W, longitudinal rms length L (both m),
/// N atoms, photon wavenumber k (1/m).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleGeometry {
    pub n_atoms: f64,
    pub waist: f64,
    pub length: f64,
    pub k: f64,
}

/// Which approximations behind the closed form hold for a geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeFlags {
    /// kW ≥ 10.
    pub wide_beam: bool,
    /// kL ≥ 10.
    pub long_cloud: bool,
    /// L/(W²k) ≤ 0.1.
    pub short_compared_to_rayleigh: bool,
}

impl RegimeFlags {
    pub fn all(&self) -> bool {
        self.wide_beam && self.long_cloud && self.short_compared_to_rayleigh
    }
}

impl EnsembleGeometry {
    pub fn new(n_atoms: f64, waist: f64, length: f64, k: f64) -> Result<Self, SuperradianceError> {
        let checks = [
            ("n_atoms", n_atoms, n_atoms >= 0.0),
            ("waist", waist, waist > 0.0),
            ("length", length, length > 0.0),
            ("k", k, k > 0.0),
        ];
        for (name, v, ok) in checks {
            if !v.is_finite() || !ok {
                return Err(SuperradianceError::Geometry(format!("{name} out of range: {v}")));
            }
        }
        Ok(EnsembleGeometry {
            n_atoms,
            waist,
            length,
            k,
        })
    }

    pub fn regime(&self) -> RegimeFlags {
        RegimeFlags {
            wide_beam: self.k * self.waist >= 10.0,
            long_cloud: self.k * self.length >= 10.0,
            short_compared_to_rayleigh: self.length / (self.waist * self.waist * self.k) <= 0.1,
        }
    }

    /// Human-readable notes for every regime condition that fails.
    pub fn regime_warnings(&self) -> Vec<String> {
        let r = self.regime();
        let mut out = Vec::new();
        if !r.wide_beam {
            out.push(format!("kW = {:.3} is not large", self.k * self.waist));
        }
        if !r.long_cloud {
            out.push(format!("kL = {:.3} is not large", self.k * self.length));
        }
        if !r.short_compared_to_rayleigh {
            out.push(format!(
                "L/(W^2 k) = {:.3} is not small",
                self.length / (self.waist * self.waist * self.k)
            ));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub method: ChiMethod,
    pub n_samples: Option<usize>,
}

/// χ = 1 + N/(2W²k²).
pub fn chi_closed_form(geom: &EnsembleGeometry) -> ChiEstimate {
    ChiEstimate {
        value: 1.0 + geom.n_atoms / (2.0 * geom.waist * geom.waist * geom.k * geom.k),
        standard_error: 0.0,
        method: ChiMethod::ClosedForm,
        n_samples: None,
    }
}

/// Atom number giving cooperativity `chi` under the closed form.
pub fn atoms_for_chi(chi: f64, waist: f64, k: f64) -> Result<f64, SuperradianceError> {
    if !(chi >= 1.0) {
        return Err(SuperradianceError::Chi(chi));
    }
    Ok(2.0 * waist * waist * k * k * (chi - 1.0))
}

/// Longitudinal weight e^{−L²k²(1−c)²} + e^{−L²k²(1+c)²}, c = √(1−s²).
fn longitudinal_weight(s: f64, lk: f64) -> f64 {
    let c = (1.0 - s * s).max(0.0).sqrt();
    let minus = s * s / (1.0 + c);
    let a = lk * minus;
    let b = lk * (1.0 + c);
    (-a * a).exp() + (-b * b).exp()
}

/// Largest s at which the longitudinal weight is not negligible.
fn s_cutoff(lk: f64) -> f64 {
    let x = 8.0 / lk;
    if x >= 1.0 {
        1.0
    } else {
        (x * (2.0 - x)).sqrt()
    }
}

/// Continuum average: χ = 1 + N ∫₀¹ s e^{−k²W²s²} w_L(s) ds for the Gaussian cloud.
pub fn chi_quadrature(geom: &EnsembleGeometry) -> Result<ChiEstimate, SuperradianceError> {
    let kw = geom.k * geom.waist;
    let lk = geom.length * geom.k;
    let upper = s_cutoff(lk).min(1.0);
    let integrand = |s: f64| s * (-kw * kw * s * s).exp() * longitudinal_weight(s, lk);
    // Put a break point near the transverse width so the peak is resolved early.
    let knee = (6.0 / kw).min(upper);
    let tol = Tolerance { abs: 0.0, rel: 1e-12 };
    let mut mean = quadrature::integrate(integrand, 0.0, knee, tol, 500)?.value;
    if knee < upper {
        mean += quadrature::integrate(integrand, knee, upper, Tolerance { abs: 1e-14 * mean, rel: 1e-12 }, 500)?.value;
    }
    Ok(ChiEstimate {
        value: 1.0 + geom.n_atoms * mean,
        standard_error: 0.0,
        method: ChiMethod::Quadrature,
        n_samples: None,
    })
}

/// Pair kernel averaged over the Gaussian longitudinal separation, as a function of
/// the transverse separation ρ. Node tables are cached per panel count.
struct TransverseKernel {
    rule: GaussLegendre,
    k: f64,
    lk: f64,
    s_max: f64,
    tables: Vec<Vec<(f64, f64)>>,
}

impl TransverseKernel {
    fn new(geom: &EnsembleGeometry) -> Self {
        let lk = geom.length * geom.k;
        TransverseKernel {
            rule: GaussLegendre::new(16),
            k: geom.k,
            lk,
            s_max: s_cutoff(lk),
            tables: Vec::new(),
        }
    }

    fn table(&mut self, panels: usize) -> &[(f64, f64)] {
        if self.tables.len() <= panels {
            self.tables.resize(panels + 1, Vec::new());
        }
        if self.tables[panels].is_empty() {
            let width = self.s_max / panels as f64;
            let mut t = Vec::with_capacity(panels * self.rule.len());
            for p in 0..panels {
                let centre = (p as f64 + 0.5) * width;
                for (x, w) in self.rule.nodes().iter().zip(self.rule.weights()) {
                    let s = centre + 0.5 * width * x;
                    t.push((s, 0.5 * width * w * s * longitudinal_weight(s, self.lk)));
                }
            }
            self.tables[panels] = t;
        }
        &self.tables[panels]
    }

    fn eval(&mut self, rho: f64) -> f64 {
        let x = self.k * rho;
        // One oscillation of J0 per 16-node panel.
        let panels = ((x * self.s_max / (2.0 * PI)).ceil() as usize).max(4);
        self.table(panels).iter().map(|(s, w)| w * j0(x * s)).sum()
    }
}

/// Monte Carlo estimate of χ from `n_samples` atom pairs.
///
/// Both atoms are drawn from the cloud density; the kernel is averaged analytically
/// over their longitudinal separation, leaving a sample over transverse positions.
/// Samples are split into [`MC_BATCHES`] batches, each with its own ChaCha stream, and
/// the standard error comes from the spread of batch means.
pub fn chi_monte_carlo(
    geom: &EnsembleGeometry,
    n_samples: usize,
    seed: u64,
) -> Result<ChiEstimate, SuperradianceError> {
    if n_samples < MIN_SAMPLES {
        return Err(SuperradianceError::SampleCount(n_samples));
    }
    if geom.n_atoms == 0.0 {
        return Ok(ChiEstimate {
            value: 1.0,
            standard_error: 0.0,
            method: ChiMethod::MonteCarlo,
            n_samples: Some(n_samples),
        });
    }
    let mut kernel = TransverseKernel::new(geom);
    let w = geom.waist;
    let base = n_samples / MC_BATCHES;
    let extra = n_samples % MC_BATCHES;
    let mut sums = Vec::with_capacity(MC_BATCHES);
    let mut counts = Vec::with_capacity(MC_BATCHES);
    for batch in 0..MC_BATCHES {
        let count = base + usize::from(batch < extra);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(batch as u64);
        let mut sum = 0.0;
        for _ in 0..count {
            let xi: f64 = StandardNormal.sample(&mut rng);
            let yi: f64 = StandardNormal.sample(&mut rng);
            let xj: f64 = StandardNormal.sample(&mut rng);
            let yj: f64 = StandardNormal.sample(&mut rng);
            let rho = w * (xi - xj).hypot(yi - yj);
            sum += kernel.eval(rho);
        }
        sums.push(sum);
        counts.push(count as f64);
    }
    let total: f64 = sums.iter().sum();
    let mean = total / n_samples as f64;
    let batch_means: Vec<f64> = sums.iter().zip(&counts).map(|(s, c)| s / c).collect();
    let m = batch_means.len() as f64;
    let bm = batch_means.iter().sum::<f64>() / m;
    let var = batch_means.iter().map(|x| (x - bm).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(ChiEstimate {
        value: 1.0 + geom.n_atoms * mean,
        standard_error: geom.n_atoms * (var / m).sqrt(),
        method: ChiMethod::MonteCarlo,
        n_samples: Some(n_samples),
    })
}

/// The disk-integral pair kernel by direct two-dimensional adaptive quadrature.
///
/// q = k sinθ(cosφ, sinφ) so that d²q = k² sinθ cosθ dθ dφ; θ runs over [0, π/2].
pub fn chi_quadrature_kernel(d: [f64; 3], k: f64) -> Result<f64, SuperradianceError> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(SuperradianceError::Geometry(format!("k must be > 0, got {k}")));
    }
    let kdz = k * d[2];
    let inner_tol = Tolerance { abs: 1e-13, rel: 1e-12 };
    let mut failure = None;
    let outer = quadrature::integrate(
        |theta: f64| {
            let (st, ct) = theta.sin_cos();
            let kq = k * st;
            let inner = quadrature::integrate(
                |phi: f64| (kq * (d[0] * phi.cos() + d[1] * phi.sin()) + kdz).cos(),
                0.0,
                2.0 * PI,
                inner_tol,
                2000,
            );
            match inner {
                Ok(v) => 2.0 * (kdz * ct).cos() * st * ct * v.value / (2.0 * PI),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        0.5 * PI,
        Tolerance { abs: 1e-11, rel: 1e-11 },
        2000,
    );
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(outer?.value)
}

/// The same kernel through its one-dimensional Bessel reduction.
pub fn bessel_kernel(d: [f64; 3], k: f64) -> Result<f64, SuperradianceError> {
    let rho = d[0].hypot(d[1]);
    let kdz = k * d[2];
    let v = quadrature::integrate(
        |theta: f64| {
            let (st, ct) = theta.sin_cos();
            st * ct * j0(k * rho * st) * (kdz * ct).cos()
        },
        0.0,
        0.5 * PI,
        Tolerance { abs: 1e-13, rel: 1e-12 },
        2000,
    )?;
    Ok(2.0 * kdz.cos() * v.value)
}

/// Re[e^{−ik d_z} sinc(k|d|)], the unit-normalized isotropic kernel.
pub fn sinc_kernel(d: [f64; 3], k: f64) -> f64 {
    let x = k * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let sinc = if x.abs() < 1e-8 { 1.0 } else { x.sin() / x };
    (k * d[2]).cos() * sinc
}

/// Ratio of |e⟩→|g⟩ to |e⟩→|s⟩ decay rates during readout, 2χ − 1.
pub fn branching_ratio(chi: f64) -> Result<f64, SuperradianceError> {
    if !(chi >= 1.0) {
        return Err(SuperradianceError::Chi(chi));
    }
    Ok(2.0 * chi - 1.0)
}

/// Fraction of first decays that return the atom to |g⟩, (2χ − 1)/(2χ).
pub fn extraction_ceiling(chi: f64) -> Result<f64, SuperradianceError> {
    let r = branching_ratio(chi)?;
    Ok(r / (r + 1.0))
}
