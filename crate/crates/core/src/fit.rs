//! Global weighted least-squares estimation of the readout parameters from
//! wavepacket, saturation and spectrum datasets.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::analytic::{integrate_pc, pc_at, IntegrationSettings};
use crate::units::{ns_to_us, to_angular, IntensityModel, ReadoutParams};

const DEFAULT_MAX_ITER: usize = 200;
const OBJECTIVE_RTOL: f64 = 1e-8;
const STEP_RTOL: f64 = 1e-4;
const FD_STEP: f64 = 1e-5;
const SINGULAR_RATIO: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum FitError {
    #[error("invalid fit input: {0}")]
    Input(String),
    #[error("dataset {dataset} ({name}), point {point}: {message}")]
    Model {
        dataset: usize,
        name: String,
        point: usize,
        message: String,
    },
    #[error("normal equations are singular: {0}")]
    RankDeficient(RankReport),
}

/// Serialized under the same unit-suffixed names as [`ParamId::name`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParamId {
    /// γ/2π, MHz.
    #[serde(rename = "gamma_deph_mhz")]
    GammaDeph,
    /// I_s, mW/cm².
    #[serde(rename = "i_sat_mw_cm2")]
    ISat,
    #[serde(rename = "chi")]
    Chi,
    #[serde(rename = "scale_f")]
    ScaleF,
    /// τ, ns.
    #[serde(rename = "tau_ns")]
    Tau,
    /// Γ/2π, MHz.
    #[serde(rename = "gamma_nat_mhz")]
    GammaNat,
}

impl ParamId {
    pub const ALL: [ParamId; 6] = [
        ParamId::GammaDeph,
        ParamId::ISat,
        ParamId::Chi,
        ParamId::ScaleF,
        ParamId::Tau,
        ParamId::GammaNat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::GammaDeph => "gamma_deph_mhz",
            ParamId::ISat => "i_sat_mw_cm2",
            ParamId::Chi => "chi",
            ParamId::ScaleF => "scale_f",
            ParamId::Tau => "tau_ns",
            ParamId::GammaNat => "gamma_nat_mhz",
        }
    }

    /// Physical lower limit and whether it is attainable.
    fn natural_lower(self) -> f64 {
        match self {
            ParamId::Chi => 1.0,
            _ => 0.0,
        }
    }
}

/// Model parameters in user units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub gamma_deph_mhz: f64,
    pub i_sat_mw_cm2: f64,
    pub chi: f64,
    pub scale_f: f64,
    pub tau_ns: f64,
    pub gamma_nat_mhz: f64,
}

impl Default for PhysicalParams {
    /// Neutral starting point for fits.
    fn default() -> Self {
        PhysicalParams {
            gamma_deph_mhz: 1.0,
            i_sat_mw_cm2: 10.0,
            chi: 2.0,
            scale_f: 1.0,
            tau_ns: crate::units::DEFAULT_TAU_NS,
            gamma_nat_mhz: crate::units::DEFAULT_GAMMA_NAT_MHZ,
        }
    }
}

impl PhysicalParams {
    pub fn get(&self, id: ParamId) -> f64 {
        match id {
            ParamId::GammaDeph => self.gamma_deph_mhz,
            ParamId::ISat => self.i_sat_mw_cm2,
            ParamId::Chi => self.chi,
            ParamId::ScaleF => self.scale_f,
            ParamId::Tau => self.tau_ns,
            ParamId::GammaNat => self.gamma_nat_mhz,
        }
    }

    pub fn set(&mut self, id: ParamId, v: f64) {
        match id {
            ParamId::GammaDeph => self.gamma_deph_mhz = v,
            ParamId::ISat => self.i_sat_mw_cm2 = v,
            ParamId::Chi => self.chi = v,
            ParamId::ScaleF => self.scale_f = v,
            ParamId::Tau => self.tau_ns = v,
            ParamId::GammaNat => self.gamma_nat_mhz = v,
        }
    }

    pub fn intensity_model(&self) -> Result<IntensityModel, String> {
        IntensityModel::new(self.i_sat_mw_cm2, to_angular(self.gamma_nat_mhz)).map_err(|e| e.to_string())
    }

    /// Internal-unit parameters at read intensity `i_r` and detuning `delta_mhz`.
    pub fn readout(&self, i_r: f64, delta_mhz: f64) -> Result<ReadoutParams, String> {
        let model = self.intensity_model()?;
        let omega = model.rabi_from_intensity(i_r).map_err(|e| e.to_string())?;
        ReadoutParams {
            omega,
            delta: to_angular(delta_mhz),
            gamma_nat: to_angular(self.gamma_nat_mhz),
            chi: self.chi,
            gamma_deph: to_angular(self.gamma_deph_mhz),
            tau: ns_to_us(self.tau_ns),
            scale_f: self.scale_f,
        }
        .validate()
        .map_err(|e| e.to_string())
    }
}

/// What the abscissa of a dataset means.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DatasetKind {
    /// p_c per ns against time after the read start, t in ns.
    Wavepacket { delta_mhz: f64, i_r_mw_cm2: f64 },
    /// P_c against read intensity in mW/cm².
    Saturation { delta_mhz: f64 },
    /// P_c against detuning Δ/2π in MHz.
    Spectrum { i_r_mw_cm2: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub kind: DatasetKind,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Points with `false` are excluded from the objective.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<bool>>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, kind: DatasetKind, x: Vec<f64>, y: Vec<f64>, sigma: Vec<f64>) -> Self {
        Dataset {
            name: name.into(),
            kind,
            x,
            y,
            sigma,
            mask: None,
        }
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Self {
        self.mask = Some(mask);
        self
    }

    pub fn validate(&self) -> Result<(), FitError> {
        let n = self.x.len();
        if self.y.len() != n || self.sigma.len() != n || self.mask.as_ref().is_some_and(|m| m.len() != n) {
            return Err(FitError::Input(format!("dataset {:?}: arrays differ in length", self.name)));
        }
        if let Some(i) = self.sigma.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(FitError::Input(format!(
                "dataset {:?}: sigma[{i}] = {} is not positive",
                self.name, self.sigma[i]
            )));
        }
        if let Some(i) = self.x.iter().chain(&self.y).position(|v| !v.is_finite()) {
            return Err(FitError::Input(format!("dataset {:?}: non-finite value at index {i}", self.name)));
        }
        Ok(())
    }

    pub fn active(&self, i: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[i])
    }

    pub fn n_active(&self) -> usize {
        (0..self.x.len()).filter(|&i| self.active(i)).count()
    }
}

/// Model predictions for every point of a dataset, masked points included.
pub fn model_values(
    params: &PhysicalParams,
    data: &Dataset,
    settings: IntegrationSettings,
    index: usize,
) -> Result<Vec<f64>, FitError> {
    let fail = |point: usize, message: String| FitError::Model {
        dataset: index,
        name: data.name.clone(),
        point,
        message,
    };
    match data.kind {
        DatasetKind::Wavepacket { delta_mhz, i_r_mw_cm2 } => {
            let p = params.readout(i_r_mw_cm2, delta_mhz).map_err(|m| fail(0, m))?;
            Ok(data.x.iter().map(|&t| pc_at(ns_to_us(t), &p)).collect())
        }
        DatasetKind::Saturation { delta_mhz } => data
            .x
            .iter()
            .enumerate()
            .map(|(i, &i_r)| {
                let p = params.readout(i_r, delta_mhz).map_err(|m| fail(i, m))?;
                integrate_pc(&p, settings.horizon, settings.rel_tol)
                    .map(|v| v.value)
                    .map_err(|e| fail(i, e.to_string()))
            })
            .collect(),
        DatasetKind::Spectrum { i_r_mw_cm2 } => data
            .x
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                let p = params.readout(i_r_mw_cm2, d).map_err(|m| fail(i, m))?;
                integrate_pc(&p, settings.horizon, settings.rel_tol)
                    .map(|v| v.value)
                    .map_err(|e| fail(i, e.to_string()))
            })
            .collect(),
    }
}

/// (model − data)/σ over all active points, datasets in order. With `weighted` off
/// every σ is taken as 1.
pub fn residuals(
    params: &PhysicalParams,
    datasets: &[Dataset],
    weighted: bool,
    settings: IntegrationSettings,
) -> Result<Vec<f64>, FitError> {
    let mut out = Vec::new();
    for (k, d) in datasets.iter().enumerate() {
        let m = model_values(params, d, settings, k)?;
        for i in 0..d.x.len() {
            if d.active(i) {
                let s = if weighted { d.sigma[i] } else { 1.0 };
                out.push((m[i] - d.y[i]) / s);
            }
        }
    }
    Ok(out)
}

/// Allowed range of one parameter; `None` means unbounded on that side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub lower: f64,
    pub upper: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Transform {
    /// x = lo + e^θ.
    Log { lo: f64 },
    /// x = lo + (hi − lo)/(1 + e^{−θ}).
    Logistic { lo: f64, hi: f64 },
}

impl Transform {
    fn from_bound(b: Bound) -> Self {
        match b.upper {
            Some(hi) => Transform::Logistic { lo: b.lower, hi },
            None => Transform::Log { lo: b.lower },
        }
    }

    fn to_natural(self, theta: f64) -> f64 {
        match self {
            Transform::Log { lo } => lo + theta.exp(),
            Transform::Logistic { lo, hi } => lo + (hi - lo) / (1.0 + (-theta).exp()),
        }
    }

    fn to_internal(self, x: f64) -> f64 {
        match self {
            Transform::Log { lo } => (x - lo).ln(),
            Transform::Logistic { lo, hi } => {
                let u = (x - lo) / (hi - lo);
                (u / (1.0 - u)).ln()
            }
        }
    }

    /// Within 1e-8 (relative to the bound, or to the width of the range) of a limit.
    fn at_bound(self, theta: f64) -> bool {
        match self {
            Transform::Log { lo } => theta.exp() <= 1e-8 * lo.abs().max(1.0),
            Transform::Logistic { .. } => theta.abs() >= 8.0 * std::f64::consts::LN_10,
        }
    }

    fn derivative(self, theta: f64) -> f64 {
        match self {
            Transform::Log { .. } => theta.exp(),
            Transform::Logistic { lo, hi } => {
                let e = (-theta.abs()).exp();
                (hi - lo) * e / ((1.0 + e) * (1.0 + e))
            }
        }
    }
}

/// Which parameters move, where they start and how far they may go.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub free: Vec<ParamId>,
    pub init: PhysicalParams,
    /// Overrides of the default bounds (physical limits, no upper bound).
    #[serde(default)]
    pub bounds: Vec<(ParamId, Bound)>,
    #[serde(default = "default_true")]
    pub weighted: bool,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub settings: IntegrationSettings,
}

fn default_true() -> bool {
    true
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

impl FitSpec {
    /// The four-parameter fit with every other setting at its default.
    pub fn new(free: Vec<ParamId>, init: PhysicalParams) -> Self {
        FitSpec {
            free,
            init,
            bounds: Vec::new(),
            weighted: true,
            max_iter: DEFAULT_MAX_ITER,
            settings: IntegrationSettings {
                rel_tol: 1e-10,
                ..IntegrationSettings::default()
            },
        }
    }

    pub fn bound(&self, id: ParamId) -> Bound {
        self.bounds
            .iter()
            .rev()
            .find(|(p, _)| *p == id)
            .map(|(_, b)| *b)
            .unwrap_or(Bound {
                lower: id.natural_lower(),
                upper: None,
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub id: ParamId,
    pub value: f64,
    /// Zero for parameters pinned at a bound.
    pub sigma: f64,
    pub at_bound: bool,
}

/// Parameters that the data cannot separate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    /// Pairs that move together along a null direction.
    pub degenerate_pairs: Vec<(ParamId, ParamId)>,
    /// Parameters with no influence on the residuals.
    pub insensitive: Vec<ParamId>,
    pub condition_number: f64,
}

impl std::fmt::Display for RankReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let pairs: Vec<String> = self
            .degenerate_pairs
            .iter()
            .map(|(a, b)| format!("({}, {})", a.name(), b.name()))
            .collect();
        let single: Vec<&str> = self.insensitive.iter().map(|p| p.name()).collect();
        write!(
            f,
            "degenerate pairs [{}], insensitive [{}], condition number {:e}",
            pairs.join(", "),
            single.join(", "),
            self.condition_number
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub values: PhysicalParams,
    pub estimates: Vec<ParamEstimate>,
    /// Covariance of the free parameters in user units, order of `estimates`.
    pub covariance: Vec<Vec<f64>>,
    pub chi2: f64,
    pub reduced_chi2: f64,
    pub n_points: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted step, starting with the initial value.
    pub objective_trace: Vec<f64>,
}

impl FitResult {
    pub fn estimate(&self, id: ParamId) -> Option<ParamEstimate> {
        self.estimates.iter().copied().find(|e| e.id == id)
    }
}

struct Problem<'a> {
    datasets: &'a [Dataset],
    spec: &'a FitSpec,
    transforms: Vec<Transform>,
}

impl Problem<'_> {
    fn natural(&self, theta: &DVector<f64>) -> PhysicalParams {
        let mut p = self.spec.init;
        for (j, id) in self.spec.free.iter().enumerate() {
            p.set(*id, self.transforms[j].to_natural(theta[j]));
        }
        p
    }

    fn residuals(&self, theta: &DVector<f64>) -> Result<DVector<f64>, FitError> {
        let r = residuals(&self.natural(theta), self.datasets, self.spec.weighted, self.spec.settings)?;
        Ok(DVector::from_vec(r))
    }

    fn jacobian(&self, theta: &DVector<f64>, n: usize) -> Result<DMatrix<f64>, FitError> {
        let mut jac = DMatrix::zeros(n, theta.len());
        for j in 0..theta.len() {
            let h = FD_STEP * (1.0 + theta[j].abs());
            let mut up = theta.clone();
            up[j] += h;
            let mut down = theta.clone();
            down[j] -= h;
            let d = (self.residuals(&up)? - self.residuals(&down)?) / (2.0 * h);
            jac.set_column(j, &d);
        }
        Ok(jac)
    }
}

fn rank_check(jtj: &DMatrix<f64>, free: &[ParamId]) -> Result<(), RankReport> {
    let p = free.len();
    let diag: Vec<f64> = (0..p).map(|j| jtj[(j, j)]).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let insensitive: Vec<ParamId> = (0..p)
        .filter(|&j| !(diag[j] > SINGULAR_RATIO * dmax) || dmax == 0.0)
        .map(|j| free[j])
        .collect();
    let mut scaled = jtj.clone();
    for i in 0..p {
        for j in 0..p {
            let s = (diag[i] * diag[j]).sqrt();
            scaled[(i, j)] = if s > 0.0 { jtj[(i, j)] / s } else if i == j { 1.0 } else { 0.0 };
        }
    }
    let eig = SymmetricEigen::new(scaled);
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition_number = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    let mut degenerate_pairs = Vec::new();
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l <= SINGULAR_RATIO * lmax {
            let v = eig.eigenvectors.column(k);
            let involved: Vec<usize> = (0..p).filter(|&j| v[j].abs() > 0.2).collect();
            for a in 0..involved.len() {
                for b in a + 1..involved.len() {
                    let pair = (free[involved[a]], free[involved[b]]);
                    if !degenerate_pairs.contains(&pair) {
                        degenerate_pairs.push(pair);
                    }
                }
            }
        }
    }
    if insensitive.is_empty() && degenerate_pairs.is_empty() {
        Ok(())
    } else {
        Err(RankReport {
            degenerate_pairs,
            insensitive,
            condition_number,
        })
    }
}

/// Levenberg–Marquardt minimisation of Σ r² over the free parameters.
///
/// Bounds are enforced by smooth reparameterisation, so every trial point is
/// feasible. Iteration stops when an accepted step changes the objective by less than
/// 1e-8 relative and moves every parameter by less than 1e-4 relative, when the
/// objective reaches zero, or after `max_iter` Jacobian evaluations.
pub fn fit(datasets: &[Dataset], spec: &FitSpec) -> Result<FitResult, FitError> {
    if datasets.is_empty() {
        return Err(FitError::Input("no datasets".into()));
    }
    for d in datasets {
        d.validate()?;
    }
    let mut seen = Vec::new();
    for id in &spec.free {
        if seen.contains(id) {
            return Err(FitError::Input(format!("{} listed twice", id.name())));
        }
        seen.push(*id);
    }
    let mut transforms = Vec::with_capacity(spec.free.len());
    for id in &spec.free {
        let b = spec.bound(*id);
        let x = spec.init.get(*id);
        let inside = x > b.lower && b.upper.is_none_or(|hi| x < hi && hi > b.lower);
        if !inside {
            return Err(FitError::Input(format!(
                "initial {} = {x} is not strictly inside its bounds",
                id.name()
            )));
        }
        transforms.push(Transform::from_bound(b));
    }
    let n_points: usize = datasets.iter().map(Dataset::n_active).sum();
    let p = spec.free.len();
    if n_points == 0 {
        return Err(FitError::Input("no active data points".into()));
    }
    let problem = Problem {
        datasets,
        spec,
        transforms,
    };
    let mut theta = DVector::from_iterator(
        p,
        spec.free
            .iter()
            .zip(&problem.transforms)
            .map(|(id, t)| t.to_internal(spec.init.get(*id))),
    );

    let mut r = problem.residuals(&theta)?;
    let mut cost = r.norm_squared();
    let mut trace = vec![cost];
    let mut iterations = 0;
    let mut converged = p == 0 || cost == 0.0;
    let mut lambda = 1e-3;
    let mut jac = DMatrix::zeros(n_points, p);

    while !converged && iterations < spec.max_iter {
        iterations += 1;
        jac = problem.jacobian(&theta, n_points)?;
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        if iterations == 1 {
            rank_check(&jtj, &spec.free).map_err(FitError::RankDeficient)?;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for j in 0..p {
                a[(j, j)] += lambda * jtj[(j, j)].max(1e-300);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&grad))) else {
                lambda *= 4.0;
                continue;
            };
            let trial = &theta + &step;
            let trial_r = match problem.residuals(&trial) {
                Ok(v) => v,
                Err(FitError::Model { .. }) => {
                    lambda *= 4.0;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let trial_cost = trial_r.norm_squared();
            if trial_cost.is_finite() && trial_cost < cost {
                let rel_drop = (cost - trial_cost) / cost;
                let small_step = (0..p).all(|j| step[j].abs() <= STEP_RTOL * (1e-3 + theta[j].abs()));
                theta = trial;
                r = trial_r;
                cost = trial_cost;
                trace.push(cost);
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if cost == 0.0 || (rel_drop < OBJECTIVE_RTOL && small_step) {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // No downhill step at any damping: the point is a minimum to working precision.
            converged = true;
        }
    }

    if p > 0 {
        jac = problem.jacobian(&theta, n_points)?;
    }
    let values = problem.natural(&theta);
    let dof = n_points.saturating_sub(p);
    let reduced_chi2 = if dof > 0 { cost / dof as f64 } else { f64::NAN };
    let mut covariance = vec![vec![0.0; p]; p];
    let mut estimates = Vec::with_capacity(p);
    if p > 0 {
        // Parameters pinned at a bound carry no curvature and are left out of the covariance.
        let pinned: Vec<bool> = (0..p).map(|j| problem.transforms[j].at_bound(theta[j])).collect();
        let active: Vec<usize> = (0..p).filter(|&j| !pinned[j]).collect();
        if !active.is_empty() {
            let sub = jac.select_columns(&active);
            let jtj = sub.transpose() * &sub;
            let ids: Vec<ParamId> = active.iter().map(|&j| spec.free[j]).collect();
            rank_check(&jtj, &ids).map_err(FitError::RankDeficient)?;
            let inv = jtj
                .clone()
                .cholesky()
                .map(|c| c.inverse())
                .or_else(|| jtj.try_inverse())
                .ok_or_else(|| {
                    FitError::RankDeficient(RankReport {
                        degenerate_pairs: Vec::new(),
                        insensitive: Vec::new(),
                        condition_number: f64::INFINITY,
                    })
                })?;
            let scale = if spec.weighted { 1.0 } else { reduced_chi2.max(0.0) };
            let deriv: Vec<f64> = active.iter().map(|&j| problem.transforms[j].derivative(theta[j])).collect();
            for (a, &i) in active.iter().enumerate() {
                for (b, &j) in active.iter().enumerate() {
                    covariance[i][j] = scale * deriv[a] * deriv[b] * inv[(a, b)];
                }
            }
        }
        for (j, id) in spec.free.iter().enumerate() {
            estimates.push(ParamEstimate {
                id: *id,
                value: values.get(*id),
                sigma: covariance[j][j].max(0.0).sqrt(),
                at_bound: pinned[j],
            });
        }
    }

    Ok(FitResult {
        values,
        estimates,
        covariance,
        chi2: cost,
        reduced_chi2,
        n_points,
        iterations,
        converged,
        objective_trace: trace,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub value: f64,
    pub chi2: f64,
    pub converged: bool,
}

/// Minimised objective with `param` pinned at each grid value and the remaining
/// free parameters refitted, each fit warm-started from the previous one.
pub fn profile(param: ParamId, grid: &[f64], datasets: &[Dataset], spec: &FitSpec) -> Result<Vec<ProfilePoint>, FitError> {
    let bound = spec.bound(param);
    let mut inner = spec.clone();
    inner.free.retain(|p| *p != param);
    let mut out = Vec::with_capacity(grid.len());
    for &v in grid {
        if !(v >= bound.lower && bound.upper.is_none_or(|hi| v <= hi)) {
            return Err(FitError::Input(format!("profile value {v} outside bounds of {}", param.name())));
        }
        inner.init.set(param, v);
        let res = fit(datasets, &inner)?;
        out.push(ProfilePoint {
            value: v,
            chi2: res.chi2,
            converged: res.converged,
        });
        for id in &inner.free {
            inner.init.set(*id, res.values.get(*id));
        }
    }
    Ok(out)
}
