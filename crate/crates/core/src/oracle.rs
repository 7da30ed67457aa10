//! Brute-force integration of the driven ground/excited amplitude equations for one
//! representative atom, used as an independent check of the closed form.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::units::{us_to_ns, ParamError, ReadoutParams};

/// Above this value of χΓ·t_end the bounded (A, B) formulation is integrated.
const GROWTH_LIMIT: f64 = 40.0;

const MAX_STEPS: usize = 5_000_000;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("step size underflow at t = {t} us (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget exhausted at t = {t} us")]
    TooManySteps { t: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl StepControl {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        StepControl { rel_tol, abs_tol }
    }
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
        }
    }
}

/// Which pair of variables was integrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Formulation {
    /// A and the slowly varying b, with B = βb.
    Interaction,
    /// A and B directly, with the decay term explicit.
    Damped,
}

/// Amplitudes on a uniform reporting grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeTrajectory {
    /// Grid times, µs.
    pub times: Vec<f64>,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    /// β(t) = e^{−χΓt/2}.
    pub beta: Vec<f64>,
    /// Excited amplitude B(t) as integrated; equals βb.
    pub excited: Vec<Complex64>,
    pub formulation: Formulation,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl AmplitudeTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// |A|² + |B|² at each grid time.
    pub fn norms(&self) -> Vec<f64> {
        let bb = reconstruct_b(self);
        self.a.iter().zip(&bb).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t_ns,re_A,im_A,re_B,im_B,norm")?;
        let bb = reconstruct_b(self);
        for ((t, a), b) in self.times.iter().zip(&self.a).zip(&bb) {
            let norm = a.norm_sqr() + b.norm_sqr();
            writeln!(out, "{},{},{},{},{},{}", us_to_ns(*t), a.re, a.im, b.re, b.im, norm)?;
        }
        Ok(())
    }
}

type State = [Complex64; 2];

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            out[0] += k[0] * (h * c);
            out[1] += k[1] * (h * c);
        }
    }
    out
}

struct Rhs {
    half_omega: f64,
    delta: f64,
    kappa: f64,
    formulation: Formulation,
}

impl Rhs {
    fn eval(&self, t: f64, y: &State) -> State {
        let i_half = Complex64::new(0.0, self.half_omega);
        match self.formulation {
            Formulation::Interaction => {
                let g = Complex64::from_polar((-self.kappa * t).exp(), -self.delta * t);
                let g_inv = Complex64::from_polar((self.kappa * t).exp(), self.delta * t);
                [i_half * g * y[1], i_half * g_inv * y[0]]
            }
            Formulation::Damped => {
                let ph = Complex64::from_polar(1.0, self.delta * t);
                [i_half * ph.conj() * y[1], i_half * ph * y[0] - self.kappa * y[1]]
            }
        }
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B5: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One Dormand–Prince step; returns the 5th-order solution, the error vector and
/// the derivative at the new point (first-same-as-last).
fn dp_step(rhs: &Rhs, t: f64, y: &State, k1: &State, h: f64) -> (State, State, State) {
    let k2 = rhs.eval(t + C[1] * h, &axpy(y, h, &[(A2[0], k1)]));
    let k3 = rhs.eval(t + C[2] * h, &axpy(y, h, &[(A3[0], k1), (A3[1], &k2)]));
    let k4 = rhs.eval(t + C[3] * h, &axpy(y, h, &[(A4[0], k1), (A4[1], &k2), (A4[2], &k3)]));
    let k5 = rhs.eval(
        t + C[4] * h,
        &axpy(y, h, &[(A5[0], k1), (A5[1], &k2), (A5[2], &k3), (A5[3], &k4)]),
    );
    let k6 = rhs.eval(
        t + C[5] * h,
        &axpy(y, h, &[(A6[0], k1), (A6[1], &k2), (A6[2], &k3), (A6[3], &k4), (A6[4], &k5)]),
    );
    let y_new = axpy(
        y,
        h,
        &[(B5[0], k1), (B5[2], &k3), (B5[3], &k4), (B5[4], &k5), (B5[5], &k6)],
    );
    let k7 = rhs.eval(t + h, &y_new);
    let ks = [k1, &k2, &k3, &k4, &k5, &k6, &k7];
    let mut err = [Complex64::new(0.0, 0.0); 2];
    for (e, k) in E.iter().zip(ks) {
        err[0] += k[0] * (h * e);
        err[1] += k[1] * (h * e);
    }
    (y_new, err, k7)
}

fn error_norm(err: &State, y: &State, y_new: &State, ctl: &StepControl) -> f64 {
    let mut sum = 0.0;
    for i in 0..2 {
        let scale_re = ctl.abs_tol + ctl.rel_tol * y[i].re.abs().max(y_new[i].re.abs());
        let scale_im = ctl.abs_tol + ctl.rel_tol * y[i].im.abs().max(y_new[i].im.abs());
        sum += (err[i].re / scale_re).powi(2) + (err[i].im / scale_im).powi(2);
    }
    (sum / 4.0).sqrt()
}

/// Integrates the amplitude equations from A(0) = 1, b(0) = 0 up to `t_end` µs and
/// reports them on `grid_points` uniformly spaced times including both ends.
pub fn evolve(
    params: &ReadoutParams,
    t_end: f64,
    grid_points: usize,
    control: StepControl,
) -> Result<AmplitudeTrajectory, OracleError> {
    let params = params.validate()?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(OracleError::Input(format!("t_end must be > 0, got {t_end}")));
    }
    if grid_points < 2 {
        return Err(OracleError::Input(format!("need at least 2 grid points, got {grid_points}")));
    }
    for (name, v) in [("rel_tol", control.rel_tol), ("abs_tol", control.abs_tol)] {
        if !(v > 0.0 && v <= 1e-3) {
            return Err(OracleError::Input(format!("{name} must lie in (0, 1e-3], got {v}")));
        }
    }

    let kappa = 0.5 * params.chi_gamma();
    let formulation = if params.chi_gamma() * t_end <= GROWTH_LIMIT {
        Formulation::Interaction
    } else {
        Formulation::Damped
    };
    let rhs = Rhs {
        half_omega: 0.5 * params.omega,
        delta: params.delta,
        kappa,
        formulation,
    };

    let spacing = t_end / (grid_points - 1) as f64;
    let rate = params.omega + params.delta.abs() + params.chi_gamma();
    let mut h = (0.01 / rate.max(1e-12)).min(spacing);
    let mut t = 0.0;
    let mut y: State = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let mut k1 = rhs.eval(t, &y);
    let mut accepted = 0;
    let mut rejected = 0;

    let mut times = Vec::with_capacity(grid_points);
    let mut a = Vec::with_capacity(grid_points);
    let mut b = Vec::with_capacity(grid_points);
    let mut beta = Vec::with_capacity(grid_points);
    let mut excited = Vec::with_capacity(grid_points);
    let mut record = |t: f64, y: &State| {
        let bt = (-kappa * t).exp();
        times.push(t);
        a.push(y[0]);
        beta.push(bt);
        match formulation {
            Formulation::Interaction => {
                b.push(y[1]);
                excited.push(y[1] * bt);
            }
            Formulation::Damped => {
                b.push(y[1] * (kappa * t).exp());
                excited.push(y[1]);
            }
        }
    };
    record(0.0, &y);

    for i in 1..grid_points {
        let target = if i == grid_points - 1 { t_end } else { i as f64 * spacing };
        while t < target {
            if accepted + rejected >= MAX_STEPS {
                return Err(OracleError::TooManySteps { t });
            }
            let remaining = target - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            if step < 1e-14 * t.max(1e-6) {
                return Err(OracleError::StepUnderflow { t, h: step });
            }
            let (y_new, err, k7) = dp_step(&rhs, t, &y, &k1, step);
            let en = error_norm(&err, &y, &y_new, &control);
            if en.is_finite() && en <= 1.0 {
                t = if last { target } else { t + step };
                y = y_new;
                k1 = k7;
                accepted += 1;
                let grow = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                // A step shortened to land on the grid says nothing about the next one.
                if !last || step >= h {
                    h = step * grow;
                }
            } else {
                rejected += 1;
                let shrink = if en.is_finite() { (0.9 * en.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
                h = step * shrink;
            }
        }
        record(target, &y);
    }

    Ok(AmplitudeTrajectory {
        times,
        a,
        b,
        beta,
        excited,
        formulation,
        steps_accepted: accepted,
        steps_rejected: rejected,
    })
}

/// Excited-state amplitude β(t)·b(t) at each grid time.
pub fn reconstruct_b(traj: &AmplitudeTrajectory) -> Vec<Complex64> {
    traj.b
        .iter()
        .zip(&traj.beta)
        .zip(&traj.excited)
        .map(|((b, beta), e)| {
            let prod = b * *beta;
            if prod.re.is_finite() && prod.im.is_finite() {
                prod
            } else {
                *e
            }
        })
        .collect()
}

/// Largest |d/dt(|A|² + |B|²) + χΓ|B|²| over the grid, rad/µs.
///
/// Derivatives use five-point central differences, so the two points at each end
/// of the grid are skipped.
pub fn norm_decay_check(traj: &AmplitudeTrajectory, params: &ReadoutParams) -> Result<f64, OracleError> {
    let n = traj.len();
    if n < 10 {
        return Err(OracleError::Input(format!("need at least 10 grid points, got {n}")));
    }
    let h = traj.times[1] - traj.times[0];
    let bb = reconstruct_b(traj);
    let excited: Vec<f64> = bb.iter().map(|b| b.norm_sqr()).collect();
    let norm: Vec<f64> = traj.a.iter().zip(&excited).map(|(a, e)| a.norm_sqr() + e).collect();
    let cg = params.chi_gamma();
    let mut worst: f64 = 0.0;
    for i in 2..n - 2 {
        let d = (norm[i - 2] - 8.0 * norm[i - 1] + 8.0 * norm[i + 1] - norm[i + 2]) / (12.0 * h);
        worst = worst.max((d + cg * excited[i]).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::amplitude_b;

    fn params(omega: f64, delta: f64, chi: f64) -> ReadoutParams {
        ReadoutParams {
            omega,
            delta,
            gamma_nat: 32.67,
            chi,
            gamma_deph: 0.0,
            tau: 0.0,
            scale_f: 1.0,
        }
    }

    #[test]
    fn dark_atom_stays_in_ground_state() {
        let p = params(0.0, 5.0, 2.0);
        let tr = evolve(&p, 0.3, 31, StepControl::default()).unwrap();
        assert!(tr.a.iter().all(|a| (a - Complex64::new(1.0, 0.0)).norm() == 0.0));
        assert!(reconstruct_b(&tr).iter().all(|b| b.norm() == 0.0));
        assert_eq!(norm_decay_check(&tr, &p).unwrap(), 0.0);
    }

    #[test]
    fn grid_is_hit_exactly() {
        let p = params(60.0, 10.0, 2.7);
        let tr = evolve(&p, 0.2, 21, StepControl::default()).unwrap();
        assert_eq!(tr.len(), 21);
        assert_eq!(tr.times[0], 0.0);
        assert_eq!(*tr.times.last().unwrap(), 0.2);
        assert!((tr.times[10] - 0.1).abs() < 1e-15);
        assert_eq!(tr.beta[0], 1.0);
        assert_eq!(reconstruct_b(&tr)[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn both_formulations_agree_with_closed_form() {
        for (t_end, expected) in [(0.3, Formulation::Interaction), (2.0, Formulation::Damped)] {
            let p = params(80.0, 30.0, 2.7);
            let tr = evolve(&p, t_end, 101, StepControl::default()).unwrap();
            assert_eq!(tr.formulation, expected);
            let bb = reconstruct_b(&tr);
            let peak = tr.times.iter().map(|&t| amplitude_b(t, &p).norm_sqr()).fold(0.0, f64::max);
            for (t, b) in tr.times.iter().zip(&bb) {
                let diff = (b.norm_sqr() - amplitude_b(*t, &p).norm_sqr()).abs();
                assert!(diff <= 1e-8 * peak, "t = {t}: {diff}");
            }
        }
    }

    #[test]
    fn long_runs_fall_back_to_stored_excited_amplitude() {
        let p = params(50.0, 0.0, 5.0);
        let tr = evolve(&p, 10.0, 11, StepControl::default()).unwrap();
        assert_eq!(tr.formulation, Formulation::Damped);
        let bb = reconstruct_b(&tr);
        assert!(bb.iter().all(|b| b.re.is_finite() && b.im.is_finite()));
    }

    #[test]
    fn norm_is_nonincreasing() {
        let p = params(120.0, 40.0, 2.7);
        let tr = evolve(&p, 0.3, 301, StepControl::default()).unwrap();
        let norms = tr.norms();
        assert!((norms[0] - 1.0).abs() < 1e-15);
        for w in norms.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
        assert!(norms.iter().all(|n| *n <= 1.0 + 1e-10));
    }

    #[test]
    fn tighter_tolerance_gives_smaller_errors() {
        let p = params(150.0, 20.0, 2.7);
        // Coarse grid: the step controller, not the grid, sets the step size.
        let coarse = |ctl| evolve(&p, 0.3, 4, ctl).unwrap();
        let err = |tr: &AmplitudeTrajectory| {
            let bb = reconstruct_b(tr);
            tr.times
                .iter()
                .zip(&bb)
                .map(|(t, b)| (b.norm_sqr() - amplitude_b(*t, &p).norm_sqr()).abs())
                .fold(0.0, f64::max)
        };
        let e_loose = err(&coarse(StepControl::new(1e-4, 1e-6)));
        let e_mid = err(&coarse(StepControl::new(1e-7, 1e-9)));
        let e_tight = err(&coarse(StepControl::new(1e-10, 1e-12)));
        assert!(e_tight < e_mid && e_mid < e_loose, "{e_tight} {e_mid} {e_loose}");

        let loose = evolve(&p, 0.3, 1201, StepControl::new(1e-3, 1e-3)).unwrap();
        let tight = evolve(&p, 0.3, 1201, StepControl::new(1e-10, 1e-12)).unwrap();
        let r_loose = norm_decay_check(&loose, &p).unwrap();
        let r_tight = norm_decay_check(&tight, &p).unwrap();
        assert!(r_tight <= r_loose, "{r_tight} vs {r_loose}");
    }

    #[test]
    fn input_validation() {
        let p = params(1.0, 0.0, 1.0);
        assert!(matches!(evolve(&p, 0.0, 10, StepControl::default()), Err(OracleError::Input(_))));
        assert!(matches!(evolve(&p, 1.0, 1, StepControl::default()), Err(OracleError::Input(_))));
        assert!(matches!(evolve(&p, 1.0, 10, StepControl::new(0.1, 1e-9)), Err(OracleError::Input(_))));
        let tr = evolve(&p, 1.0, 5, StepControl::default()).unwrap();
        assert!(norm_decay_check(&tr, &p).is_err());
    }

    #[test]
    fn csv_export() {
        let p = params(60.0, 0.0, 2.0);
        let tr = evolve(&p, 0.01, 3, StepControl::default()).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t_ns,re_A,im_A,re_B,im_B,norm\n0,1,0,0,0,1\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
