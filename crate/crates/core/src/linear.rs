//! Linear degenerate diffusion-transport flow with a frozen coefficient,
//! `u_t = grad u . grad p_v - v Lambda^(2-2s) u`, optionally mollified as
//! `J(grad Ju . grad p_v) - J(v Lambda^(2-2s) Ju)`.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{log_growth_quotient, DiagnosticsRecord, Recorder};
use crate::error::{Error, Result};
use crate::grid::{dealias_in_place, forward_transform, Grid, RealField, SpectralField};
use crate::mollifier::MollifierKernel;
use crate::norms::sobolev_norm;
use crate::ops::{
    apply_derivative, apply_real_multiplier, gradient_multiplier, lambda_multiplier,
    pressure_multiplier,
};

/// Largest admissible sup norm before a run is declared unstable.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;
/// Slack on the nonnegativity of the coefficient.
pub const COEFFICIENT_FLOOR: f64 = -1e-12;

pub(crate) fn validate_s(s: f64) -> Result<()> {
    if (0.5..1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::InvalidExponent { name: "s", value: s, range: "[1/2, 1)" })
    }
}

/// Multiplier tables shared by every evaluation of the flow on one grid.
#[derive(Debug, Clone)]
pub(crate) struct Tables {
    pub grid: Grid,
    pub s: f64,
    diffusion: Vec<f64>,
    pressure: Vec<f64>,
    derivative: Vec<Vec<f64>>,
    mollifier: Option<Vec<f64>>,
    xi_max: f64,
}

impl Tables {
    pub fn new(grid: Grid, s: f64, epsilon: f64) -> Result<Self> {
        let mollifier = if epsilon > 0.0 {
            Some(MollifierKernel::new(grid, epsilon)?.multiplier().to_vec())
        } else {
            None
        };
        Ok(Self {
            grid,
            s,
            diffusion: lambda_multiplier(&grid, 2.0 - 2.0 * s),
            pressure: pressure_multiplier(&grid, s),
            derivative: (0..grid.dim()).map(|a| gradient_multiplier(&grid, a)).collect(),
            mollifier,
            xi_max: grid.xi_max_retained(),
        })
    }

    pub fn mollify_in_place(&self, u: &mut SpectralField) {
        if let Some(m) = &self.mollifier {
            u.scale_by(m);
        }
    }

    /// Spectral-radius estimate of the flow frozen at `coef`.
    pub fn rho_estimate(&self, coef: &Coefficient) -> f64 {
        coef.sup_v * self.xi_max.powf(2.0 - 2.0 * self.s) + coef.sup_grad_p * self.xi_max
    }

    /// Right-hand side for the spectral state `u`.
    pub fn apply(&self, coef: &Coefficient, u: &SpectralField) -> SpectralField {
        let mut ju = u.clone();
        self.mollify_in_place(&mut ju);
        let diffusion = apply_real_multiplier(&ju, &self.diffusion).to_real_lossy();
        let mut acc: Vec<f64> =
            coef.v.values().iter().zip(diffusion.values()).map(|(v, d)| -v * d).collect();
        for (axis, gp) in coef.grad_p.iter().enumerate() {
            let du = apply_derivative(&ju, &self.derivative[axis]).to_real_lossy();
            for ((a, x), y) in acc.iter_mut().zip(du.values()).zip(gp.values()) {
                *a += x * y;
            }
        }
        let mut out = forward_transform(&RealField::from_raw(self.grid, acc));
        dealias_in_place(&mut out);
        self.mollify_in_place(&mut out);
        out
    }
}

/// A frozen coefficient `v` with its pressure gradient.
#[derive(Debug, Clone)]
pub(crate) struct Coefficient {
    v: RealField,
    grad_p: Vec<RealField>,
    sup_v: f64,
    sup_grad_p: f64,
}

impl Coefficient {
    pub fn new(tables: &Tables, v: &RealField) -> Self {
        let pressure = apply_real_multiplier(&forward_transform(v), &tables.pressure);
        let grad_p: Vec<RealField> = tables
            .derivative
            .iter()
            .map(|m| apply_derivative(&pressure, m).to_real_lossy())
            .collect();
        let sup_grad_p = (0..v.grid().len())
            .map(|i| grad_p.iter().map(|g| g.values()[i].powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        Self { v: v.clone(), grad_p, sup_v: v.max_abs(), sup_grad_p }
    }

    pub fn is_zero(&self) -> bool {
        self.sup_v == 0.0 && self.sup_grad_p == 0.0
    }
}

pub(crate) fn axpy(base: &SpectralField, a: f64, k: &SpectralField) -> SpectralField {
    let coeffs = base.coeffs().iter().zip(k.coeffs()).map(|(b, k)| b + k * a).collect();
    SpectralField::new(*base.grid(), coeffs).expect("same grid")
}

/// `u + dt/6 (k1 + 2 k2 + 2 k3 + k4)`.
pub(crate) fn rk4_combine(u: &SpectralField, dt: f64, k: [&SpectralField; 4]) -> SpectralField {
    let coeffs: Vec<Complex64> = (0..u.coeffs().len())
        .map(|i| {
            let s = k[0].coeffs()[i] + k[1].coeffs()[i] * 2.0 + k[2].coeffs()[i] * 2.0 + k[3].coeffs()[i];
            u.coeffs()[i] + s * (dt / 6.0)
        })
        .collect();
    SpectralField::new(*u.grid(), coeffs).expect("same grid")
}

pub(crate) fn check_state(u: &RealField, t: f64) -> Result<()> {
    if u.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::BlowUp { t, reason: "non-finite value".into() });
    }
    let sup = u.max_abs();
    if sup > BLOW_UP_THRESHOLD {
        return Err(Error::BlowUp { t, reason: format!("sup norm {sup:e} exceeds {BLOW_UP_THRESHOLD:e}") });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct LinearProblem {
    s: f64,
    v: RealField,
    u0: RealField,
    epsilon: f64,
    t_end: f64,
    alpha: f64,
}

impl LinearProblem {
    /// Validates the problem. The diagnostics order `alpha` defaults to
    /// `dim/2 + 1.6`.
    pub fn new(s: f64, v: RealField, u0: RealField, epsilon: f64, t_end: f64) -> Result<Self> {
        validate_s(s)?;
        v.same_grid(&u0)?;
        if v.min() < COEFFICIENT_FLOOR {
            return Err(Error::InvalidProblem(format!("coefficient must be nonnegative, min(v) = {:e}", v.min())));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidProblem(format!("epsilon must be >= 0, got {epsilon}")));
        }
        if epsilon > 0.0 {
            MollifierKernel::new(*v.grid(), epsilon)?;
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidProblem(format!("t_end must be positive, got {t_end}")));
        }
        let alpha = v.grid().dim() as f64 / 2.0 + 1.6;
        Ok(Self { s, v, u0, epsilon, t_end, alpha })
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidExponent { name: "alpha", value: alpha, range: "[0, inf)" });
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn with_initial(&self, u0: RealField) -> Result<Self> {
        self.v.same_grid(&u0)?;
        Ok(Self { u0, ..self.clone() })
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.s, self.v.clone(), self.u0.clone(), epsilon, self.t_end)?.with_alpha(self.alpha)
    }

    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn v(&self) -> &RealField {
        &self.v
    }
    pub fn u0(&self) -> &RealField {
        &self.u0
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn t_end(&self) -> f64 {
        self.t_end
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn grid(&self) -> &Grid {
        self.u0.grid()
    }
}

/// Step size rule `dt = min(safety / rho_est, dt_max)` for classical RK4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeStepPolicy {
    pub safety: f64,
    pub dt_max: f64,
}

impl Default for TimeStepPolicy {
    fn default() -> Self {
        Self { safety: 0.5, dt_max: f64::INFINITY }
    }
}

impl TimeStepPolicy {
    pub fn new(safety: f64, dt_max: f64) -> Result<Self> {
        let p = Self { safety, dt_max };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::InvalidProblem(format!("safety must lie in (0, 1], got {}", self.safety)));
        }
        if self.dt_max.is_nan() || self.dt_max <= 0.0 {
            return Err(Error::InvalidProblem(format!("dt_max must be positive, got {}", self.dt_max)));
        }
        Ok(())
    }

    pub fn dt(&self, rho_estimate: f64) -> f64 {
        if rho_estimate > 0.0 {
            (self.safety / rho_estimate).min(self.dt_max)
        } else {
            self.dt_max
        }
    }
}

/// Evaluates the (mollified when `epsilon > 0`) right-hand side at `u`.
pub fn rhs(u: &RealField, problem: &LinearProblem) -> Result<RealField> {
    u.same_grid(problem.u0())?;
    let tables = Tables::new(*problem.grid(), problem.s, problem.epsilon)?;
    let coef = Coefficient::new(&tables, &problem.v);
    Ok(tables.apply(&coef, &forward_transform(u)).to_real_lossy())
}

/// Output of [`solve_linear`].
#[derive(Debug, Clone)]
pub struct LinearRun {
    pub final_field: RealField,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<(f64, RealField)>,
    pub steps: usize,
    /// Nominal step size of the run.
    pub dt: f64,
}

pub fn solve_linear(problem: &LinearProblem, policy: &TimeStepPolicy, sample_every: usize) -> Result<LinearRun> {
    solve_linear_with_snapshots(problem, policy, sample_every, &[])
}

/// [`solve_linear`] that also lands exactly on each of `snapshot_times`
/// inside `[0, t_end]` and keeps the field there.
pub fn solve_linear_with_snapshots(
    problem: &LinearProblem,
    policy: &TimeStepPolicy,
    sample_every: usize,
    snapshot_times: &[f64],
) -> Result<LinearRun> {
    policy.validate()?;
    let tables = Tables::new(*problem.grid(), problem.s, problem.epsilon)?;
    let coef = Coefficient::new(&tables, &problem.v);
    let dt = policy.dt(tables.rho_estimate(&coef));
    integrate(problem, &tables, &coef, dt, sample_every.max(1), snapshot_times)
}

pub(crate) fn integrate(
    problem: &LinearProblem,
    tables: &Tables,
    coef: &Coefficient,
    dt: f64,
    sample_every: usize,
    snapshot_times: &[f64],
) -> Result<LinearRun> {
    let t_end = problem.t_end;
    let v_norm = sobolev_norm(&problem.v, problem.alpha);
    let mut recorder = Recorder::new(*problem.grid(), problem.alpha);
    let mut snaps: Vec<f64> = snapshot_times.iter().copied().filter(|t| (0.0..=t_end).contains(t)).collect();
    snaps.sort_by(f64::total_cmp);
    snaps.dedup();
    let mut stops: Vec<f64> = snaps.iter().copied().filter(|&t| t > 0.0).collect();
    if stops.last() != Some(&t_end) {
        stops.push(t_end);
    }

    let mut snapshots = Vec::new();
    if snaps.first() == Some(&0.0) {
        snapshots.push((0.0, problem.u0.clone()));
    }
    recorder.record(&problem.u0, 0.0, 0.0, v_norm);

    let mut u = forward_transform(&problem.u0);
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut real = problem.u0.clone();
    for &stop in &stops {
        while t < stop {
            let remaining = stop - t;
            let (h, next_t) = if remaining <= dt * (1.0 + 1e-9) { (remaining, stop) } else { (dt, t + dt) };
            if !coef.is_zero() {
                let k1 = tables.apply(coef, &u);
                let k2 = tables.apply(coef, &axpy(&u, 0.5 * h, &k1));
                let k3 = tables.apply(coef, &axpy(&u, 0.5 * h, &k2));
                let k4 = tables.apply(coef, &axpy(&u, h, &k3));
                u = rk4_combine(&u, h, [&k1, &k2, &k3, &k4]);
                real = u.to_real_lossy();
            }
            t = next_t;
            steps += 1;
            check_state(&real, t)?;
            if steps.is_multiple_of(sample_every) || t == t_end {
                recorder.record(&real, t, h, v_norm);
            }
        }
        if snaps.contains(&stop) {
            snapshots.push((stop, real.clone()));
        }
    }
    Ok(LinearRun { final_field: real, records: recorder.into_records(), snapshots, steps, dt })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositivityReport {
    pub min_over_run: f64,
    pub first_violation_time: Option<f64>,
}

/// Smallest sampled value and the first sample below `-1e-8 * u0_sup`.
pub fn positivity_report(records: &[DiagnosticsRecord], u0_sup: f64) -> PositivityReport {
    let tol = 1e-8 * u0_sup;
    let min_over_run = records.iter().map(|r| r.min_u).fold(f64::INFINITY, f64::min);
    let first_violation_time = records.iter().find(|r| r.min_u < -tol).map(|r| r.t);
    PositivityReport { min_over_run: if records.is_empty() { 0.0 } else { min_over_run }, first_violation_time }
}

/// `max_t ln(|u(t)|_{H^a} / |u0|_{H^a}) / (t * coefficient_norm)` over the
/// records with `t > 0`.
pub fn gronwall_quotient(records: &[DiagnosticsRecord], coefficient_norm: f64) -> f64 {
    let Some(first) = records.first() else { return 0.0 };
    records
        .iter()
        .filter(|r| r.t > first.t)
        .map(|r| log_growth_quotient(first.h_alpha, r.h_alpha, r.t - first.t, coefficient_norm))
        .fold(None, |m: Option<f64>, q| Some(m.map_or(q, |m| m.max(q))))
        .unwrap_or(0.0)
}
