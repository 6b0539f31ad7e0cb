//! Constructive solution of `u_t = div(u grad (-Delta)^(-s) u)` as the limit
//! of linear problems whose coefficient is the previous iterate.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{log_growth_quotient, DiagnosticsRecord, Recorder};
use crate::error::{Error, Result};
use crate::grid::{dealias, forward_transform, RealField, SpectralField};
use crate::linear::{axpy, check_state, rk4_combine, validate_s, Coefficient, Tables, COEFFICIENT_FLOOR};
use crate::mollifier::{mollify, MollifierKernel};
use crate::norms::{lp_norm, sobolev_norm};
use crate::ops::{divergence, fractional_power, gradient, inv_frac_laplacian};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub s: f64,
    pub alpha: f64,
    /// Mollifier radius of the inner flow; 0 disables mollification.
    pub epsilon_moll: f64,
    pub c_gronwall: f64,
    pub tol_picard: f64,
    pub max_outer: usize,
    pub t0_override: Option<f64>,
    /// Mollify the initial datum with the same radius.
    pub mollify_initial: bool,
    pub safety: f64,
    pub dt_max: f64,
    /// Lower bound on the number of steps across the horizon.
    pub min_steps: usize,
    pub sample_every: usize,
}

impl PicardConfig {
    pub fn new(s: f64, alpha: f64) -> Self {
        Self {
            s,
            alpha,
            epsilon_moll: 0.0,
            c_gronwall: 1.0,
            tol_picard: 1e-8,
            max_outer: 30,
            t0_override: None,
            mollify_initial: true,
            safety: 0.5,
            dt_max: f64::INFINITY,
            min_steps: 32,
            sample_every: 1,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        validate_s(self.s).map_err(|e| Error::Validation(e.to_string()))?;
        let floor = dim as f64 / 2.0 + 1.0;
        if !self.alpha.is_finite() || self.alpha <= floor {
            return Err(Error::Validation(format!(
                "alpha must exceed dim/2+1, got {} for dim={dim}",
                self.alpha
            )));
        }
        let checks = [
            (self.tol_picard > 0.0, "tol_picard must be positive"),
            (self.c_gronwall > 0.0 && self.c_gronwall.is_finite(), "c_gronwall must be positive"),
            (self.max_outer >= 1, "max_outer must be at least 1"),
            (self.epsilon_moll >= 0.0 && self.epsilon_moll.is_finite(), "epsilon must be >= 0"),
            (self.safety > 0.0 && self.safety <= 1.0, "safety must lie in (0, 1]"),
            (self.dt_max > 0.0, "dt_max must be positive"),
            (self.min_steps >= 4, "min_steps must be at least 4"),
            (self.sample_every >= 1, "sample_every must be at least 1"),
            (self.t0_override.is_none_or(|t| t > 0.0 && t.is_finite()), "t0 must be positive"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::Validation(msg.into()));
            }
        }
        Ok(())
    }
}

/// `ln 2 / (2 C (1 + |u0|_{H^alpha}))`, or the override when set.
pub fn horizon(u0: &RealField, config: &PicardConfig) -> f64 {
    config
        .t0_override
        .unwrap_or_else(|| horizon_for(sobolev_norm(u0, config.alpha), config.c_gronwall))
}

fn horizon_for(u0_norm: f64, c: f64) -> f64 {
    LN_2 / (2.0 * c * (1.0 + u0_norm))
}

/// Summary of the outer iteration. Entry `k` of the per-iterate vectors
/// describes iterate `k + 2`; iterate 1 is the initial datum frozen in time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardState {
    #[serde(skip)]
    pub iterates: Vec<RealField>,
    pub sup_halpha: Vec<f64>,
    pub deltas: Vec<f64>,
    pub c_meas: Vec<f64>,
    pub min_u: Vec<f64>,
    pub converged: bool,
    /// Constant used for the final horizon.
    pub c_gronwall: f64,
    pub horizon: f64,
    pub dt: f64,
    pub steps: usize,
    pub restarts: usize,
    /// `|u0|_{H^alpha}` of the (possibly mollified) initial datum.
    pub u0_halpha: f64,
}

impl PicardState {
    pub fn outer_iterations(&self) -> usize {
        self.deltas.len()
    }

    /// Per-iterate rows `(n, sup_halpha, delta, c_meas, min_u)`.
    pub fn iterate_rows(&self) -> Vec<IterateRow> {
        (0..self.deltas.len())
            .map(|k| IterateRow {
                n: k + 2,
                sup_halpha: self.sup_halpha[k],
                delta: self.deltas[k],
                c_meas: self.c_meas[k],
                min_u: self.min_u[k],
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateRow {
    pub n: usize,
    pub sup_halpha: f64,
    pub delta: f64,
    pub c_meas: f64,
    pub min_u: f64,
}

/// Fields of one iterate at every time step, with the stage coefficients
/// the next iterate is frozen at.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<RealField>,
    pub records: Vec<DiagnosticsRecord>,
    coefficients: Vec<[Coefficient; 4]>,
}

impl Trajectory {
    pub fn final_field(&self) -> &RealField {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }
}

enum Frozen<'a> {
    Constant(Coefficient),
    Previous(&'a Trajectory),
}

impl Frozen<'_> {
    fn get(&self, step: usize, stage: usize) -> &Coefficient {
        match self {
            Frozen::Constant(c) => c,
            Frozen::Previous(t) => &t.coefficients[step][stage],
        }
    }
}

struct Setup {
    tables: Tables,
    u0: RealField,
    u0_halpha: f64,
    rho: f64,
}

impl Setup {
    fn new(u0: &RealField, config: &PicardConfig) -> Result<Self> {
        config.validate(u0.grid().dim())?;
        if u0.min() < COEFFICIENT_FLOOR {
            return Err(Error::InvalidProblem(format!("initial datum must be nonnegative, min = {:e}", u0.min())));
        }
        let tables = Tables::new(*u0.grid(), config.s, config.epsilon_moll)?;
        let u0 = if config.mollify_initial && config.epsilon_moll > 0.0 {
            mollify(u0, &MollifierKernel::new(*u0.grid(), config.epsilon_moll)?)?
        } else {
            u0.clone()
        };
        let rho = tables.rho_estimate(&Coefficient::new(&tables, &u0));
        Ok(Self { u0_halpha: sobolev_norm(&u0, config.alpha), tables, u0, rho })
    }

    /// Uniform step count across `[0, t0]`. The coefficient is allowed to
    /// double in size, hence the factor 2 on the spectral radius.
    fn steps_for(&self, t0: f64, config: &PicardConfig) -> usize {
        let dt = if self.rho > 0.0 { (config.safety / (2.0 * self.rho)).min(config.dt_max) } else { config.dt_max };
        let n = if dt.is_finite() { (t0 / dt).ceil() as usize } else { 0 };
        n.max(config.min_steps)
    }
}

/// Runs the outer iteration from `u0`, calibrating the Gronwall constant after
/// the first iterate.
pub fn run_picard(u0: &RealField, config: &PicardConfig) -> Result<(Trajectory, PicardState)> {
    let setup = Setup::new(u0, config)?;
    let mut c = config.c_gronwall;
    let mut restarts = 0;
    loop {
        let t0 = config.t0_override.unwrap_or_else(|| horizon_for(setup.u0_halpha, c));
        let steps = setup.steps_for(t0, config);
        let calibrate = config.t0_override.is_none() && restarts == 0;
        match outer_loop(&setup, config, c, t0, steps, calibrate)? {
            Outcome::Restart(c_new) => {
                c = c_new;
                restarts += 1;
            }
            Outcome::Done(done) => {
                let (traj, mut state) = *done;
                state.restarts = restarts;
                return Ok((traj, state));
            }
        }
    }
}

/// Runs the outer iteration on a prescribed horizon and step count, without
/// calibration.
pub fn run_picard_fixed(
    u0: &RealField,
    config: &PicardConfig,
    t0: f64,
    steps: usize,
) -> Result<(Trajectory, PicardState)> {
    let setup = Setup::new(u0, config)?;
    match outer_loop(&setup, config, config.c_gronwall, t0, steps.max(4), false)? {
        Outcome::Done(done) => Ok(*done),
        Outcome::Restart(_) => unreachable!("calibration disabled"),
    }
}

enum Outcome {
    Done(Box<(Trajectory, PicardState)>),
    Restart(f64),
}

fn outer_loop(setup: &Setup, config: &PicardConfig, c: f64, t0: f64, steps: usize, calibrate: bool) -> Result<Outcome> {
    let dt = t0 / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|m| if m == steps { t0 } else { m as f64 * dt }).collect();
    let mut state = PicardState {
        iterates: vec![setup.u0.clone()],
        sup_halpha: Vec::new(),
        deltas: Vec::new(),
        c_meas: Vec::new(),
        min_u: Vec::new(),
        converged: false,
        c_gronwall: c,
        horizon: t0,
        dt,
        steps,
        restarts: 0,
        u0_halpha: setup.u0_halpha,
    };
    let mut prev_states: Vec<RealField> = vec![setup.u0.clone(); steps + 1];
    let mut prev_sup = setup.u0_halpha;
    let mut prev: Option<Trajectory> = None;
    let c_constant = Coefficient::new(&setup.tables, &setup.u0);
    for _ in 0..config.max_outer {
        let frozen = match &prev {
            None => Frozen::Constant(c_constant.clone()),
            Some(t) => Frozen::Previous(t),
        };
        let next = advance(&setup.tables, &frozen, &setup.u0, &times)?;
        let sup = next.states.iter().map(|u| sobolev_norm(u, config.alpha)).fold(0.0, f64::max);
        let delta = next
            .states
            .iter()
            .zip(&prev_states)
            .map(|(a, b)| sobolev_norm(&a.sub(b).expect("same grid"), config.alpha - 1.0))
            .fold(0.0, f64::max);
        let c_meas = next
            .states
            .iter()
            .zip(&times)
            .skip(1)
            .map(|(u, &t)| log_growth_quotient(setup.u0_halpha, sobolev_norm(u, config.alpha), t, prev_sup))
            .fold(0.0, f64::max);
        state.sup_halpha.push(sup);
        state.deltas.push(delta);
        state.c_meas.push(c_meas);
        state.min_u.push(next.states.iter().map(|u| u.min()).fold(f64::INFINITY, f64::min));
        state.iterates.push(next.final_field().clone());

        if calibrate && state.deltas.len() == 1 {
            let c_new = (1.2 * c_meas).max(1.0);
            if c_new > c {
                return Ok(Outcome::Restart(c_new));
            }
        }
        prev_sup = sup;
        prev_states = next.states.clone();
        prev = Some(next);
        if delta < config.tol_picard {
            state.converged = true;
            break;
        }
    }
    if !state.converged {
        return Err(Error::NoConvergence { deltas: state.deltas });
    }
    let mut traj = prev.expect("at least one outer step");
    let mut recorder = Recorder::new(*setup.u0.grid(), config.alpha);
    for (m, (u, &t)) in traj.states.iter().zip(&traj.times).enumerate() {
        if m % config.sample_every == 0 || m == steps {
            recorder.record(u, t, if m == 0 { 0.0 } else { dt }, prev_sup);
        }
    }
    traj.records = recorder.into_records();
    Ok(Outcome::Done(Box::new((traj, state))))
}

/// One linear solve: RK4 in which stage `i` of step `m` uses the frozen
/// coefficient of the same stage of the previous iterate.
fn advance(tables: &Tables, frozen: &Frozen, u0: &RealField, times: &[f64]) -> Result<Trajectory> {
    let steps = times.len() - 1;
    let mut states = Vec::with_capacity(steps + 1);
    let mut coefficients = Vec::with_capacity(steps);
    let mut u = forward_transform(u0);
    let mut c1 = Coefficient::new(tables, u0);
    states.push(u0.clone());
    for m in 0..steps {
        let h = times[m + 1] - times[m];
        let k1 = tables.apply(frozen.get(m, 0), &u);
        let y2 = axpy(&u, 0.5 * h, &k1);
        let k2 = tables.apply(frozen.get(m, 1), &y2);
        let y3 = axpy(&u, 0.5 * h, &k2);
        let k3 = tables.apply(frozen.get(m, 2), &y3);
        let y4 = axpy(&u, h, &k3);
        let k4 = tables.apply(frozen.get(m, 3), &y4);
        let stage = |y: &SpectralField| Coefficient::new(tables, &y.to_real_lossy());
        let (c2, c3, c4) = (stage(&y2), stage(&y3), stage(&y4));
        u = rk4_combine(&u, h, [&k1, &k2, &k3, &k4]);
        let current = u.to_real_lossy();
        check_state(&current, times[m + 1])?;
        let next_c1 = Coefficient::new(tables, &current);
        coefficients.push([c1, c2, c3, c4]);
        c1 = next_c1;
        states.push(current);
    }
    Ok(Trajectory { times: times.to_vec(), states, records: Vec::new(), coefficients })
}

/// `div(u grad p_u)`, or its mollified form
/// `J(grad Ju . grad p_u) - J(u Lambda^(2-2s) Ju)` when `epsilon > 0`,
/// assembled from the public operators.
pub fn nonlinear_operator(u: &RealField, s: f64, epsilon: f64) -> Result<RealField> {
    let p = inv_frac_laplacian(u, s)?;
    if epsilon == 0.0 {
        let flux: Vec<RealField> = gradient(&p)
            .iter()
            .map(|g| dealias(&forward_transform(&u.mul(g).expect("same grid"))).to_real_lossy())
            .collect();
        return divergence(&flux);
    }
    let kernel = MollifierKernel::new(*u.grid(), epsilon)?;
    let ju = mollify(u, &kernel)?;
    let mut transport = RealField::zeros(*u.grid());
    for (gu, gp) in gradient(&ju).iter().zip(gradient(&p).iter()) {
        transport = transport.add(&gu.mul(gp)?)?;
    }
    let diffusion = u.mul(&fractional_power(&ju, 2.0 - 2.0 * s))?;
    let band = |f: &RealField| dealias(&forward_transform(f)).to_real_lossy();
    mollify(&band(&transport).sub(&band(&diffusion))?, &kernel)
}

/// `|d_t u - N(u)|_2` at every sampled step, with `d_t u` from fourth-order
/// finite differences of the stored trajectory (one-sided at the ends).
pub fn nonlinear_residual(traj: &Trajectory, config: &PicardConfig) -> Result<Vec<(f64, f64)>> {
    let m_last = traj.states.len() - 1;
    if m_last < 4 {
        return Err(Error::InvalidProblem("residual needs at least 4 steps".into()));
    }
    let dt = traj.dt();
    let u = &traj.states;
    let combo = |w: &[(usize, f64)]| -> RealField {
        let mut acc = RealField::zeros(*u[0].grid());
        for &(i, c) in w {
            acc = acc.add(&u[i].scale(c / (12.0 * dt))).expect("same grid");
        }
        acc
    };
    let mut out = Vec::new();
    for m in (0..=m_last).filter(|m| m % config.sample_every == 0 || *m == m_last) {
        let ut = if m >= 2 && m + 2 <= m_last {
            combo(&[(m - 2, 1.0), (m - 1, -8.0), (m + 1, 8.0), (m + 2, -1.0)])
        } else if m < 2 {
            combo(&[(m, -25.0), (m + 1, 48.0), (m + 2, -36.0), (m + 3, 16.0), (m + 4, -3.0)])
        } else {
            combo(&[(m, 25.0), (m - 1, -48.0), (m - 2, 36.0), (m - 3, -16.0), (m - 4, 3.0)])
        };
        let n = nonlinear_operator(&u[m], config.s, config.epsilon_moll)?;
        out.push((traj.times[m], lp_norm(&ut.sub(&n)?, 2.0)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeReport {
    /// `sup_t |u_a(t) - u_b(t)|_2 / |delta|_2`.
    pub ratio: f64,
    /// `exp(C_probe * sup_t |u(t)|_{H^alpha} * T0)`.
    pub envelope: f64,
    pub c_probe: f64,
    pub sup_halpha: f64,
    pub horizon: f64,
}

impl ProbeReport {
    /// Growth ratio within a factor 2 of the envelope.
    pub fn within_envelope(&self) -> bool {
        self.ratio <= 2.0 * self.envelope
    }
}

/// Perturbation growth between runs from `u0` and `u0 + delta_seed` on the
/// horizon calibrated for `u0`.
pub fn uniqueness_probe(u0: &RealField, config: &PicardConfig, delta_seed: &RealField) -> Result<ProbeReport> {
    u0.same_grid(delta_seed)?;
    let limit = 1e-6 * (1.0 + sobolev_norm(u0, config.alpha));
    if sobolev_norm(delta_seed, config.alpha) > limit {
        return Err(Error::Validation(format!("perturbation exceeds {limit:e} in H^alpha")));
    }
    let perturbed = u0.add(delta_seed)?;
    if perturbed.min() < COEFFICIENT_FLOOR {
        return Err(Error::Validation("perturbed datum must be nonnegative".into()));
    }
    let (base, state) = run_picard(u0, config)?;
    let fixed = PicardConfig { c_gronwall: state.c_gronwall, ..config.clone() };
    let (other, _) = run_picard_fixed(&perturbed, &fixed, state.horizon, state.steps)?;
    let seed_norm = lp_norm(delta_seed, 2.0);
    let sup_diff = base
        .states
        .iter()
        .zip(&other.states)
        .map(|(a, b)| lp_norm(&a.sub(b).expect("same grid"), 2.0))
        .fold(0.0, f64::max);
    let ratio = if seed_norm == 0.0 && sup_diff == 0.0 { 1.0 } else { sup_diff / seed_norm };
    let sup_halpha = state.sup_halpha.iter().cloned().fold(state.u0_halpha, f64::max);
    let c_probe = state.c_gronwall;
    Ok(ProbeReport {
        ratio,
        envelope: (c_probe * sup_halpha * state.horizon).exp(),
        c_probe,
        sup_halpha,
        horizon: state.horizon,
    })
}
