use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::KineticState;
use crate::order::{order_from_phasor, phasor_sum, OrderParams};
use crate::{Error, Result};

/// Spatial reconstruction used for the edge fluxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// First-order donor cell.
    Upwind,
    /// Piecewise-linear reconstruction with minmod slopes.
    Muscl,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub scheme: Scheme,
    /// Courant number used by [`Stepper::run`]; MUSCL keeps positivity for ≤ ½.
    pub cfl: f64,
    /// Upper cap on the step, also used when every velocity vanishes.
    pub dt_max: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Muscl,
            cfl: 0.4,
            dt_max: 0.05,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::invalid(format!(
                "cfl must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(Error::invalid("dt_max must be positive"));
        }
        Ok(())
    }
}

/// Edge velocities `v[k][j] = ω_k − K R sin(θ_j − φ)` at the left edge `θ_j`
/// of every cell, slice-major. With `R = 0` every entry is `ω_k`.
pub fn velocity_field(state: &KineticState, op: &OrderParams) -> Vec<f64> {
    let grid = state.grid();
    let n = grid.n_theta();
    let kr = state.coupling() * op.r;
    let mut out = Vec::with_capacity(n * state.n_omega());
    for &omega in state.omegas() {
        if kr == 0.0 {
            out.extend(std::iter::repeat_n(omega, n));
        } else {
            out.extend((0..n).map(|j| omega - kr * (grid.edge(j) - op.phi).sin()));
        }
    }
    out
}

/// Admissible step `cfl·Δθ / (max_k |ω_k| + K R)`, capped by `dt_max`.
///
/// `max_k |ω_k| + K R` bounds `|ω_k − K R sin(θ − φ)|` on every edge and never
/// exceeds `M + K`.
pub fn cfl_dt(state: &KineticState, cfl: f64, dt_max: f64) -> f64 {
    let op = crate::order::global_order(state);
    let vmax = state.max_abs_omega() + state.coupling() * op.r;
    if vmax <= 0.0 {
        dt_max
    } else {
        (cfl * state.grid().dtheta() / vmax).min(dt_max)
    }
}

/// Passed to the sampling callback of [`Stepper::run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleContext {
    pub index: usize,
    /// Steps taken since the start of the run.
    pub steps: usize,
    /// Largest step used so far (the CFL step away from sample boundaries).
    pub dt_max_used: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub steps: usize,
    pub dt_min: f64,
    pub dt_max: f64,
    /// `min_n (R(t_{n+1}) − R(t_n))` over consecutive steps.
    pub min_step_dr: f64,
    /// Largest `|m_k(t) − m_k(0)| / m_k(0)` seen over all slices and steps.
    pub max_slice_drift: f64,
    /// Largest `|Σ m_k(t) − Σ m_k(0)|`.
    pub max_total_drift: f64,
    /// Smallest cell value seen.
    pub min_value: f64,
    /// `(t, R)` at the start of every step and at the end of the run.
    pub r_history: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub samples: Vec<T>,
    pub stats: RunStats,
}

/// SSP-RK2 finite-volume stepper. Owns the stage buffers; the state itself is
/// advanced in place.
#[derive(Debug, Clone)]
pub struct Stepper {
    config: StepperConfig,
    stage: Vec<f64>,
    next: Vec<f64>,
}

impl Stepper {
    pub fn new(config: StepperConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            stage: Vec::new(),
            next: Vec::new(),
        })
    }

    pub fn config(&self) -> &StepperConfig {
        &self.config
    }

    pub fn cfl_dt(&self, state: &KineticState) -> f64 {
        cfl_dt(state, self.config.cfl, self.config.dt_max)
    }

    /// One SSP-RK2 step. `(R, φ)` is recomputed from each stage before the
    /// fluxes are formed. Returns the order parameters at the start of the step.
    pub fn step(&mut self, state: &mut KineticState, dt: f64) -> Result<OrderParams> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        let admissible = cfl_dt(state, 1.0, f64::INFINITY);
        if dt > admissible * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, admissible });
        }
        let len = state.values().len();
        self.stage.resize(len, 0.0);
        self.next.resize(len, 0.0);

        let op0 = stage_order(state, state.values());
        euler_stage(
            state,
            state.values(),
            &mut self.stage,
            None,
            dt,
            op0,
            self.config.scheme,
        )?;
        let op1 = stage_order(state, &self.stage);
        let stage = std::mem::take(&mut self.stage);
        let res = euler_stage(
            state,
            &stage,
            &mut self.next,
            Some(state.values()),
            dt,
            op1,
            self.config.scheme,
        );
        self.stage = stage;
        res?;
        std::mem::swap(state.values_vec_mut(), &mut self.next);
        state.set_t(state.t() + dt);
        if op0.defined {
            state.set_last_phi(op0.phi);
        }
        let end = crate::order::global_order(state);
        if end.defined {
            state.set_last_phi(end.phi);
        }
        Ok(op0)
    }

    /// Advances to `t_end` with CFL-adaptive steps, landing exactly on every
    /// sample time `t₀ + i·sample_every` and on `t_end`. `sink` is invoked at
    /// `t₀` and at each sample time.
    pub fn run<T, F>(
        &mut self,
        state: &mut KineticState,
        t_end: f64,
        sample_every: f64,
        mut sink: F,
    ) -> Result<Trajectory<T>>
    where
        F: FnMut(&KineticState, &SampleContext) -> T,
    {
        let t0 = state.t();
        if !(t_end >= t0) {
            return Err(Error::invalid(format!(
                "t_end {t_end} precedes current time {t0}"
            )));
        }
        if !(sample_every > 0.0) {
            return Err(Error::invalid("sample_every must be positive"));
        }
        let m0 = state.slice_masses();
        let total0: f64 = m0.iter().sum();
        let mut stats = RunStats {
            steps: 0,
            dt_min: f64::INFINITY,
            dt_max: 0.0,
            min_step_dr: f64::INFINITY,
            max_slice_drift: 0.0,
            max_total_drift: 0.0,
            min_value: state.min_value(),
            r_history: Vec::new(),
        };
        let mut samples = Vec::new();
        let mut ctx = SampleContext {
            index: 0,
            steps: 0,
            dt_max_used: 0.0,
        };
        samples.push(sink(state, &ctx));

        let mut prev_r: Option<f64> = None;
        let mut i = 1usize;
        loop {
            let target = (t0 + i as f64 * sample_every).min(t_end);
            if target <= t0 || state.t() >= t_end {
                break;
            }
            while state.t() < target {
                let mut dt = self.cfl_dt(state);
                let remaining = target - state.t();
                let snap = dt >= remaining * (1.0 - 1e-9);
                if snap {
                    dt = remaining;
                }
                let op = self.step(state, dt)?;
                if snap {
                    state.set_t(target);
                }
                stats.steps += 1;
                stats.dt_min = stats.dt_min.min(dt);
                stats.dt_max = stats.dt_max.max(dt);
                if let Some(p) = prev_r {
                    stats.min_step_dr = stats.min_step_dr.min(op.r - p);
                }
                prev_r = Some(op.r);
                stats.r_history.push((state.t() - dt, op.r));
                let mut total = 0.0;
                for (k, m_start) in m0.iter().enumerate() {
                    let m = state.slice_mass(k);
                    total += m;
                    stats.max_slice_drift =
                        stats.max_slice_drift.max((m - m_start).abs() / m_start);
                }
                stats.max_total_drift = stats.max_total_drift.max((total - total0).abs());
                stats.min_value = stats.min_value.min(state.min_value());
            }
            ctx.index = samples.len();
            ctx.steps = stats.steps;
            ctx.dt_max_used = stats.dt_max;
            samples.push(sink(state, &ctx));
            if target >= t_end {
                break;
            }
            i += 1;
        }
        let end_r = crate::order::global_order(state).r;
        if let Some(p) = prev_r {
            stats.min_step_dr = stats.min_step_dr.min(end_r - p);
        }
        stats.r_history.push((state.t(), end_r));
        if stats.steps == 0 {
            stats.dt_min = 0.0;
            stats.min_step_dr = 0.0;
        }
        Ok(Trajectory { samples, stats })
    }
}

impl KineticState {
    /// Pure single step; see [`Stepper::step`].
    pub fn step(&self, dt: f64, config: &StepperConfig) -> Result<KineticState> {
        let mut next = self.clone();
        Stepper::new(*config)?.step(&mut next, dt)?;
        Ok(next)
    }
}

/// Order parameters of an arbitrary cell array laid out like `state`.
fn stage_order(state: &KineticState, values: &[f64]) -> OrderParams {
    let (c, s) = phasor_sum(state, values);
    let h = state.grid().dtheta();
    order_from_phasor(c * h, s * h, state.last_phi())
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// `dst = src + dt·L(src)`, or `½ base + ½ (src + dt·L(src))` when `base` is given.
fn euler_stage(
    state: &KineticState,
    src: &[f64],
    dst: &mut [f64],
    base: Option<&[f64]>,
    dt: f64,
    op: OrderParams,
    scheme: Scheme,
) -> Result<()> {
    let grid = state.grid();
    let n = grid.n_theta();
    let lambda = dt / grid.dtheta();
    let kr = state.coupling() * op.r;
    let (cphi, sphi) = (op.phi.cos(), op.phi.sin());
    let (cos_e, sin_e) = (grid.cos_edge(), grid.sin_edge());
    let omegas = state.omegas();

    dst.par_chunks_mut(n)
        .enumerate()
        .try_for_each(|(k, out)| -> Result<()> {
            let f = &src[k * n..(k + 1) * n];
            let omega = omegas[k];
            let mut ext = Vec::with_capacity(n + 4);
            ext.extend_from_slice(&f[n - 2..]);
            ext.extend_from_slice(f);
            ext.extend_from_slice(&f[..2]);
            let mut flux = vec![0.0; n + 1];
            for j in 0..n {
                // sin(θ_edge − φ)
                let s = sin_e[j] * cphi - cos_e[j] * sphi;
                let v = omega - kr * s;
                let (l, r) = (ext[j + 1], ext[j + 2]);
                let face = match scheme {
                    Scheme::Upwind => {
                        if v > 0.0 {
                            l
                        } else {
                            r
                        }
                    }
                    Scheme::Muscl => {
                        if v > 0.0 {
                            l + 0.5 * minmod(l - ext[j], r - l)
                        } else {
                            r - 0.5 * minmod(r - l, ext[j + 3] - r)
                        }
                    }
                };
                let fl = v * face;
                if !fl.is_finite() {
                    return Err(Error::NonFinite { slice: k, cell: j });
                }
                flux[j] = fl;
            }
            flux[n] = flux[0];
            match base {
                None => {
                    for j in 0..n {
                        out[j] = f[j] - lambda * (flux[j + 1] - flux[j]);
                    }
                }
                Some(b) => {
                    let b = &b[k * n..(k + 1) * n];
                    for j in 0..n {
                        out[j] = 0.5 * b[j] + 0.5 * (f[j] - lambda * (flux[j + 1] - flux[j]));
                    }
                }
            }
            Ok(())
        })
}
