//! Global and local order parameters of a [`KineticState`] and the closed-form
//! expressions for their time derivatives.
//!
//! Every `∫ … ρ dθ` is evaluated with the midpoint rule on cell averages.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kinetic::KineticState;
use crate::{wrap_phase, Error, Result, TOL_R};

/// Amplitude `R ∈ [0, 1]` and average phase `φ ∈ [0, 2π)`. When `R ≤ TOL_R`
/// the phase is carried over from the caller and `defined` is false.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderParams {
    pub r: f64,
    pub phi: f64,
    pub defined: bool,
}

impl OrderParams {
    /// `φ`, or an error when the amplitude is at or below tolerance.
    pub fn phase(&self) -> Result<f64> {
        if self.defined {
            Ok(self.phi)
        } else {
            Err(Error::UndefinedPhase { r: self.r })
        }
    }
}

/// Builds order parameters from the phasor `c + i s`.
pub fn order_from_phasor(c: f64, s: f64, fallback_phi: f64) -> OrderParams {
    let r = c.hypot(s);
    if r > TOL_R {
        OrderParams {
            r,
            phi: wrap_phase(s.atan2(c)),
            defined: true,
        }
    } else {
        OrderParams {
            r,
            phi: fallback_phi,
            defined: false,
        }
    }
}

/// `R e^{iφ} = ∬ e^{iθ} f dθ dω`.
pub fn global_order(state: &KineticState) -> OrderParams {
    let (c, s) = phasor_sum(state, state.values());
    let h = state.grid().dtheta();
    order_from_phasor(c * h, s * h, state.last_phi())
}

/// Unscaled `Σ_k Σ_j f[k][j] e^{iθ_j}`; per-slice partials are summed in a
/// fixed order so the result does not depend on the thread count.
pub(crate) fn phasor_sum(state: &KineticState, values: &[f64]) -> (f64, f64) {
    let grid = state.grid();
    let n = grid.n_theta();
    let (cos_c, sin_c) = (grid.cos_center(), grid.sin_center());
    let partial: Vec<(f64, f64)> = values
        .par_chunks(n)
        .map(|row| {
            row.iter()
                .zip(cos_c.iter().zip(sin_c))
                .fold((0.0, 0.0), |(c, s), (v, (co, si))| (c + v * co, s + v * si))
        })
        .collect();
    partial
        .iter()
        .fold((0.0, 0.0), |(c, s), p| (c + p.0, s + p.1))
}

/// Order parameters `(R_ω, φ_ω)` of the conditional density of slice `k`.
pub fn local_order(state: &KineticState, k: usize) -> Result<OrderParams> {
    if k >= state.n_omega() {
        return Err(Error::invalid(format!("slice {k} out of range")));
    }
    let grid = state.grid();
    let row = state.slice(k);
    let mass: f64 = row.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::ZeroMassSlice(k));
    }
    let (mut c, mut s) = (0.0, 0.0);
    for ((v, co), si) in row.iter().zip(grid.cos_center()).zip(grid.sin_center()) {
        c += v * co;
        s += v * si;
    }
    Ok(order_from_phasor(c / mass, s / mass, state.last_phi()))
}

/// Quadrature moments about the current phase `φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMoments {
    pub op: OrderParams,
    /// `∬ sin(θ − φ) ω f`
    pub sin_omega: f64,
    /// `∬ cos(θ − φ) ω f`
    pub cos_omega: f64,
    /// `∫ sin(θ − φ) ρ`
    pub sin_rho: f64,
    /// `∫ sin²(θ − φ) ρ`
    pub sin2_rho: f64,
    /// `∫ sin 2(θ − φ) ρ`
    pub sin_double_rho: f64,
}

/// Evaluates all moments in one pass. Fails when `φ` is undefined.
pub fn phase_moments(state: &KineticState) -> Result<PhaseMoments> {
    let op = global_order(state);
    let phi = op.phase()?;
    let grid = state.grid();
    let n = grid.n_theta();
    let (cp, sp) = (phi.cos(), phi.sin());
    // sin(θ−φ), cos(θ−φ) per cell
    let sd: Vec<f64> = grid
        .sin_center()
        .iter()
        .zip(grid.cos_center())
        .map(|(s, c)| s * cp - c * sp)
        .collect();
    let cd: Vec<f64> = grid
        .cos_center()
        .iter()
        .zip(grid.sin_center())
        .map(|(c, s)| c * cp + s * sp)
        .collect();
    let rows: Vec<[f64; 5]> = state
        .values()
        .par_chunks(n)
        .zip(state.omegas().par_iter())
        .map(|(row, &w)| {
            let mut acc = [0.0; 5];
            for ((v, s), c) in row.iter().zip(&sd).zip(&cd) {
                acc[0] += w * s * v;
                acc[1] += w * c * v;
                acc[2] += s * v;
                acc[3] += s * s * v;
                acc[4] += 2.0 * s * c * v;
            }
            acc
        })
        .collect();
    let mut acc = [0.0; 5];
    for r in &rows {
        for (a, b) in acc.iter_mut().zip(r) {
            *a += b;
        }
    }
    let h = grid.dtheta();
    Ok(PhaseMoments {
        op,
        sin_omega: acc[0] * h,
        cos_omega: acc[1] * h,
        sin_rho: acc[2] * h,
        sin2_rho: acc[3] * h,
        sin_double_rho: acc[4] * h,
    })
}

/// `Ṙ = −∬ sin(θ−φ) ω f + K R ∫ sin²(θ−φ) ρ`.
pub fn rdot_formula(state: &KineticState) -> Result<f64> {
    let m = phase_moments(state)?;
    Ok(-m.sin_omega + state.coupling() * m.op.r * m.sin2_rho)
}

/// `φ̇ = (1/R) ∬ cos(θ−φ) ω f − (K/2) ∫ sin 2(θ−φ) ρ`.
pub fn phidot_formula(state: &KineticState) -> Result<f64> {
    let m = phase_moments(state)?;
    Ok(m.cos_omega / m.op.r - 0.5 * state.coupling() * m.sin_double_rho)
}

/// `|φ̇| ≤ M/R + K(1 − R)`.
pub fn phidot_bound(r: f64, m: f64, k: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!(
            "phase-speed bound needs R > 0, got {r}"
        )));
    }
    Ok(m / r + k * (1.0 - r))
}

/// `V_k = K/2 (1 − R²)`.
pub fn kinetic_potential(state: &KineticState) -> f64 {
    let r = global_order(state).r;
    0.5 * state.coupling() * (1.0 - r * r)
}

/// `(K R)² ∫ sin²(θ−φ) ρ`, the rate at which `V_k` decreases for identical
/// oscillators. Zero when `φ` is undefined.
pub fn dissipation_rate(state: &KineticState) -> f64 {
    match phase_moments(state) {
        Ok(m) => {
            let kr = state.coupling() * m.op.r;
            kr * kr * m.sin2_rho
        }
        Err(_) => 0.0,
    }
}
