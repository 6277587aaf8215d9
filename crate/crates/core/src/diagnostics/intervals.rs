use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::kinetic::KineticState;
use crate::order::global_order;
use crate::{Error, Result};

/// Moving interval attached to the average phase `φ(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Interval {
    /// `(φ − δ, φ + δ)`
    Iplus { delta: f64 },
    /// `(φ + π − δ, φ + π + δ)`
    Iminus { delta: f64 },
    /// `(φ − π/2 + γ, φ + π/2 − γ)`, equal to `I⁺_{π/2−γ}`
    Lplus { gamma: f64 },
    /// `(φ + π/2 + γ, φ + 3π/2 − γ)`, equal to `I⁻_{π/2−γ}`
    Lminus { gamma: f64 },
}

impl Interval {
    pub fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            Interval::Iplus { delta } | Interval::Iminus { delta } => ("delta", delta),
            Interval::Lplus { gamma } | Interval::Lminus { gamma } => ("gamma", gamma),
        };
        if !(v > 0.0 && v < FRAC_PI_2) {
            return Err(Error::invalid(format!(
                "interval {name} = {v} must lie in (0, π/2)"
            )));
        }
        Ok(())
    }

    /// Center offset from `φ` and half-width.
    fn center_halfwidth(&self) -> (f64, f64) {
        match *self {
            Interval::Iplus { delta } => (0.0, delta),
            Interval::Iminus { delta } => (PI, delta),
            Interval::Lplus { gamma } => (0.0, FRAC_PI_2 - gamma),
            Interval::Lminus { gamma } => (PI, FRAC_PI_2 - gamma),
        }
    }

    /// Lifted endpoints `(a, b)` for the given phase; `b − a` is the length.
    pub fn bounds(&self, phi: f64) -> (f64, f64) {
        let (c, w) = self.center_halfwidth();
        (phi + c - w, phi + c + w)
    }

    pub fn length(&self) -> f64 {
        2.0 * self.center_halfwidth().1
    }

    /// Short stable name used for CSV columns, e.g. `Iplus_0.2`.
    pub fn label(&self) -> String {
        match *self {
            Interval::Iplus { delta } => format!("Iplus_{delta}"),
            Interval::Iminus { delta } => format!("Iminus_{delta}"),
            Interval::Lplus { gamma } => format!("Lplus_{gamma}"),
            Interval::Lminus { gamma } => format!("Lminus_{gamma}"),
        }
    }
}

/// `∫_a^b u` for the 2π-periodic piecewise-constant function with cell values
/// `row` on cells of width `h`. End cells contribute their covered fraction.
pub fn arc_integral(row: &[f64], h: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let total: f64 = row.iter().sum::<f64>() * h;
    antiderivative(row, h, total, b) - antiderivative(row, h, total, a)
}

fn antiderivative(row: &[f64], h: f64, total: f64, x: f64) -> f64 {
    let turns = (x / TAU).floor();
    let y = x - turns * TAU;
    let n = row.len();
    let j = ((y / h) as usize).min(n - 1);
    let partial: f64 = row[..j].iter().sum::<f64>() * h + row[j] * (y - j as f64 * h);
    turns * total + partial
}

fn phase_of(state: &KineticState) -> Result<f64> {
    global_order(state).phase()
}

/// `M(S) = ∫_ℝ ∫_S f dθ dω` over the moving interval.
pub fn interval_mass(state: &KineticState, interval: &Interval) -> Result<f64> {
    Ok(interval_mass_at(state, interval, phase_of(state)?))
}

/// [`interval_mass`] with the phase supplied by the caller.
pub fn interval_mass_at(state: &KineticState, interval: &Interval, phi: f64) -> f64 {
    let (a, b) = interval.bounds(phi);
    arc_integral(&state.density(), state.grid().dtheta(), a, b)
}

/// `Λ = ∫_S |ρ|² dθ`.
pub fn lyapunov_l2(state: &KineticState, interval: &Interval) -> Result<f64> {
    let phi = phase_of(state)?;
    let sq: Vec<f64> = state.density().iter().map(|r| r * r).collect();
    let (a, b) = interval.bounds(phi);
    Ok(arc_integral(&sq, state.grid().dtheta(), a, b))
}

/// `Γ_ω = ∫_S |f(·, ω)|² dθ` for every frequency node, with
/// `f(θ, ω_k) = g(ω_k) ϱ(θ, ω_k)`.
pub fn lyapunov_l2_per_omega(state: &KineticState, interval: &Interval) -> Result<Vec<f64>> {
    let phi = phase_of(state)?;
    let (a, b) = interval.bounds(phi);
    let h = state.grid().dtheta();
    Ok((0..state.n_omega())
        .map(|k| {
            let scale = state.g_at_nodes()[k] / state.weights()[k];
            let sq: Vec<f64> = state.slice(k).iter().map(|v| (v * scale).powi(2)).collect();
            arc_integral(&sq, h, a, b)
        })
        .collect())
}

/// `∫ g²(ω) Γ⁻_ω dω` with `Γ⁻_ω = ∫_{L⁻_γ} |ϱ|²`, folded with the frequency
/// quadrature.
pub fn gamma_minus_folded(state: &KineticState, gamma: f64) -> Result<f64> {
    let interval = Interval::Lminus { gamma };
    let phi = phase_of(state)?;
    let (a, b) = interval.bounds(phi);
    let h = state.grid().dtheta();
    Ok((0..state.n_omega())
        .map(|k| {
            let w = state.weights()[k];
            let sq: Vec<f64> = state.slice(k).iter().map(|v| (v / w).powi(2)).collect();
            w * state.g_at_nodes()[k] * arc_integral(&sq, h, a, b)
        })
        .sum())
}
