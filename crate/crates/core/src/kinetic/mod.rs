//! Discretized Kuramoto–Sakaguchi density and its finite-volume transport.
//!
//! `f[k][j]` stores cell averages over the `j`-th phase cell of the density of
//! slice `k`, with the quadrature weight of the frequency node folded in, so
//! that `Σ_k Σ_j f[k][j] Δθ = 1`. The conditional density of slice `k` is
//! `f[k][j] / w_k`.

mod characteristics;
mod io;
mod stepper;

use std::f64::consts::{PI, TAU};

use log::info;
use serde::{Deserialize, Serialize};

pub use characteristics::{characteristics, OrderSeries};
pub use io::{read_checkpoint, read_initial_csv, write_checkpoint, write_initial_csv};
pub use stepper::{
    cfl_dt, velocity_field, RunStats, SampleContext, Scheme, Stepper, StepperConfig, Trajectory,
};

use crate::frequency::FrequencyDensity;
use crate::quadrature::gauss_legendre;
use crate::{Error, Result};

/// Periodic phase grid with cell centers `θ_j = (j + ½) Δθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    n_theta: usize,
    dtheta: f64,
    cos_center: Vec<f64>,
    sin_center: Vec<f64>,
    cos_edge: Vec<f64>,
    sin_edge: Vec<f64>,
}

impl PhaseGrid {
    pub const MIN_CELLS: usize = 16;

    pub fn new(n_theta: usize) -> Result<Self> {
        if n_theta < Self::MIN_CELLS {
            return Err(Error::invalid(format!(
                "n_theta must be at least {}, got {n_theta}",
                Self::MIN_CELLS
            )));
        }
        let dtheta = TAU / n_theta as f64;
        let centers: Vec<f64> = (0..n_theta).map(|j| (j as f64 + 0.5) * dtheta).collect();
        let edges: Vec<f64> = (0..n_theta).map(|j| j as f64 * dtheta).collect();
        Ok(Self {
            n_theta,
            dtheta,
            cos_center: centers.iter().map(|t| t.cos()).collect(),
            sin_center: centers.iter().map(|t| t.sin()).collect(),
            cos_edge: edges.iter().map(|t| t.cos()).collect(),
            sin_edge: edges.iter().map(|t| t.sin()).collect(),
        })
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }

    pub fn center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dtheta
    }

    /// Left edge of cell `j`.
    pub fn edge(&self, j: usize) -> f64 {
        j as f64 * self.dtheta
    }

    pub fn cos_center(&self) -> &[f64] {
        &self.cos_center
    }

    pub fn sin_center(&self) -> &[f64] {
        &self.sin_center
    }

    pub(crate) fn cos_edge(&self) -> &[f64] {
        &self.cos_edge
    }

    pub(crate) fn sin_edge(&self) -> &[f64] {
        &self.sin_edge
    }
}

/// Closed-form conditional densities `ϱ₀(θ)` used to build initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialProfile {
    /// `ϱ₀ ≡ 1/2π`.
    Uniform,
    /// `(1 + 2a cos(θ − θ₀)) / 2π`; its order parameter is `(a, θ₀)`.
    Cosine { amplitude: f64, center: f64 },
    /// `exp(κ cos(θ − θ₀))`, normalized on the grid.
    VonMises { concentration: f64, center: f64 },
    /// `(1 + 2 Σ_n (a_n cos nθ + b_n sin nθ)) / 2π` with `a = cos`, `b = sin`
    /// starting at `n = 1`; its order parameter is `|a_1 + i b_1|`.
    Fourier {
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

impl InitialProfile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialProfile::Uniform => Ok(()),
            InitialProfile::Cosine { amplitude, center } => {
                if !(0.0..=0.5).contains(&amplitude) || !center.is_finite() {
                    return Err(Error::invalid(format!(
                        "cosine profile needs amplitude in [0, 1/2] for positivity, got {amplitude}"
                    )));
                }
                Ok(())
            }
            InitialProfile::VonMises {
                concentration,
                center,
            } => {
                if !(concentration >= 0.0 && concentration.is_finite() && center.is_finite()) {
                    return Err(Error::invalid(
                        "von Mises concentration must be nonnegative",
                    ));
                }
                Ok(())
            }
            InitialProfile::Fourier { .. } => {
                let min = (0..4096)
                    .map(|i| self.eval(TAU * i as f64 / 4096.0))
                    .fold(f64::INFINITY, f64::min);
                if !(min >= 0.0) {
                    return Err(Error::invalid(format!(
                        "Fourier profile is negative somewhere (min {min:.3e})"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            InitialProfile::Uniform => 1.0 / TAU,
            InitialProfile::Cosine { amplitude, center } => {
                (1.0 + 2.0 * amplitude * (theta - center).cos()) / TAU
            }
            // unnormalized; projection renormalizes
            InitialProfile::VonMises {
                concentration,
                center,
            } => (concentration * ((theta - center).cos() - 1.0)).exp(),
            InitialProfile::Fourier { cos, sin } => {
                let mut v = 1.0;
                for (n, a) in cos.iter().enumerate() {
                    v += 2.0 * a * ((n + 1) as f64 * theta).cos();
                }
                for (n, b) in sin.iter().enumerate() {
                    v += 2.0 * b * ((n + 1) as f64 * theta).sin();
                }
                v / TAU
            }
        }
    }
}

/// Discretized `f(θ, ω, t)` together with the coupling strength.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticState {
    grid: PhaseGrid,
    omegas: Vec<f64>,
    weights: Vec<f64>,
    g_at_nodes: Vec<f64>,
    values: Vec<f64>,
    t: f64,
    coupling: f64,
    last_phi: f64,
}

impl KineticState {
    /// Builds `f₀ = g(ω) ϱ₀(θ)` with `n_omega` frequency nodes. Cell averages
    /// come from 4-point Gauss quadrature per cell; each slice is then scaled to
    /// carry exactly its quadrature weight.
    pub fn from_profile(
        grid: PhaseGrid,
        g: &FrequencyDensity,
        n_omega: usize,
        coupling: f64,
        profile: &InitialProfile,
    ) -> Result<Self> {
        profile.validate()?;
        let cells = project_cells(&grid, |th| profile.eval(th));
        Self::from_slices(grid, g, n_omega, coupling, |_| cells.clone())
    }

    /// Builds a state from per-slice conditional cell values produced by
    /// `slice_values(k)`; each slice is normalized to its quadrature weight.
    pub fn from_slices<F>(
        grid: PhaseGrid,
        g: &FrequencyDensity,
        n_omega: usize,
        coupling: f64,
        mut slice_values: F,
    ) -> Result<Self>
    where
        F: FnMut(usize) -> Vec<f64>,
    {
        check_coupling(coupling)?;
        g.validate()?;
        let nodes = g.quadrature_nodes(n_omega)?;
        let n = grid.n_theta();
        let mut values = Vec::with_capacity(nodes.len() * n);
        for (k, &(_, w)) in nodes.iter().enumerate() {
            let cells = slice_values(k);
            if cells.len() != n {
                return Err(Error::invalid(format!(
                    "slice {k} has {} cells, grid has {n}",
                    cells.len()
                )));
            }
            if let Some(j) = cells.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::invalid(format!(
                    "initial density must be finite and nonnegative (slice {k}, cell {j})"
                )));
            }
            let mass: f64 = cells.iter().sum::<f64>() * grid.dtheta();
            if !(mass > 0.0) {
                return Err(Error::ZeroMassSlice(k));
            }
            values.extend(cells.iter().map(|v| v * w / mass));
        }
        let g_at_nodes = nodes
            .iter()
            .map(|&(om, _)| g.density(om).unwrap_or(1.0))
            .collect();
        let mut state = Self {
            grid,
            omegas: nodes.iter().map(|p| p.0).collect(),
            weights: nodes.iter().map(|p| p.1).collect(),
            g_at_nodes,
            values,
            t: 0.0,
            coupling,
            last_phi: 0.0,
        };
        let op = crate::order::global_order(&state);
        state.last_phi = op.phi;
        Ok(state)
    }

    /// Builds a state from folded cell values laid out row-major by slice.
    /// Values are rescaled to unit total mass (factor logged).
    pub fn from_cells(
        grid: PhaseGrid,
        g: &FrequencyDensity,
        n_omega: usize,
        coupling: f64,
        mut values: Vec<f64>,
    ) -> Result<Self> {
        check_coupling(coupling)?;
        g.validate()?;
        let nodes = g.quadrature_nodes(n_omega)?;
        let n = grid.n_theta();
        if values.len() != nodes.len() * n {
            return Err(Error::invalid(format!(
                "expected {} cell values, got {}",
                nodes.len() * n,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid(format!(
                "cell value {} at flat index {i} is negative or non-finite",
                values[i]
            )));
        }
        for k in 0..nodes.len() {
            if values[k * n..(k + 1) * n].iter().all(|&v| v == 0.0) {
                return Err(Error::ZeroMassSlice(k));
            }
        }
        let total: f64 = values.iter().sum::<f64>() * grid.dtheta();
        if (total - 1.0).abs() > 1e-14 {
            info!(
                "initial cells rescaled by {:.17e} to unit mass",
                1.0 / total
            );
            values.iter_mut().for_each(|v| *v /= total);
        }
        let g_at_nodes = nodes
            .iter()
            .map(|&(om, _)| g.density(om).unwrap_or(1.0))
            .collect();
        let mut state = Self {
            grid,
            omegas: nodes.iter().map(|p| p.0).collect(),
            weights: nodes.iter().map(|p| p.1).collect(),
            g_at_nodes,
            values,
            t: 0.0,
            coupling,
            last_phi: 0.0,
        };
        state.last_phi = crate::order::global_order(&state).phi;
        Ok(state)
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn n_omega(&self) -> usize {
        self.omegas.len()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    /// Quadrature weights `w_k` (density folded in); sums to one.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `g(ω_k)` at each node (1 for the Dirac kind).
    pub fn g_at_nodes(&self) -> &[f64] {
        &self.g_at_nodes
    }

    /// Largest `|ω_k|`.
    pub fn max_abs_omega(&self) -> f64 {
        self.omegas.iter().fold(0.0, |m, w| m.max(w.abs()))
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn set_t(&mut self, t: f64) {
        self.t = t;
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// Last well-defined average phase; reported when `R` drops to zero.
    pub fn last_phi(&self) -> f64 {
        self.last_phi
    }

    pub(crate) fn set_last_phi(&mut self, phi: f64) {
        self.last_phi = phi;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_vec_mut(&mut self) -> &mut Vec<f64> {
        &mut self.values
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        let n = self.grid.n_theta();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn slice_mass(&self, k: usize) -> f64 {
        self.slice(k).iter().sum::<f64>() * self.grid.dtheta()
    }

    pub fn slice_masses(&self) -> Vec<f64> {
        (0..self.n_omega()).map(|k| self.slice_mass(k)).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dtheta()
    }

    /// Phase density `ρ_j = Σ_k f[k][j]`.
    pub fn density(&self) -> Vec<f64> {
        let n = self.grid.n_theta();
        let mut rho = vec![0.0; n];
        for row in self.values.chunks_exact(n) {
            for (r, v) in rho.iter_mut().zip(row) {
                *r += v;
            }
        }
        rho
    }

    /// Conditional density `ϱ(·, ω_k) = f[k] / w_k`.
    pub fn conditional(&self, k: usize) -> Vec<f64> {
        let w = self.weights[k];
        self.slice(k).iter().map(|v| v / w).collect()
    }

    /// Rotates every slice by `s` cells (positive = towards larger θ).
    pub fn rotated(&self, s: usize) -> Self {
        let n = self.grid.n_theta();
        let mut out = self.clone();
        for (dst, src) in out
            .values
            .chunks_exact_mut(n)
            .zip(self.values.chunks_exact(n))
        {
            for j in 0..n {
                dst[(j + s) % n] = src[j];
            }
        }
        out.last_phi = crate::wrap_phase(self.last_phi + s as f64 * self.grid.dtheta());
        out
    }

    /// Smallest cell value over all slices.
    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn check_coupling(k: f64) -> Result<()> {
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::invalid(format!(
            "coupling K must be nonnegative, got {k}"
        )));
    }
    Ok(())
}

/// Cell averages of `f` via 4-point Gauss–Legendre per cell.
pub fn project_cells<F: Fn(f64) -> f64>(grid: &PhaseGrid, f: F) -> Vec<f64> {
    let (x, w) = gauss_legendre(4);
    let h = grid.dtheta();
    (0..grid.n_theta())
        .map(|j| {
            let c = grid.center(j);
            0.5 * x
                .iter()
                .zip(&w)
                .map(|(&x, &w)| w * f(c + 0.5 * h * x))
                .sum::<f64>()
        })
        .collect()
}

/// Uniform ϱ (splay state) helper for tests and presets.
pub fn uniform_cells(grid: &PhaseGrid) -> Vec<f64> {
    vec![1.0 / (2.0 * PI); grid.n_theta()]
}
