//! Natural-frequency densities `g(ω)` with compact support `[-M, M]`.
//!
//! Frequencies are frozen along the flow, so the kinetic solver only ever needs
//! `g` through a fixed quadrature: each node becomes one independent transport
//! slice, coupled to the others through the global order parameter.

use std::path::Path;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::quadrature::gauss_legendre;
use crate::{Error, Result};

/// Default node count used for the quadrature stored inside a density.
pub const DEFAULT_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum DensityKind {
    /// Identical oscillators, `g = δ_0`.
    DiracAtZero,
    /// `g = 1/(2ℓ) · 1_{[-ℓ, ℓ]}`.
    Uniform { halfwidth: f64 },
    /// Piecewise-linear density through `(nodes[i], densities[i])`, zero outside.
    Table {
        nodes: Vec<f64>,
        densities: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyDensity {
    kind: DensityKind,
    support: f64,
    quadrature: Vec<(f64, f64)>,
}

impl FrequencyDensity {
    pub fn dirac() -> Self {
        Self {
            kind: DensityKind::DiracAtZero,
            support: 0.0,
            quadrature: vec![(0.0, 1.0)],
        }
    }

    pub fn uniform(halfwidth: f64) -> Result<Self> {
        if !(halfwidth.is_finite() && halfwidth > 0.0) {
            return Err(Error::invalid(format!(
                "uniform halfwidth must be positive, got {halfwidth}"
            )));
        }
        let mut g = Self {
            kind: DensityKind::Uniform { halfwidth },
            support: halfwidth,
            quadrature: Vec::new(),
        };
        g.quadrature = g.quadrature_nodes(DEFAULT_NODES)?;
        Ok(g)
    }

    /// Builds a piecewise-linear density. Densities are renormalized to unit
    /// mass; an all-zero table is kept as is so that callers can flag it.
    pub fn table(nodes: Vec<f64>, densities: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != densities.len() {
            return Err(Error::invalid(
                "table density needs at least two (omega, density) rows",
            ));
        }
        if nodes.iter().chain(&densities).any(|v| !v.is_finite()) {
            return Err(Error::invalid("table density contains non-finite values"));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "table omega column must be strictly increasing",
            ));
        }
        if let Some(i) = densities.iter().position(|&d| d < 0.0) {
            return Err(Error::invalid(format!(
                "negative density {} at omega = {}",
                densities[i], nodes[i]
            )));
        }
        let mass: f64 = nodes
            .windows(2)
            .zip(densities.windows(2))
            .map(|(x, d)| 0.5 * (x[1] - x[0]) * (d[0] + d[1]))
            .sum();
        let densities = if mass > 0.0 {
            info!("table density renormalized by factor {:.17e}", 1.0 / mass);
            densities.iter().map(|d| d / mass).collect()
        } else {
            densities
        };
        let support = nodes[0].abs().max(nodes[nodes.len() - 1].abs());
        let mut g = Self {
            kind: DensityKind::Table { nodes, densities },
            support,
            quadrature: Vec::new(),
        };
        g.quadrature = g.quadrature_nodes(DEFAULT_NODES)?;
        let (_, mean) = g.moments();
        if mass > 0.0 && mean.abs() > 1e-8 {
            warn!("table density has nonzero first moment {mean:e}; results assume zero mean");
        }
        Ok(g)
    }

    /// Loads a table density from CSV with a header row and columns
    /// `omega,density`.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            omega: f64,
            density: f64,
        }
        let mut rdr = csv::Reader::from_path(path)?;
        let mut nodes = Vec::new();
        let mut dens = Vec::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            nodes.push(row.omega);
            dens.push(row.density);
        }
        Self::table(nodes, dens)
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    /// Support bound `M`.
    pub fn support_bound(&self) -> f64 {
        self.support
    }

    pub fn is_dirac(&self) -> bool {
        matches!(self.kind, DensityKind::DiracAtZero)
    }

    /// The stored quadrature, density folded into the weights.
    pub fn quadrature(&self) -> &[(f64, f64)] {
        &self.quadrature
    }

    /// Pointwise density; `None` for the Dirac kind.
    pub fn density(&self, omega: f64) -> Option<f64> {
        match &self.kind {
            DensityKind::DiracAtZero => None,
            DensityKind::Uniform { halfwidth } => Some(if omega.abs() <= *halfwidth {
                0.5 / halfwidth
            } else {
                0.0
            }),
            DensityKind::Table { nodes, densities } => Some(interpolate(nodes, densities, omega)),
        }
    }

    /// Points where `g` is not smooth, for composite quadrature.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            DensityKind::DiracAtZero => vec![0.0],
            DensityKind::Uniform { halfwidth } => vec![-halfwidth, *halfwidth],
            DensityKind::Table { nodes, .. } => nodes.clone(),
        }
    }

    /// Zeroth and first moments evaluated with the stored quadrature.
    pub fn moments(&self) -> (f64, f64) {
        self.quadrature
            .iter()
            .fold((0.0, 0.0), |(m, s), &(x, w)| (m + w, s + w * x))
    }

    /// Errors unless the density has unit mass (the all-zero table case).
    pub fn validate(&self) -> Result<()> {
        let (mass, _) = self.moments();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!(
                "frequency density has mass {mass}, expected 1"
            )));
        }
        Ok(())
    }

    /// `n`-node quadrature with the density folded into the weights. The Dirac
    /// kind always yields the single node `(0, 1)`.
    pub fn quadrature_nodes(&self, n: usize) -> Result<Vec<(f64, f64)>> {
        if n == 0 {
            return Err(Error::invalid("quadrature needs at least one node"));
        }
        match &self.kind {
            DensityKind::DiracAtZero => Ok(vec![(0.0, 1.0)]),
            DensityKind::Uniform { halfwidth } => {
                let (x, w) = gauss_legendre(n);
                Ok(x.iter()
                    .zip(&w)
                    .map(|(&x, &w)| (halfwidth * x, 0.5 * w))
                    .collect())
            }
            DensityKind::Table { nodes, densities } => {
                let a = nodes[0];
                let b = nodes[nodes.len() - 1];
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                let (x, w) = gauss_legendre(n);
                let mut q: Vec<(f64, f64)> = x
                    .iter()
                    .zip(&w)
                    .map(|(&x, &w)| {
                        let om = mid + half * x;
                        (om, half * w * interpolate(nodes, densities, om))
                    })
                    .collect();
                let total: f64 = q.iter().map(|p| p.1).sum();
                if total > 0.0 && (total - 1.0).abs() > 1e-14 {
                    info!("table quadrature weights rescaled by {:.17e}", 1.0 / total);
                    q.iter_mut().for_each(|p| p.1 /= total);
                }
                Ok(q)
            }
        }
    }

    /// Largest `m` with `g > 0` on `(-m, m)` and `min g` over `[-m, m]`.
    pub fn inner_support(&self) -> Option<(f64, f64)> {
        match &self.kind {
            DensityKind::DiracAtZero => None,
            DensityKind::Uniform { halfwidth } => Some((*halfwidth, 0.5 / halfwidth)),
            DensityKind::Table { nodes, densities } => {
                if interpolate(nodes, densities, 0.0) <= 0.0 {
                    return Some((0.0, 0.0));
                }
                let right = nodes
                    .iter()
                    .zip(densities)
                    .find(|(&x, &d)| x > 0.0 && d <= 0.0)
                    .map(|(&x, _)| x)
                    .unwrap_or(nodes[nodes.len() - 1]);
                let left = nodes
                    .iter()
                    .zip(densities)
                    .rev()
                    .find(|(&x, &d)| x < 0.0 && d <= 0.0)
                    .map(|(&x, _)| -x)
                    .unwrap_or(-nodes[0]);
                let m = right.min(left).max(0.0);
                let mut min_g =
                    interpolate(nodes, densities, m).min(interpolate(nodes, densities, -m));
                for (&x, &d) in nodes.iter().zip(densities) {
                    if x.abs() <= m {
                        min_g = min_g.min(d);
                    }
                }
                Some((m, min_g))
            }
        }
    }

    /// Draws `n` frequencies; a pure function of `(self, n, seed)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::invalid("sample size must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match &self.kind {
            DensityKind::DiracAtZero => Ok(vec![0.0; n]),
            DensityKind::Uniform { halfwidth } => Ok((0..n)
                .map(|_| rng.gen_range(-halfwidth..=*halfwidth))
                .collect()),
            DensityKind::Table { nodes, densities } => {
                let areas: Vec<f64> = nodes
                    .windows(2)
                    .zip(densities.windows(2))
                    .map(|(x, d)| 0.5 * (x[1] - x[0]) * (d[0] + d[1]))
                    .collect();
                let total: f64 = areas.iter().sum();
                if !(total > 0.0) {
                    return Err(Error::invalid(
                        "cannot sample from a zero-mass table density",
                    ));
                }
                let mut cum = Vec::with_capacity(areas.len() + 1);
                cum.push(0.0);
                for a in &areas {
                    cum.push(cum.last().unwrap() + a / total);
                }
                Ok((0..n)
                    .map(|_| {
                        let u: f64 = rng.gen();
                        let seg = cum.partition_point(|&c| c <= u).clamp(1, areas.len()) - 1;
                        let target = (u - cum[seg]) * total;
                        invert_trapezoid(
                            nodes[seg],
                            nodes[seg + 1],
                            densities[seg],
                            densities[seg + 1],
                            target,
                        )
                    })
                    .collect())
            }
        }
    }
}

fn interpolate(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    if x < nodes[0] || x > nodes[n - 1] {
        return 0.0;
    }
    let i = nodes.partition_point(|&v| v <= x).clamp(1, n - 1);
    let (x0, x1) = (nodes[i - 1], nodes[i]);
    let s = (x - x0) / (x1 - x0);
    values[i - 1] + s * (values[i] - values[i - 1])
}

/// Position in `[x0, x1]` where the area under the linear density reaches `target`.
fn invert_trapezoid(x0: f64, x1: f64, d0: f64, d1: f64, target: f64) -> f64 {
    let h = x1 - x0;
    let slope = (d1 - d0) / h;
    let s = if slope.abs() < 1e-14 * (d0.abs() + d1.abs() + 1.0) {
        if d0 > 0.0 {
            target / d0
        } else {
            0.0
        }
    } else {
        // d0 s + slope s² / 2 = target
        let disc = (d0 * d0 + 2.0 * slope * target).max(0.0);
        (disc.sqrt() - d0) / slope
    };
    (x0 + s.clamp(0.0, h)).clamp(x0, x1)
}
