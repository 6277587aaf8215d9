use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::frequency::{DensityKind, FrequencyDensity};
use crate::quadrature::integrate_composite;
use crate::{Error, Result};

const PANELS: usize = 8;
const ORDER: usize = 20;
const SCAN: usize = 4000;

/// `H(R) = ∫ g(ω) √(1 − (ω/KR)²) dω`, with the integrand set to zero where
/// `|ω| > KR`. Uses `ω = KR sin s` so the square-root endpoint is smooth.
pub fn self_consistency(g: &FrequencyDensity, k: f64, r: f64) -> f64 {
    let kr = k * r;
    match g.kind() {
        DensityKind::DiracAtZero => 1.0,
        _ => {
            if !(kr > 0.0) {
                return 0.0;
            }
            let m = g.support_bound();
            let s_max = if m >= kr { FRAC_PI_2 } else { (m / kr).asin() };
            let breaks: Vec<f64> = g
                .breakpoints()
                .iter()
                .filter(|b| b.abs() < kr)
                .map(|b| (b / kr).asin())
                .collect();
            let dens = |w: f64| g.density(w).unwrap_or(0.0);
            integrate_composite(
                |s| {
                    let c = s.cos();
                    dens(kr * s.sin()) * kr * c * c
                },
                -s_max,
                s_max,
                &breaks,
                PANELS,
                ORDER,
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundMargin {
    pub bound: f64,
    /// `R − bound`
    pub margin: f64,
    pub pass: bool,
}

impl BoundMargin {
    fn of(r: f64, bound: f64) -> Self {
        Self {
            bound,
            margin: r - bound,
            pass: r >= bound - 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Equilibrium {
    Solution {
        r: f64,
        residual: f64,
        /// `H(1)`, the complete-synchronization probe.
        h_at_one: f64,
        /// `R ≥ √(1 − (M/(KR))²)`
        support_bound: BoundMargin,
        /// `R ≥ m·min_{[−m,m]} g`, when an inner support interval exists.
        inner_bound: Option<BoundMargin>,
    },
    NoSolution {
        h_at_one: f64,
    },
}

/// Largest fixed point of `R = H(R)` on `(M/K, 1]`, by scanning downward from
/// `R = 1` for the first sign change and bisecting to full precision.
pub fn equilibrium_r(g: &FrequencyDensity, k: f64) -> Result<Equilibrium> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid(format!(
            "coupling must be positive, got {k}"
        )));
    }
    let h = |r: f64| self_consistency(g, k, r);
    let h_at_one = h(1.0);
    let m = g.support_bound();
    let lo_end = m / k;
    let phi = |r: f64| r - h(r);
    let found = if phi(1.0) <= 1e-14 {
        Some(1.0)
    } else if lo_end >= 1.0 {
        None
    } else {
        let mut hi = 1.0;
        let mut root = None;
        for i in 1..=SCAN {
            let r = 1.0 - (1.0 - lo_end) * i as f64 / SCAN as f64;
            if r <= lo_end {
                break;
            }
            if phi(r) <= 0.0 {
                let (mut a, mut b) = (r, hi);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if phi(mid) <= 0.0 {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                root = Some(if phi(a).abs() <= phi(b).abs() { a } else { b });
                break;
            }
            hi = r;
        }
        root
    };
    let Some(r) = found else {
        return Ok(Equilibrium::NoSolution { h_at_one });
    };
    let support = if m == 0.0 {
        0.0
    } else {
        (1.0 - (m / (k * r)).powi(2)).max(0.0).sqrt()
    };
    let inner_bound = g
        .inner_support()
        .filter(|&(mm, _)| mm > 0.0)
        .map(|(mm, gmin)| BoundMargin::of(r, mm * gmin));
    Ok(Equilibrium::Solution {
        r,
        residual: phi(r).abs(),
        h_at_one,
        support_bound: BoundMargin::of(r, support),
        inner_bound,
    })
}
