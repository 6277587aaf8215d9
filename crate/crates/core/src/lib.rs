//! Numerical laboratory for the Kuramoto–Sakaguchi kinetic equation
//!
//! ```text
//!   ∂_t f + ∂_θ((ω − K R sin(θ − φ)) f) = 0,   R e^{iφ} = ∬ e^{iθ} f dθ dω
//! ```
//!
//! and for its finite-N particle counterpart, the all-to-all Kuramoto model.
//!
//! The crate is split along the quantities it produces:
//!
//! * [`frequency`]: the natural-frequency density `g(ω)` and its quadrature.
//! * [`kinetic`]: conservative finite-volume transport on a periodic phase grid,
//!   one slice per frequency node, plus characteristic tracing.
//! * [`particle`]: the finite-N model, its gradient-flow potential and
//!   asymptotic classification.
//! * [`order`]: global and local order parameters with the closed-form
//!   expressions for their time derivatives.
//! * [`diagnostics`]: moving-interval masses, Lyapunov functionals, theoretical
//!   constants, comparison ODEs, self-consistency and rate fitting.

// `!(x > 0.0)` also rejects NaN, which is the point of most guards here
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod frequency;
pub mod kinetic;
pub mod order;
pub mod particle;
pub mod quadrature;

pub use error::{Error, Result};
pub use frequency::{DensityKind, FrequencyDensity};
pub use kinetic::{InitialProfile, KineticState, PhaseGrid, Scheme, Stepper, StepperConfig};
pub use order::OrderParams;
pub use particle::ParticleState;

/// Amplitudes at or below this value are treated as `R = 0`; the average
/// phase is then undefined.
pub const TOL_R: f64 = 1e-12;

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(std::f64::consts::TAU);
    // rem_euclid can round up to TAU for tiny negative inputs
    if w >= std::f64::consts::TAU {
        0.0
    } else {
        w
    }
}

/// Signed angular difference `a − b` mapped into `(−π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}
