//! Quantities the synchronization estimates are phrased in: moving-interval
//! masses, Lyapunov functionals, closed-form constants, comparison ODEs, the
//! equilibrium self-consistency equation, and exponential rate fits.

mod comparison;
mod constants;
mod equilibrium;
mod fit;
mod intervals;
mod record;

pub use comparison::{barrier_solve, crossing_time, riccati_horizon, riccati_rhs, riccati_solve};
pub use constants::{
    barrier_rate, constants_e, constants_e12, constants_e3, d_bound, eps0_max, epsilon_kappa,
    gamma0_max, hypothesis_check, mstar, mstar_unchecked, r_infinity, r_pm, ConstantsE, EpsKappa,
    HypothesisInputs, HypothesisReport, InequalityCheck,
};
pub use equilibrium::{equilibrium_r, self_consistency, BoundMargin, Equilibrium};
pub use fit::{
    detect_transient, fit_exponential_rate, RateFit, Trend, MIN_FIT_SAMPLES, TRANSIENT_RUN,
};
pub use intervals::{
    arc_integral, gamma_minus_folded, interval_mass, interval_mass_at, lyapunov_l2,
    lyapunov_l2_per_omega, Interval,
};
pub use record::{
    csv_header, finalize, summarize_checks, write_records_csv, BoundCheck, CheckContext,
    CheckSummary, DiagnosticsConfig, DiagnosticsRecord, PHASE_CHECK_MIN_R,
};
