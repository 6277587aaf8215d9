use std::f64::consts::FRAC_PI_3;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::constants::constants_e12;
use super::intervals::{
    gamma_minus_folded, interval_mass_at, lyapunov_l2, lyapunov_l2_per_omega, Interval,
};
use crate::kinetic::KineticState;
use crate::order::{kinetic_potential, phase_moments};
use crate::Result;

/// Amplitude below which phase-rate checks are skipped.
pub const PHASE_CHECK_MIN_R: f64 = 0.05;

/// What to evaluate at every sample.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Intervals whose mass is recorded.
    #[serde(default)]
    pub intervals: Vec<Interval>,
    /// Half-width `δ` of `I⁻_δ` for `Λ`.
    #[serde(default)]
    pub lambda_delta: Option<f64>,
    /// `γ₀` of `L⁺_{γ₀}` for the per-frequency `Γ⁺`.
    #[serde(default)]
    pub gamma_plus: Option<f64>,
    /// `γ` of `L⁻_γ` for the folded `Γ⁻`.
    #[serde(default)]
    pub gamma_minus: Option<f64>,
    /// `γ ∈ (π/3, π/2)` used for `E₁`, `E₂` in the mass/amplitude sandwich.
    #[serde(default)]
    pub sandwich_gamma: Option<f64>,
}

impl DiagnosticsConfig {
    pub fn validate(&self) -> Result<()> {
        for i in &self.intervals {
            i.validate()?;
        }
        if let Some(d) = self.lambda_delta {
            Interval::Iminus { delta: d }.validate()?;
        }
        if let Some(g) = self.gamma_plus {
            Interval::Lplus { gamma: g }.validate()?;
        }
        if let Some(g) = self.gamma_minus {
            Interval::Lminus { gamma: g }.validate()?;
        }
        if let Some(g) = self.sandwich_gamma {
            constants_e12(1.0, 0.0, 1.0, g)?;
        }
        Ok(())
    }
}

/// One time sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub r: f64,
    pub phi: f64,
    pub phi_defined: bool,
    /// Same order as [`DiagnosticsConfig::intervals`]; NaN when `φ` is undefined.
    pub masses: Vec<f64>,
    /// `M(L⁺_{π/3})`, kept for the sandwich check.
    pub mass_l_pi3: f64,
    pub lambda: Option<f64>,
    pub gamma_plus: Vec<f64>,
    pub gamma_minus: Option<f64>,
    pub v_k: f64,
    pub dissipation: f64,
    pub rdot_formula: f64,
    pub phidot_formula: f64,
    pub rdot_measured: f64,
    pub phidot_measured: f64,
    /// Unwrapped phase used for differencing.
    pub phi_unwrapped: f64,
}

impl DiagnosticsRecord {
    /// Evaluates every configured diagnostic on `state`.
    pub fn of(state: &KineticState, cfg: &DiagnosticsConfig) -> Self {
        let nan = f64::NAN;
        let moments = phase_moments(state).ok();
        let k = state.coupling();
        let (r, phi, defined) = match &moments {
            Some(m) => (m.op.r, m.op.phi, true),
            None => {
                let op = crate::order::global_order(state);
                (op.r, op.phi, false)
            }
        };
        let masses = cfg
            .intervals
            .iter()
            .map(|i| {
                if defined {
                    interval_mass_at(state, i, phi)
                } else {
                    nan
                }
            })
            .collect();
        let mass_l_pi3 = if defined {
            interval_mass_at(state, &Interval::Lplus { gamma: FRAC_PI_3 }, phi)
        } else {
            nan
        };
        let lambda = cfg
            .lambda_delta
            .map(|d| lyapunov_l2(state, &Interval::Iminus { delta: d }).unwrap_or(nan));
        let gamma_plus = cfg
            .gamma_plus
            .map(|g| {
                lyapunov_l2_per_omega(state, &Interval::Lplus { gamma: g })
                    .unwrap_or_else(|_| vec![nan; state.n_omega()])
            })
            .unwrap_or_default();
        let gamma_minus = cfg
            .gamma_minus
            .map(|g| gamma_minus_folded(state, g).unwrap_or(nan));
        let (rdot_formula, phidot_formula, dissipation) = match &moments {
            Some(m) => (
                -m.sin_omega + k * m.op.r * m.sin2_rho,
                m.cos_omega / m.op.r - 0.5 * k * m.sin_double_rho,
                (k * m.op.r).powi(2) * m.sin2_rho,
            ),
            None => (nan, nan, 0.0),
        };
        Self {
            t: state.t(),
            r,
            phi,
            phi_defined: defined,
            masses,
            mass_l_pi3,
            lambda,
            gamma_plus,
            gamma_minus,
            v_k: kinetic_potential(state),
            dissipation,
            rdot_formula,
            phidot_formula,
            rdot_measured: nan,
            phidot_measured: nan,
            phi_unwrapped: phi,
        }
    }
}

/// Run-level data the post-pass needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckContext {
    pub m: f64,
    pub k: f64,
    /// Largest time step taken.
    pub dt: f64,
    pub dtheta: f64,
    /// Identical oscillators (`g = δ`): enables the energy checks.
    pub identical: bool,
    pub sandwich_gamma: Option<f64>,
}

impl CheckContext {
    /// `10·(dt + Δθ²)`
    pub fn base_tol(&self) -> f64 {
        10.0 * (self.dt + self.dtheta * self.dtheta)
    }
}

/// Outcome of one inequality at one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub t: f64,
    pub value: f64,
    pub bound: f64,
    /// `bound − value`; nonnegative means satisfied.
    pub margin: f64,
    pub pass: bool,
}

impl BoundCheck {
    fn upper(name: &str, t: f64, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            t,
            value,
            bound,
            margin: bound - value,
            pass: value <= bound,
        }
    }
}

/// Worst margin and failure count per check name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub evaluated: usize,
    pub failed: usize,
    pub worst_margin: f64,
    pub worst_t: f64,
}

pub fn summarize_checks(checks: &[BoundCheck]) -> Vec<CheckSummary> {
    let mut out: Vec<CheckSummary> = Vec::new();
    for c in checks {
        let entry = match out.iter_mut().position(|s| s.name == c.name) {
            Some(i) => &mut out[i],
            None => {
                out.push(CheckSummary {
                    name: c.name.clone(),
                    evaluated: 0,
                    failed: 0,
                    worst_margin: f64::INFINITY,
                    worst_t: c.t,
                });
                out.last_mut().unwrap()
            }
        };
        entry.evaluated += 1;
        if !c.pass {
            entry.failed += 1;
        }
        if c.margin < entry.worst_margin {
            entry.worst_margin = c.margin;
            entry.worst_t = c.t;
        }
    }
    out
}

/// Fills the measured derivatives (central differences, one-sided at the
/// ends) and evaluates the per-sample bound checks.
pub fn finalize(records: &mut [DiagnosticsRecord], ctx: &CheckContext) -> Vec<BoundCheck> {
    let n = records.len();
    for i in 1..n {
        let prev = records[i - 1].phi_unwrapped;
        let cur = &mut records[i];
        if cur.phi_defined {
            cur.phi_unwrapped = prev + crate::angle_diff(cur.phi, prev);
        } else {
            cur.phi_unwrapped = prev;
        }
    }
    if n >= 2 {
        for i in 0..n {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            let dt = records[b].t - records[a].t;
            let rdot = (records[b].r - records[a].r) / dt;
            let both = records[a].phi_defined && records[b].phi_defined;
            let pdot = if both {
                (records[b].phi_unwrapped - records[a].phi_unwrapped) / dt
            } else {
                f64::NAN
            };
            records[i].rdot_measured = rdot;
            records[i].phidot_measured = pdot;
        }
    }

    let tol = ctx.base_tol();
    let mut checks = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        let t = rec.t;
        for (j, &m) in rec.masses.iter().enumerate() {
            if m.is_finite() {
                let name = format!("mass_range[{j}]");
                checks.push(BoundCheck::upper(&name, t, m, 1.0 + 1e-10));
                checks.push(BoundCheck::upper(&name, t, -m, 0.0));
            }
        }
        if n < 2 {
            continue;
        }
        checks.push(BoundCheck::upper(
            "rdot_lipschitz",
            t,
            rec.rdot_measured.abs(),
            ctx.m + ctx.k + 0.01,
        ));
        if rec.rdot_formula.is_finite() {
            checks.push(BoundCheck::upper(
                "rdot_formula",
                t,
                (rec.rdot_measured - rec.rdot_formula).abs(),
                tol * (ctx.m + ctx.k),
            ));
        }
        if rec.r > PHASE_CHECK_MIN_R && rec.phidot_measured.is_finite() {
            checks.push(BoundCheck::upper(
                "phidot_bound",
                t,
                rec.phidot_measured.abs(),
                ctx.m / rec.r + ctx.k * (1.0 - rec.r) + tol,
            ));
            if rec.phidot_formula.is_finite() {
                checks.push(BoundCheck::upper(
                    "phidot_formula",
                    t,
                    (rec.phidot_measured - rec.phidot_formula).abs(),
                    tol * (ctx.m + ctx.k),
                ));
            }
        }
        if ctx.identical {
            if i + 1 < n {
                checks.push(BoundCheck::upper(
                    "energy_monotone",
                    t,
                    records[i + 1].v_k - rec.v_k,
                    1e-9,
                ));
            }
            // dV/dt from the same differences as Ṙ: dV = −K R dR
            let vdot = -ctx.k * rec.r * rec.rdot_measured;
            let vdot = if i > 0 && i + 1 < n {
                (records[i + 1].v_k - records[i - 1].v_k) / (records[i + 1].t - records[i - 1].t)
            } else {
                vdot
            };
            checks.push(BoundCheck::upper(
                "dissipation",
                t,
                (vdot + rec.dissipation).abs(),
                tol * ctx.k * ctx.k,
            ));
        }
        if let Some(gamma) = ctx.sandwich_gamma {
            if rec.rdot_measured <= 0.0 && rec.mass_l_pi3.is_finite() && rec.r > 0.0 {
                if let Ok((e1, e2)) = constants_e12(ctx.k, ctx.m, rec.r, gamma) {
                    let slack = 5.0 * ctx.dtheta;
                    let ml = rec.mass_l_pi3;
                    checks.push(BoundCheck::upper(
                        "sandwich_lower",
                        t,
                        2.0 * ml - e2 - 1.0,
                        rec.r + slack,
                    ));
                    checks.push(BoundCheck::upper(
                        "sandwich_upper",
                        t,
                        rec.r,
                        2.0 * ml + 2.0 * e1 - 1.0 + slack,
                    ));
                }
            }
        }
    }
    checks
}

/// Column names in output order.
pub fn csv_header(cfg: &DiagnosticsConfig, n_omega: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "t",
        "R",
        "phi",
        "phi_defined",
        "V_k",
        "dissipation",
        "rdot_formula",
        "rdot_measured",
        "phidot_formula",
        "phidot_measured",
        "mass_Lplus_pi3",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend(cfg.intervals.iter().map(|i| format!("mass_{}", i.label())));
    if cfg.lambda_delta.is_some() {
        h.push("Lambda".into());
    }
    if cfg.gamma_minus.is_some() {
        h.push("Gamma_minus".into());
    }
    if cfg.gamma_plus.is_some() {
        h.extend((0..n_omega).map(|k| format!("Gamma_plus_{k}")));
    }
    h
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes one row per record; floats carry 17 significant digits.
pub fn write_records_csv(
    records: &[DiagnosticsRecord],
    cfg: &DiagnosticsConfig,
    n_omega: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(csv_header(cfg, n_omega))?;
    for r in records {
        let mut row = vec![
            fmt(r.t),
            fmt(r.r),
            fmt(r.phi),
            r.phi_defined.to_string(),
            fmt(r.v_k),
            fmt(r.dissipation),
            fmt(r.rdot_formula),
            fmt(r.rdot_measured),
            fmt(r.phidot_formula),
            fmt(r.phidot_measured),
            fmt(r.mass_l_pi3),
        ];
        row.extend(r.masses.iter().map(|&m| fmt(m)));
        if cfg.lambda_delta.is_some() {
            row.push(fmt(r.lambda.unwrap_or(f64::NAN)));
        }
        if cfg.gamma_minus.is_some() {
            row.push(fmt(r.gamma_minus.unwrap_or(f64::NAN)));
        }
        if cfg.gamma_plus.is_some() {
            row.extend(r.gamma_plus.iter().map(|&g| fmt(g)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    w.into_inner()
        .map_err(|e| crate::Error::Io(e.into_error()))?
        .flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequency::FrequencyDensity;
    use crate::kinetic::{InitialProfile, PhaseGrid};

    fn cfg() -> DiagnosticsConfig {
        DiagnosticsConfig {
            intervals: vec![
                Interval::Iplus { delta: 0.2 },
                Interval::Iminus { delta: 0.5 },
            ],
            lambda_delta: Some(0.5),
            gamma_plus: Some(1.1),
            gamma_minus: Some(FRAC_PI_3),
            sandwich_gamma: Some(1.3),
        }
    }

    #[test]
    fn record_of_cosine_state() {
        let s = KineticState::from_profile(
            PhaseGrid::new(64).unwrap(),
            &FrequencyDensity::uniform(0.1).unwrap(),
            4,
            2.0,
            &InitialProfile::Cosine {
                amplitude: 0.2,
                center: 0.0,
            },
        )
        .unwrap();
        let r = DiagnosticsRecord::of(&s, &cfg());
        assert!(r.phi_defined);
        assert_eq!(r.masses.len(), 2);
        assert_eq!(r.gamma_plus.len(), 4);
        assert!(r.lambda.unwrap() > 0.0);
        assert_eq!(csv_header(&cfg(), 4).len(), 11 + 2 + 2 + 4);
    }

    #[test]
    fn undefined_phase_gives_nan_masses() {
        let s = KineticState::from_profile(
            PhaseGrid::new(32).unwrap(),
            &FrequencyDensity::dirac(),
            1,
            1.0,
            &InitialProfile::Uniform,
        )
        .unwrap();
        let r = DiagnosticsRecord::of(&s, &cfg());
        assert!(!r.phi_defined);
        assert!(r.masses.iter().all(|m| m.is_nan()));
        assert_eq!(r.dissipation, 0.0);
    }

    #[test]
    fn finalize_differences_and_unwraps() {
        let base = DiagnosticsRecord {
            t: 0.0,
            r: 0.5,
            phi: 6.2,
            phi_defined: true,
            masses: vec![],
            mass_l_pi3: f64::NAN,
            lambda: None,
            gamma_plus: vec![],
            gamma_minus: None,
            v_k: 0.0,
            dissipation: 0.0,
            rdot_formula: f64::NAN,
            phidot_formula: f64::NAN,
            rdot_measured: f64::NAN,
            phidot_measured: f64::NAN,
            phi_unwrapped: 6.2,
        };
        let mut recs: Vec<DiagnosticsRecord> = (0..3)
            .map(|i| {
                let mut r = base.clone();
                r.t = i as f64 * 0.1;
                r.r = 0.5 + 0.01 * i as f64;
                r.phi = crate::wrap_phase(6.2 + 0.1 * i as f64);
                r
            })
            .collect();
        let ctx = CheckContext {
            m: 0.0,
            k: 1.0,
            dt: 0.01,
            dtheta: 0.1,
            identical: false,
            sandwich_gamma: None,
        };
        let checks = finalize(&mut recs, &ctx);
        for r in &recs {
            assert!((r.rdot_measured - 0.1).abs() < 1e-12);
            assert!((r.phidot_measured - 1.0).abs() < 1e-9);
        }
        // |φ̇| = 1 exceeds M/R + K(1 − R) + tol ≤ 0.7
        let pb: Vec<_> = checks.iter().filter(|c| c.name == "phidot_bound").collect();
        assert_eq!(pb.len(), 3);
        assert!(pb.iter().all(|c| !c.pass && c.bound < 0.71));
    }
}
