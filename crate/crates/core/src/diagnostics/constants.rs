//! Closed-form constants entering the synchronization estimates, and the
//! admissibility report for a parameter set.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

fn sqrt3() -> f64 {
    3f64.sqrt()
}

/// Upper end of the admissible `ε₀` range, `3√3/4 − 1`.
pub fn eps0_max() -> f64 {
    3.0 * sqrt3() / 4.0 - 1.0
}

/// Upper end (exclusive) of the admissible `γ₀` range for a given `ε₀`.
pub fn gamma0_max(eps0: f64) -> f64 {
    (1.0 - 2.0 * eps0 / (2.0 * sqrt3() + 1.0)).asin()
}

/// `M_*(ε₀, γ₀) = (2 + ε₀ + cos γ₀) / ((1 + sin γ₀)(1 + cos γ₀))` without
/// admissibility checks.
pub fn mstar_unchecked(eps0: f64, gamma0: f64) -> f64 {
    (2.0 + eps0 + gamma0.cos()) / ((1.0 + gamma0.sin()) * (1.0 + gamma0.cos()))
}

/// [`mstar_unchecked`] restricted to `0 < ε₀ < 3√3/4 − 1` and
/// `π/3 ≤ γ₀ < arcsin(1 − 2ε₀/(2√3 + 1))`.
pub fn mstar(eps0: f64, gamma0: f64) -> Result<f64> {
    if !(eps0 > 0.0 && eps0 < eps0_max()) {
        return Err(Error::precondition(format!(
            "eps0 = {eps0} outside (0, 3√3/4 − 1 = {})",
            eps0_max()
        )));
    }
    if !(gamma0 >= FRAC_PI_3) {
        return Err(Error::precondition(format!("gamma0 = {gamma0} below π/3")));
    }
    let gmax = gamma0_max(eps0);
    if !(gamma0 < gmax) {
        return Err(Error::precondition(format!(
            "gamma0 = {gamma0} not below arcsin(1 − 2·eps0/(2√3 + 1)) = {gmax}"
        )));
    }
    let m = mstar_unchecked(eps0, gamma0);
    let lower = (1.0 + eps0) / (1.0 + gamma0.sin());
    debug_assert!(lower < m && m < 1.0, "M* = {m} outside ({lower}, 1)");
    Ok(m)
}

/// `E₁`, `E₂`, `E₃` and the waiting time `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsE {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    /// `d` with `[(1/3) R̲ K μ − C] e^{−4Kd} = B`; infinite when `M = 0`.
    pub d: f64,
}

/// `(E₁, E₂)` for `γ ∈ (π/3, π/2)`.
pub fn constants_e12(k: f64, m: f64, r_low: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(gamma > FRAC_PI_3 && gamma < FRAC_PI_2) {
        return Err(Error::precondition(format!(
            "gamma = {gamma} outside (π/3, π/2)"
        )));
    }
    if !(k > 0.0 && r_low > 0.0 && m >= 0.0) {
        return Err(Error::precondition(
            "E constants need K > 0, R_low > 0, M ≥ 0",
        ));
    }
    let (s, c2) = (gamma.sin(), gamma.cos().powi(2));
    let q = m / (k * r_low);
    let e1 = s / c2 * q + 0.5 * (1.0 - s);
    let e2 = 1.0 - s + (1.0 + s) * q / c2 + s / c2 * q;
    Ok((e1, e2))
}

/// `(E₃, d)`; requires `K²μ > M²/(2R̲²) − 3M²/(4R̲)` so that the logarithm is
/// defined.
pub fn constants_e3(k: f64, m: f64, r_low: f64, mu: f64) -> Result<(f64, f64)> {
    if !(k > 0.0 && r_low > 0.0 && mu > 0.0 && m >= 0.0) {
        return Err(Error::precondition(
            "E3 needs K > 0, R_low > 0, mu > 0, M ≥ 0",
        ));
    }
    let m2 = m * m;
    let b = m2 / (4.0 * k) + m2 / (2.0 * r_low * k);
    let c = m2 / (6.0 * r_low * k) - m2 / (4.0 * k);
    let a = r_low * k * mu / 3.0 - c;
    if !(a > 0.0) {
        return Err(Error::precondition(format!(
            "K²μ = {} does not exceed M²/(2R²) − 3M²/(4R) = {}",
            k * k * mu,
            m2 / (2.0 * r_low * r_low) - 3.0 * m2 / (4.0 * r_low)
        )));
    }
    if b == 0.0 {
        return Ok((0.0, f64::INFINITY));
    }
    let ratio = b / a;
    let log = (a / b).ln();
    let e3 =
        (r_low / 12.0 * mu * ratio + c / (4.0 * k) * (1.0 - ratio) + b * log / (4.0 * k)).abs();
    Ok((e3, log / (4.0 * k)))
}

/// All of `E₁, E₂, E₃, d`.
pub fn constants_e(k: f64, m: f64, r_low: f64, gamma: f64, mu: f64) -> Result<ConstantsE> {
    let (e1, e2) = constants_e12(k, m, r_low, gamma)?;
    let (e3, d) = constants_e3(k, m, r_low, mu)?;
    Ok(ConstantsE { e1, e2, e3, d })
}

/// `R_∞ = 1 + M/K − √(M²/K² + 4M/K)`.
pub fn r_infinity(m: f64, k: f64) -> f64 {
    let x = m / k;
    1.0 + x - (x * x + 4.0 * x).sqrt()
}

/// Roots `r_∓(η) = √3/4 ∓ ½√(3/4 − 16√3 M/K − 4η)` of
/// `x² − (√3/2)x + 4√3 M/K + η`.
pub fn r_pm(eta: f64, m: f64, k: f64) -> Result<(f64, f64)> {
    let disc = 0.75 - 16.0 * sqrt3() * m / k - 4.0 * eta;
    if !(disc >= 0.0) {
        return Err(Error::precondition(format!(
            "Riccati discriminant 3/4 − 16√3·M/K − 4η = {disc} is negative; K is too small"
        )));
    }
    let half = 0.5 * disc.sqrt();
    Ok((sqrt3() / 4.0 - half, sqrt3() / 4.0 + half))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsKappa {
    pub value: f64,
    /// `ε_κ < 1`
    pub valid: bool,
}

/// `ε_κ = ((κ + 1)/κ²)(M/K) + (1 − κ)/κ`.
pub fn epsilon_kappa(kappa: f64, m: f64, k: f64) -> Result<EpsKappa> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::invalid(format!("kappa = {kappa} outside (0, 1]")));
    }
    let value = (kappa + 1.0) / (kappa * kappa) * (m / k) + (1.0 - kappa) / kappa;
    Ok(EpsKappa {
        value,
        valid: value < 1.0,
    })
}

/// `F_κ(q) = κK(√(1 − q²) − ε_κ)√(1 − q²)`.
pub fn barrier_rate(q: f64, kappa: f64, k: f64, eps_kappa: f64) -> f64 {
    let s = (1.0 - q * q).max(0.0).sqrt();
    kappa * k * (s - eps_kappa) * s
}

/// `D(ε, κ) = 2(√(1 − ε_κ²) − ε) / F_κ(√(1 − ε_κ²) − ε)`.
pub fn d_bound(eps: f64, kappa: f64, k: f64, eps_kappa: f64) -> Result<f64> {
    let top = (1.0 - eps_kappa * eps_kappa).sqrt();
    if !(eps > 0.0 && eps < top) {
        return Err(Error::precondition(format!(
            "eps = {eps} outside (0, √(1 − ε_κ²) = {top})"
        )));
    }
    let q = top - eps;
    Ok(2.0 * q / barrier_rate(q, kappa, k, eps_kappa))
}

/// One displayed inequality `lhs > rhs` (or `lhs ≥ rhs`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub statement: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs − rhs`; positive means satisfied with room to spare.
    pub margin: f64,
    pub pass: bool,
}

impl InequalityCheck {
    fn strict(name: &str, statement: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            statement: statement.into(),
            lhs,
            rhs,
            margin: lhs - rhs,
            pass: lhs > rhs,
        }
    }

    fn weak(name: &str, statement: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            pass: lhs >= rhs,
            ..Self::strict(name, statement, lhs, rhs)
        }
    }

    fn failed(name: &str, statement: &str, why: &str) -> Self {
        Self {
            name: name.into(),
            statement: format!("{statement} ({why})"),
            lhs: f64::NAN,
            rhs: f64::NAN,
            margin: f64::NAN,
            pass: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisInputs {
    pub k: f64,
    pub m: f64,
    pub r0: f64,
    pub mu: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub eps0: f64,
    pub gamma0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub inputs: HypothesisInputs,
    pub checks: Vec<InequalityCheck>,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Checks whose name starts with `prefix`.
    pub fn group<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a InequalityCheck> + 'a {
        self.checks
            .iter()
            .filter(move |c| c.name.starts_with(prefix))
    }

    pub fn group_passes(&self, prefix: &str) -> bool {
        self.group(prefix).all(|c| c.pass)
    }
}

/// Evaluates every inequality of the framework (H1)–(H4), the coupling and
/// initial-window conditions of the concentration theorem, the mass-monotonicity
/// and growth conditions with `R̲ = R₀/2`, and the coupling condition used for
/// the asymptotic lower bound. Never fails; unevaluable items are reported as
/// failed.
pub fn hypothesis_check(inp: HypothesisInputs) -> HypothesisReport {
    let HypothesisInputs {
        k,
        m,
        r0,
        mu,
        gamma,
        kappa,
        eps0,
        gamma0,
    } = inp;
    let s3 = sqrt3();
    let mk = m / k;
    let mut c = Vec::new();

    // (H1)
    c.push(InequalityCheck::strict("H1.R0", "R0 > 0", r0, 0.0));
    c.push(InequalityCheck::weak("H1.M", "M ≥ 0", m, 0.0));

    // (H2)
    let h2a_rhs = 2.0 * m / (k * r0)
        + 4.0 * m / (k * r0 * r0)
        + 2.0 * 2f64.sqrt() / (r0 * r0.sqrt()) * (mk + mu).sqrt();
    c.push(InequalityCheck::strict(
        "H2.a",
        "1/2 > 2M/(K R0) + 4M/(K R0²) + 2√2/(R0√R0)·√(M/K + μ)",
        0.5,
        h2a_rhs,
    ));
    let h2b = 2.0 * m * m / (r0 * r0) - 1.5 * m * m / r0;
    c.push(InequalityCheck::strict(
        "H2.b",
        "K²μ > 2M²/R0² − 3M²/(2R0)",
        k * k * mu,
        h2b,
    ));
    let denom = 3.0 - (s3 - 2.0 * r0).powi(2);
    if denom > 0.0 {
        let kmin = (64.0 * m / s3).max(64.0 * s3 * m / denom);
        c.push(InequalityCheck::strict(
            "H2.c",
            "K > max(64M/√3, 64√3M/(3 − (√3 − 2R0)²))",
            k,
            kmin,
        ));
    } else {
        c.push(InequalityCheck::failed(
            "H2.c",
            "K > max(64M/√3, 64√3M/(3 − (√3 − 2R0)²))",
            "denominator 3 − (√3 − 2R0)² is not positive",
        ));
    }
    c.push(InequalityCheck::strict("H2.mu", "μ > 0", mu, 0.0));

    // (H3)
    c.push(InequalityCheck::strict(
        "H3.gamma_low",
        "γ > π/3",
        gamma,
        FRAC_PI_3,
    ));
    c.push(InequalityCheck::strict(
        "H3.gamma_high",
        "π/2 > γ",
        FRAC_PI_2,
        gamma,
    ));
    let r_low = 0.5 * r0;
    match (
        constants_e12(k, m, r_low, gamma),
        constants_e3(k, m, r_low, mu),
    ) {
        (Ok((e1, e2)), Ok((e3, _))) => {
            c.push(InequalityCheck::strict(
                "H3.a",
                "R0 − 2E1 − E2 > R0/2",
                r0 - 2.0 * e1 - e2,
                0.5 * r0,
            ));
            c.push(InequalityCheck::strict(
                "H3.b",
                "μR0/24 > 2E1 + E2 + E3",
                mu * r0 / 24.0,
                2.0 * e1 + e2 + e3,
            ));
        }
        (Err(e), _) | (_, Err(e)) => {
            let why = e.to_string();
            c.push(InequalityCheck::failed(
                "H3.a",
                "R0 − 2E1 − E2 > R0/2",
                &why,
            ));
            c.push(InequalityCheck::failed(
                "H3.b",
                "μR0/24 > 2E1 + E2 + E3",
                &why,
            ));
        }
    }

    // (H4)
    c.push(InequalityCheck::strict(
        "H4.kappa_low",
        "κ > 2/3",
        kappa,
        2.0 / 3.0,
    ));
    c.push(InequalityCheck::strict(
        "H4.kappa_high",
        "√3/2 > κ",
        s3 / 2.0,
        kappa,
    ));
    let inner = 3.0 - 64.0 * s3 * mk;
    if inner >= 0.0 {
        c.push(InequalityCheck::strict(
            "H4.a",
            "√3/4 + ¼√(3 − 64√3M/K) > κ",
            s3 / 4.0 + 0.25 * inner.sqrt(),
            kappa,
        ));
    } else {
        c.push(InequalityCheck::failed(
            "H4.a",
            "√3/4 + ¼√(3 − 64√3M/K) > κ",
            "3 − 64√3M/K is negative",
        ));
    }
    match epsilon_kappa(kappa, m, k) {
        Ok(e) => c.push(InequalityCheck::strict("H4.b", "1 > ε_κ", 1.0, e.value)),
        Err(e) => c.push(InequalityCheck::failed("H4.b", "1 > ε_κ", &e.to_string())),
    }

    // concentration theorem
    c.push(InequalityCheck::strict(
        "T3.2.eps0_low",
        "ε0 > 0",
        eps0,
        0.0,
    ));
    c.push(InequalityCheck::strict(
        "T3.2.eps0_high",
        "3√3/4 − 1 > ε0",
        eps0_max(),
        eps0,
    ));
    c.push(InequalityCheck::strict(
        "T3.2.K",
        "K > (M/ε0)(1 + 1/ε0)",
        k,
        m / eps0 * (1.0 + 1.0 / eps0),
    ));
    c.push(InequalityCheck::weak(
        "L5.4.gamma0_low",
        "γ0 ≥ π/3",
        gamma0,
        FRAC_PI_3,
    ));
    c.push(InequalityCheck::strict(
        "L5.4.gamma0_high",
        "arcsin(1 − 2ε0/(2√3 + 1)) > γ0",
        gamma0_max(eps0),
        gamma0,
    ));

    // mass monotonicity and growth with R̲ = R0/2
    let l64_rhs =
        m / (k * r_low) + m / (k * r_low * r_low) + (mk + mu).sqrt() / (r_low * r_low.sqrt());
    c.push(InequalityCheck::strict(
        "L6.4",
        "1/2 > M/(K R̲) + M/(K R̲²) + √(M/K + μ)/(R̲√R̲), R̲ = R0/2",
        0.5,
        l64_rhs,
    ));
    c.push(InequalityCheck::strict(
        "L6.5",
        "K²μ > M²/(2R̲²) − 3M²/(4R̲), R̲ = R0/2",
        k * k * mu,
        m * m / (2.0 * r_low * r_low) - 3.0 * m * m / (4.0 * r_low),
    ));

    // coupling condition for the asymptotic lower bound
    c.push(InequalityCheck::strict(
        "T3.3.K",
        "K > 15M/(2(√(4 − 2√2) − 1))",
        k,
        15.0 * m / (2.0 * ((4.0 - 2.0 * 2f64.sqrt()).sqrt() - 1.0)),
    ));

    HypothesisReport {
        inputs: inp,
        checks: c,
    }
}
