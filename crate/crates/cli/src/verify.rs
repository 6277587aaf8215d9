//! Pinned acceptance scenarios, grouped into suites.
//!
//! The three expensive kinetic runs are computed once per [`Lab`] and shared
//! by every criterion that reads them.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::time::Instant;

use kslab_core::diagnostics::{
    barrier_solve, crossing_time, d_bound, epsilon_kappa, equilibrium_r, hypothesis_check, mstar,
    r_infinity, r_pm, riccati_horizon, riccati_solve, self_consistency, Equilibrium,
    HypothesisReport, Trend,
};
use kslab_core::kinetic::characteristics;
use kslab_core::particle::{
    self, classify_asymptotic, particle_order, phase_diameter, potential, rhs_mean_field,
};
use kslab_core::{FrequencyDensity, ParticleState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::characteristics::order_series;
use crate::config::{ExperimentConfig, HypothesisParams};
use crate::error::{CliError, CliResult};
use crate::simulate::{auto_fit, initial_particles, mean_field_gap, run_kinetic, KineticRun};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Thm31,
    Thm32,
    Thm33,
    Gradient,
    Conservation,
    Barriers,
    Equilibrium,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Thm31 => "thm31",
            Suite::Thm32 => "thm32",
            Suite::Thm33 => "thm33",
            Suite::Gradient => "gradient",
            Suite::Conservation => "conservation",
            Suite::Barriers => "barriers",
            Suite::Equilibrium => "equilibrium",
            Suite::All => "all",
        }
    }
}

/// `(id, suite, title)` for every criterion, in execution order.
pub const CRITERIA: [(u8, Suite, &str); 15] = [
    (
        1,
        Suite::Conservation,
        "mass conservation per slice and in total",
    ),
    (
        2,
        Suite::Thm31,
        "identical oscillators concentrate at the average phase",
    ),
    (
        3,
        Suite::Thm31,
        "exponential decay of the antipodal L2 functional",
    ),
    (4, Suite::Thm31, "phase-velocity bound"),
    (
        5,
        Suite::Conservation,
        "order-parameter ODE matches measured derivatives",
    ),
    (6, Suite::Gradient, "kinetic energy dissipation"),
    (
        7,
        Suite::Gradient,
        "particle right-hand side is a negative gradient",
    ),
    (
        8,
        Suite::Gradient,
        "kinetic run matches a large particle ensemble",
    ),
    (
        9,
        Suite::Gradient,
        "order parameter bounded below by the phase diameter",
    ),
    (
        10,
        Suite::Gradient,
        "generic identical runs have at most one antipode",
    ),
    (
        11,
        Suite::Equilibrium,
        "self-consistency probe and fixed point",
    ),
    (
        12,
        Suite::Thm33,
        "late amplitude above the asymptotic lower bound",
    ),
    (
        13,
        Suite::Thm32,
        "mass monotonicity and growth of the L2 functional",
    ),
    (
        14,
        Suite::Barriers,
        "characteristics stay below the barrier",
    ),
    (15, Suite::Barriers, "Riccati comparison paths"),
];

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub id: u8,
    pub suite: Suite,
    pub title: &'static str,
    pub pass: bool,
    /// Fails for a reason that no admissible configuration can remove.
    pub known_unattainable: bool,
    pub seconds: f64,
    pub details: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: Suite,
    pub pass: bool,
    pub verdicts: Vec<Verdict>,
    pub seconds: f64,
}

impl Report {
    /// Failures not flagged as known-unattainable.
    pub fn unexpected_failures(&self) -> usize {
        self.verdicts
            .iter()
            .filter(|v| !v.pass && !v.known_unattainable)
            .count()
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<4} {:<13} {:<6} {:>9}  title",
            "id", "suite", "result", "seconds"
        );
        for v in &self.verdicts {
            let result = match (v.pass, v.known_unattainable) {
                (true, _) => "PASS",
                (false, true) => "FAIL*",
                (false, false) => "FAIL",
            };
            let _ = writeln!(
                s,
                "{:<4} {:<13} {:<6} {:>9.2}  {}",
                v.id,
                v.suite.name(),
                result,
                v.seconds,
                v.title
            );
        }
        if self
            .verdicts
            .iter()
            .any(|v| !v.pass && v.known_unattainable)
        {
            s.push_str("FAIL* = hypothesis report cannot pass for the pinned parameters\n");
        }
        let _ = writeln!(s, "total {:.2} s", self.seconds);
        s
    }
}

// ---- pinned configurations ----

fn config(value: Value) -> ExperimentConfig {
    let cfg: ExperimentConfig = serde_json::from_value(value).expect("pinned config parses");
    cfg.validate().expect("pinned config is valid");
    cfg
}

/// Uniform `g` on `[−0.1, 0.1]`, asymmetric smooth data with `R₀ = 0.2`.
pub fn run1_config() -> ExperimentConfig {
    config(json!({
        "frequency": {"kind": "uniform", "halfwidth": 0.1},
        "initial": {"kind": "fourier", "cos": [0.2], "sin": [0.0, 0.1]},
        "coupling": 2.0,
        "n_theta": 512,
        "n_omega": 16,
        "t_end": 20.0,
        "sample_every": 0.02,
        "n_particles": 20000,
        "particle_dt": 0.01,
        "seed": 7,
    }))
}

/// Identical oscillators, `ϱ₀ = (1 + 0.4 cos θ)/2π`.
pub fn run2_config() -> ExperimentConfig {
    config(json!({
        "frequency": {"kind": "dirac"},
        "initial": {"kind": "cosine", "amplitude": 0.2, "center": 0.0},
        "coupling": 1.0,
        "n_theta": 1024,
        "n_omega": 1,
        "t_end": 40.0,
        "sample_every": 0.05,
        "diagnostics": {
            "intervals": [{"kind": "iplus", "delta": 0.2}],
            "lambda_delta": 0.5,
        },
    }))
}

pub const RUN12_HYPOTHESIS: HypothesisParams = HypothesisParams {
    mu: 1e-3,
    gamma: 1.45,
    kappa: 0.7,
    eps0: 0.2,
    gamma0: 1.1,
};

/// `M = 0.05`, `K = 10`, `R₀ = 0.3`.
pub fn run12_config() -> ExperimentConfig {
    let mut cfg = config(json!({
        "frequency": {"kind": "uniform", "halfwidth": 0.05},
        "initial": {"kind": "cosine", "amplitude": 0.3, "center": 0.0},
        "coupling": 10.0,
        "n_theta": 1024,
        "n_omega": 16,
        "t_end": 60.0,
        "sample_every": 0.05,
    }));
    cfg.hypothesis = Some(RUN12_HYPOTHESIS);
    cfg
}

pub const RUN13_EPS0: f64 = 0.2;
pub const RUN13_GAMMA0: f64 = 1.1;
pub const RUN13_M: f64 = 0.01;

pub fn run13_coupling() -> f64 {
    1.2 * (RUN13_M / RUN13_EPS0) * (1.0 + 1.0 / RUN13_EPS0)
}

/// Concentrated von Mises data with nearly all mass in `L⁺_{γ₀}`.
pub fn run13_config() -> ExperimentConfig {
    let mut cfg = config(json!({
        "frequency": {"kind": "uniform", "halfwidth": RUN13_M},
        "initial": {"kind": "von_mises", "concentration": 30.0, "center": 0.0},
        "coupling": run13_coupling(),
        "n_theta": 1024,
        "n_omega": 16,
        "t_end": 20.0,
        "sample_every": 0.2,
        "diagnostics": {
            "intervals": [{"kind": "lplus", "gamma": RUN13_GAMMA0}],
            "gamma_plus": RUN13_GAMMA0,
        },
    }));
    cfg.hypothesis = Some(HypothesisParams {
        eps0: RUN13_EPS0,
        gamma0: RUN13_GAMMA0,
        ..RUN12_HYPOTHESIS
    });
    cfg
}

/// Lazily computed shared runs.
#[derive(Default)]
pub struct Lab {
    run1: Option<Result<KineticRun, String>>,
    run2: Option<Result<KineticRun, String>>,
    run12: Option<Result<KineticRun, String>>,
}

fn cached(
    slot: &mut Option<Result<KineticRun, String>>,
    cfg: impl FnOnce() -> ExperimentConfig,
) -> Result<&KineticRun, String> {
    if slot.is_none() {
        let cfg = cfg();
        let k = cfg.single_coupling().map_err(|e| e.to_string());
        *slot = Some(k.and_then(|k| run_kinetic(&cfg, k).map_err(|e| e.to_string())));
    }
    slot.as_ref().unwrap().as_ref().map_err(Clone::clone)
}

impl Lab {
    pub fn run1(&mut self) -> Result<&KineticRun, String> {
        cached(&mut self.run1, run1_config)
    }
    pub fn run2(&mut self) -> Result<&KineticRun, String> {
        cached(&mut self.run2, run2_config)
    }
    pub fn run12(&mut self) -> Result<&KineticRun, String> {
        cached(&mut self.run12, run12_config)
    }
}

/// `(pass, known_unattainable, details)`
type Outcome = (bool, bool, Value);

fn failed_run(e: String) -> Outcome {
    (false, false, json!({ "error": e }))
}

fn check_detail(run: &KineticRun, name: &str) -> Value {
    let checks: Vec<_> = run.checks.iter().filter(|c| c.name == name).collect();
    let worst = checks
        .iter()
        .map(|c| c.margin)
        .fold(f64::INFINITY, f64::min);
    json!({
        "evaluated": checks.len(),
        "failed": checks.iter().filter(|c| !c.pass).count(),
        "worst_margin": worst,
    })
}

fn checks_pass(run: &KineticRun, name: &str) -> bool {
    run.checks.iter().any(|c| c.name == name) && run.check_passes(name)
}

pub fn criterion(lab: &mut Lab, id: u8) -> Outcome {
    match id {
        1 => c01_conservation(lab),
        2 => c02_concentration(lab),
        3 => c03_lambda_decay(lab),
        4 => c04_phase_velocity(lab),
        5 => c05_order_ode(lab),
        6 => c06_dissipation(lab),
        7 => c07_gradient(),
        8 => c08_mean_field(lab),
        9 => c09_diameter(),
        10 => c10_antipodes(),
        11 => c11_equilibrium(),
        12 => c12_asymptotic(lab),
        13 => c13_growth(),
        14 => c14_barrier(lab),
        15 => c15_riccati(),
        _ => (
            false,
            false,
            json!({ "error": format!("no criterion {id}") }),
        ),
    }
}

fn c01_conservation(lab: &mut Lab) -> Outcome {
    let run = match lab.run1() {
        Ok(r) => r,
        Err(e) => return failed_run(e),
    };
    let slice = run.stats.max_slice_drift;
    let total = run.stats.max_total_drift;
    let pass = slice <= 1e-12 && total <= 1e-10 && run.seconds < 30.0;
    (
        pass,
        false,
        json!({
            "max_slice_drift": slice,
            "max_total_drift": total,
            "min_value": run.stats.min_value,
            "run_seconds": run.seconds,
        }),
    )
}

fn c02_concentration(lab: &mut Lab) -> Outcome {
    let run = match lab.run2() {
        Ok(r) => r,
        Err(e) => return failed_run(e),
    };
    let mass = run.records.last().map_or(f64::NAN, |r| r.masses[0]);
    let r = run.final_r();
    let min_dr = run.stats.min_step_dr;
    let pass = mass >= 0.99 && r >= 0.99 && min_dr >= -1e-8 && run.seconds < 60.0;
    (
        pass,
        false,
        json!({
            "final_mass_Iplus_0.2": mass,
            "final_R": r,
            "min_step_dR": min_dr,
            "steps": run.stats.steps,
            "run_seconds": run.seconds,
        }),
    )
}

fn c03_lambda_decay(lab: &mut Lab) -> Outcome {
    let run = match lab.run2() {
        Ok(r) => r,
        Err(e) => return failed_run(e),
    };
    let t: Vec<f64> = run.records.iter().map(|r| r.t).collect();
    let lam: Vec<f64> = run
        .records
        .iter()
        .map(|r| r.lambda.unwrap_or(f64::NAN))
        .collect();
    let threshold = -0.9 * (run.r0 * 0.5f64.cos() / 2.0) * run.coupling;
    match auto_fit(&t, &lam, Trend::Decreasing) {
        Ok(fit) => (
            fit.slope <= threshold && fit.r2 >= 0.98,
            false,
            json!({ "fit": fit, "slope_threshold": threshold, "initial_R": run.r0 }),
        ),
        Err(e) => (
            false,
            false,
            json!({ "error": e, "slope_threshold": threshold }),
        ),
    }
}

fn c04_phase_velocity(lab: &mut Lab) -> Outcome {
    let mut details = serde_json::Map::new();
    let mut pass = true;
    let summarize = |r: &KineticRun| {
        (
            checks_pass(r, "phidot_bound"),
            check_detail(r, "phidot_bound"),
        )
    };
    let first = lab.run1().map(summarize);
    let second = lab.run2().map(summarize);
    for (name, outcome) in [("run1", first), ("run2", second)] {
        match outcome {
            Ok((ok, detail)) => {
                pass &= ok;
                details.insert(name.into(), detail);
            }
            Err(e) => {
                pass = false;
                details.insert(name.into(), json!({ "error": e }));
            }
        }
    }
    (pass, false, Value::Object(details))
}

fn c05_order_ode(lab: &mut Lab) -> Outcome {
    let run = match lab.run1() {
        Ok(r) => r,
        Err(e) => return failed_run(e),
    };
    let pass = checks_pass(run, "rdot_formula") && checks_pass(run, "phidot_formula");
    (
        pass,
        false,
        json!({
            "rdot_formula": check_detail(run, "rdot_formula"),
            "phidot_formula": check_detail(run, "phidot_formula"),
            "tolerance_scale": 10.0 * (run.stats.dt_max + run.dtheta * run.dtheta),
        }),
    )
}

fn c06_dissipation(lab: &mut Lab) -> Outcome {
    let run = match lab.run2() {
        Ok(r) => r,
        Err(e) => return failed_run(e),
    };
    let pass = checks_pass(run, "energy_monotone") && checks_pass(run, "dissipation");
    (
        pass,
        false,
        json!({
            "energy_monotone": check_detail(run, "energy_monotone"),
            "dissipation": check_detail(run, "dissipation"),
        }),
    )
}

fn c07_gradient() -> Outcome {
    let started = Instant::now();
    let (n, k, h) = (8, 1.3, 1e-5);
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let thetas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
    let omegas: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let state = ParticleState::new(thetas.clone(), omegas.clone(), k).expect("valid particles");
    let rhs = rhs_mean_field(&state);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let shifted = |d: f64| {
            let mut th = thetas.clone();
            th[i] += d;
            potential(&ParticleState::new(th, omegas.clone(), k).expect("valid particles"))
        };
        let grad = (shifted(h) - shifted(-h)) / (2.0 * h);
        worst = worst.max((rhs[i] + grad).abs());
    }
    let seconds = started.elapsed().as_secs_f64();
    (
        worst <= 1e-6 && seconds < 1.0,
        false,
        json!({ "max_residual": worst, "seconds": seconds }),
    )
}

fn c08_mean_field(lab: &mut Lab) -> Outcome {
    let cfg = run1_config();
    let run = match lab.run1() {
        Ok(r) => r,
        Err(e) => return failed_run(e),
    };
    let started = Instant::now();
    let samples = initial_particles(&cfg, run.coupling, cfg.n_particles).and_then(|mut s| {
        Ok(particle::run(
            &mut s,
            cfg.t_end,
            cfg.particle_dt,
            cfg.sample_every,
        )?)
    });
    let samples = match samples {
        Ok(s) => s,
        Err(e) => return failed_run(e.to_string()),
    };
    let particle_seconds = started.elapsed().as_secs_f64();
    let gap = mean_field_gap(&run.records, &samples);
    let compared = samples.len().min(run.records.len());
    let seconds = run.seconds + particle_seconds;
    (
        gap <= 0.05 && compared == run.records.len() && seconds < 180.0,
        false,
        json!({
            "max_gap": gap,
            "samples_compared": compared,
            "n_particles": cfg.n_particles,
            "final_R_kinetic": run.final_r(),
            "final_r_particle": samples.last().map(|s| s.r),
            "seconds": seconds,
        }),
    )
}

fn c09_diameter() -> Outcome {
    let n = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..1000 {
        let d = rng.gen_range(0.0..PI);
        let c = rng.gen_range(-20.0..20.0);
        let mut thetas: Vec<f64> = (0..n).map(|_| c + d * rng.gen::<f64>()).collect();
        thetas[0] = c;
        thetas[1] = c + d;
        let s = ParticleState::new(thetas, vec![0.0; n], 1.0).expect("valid particles");
        let margin = particle_order(&s).r - (phase_diameter(&s) / 2.0).cos();
        if margin < -1e-12 {
            violations += 1;
        }
        worst = worst.min(margin);
    }
    // two clusters at distance D: 1 − r = 1 − cos(D/2)
    let mut constructed = Vec::new();
    let mut iff_ok = true;
    for d in [0.0, 1e-12, 1e-9, 1e-6, 1e-3, 0.1, 1.0, 3.0] {
        let thetas: Vec<f64> = (0..n)
            .map(|i| 0.7 + if i % 2 == 0 { 0.0 } else { d })
            .collect();
        let s = ParticleState::new(thetas, vec![0.0; n], 1.0).expect("valid particles");
        let r = particle_order(&s).r;
        let is_one = 1.0 - r <= 1e-14;
        iff_ok &= is_one == (phase_diameter(&s) <= 1e-9);
        constructed.push(json!({ "D": d, "one_minus_r": 1.0 - r, "r_is_one": is_one }));
    }
    (
        violations == 0 && iff_ok,
        false,
        json!({ "violations": violations, "worst_margin": worst, "constructed": constructed }),
    )
}

fn c10_antipodes() -> Outcome {
    let (n, seeds) = (10, 200u64);
    let (chunk, t_max, dt, tol) = (20.0, 400.0, 0.05, 1e-6);
    let mut converged = 0;
    let mut good = 0;
    let mut unconverged = Vec::new();
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let thetas = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
        let mut s = ParticleState::new(thetas, vec![0.0; n], 1.0).expect("valid particles");
        let mut done = None;
        while s.t() < t_max {
            let t_end = s.t() + chunk;
            if particle::run(&mut s, t_end, dt, chunk).is_err() {
                break;
            }
            let c = classify_asymptotic(&s, particle_order(&s).phi, tol);
            if c.converged {
                done = Some(c);
                break;
            }
        }
        match done {
            Some(c) => {
                converged += 1;
                if c.n_anti <= 1 {
                    good += 1;
                }
            }
            None => unconverged.push(seed),
        }
    }
    let fraction = if converged > 0 {
        good as f64 / converged as f64
    } else {
        0.0
    };
    (
        converged > 0 && fraction >= 0.99,
        false,
        json!({
            "runs": seeds,
            "converged": converged,
            "at_most_one_antipode": good,
            "fraction": fraction,
            "unconverged_seeds": unconverged,
        }),
    )
}

fn c11_equilibrium() -> Outcome {
    let started = Instant::now();
    let g = FrequencyDensity::uniform(1.0).expect("valid density");
    let probe = self_consistency(&g, 1.0, 1.0);
    let probe_ok = (probe - PI / 4.0).abs() <= 1e-10;
    let (fixed_ok, fixed) = match equilibrium_r(&g, 5.0) {
        Ok(Equilibrium::Solution {
            r,
            residual,
            support_bound,
            inner_bound,
            ..
        }) => {
            let ok = residual <= 1e-10
                && r >= 0.5
                && support_bound.pass
                && inner_bound.as_ref().is_some_and(|b| b.pass);
            (
                ok,
                json!({
                    "R": r,
                    "residual": residual,
                    "support_bound": support_bound,
                    "inner_bound": inner_bound,
                }),
            )
        }
        Ok(other) => (false, json!({ "result": other })),
        Err(e) => (false, json!({ "error": e.to_string() })),
    };
    let seconds = started.elapsed().as_secs_f64();
    (
        probe_ok && fixed_ok && seconds < 1.0,
        false,
        json!({ "H_at_1_K1": probe, "pi_over_4": PI / 4.0, "K5": fixed, "seconds": seconds }),
    )
}

/// Report groups that make up the hypotheses of the asymptotic bound.
pub const THM33_GROUPS: [&str; 7] = ["H1", "H2", "H3", "H4", "L6.4", "L6.5", "T3.3"];
/// Report groups of the concentration theorem.
pub const THM32_GROUPS: [&str; 2] = ["T3.2", "L5.4"];

fn gate(report: &HypothesisReport, groups: &[&str]) -> (bool, Vec<String>) {
    let failed: Vec<String> = groups
        .iter()
        .flat_map(|g| report.group(g))
        .filter(|c| !c.pass)
        .map(|c| c.name.clone())
        .collect();
    (failed.is_empty(), failed)
}

/// `inf_{μ>0}` of the right side of H2.a, reached as `μ → 0`.
fn h2a_infimum(m: f64, k: f64, r0: f64) -> f64 {
    2.0 * m / (k * r0)
        + 4.0 * m / (k * r0 * r0)
        + 2.0 * 2f64.sqrt() / (r0 * r0.sqrt()) * (m / k).sqrt()
}

fn c12_asymptotic(lab: &mut Lab) -> Outcome {
    let run = match lab.run12() {
        Ok(r) => r,
        Err(e) => return failed_run(e),
    };
    let report = hypothesis_check(RUN12_HYPOTHESIS.inputs(run.coupling, run.m, run.r0));
    let (gate_ok, gate_failed) = gate(&report, &THM33_GROUPS);
    let bound = r_infinity(run.m, run.coupling) - 0.02;
    let t_end = run.records.last().map_or(0.0, |r| r.t);
    let late_min = run
        .records
        .iter()
        .filter(|r| r.t >= 2.0 * t_end / 3.0)
        .map(|r| r.r)
        .fold(f64::INFINITY, f64::min);
    let numeric_ok = late_min >= bound;
    let h2a_floor = h2a_infimum(run.m, run.coupling, run.r0);
    // H2.a asks 1/2 > h2a_floor + (something increasing in μ); no μ helps once the floor is ≥ 1/2
    let unattainable = !gate_ok && gate_failed.iter().any(|n| n == "H2.a") && h2a_floor >= 0.5;
    (
        gate_ok && numeric_ok && run.seconds < 300.0,
        unattainable,
        json!({
            "gate_pass": gate_ok,
            "gate_failed": gate_failed,
            "h2a_rhs_infimum_over_mu": h2a_floor,
            "late_window": [2.0 * t_end / 3.0, t_end],
            "late_min_R": late_min,
            "bound": bound,
            "numeric_pass": numeric_ok,
            "initial_R": run.r0,
            "run_seconds": run.seconds,
            "hypothesis": report,
        }),
    )
}

fn c13_growth() -> Outcome {
    let cfg = run13_config();
    let k = run13_coupling();
    let run = match run_kinetic(&cfg, k) {
        Ok(r) => r,
        Err(e) => return failed_run(e.to_string()),
    };
    let hyp = cfg.hypothesis.expect("pinned hypothesis");
    let report = hypothesis_check(hyp.inputs(k, run.m, run.r0));
    let (gate_ok, gate_failed) = gate(&report, &THM32_GROUPS);
    let m_star = mstar(RUN13_EPS0, RUN13_GAMMA0).unwrap_or(f64::NAN);
    let mass: Vec<f64> = run.records.iter().map(|r| r.masses[0]).collect();
    let initial_ok = mass[0] >= m_star;
    let worst_step = mass
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let monotone = worst_step >= -1e-6;
    let threshold = 0.9 * k * RUN13_EPS0 * RUN13_GAMMA0.sin();
    let t: Vec<f64> = run.records.iter().map(|r| r.t).collect();
    let mut slopes = Vec::new();
    let mut growth_ok = true;
    for j in 0..run.final_state.n_omega() {
        let v: Vec<f64> = run.records.iter().map(|r| r.gamma_plus[j]).collect();
        match auto_fit(&t, &v, Trend::Increasing) {
            Ok(f) => {
                growth_ok &= f.slope >= threshold;
                slopes.push(json!({ "omega": run.final_state.omegas()[j], "slope": f.slope, "r2": f.r2, "window": f.window }));
            }
            Err(e) => {
                growth_ok = false;
                slopes.push(json!({ "omega": run.final_state.omegas()[j], "error": e }));
            }
        }
    }
    (
        gate_ok && initial_ok && monotone && growth_ok,
        false,
        json!({
            "coupling": k,
            "gate_pass": gate_ok,
            "gate_failed": gate_failed,
            "initial_mass": mass[0],
            "mstar": m_star,
            "worst_mass_step": worst_step,
            "slope_threshold": threshold,
            "slopes": slopes,
            "run_seconds": run.seconds,
        }),
    )
}

fn c14_barrier(lab: &mut Lab) -> Outcome {
    let kappa = RUN12_HYPOTHESIS.kappa;
    let run = match lab.run12() {
        Ok(r) => r,
        Err(e) => return failed_run(e),
    };
    let (k, m) = (run.coupling, run.m);
    let series = match order_series(run) {
        Ok(s) => s,
        Err(e) => return failed_run(e.to_string()),
    };
    let ek = match epsilon_kappa(kappa, m, k) {
        Ok(e) if e.valid => e.value,
        Ok(e) => return failed_run(format!("ε_κ = {} is not below 1", e.value)),
        Err(e) => return failed_run(e.to_string()),
    };
    let top = (1.0 - ek * ek).sqrt();
    // first sample after which R stays ≥ κ
    let idx = run
        .records
        .iter()
        .rposition(|r| r.r < kappa)
        .map_or(0, |i| i + 1);
    let Some(t_kappa) = run.records.get(idx).map(|r| r.t) else {
        return failed_run("R never settles above κ".into());
    };
    let t_end = run.records.last().map_or(0.0, |r| r.t);

    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut traced = 0;
    let mut worst = f64::INFINITY;
    let mut attempts = 0;
    while traced < 50 && attempts < 10_000 {
        attempts += 1;
        let t_star = rng.gen_range((t_kappa + 0.5).min(t_end)..=t_end);
        let omega = rng.gen_range(-m..=m);
        let (_, phi_star) = series.at(t_star).expect("inside record");
        let theta_star = phi_star + rng.gen_range(-PI..PI);
        let c = (theta_star - phi_star).cos();
        if c > top {
            continue;
        }
        let base = c.max(-top);
        let p_star = base + rng.gen::<f64>() * (top - base);
        let path = characteristics(&series, theta_star, omega, t_star, t_kappa, 1e-3);
        let barrier = barrier_solve(p_star, t_star, t_kappa, kappa, k, ek);
        let (path, barrier) = match (path, barrier) {
            (Ok(p), Ok(b)) => (p, b),
            (Err(e), _) | (_, Err(e)) => return failed_run(e.to_string()),
        };
        let at = |t: f64| {
            let i = barrier
                .partition_point(|q| q.0 <= t)
                .clamp(1, barrier.len() - 1);
            let (t0, p0) = barrier[i - 1];
            let (t1, p1) = barrier[i];
            p0 + (p1 - p0) * (t - t0) / (t1 - t0)
        };
        for &(t, th) in &path {
            let (_, phi) = series.at(t).expect("inside record");
            worst = worst.min(at(t) + 1e-4 - (th - phi).cos());
        }
        traced += 1;
    }
    let mut crossings = Vec::new();
    let mut crossing_ok = true;
    for &(kp, mm, kk, eps) in &[
        (kappa, m, k, 0.05),
        (0.8, 0.0, 10.0, 0.05),
        (0.75, 0.1, 20.0, 0.1),
    ] {
        let ek = epsilon_kappa(kp, mm, kk)
            .map(|e| e.value)
            .unwrap_or(f64::NAN);
        let top = (1.0 - ek * ek).sqrt();
        match (
            crossing_time(-top + eps, top - eps, kp, kk, ek),
            d_bound(eps, kp, kk, ek),
        ) {
            (Ok(tc), Ok(d)) => {
                crossing_ok &= tc < d;
                crossings.push(json!({ "kappa": kp, "M": mm, "K": kk, "eps": eps, "crossing_time": tc, "D": d }));
            }
            (Err(e), _) | (_, Err(e)) => {
                crossing_ok = false;
                crossings.push(
                    json!({ "kappa": kp, "M": mm, "K": kk, "eps": eps, "error": e.to_string() }),
                );
            }
        }
    }
    (
        traced == 50 && worst >= 0.0 && crossing_ok,
        false,
        json!({
            "t_kappa": t_kappa,
            "eps_kappa": ek,
            "characteristics": traced,
            "worst_margin": worst,
            "crossings": crossings,
        }),
    )
}

fn c15_riccati() -> Outcome {
    let k = 1.0;
    let mut cases = Vec::new();
    let mut pass = true;
    for ratio in [0.0, 1e-4, 1e-3] {
        let m = ratio * k;
        let (lo, hi) = match r_pm(0.0, m, k) {
            Ok(r) => r,
            Err(e) => return failed_run(e.to_string()),
        };
        let horizon = match riccati_horizon(0.0, m, k) {
            Ok(h) => h,
            Err(e) => return failed_run(e.to_string()),
        };
        for (label, beta) in [
            ("r_minus", lo),
            ("r_minus+0.01", lo + 0.01),
            ("0.5", 0.5),
            ("r_plus", hi),
        ] {
            let path = match riccati_solve(0.0, 0.0, beta, m, k, horizon) {
                Ok(p) => p,
                Err(e) => return failed_run(e.to_string()),
            };
            let end = path.last().expect("nonempty path").1;
            let equilibrium = label == "r_minus" || label == "r_plus";
            let ok = if equilibrium {
                path.iter().all(|p| (p.1 - beta).abs() <= 1e-12)
            } else {
                (end - hi).abs() <= 1e-6
            };
            pass &= ok;
            cases.push(json!({
                "M_over_K": ratio,
                "start": label,
                "beta_T": beta,
                "final": end,
                "r_plus": hi,
                "pass": ok,
            }));
        }
    }
    (pass, false, json!({ "cases": cases }))
}

/// Runs every criterion of `suite` in id order.
pub fn run_suite(suite: Suite) -> Report {
    run_suite_with(suite, |_| {})
}

/// As [`run_suite`], calling `progress` after each criterion.
pub fn run_suite_with(suite: Suite, mut progress: impl FnMut(&Verdict)) -> Report {
    let started = Instant::now();
    let mut lab = Lab::default();
    let mut verdicts = Vec::new();
    for &(id, s, title) in CRITERIA.iter() {
        if suite != Suite::All && s != suite {
            continue;
        }
        let t0 = Instant::now();
        let (pass, known_unattainable, details) = criterion(&mut lab, id);
        let v = Verdict {
            id,
            suite: s,
            title,
            pass,
            known_unattainable: !pass && known_unattainable,
            seconds: t0.elapsed().as_secs_f64(),
            details,
        };
        progress(&v);
        verdicts.push(v);
    }
    Report {
        suite,
        pass: verdicts.iter().all(|v| v.pass),
        verdicts,
        seconds: started.elapsed().as_secs_f64(),
    }
}

pub fn write_report(report: &Report, path: &std::path::Path) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    crate::write_json(path, report)
}
