//! Single-coupling runs and the files they leave behind.

use std::path::Path;
use std::time::Instant;

use kslab_core::diagnostics::{
    detect_transient, finalize, fit_exponential_rate, hypothesis_check, r_infinity,
    summarize_checks, write_records_csv, BoundCheck, CheckContext, CheckSummary, DiagnosticsRecord,
    HypothesisReport, RateFit, Trend, TRANSIENT_RUN,
};
use kslab_core::kinetic::{read_initial_csv, RunStats};
use kslab_core::order::global_order;
use kslab_core::particle::{self, ParticleSample};
use kslab_core::{KineticState, ParticleState, PhaseGrid, Stepper};
use serde::Serialize;

use crate::config::{ExperimentConfig, Model};
use crate::error::{CliError, CliResult};
use crate::{write_json, write_text};

/// Per-slice relative drift allowed by the conservation check.
pub const SLICE_DRIFT_TOL: f64 = 1e-12;
/// Absolute drift of the total mass.
pub const TOTAL_DRIFT_TOL: f64 = 1e-10;
/// Smallest admissible per-step change of `R` for identical oscillators.
pub const R_STEP_TOL: f64 = 1e-8;

/// A finished kinetic run with its per-sample diagnostics.
#[derive(Debug, Clone)]
pub struct KineticRun {
    pub coupling: f64,
    pub m: f64,
    pub r0: f64,
    pub identical: bool,
    pub dtheta: f64,
    pub records: Vec<DiagnosticsRecord>,
    /// Per-sample checks followed by the run-level ones.
    pub checks: Vec<BoundCheck>,
    pub stats: RunStats,
    pub final_state: KineticState,
    pub seconds: f64,
}

impl KineticRun {
    pub fn check_passes(&self, name: &str) -> bool {
        self.checks
            .iter()
            .filter(|c| c.name == name)
            .all(|c| c.pass)
    }

    pub fn final_r(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.r)
    }
}

pub fn initial_kinetic(cfg: &ExperimentConfig, k: f64) -> CliResult<KineticState> {
    let g = cfg.frequency.build()?;
    let state = match &cfg.initial_csv {
        Some(path) => read_initial_csv(path, cfg.n_theta, &g, cfg.n_omega, k)?,
        None => KineticState::from_profile(
            PhaseGrid::new(cfg.n_theta)?,
            &g,
            cfg.n_omega,
            k,
            &cfg.initial,
        )?,
    };
    Ok(state)
}

pub fn run_kinetic(cfg: &ExperimentConfig, k: f64) -> CliResult<KineticRun> {
    let started = Instant::now();
    let g = cfg.frequency.build()?;
    let mut state = initial_kinetic(cfg, k)?;
    let r0 = global_order(&state).r;
    let dtheta = state.grid().dtheta();
    let mut stepper = Stepper::new(cfg.stepper())?;
    let diag = &cfg.diagnostics;
    let traj = stepper.run(&mut state, cfg.t_end, cfg.sample_every, |s, _| {
        DiagnosticsRecord::of(s, diag)
    })?;
    let mut records = traj.samples;
    let stats = traj.stats;
    let ctx = CheckContext {
        m: g.support_bound(),
        k,
        dt: stats.dt_max,
        dtheta,
        identical: g.is_dirac(),
        sandwich_gamma: diag.sandwich_gamma,
    };
    let mut checks = finalize(&mut records, &ctx);
    checks.extend(run_checks(&stats, ctx.identical, state.t()));
    if let Some(keep) = &cfg.checks {
        checks.retain(|c| {
            let base = c.name.split('[').next().unwrap_or(&c.name);
            keep.iter().any(|k| k == base)
        });
    }
    log::info!(
        "K = {k}: {} steps, final R = {:.6}",
        stats.steps,
        records.last().map_or(f64::NAN, |r| r.r)
    );
    Ok(KineticRun {
        coupling: k,
        m: ctx.m,
        r0,
        identical: ctx.identical,
        dtheta,
        records,
        checks,
        stats,
        final_state: state,
        seconds: started.elapsed().as_secs_f64(),
    })
}

fn upper(name: &str, t: f64, value: f64, bound: f64) -> BoundCheck {
    BoundCheck {
        name: name.into(),
        t,
        value,
        bound,
        margin: bound - value,
        pass: value <= bound,
    }
}

/// Conservation, positivity and (identical case) monotonicity of `R`.
fn run_checks(stats: &RunStats, identical: bool, t_end: f64) -> Vec<BoundCheck> {
    let mut out = vec![
        upper(
            "slice_mass_drift",
            t_end,
            stats.max_slice_drift,
            SLICE_DRIFT_TOL,
        ),
        upper(
            "total_mass_drift",
            t_end,
            stats.max_total_drift,
            TOTAL_DRIFT_TOL,
        ),
        upper("positivity", t_end, -stats.min_value, 0.0),
    ];
    if identical {
        out.push(upper(
            "r_nondecreasing",
            t_end,
            -stats.min_step_dr,
            R_STEP_TOL,
        ));
    }
    out
}

pub fn initial_particles(cfg: &ExperimentConfig, k: f64, n: usize) -> CliResult<ParticleState> {
    if let Some(path) = &cfg.particles_csv {
        return Ok(ParticleState::from_csv(path, k)?);
    }
    let g = cfg.frequency.build()?;
    let kinetic = initial_kinetic(cfg, k)?;
    Ok(ParticleState::sample(
        &g,
        &kinetic.density(),
        n,
        k,
        cfg.seed,
    )?)
}

pub fn run_particles(cfg: &ExperimentConfig, k: f64) -> CliResult<Vec<ParticleSample>> {
    let mut state = initial_particles(cfg, k, cfg.n_particles)?;
    Ok(particle::run(
        &mut state,
        cfg.t_end,
        cfg.particle_dt,
        cfg.sample_every,
    )?)
}

/// `max_t |R_kinetic − r_particle|` over sample times present in both series.
pub fn mean_field_gap(records: &[DiagnosticsRecord], samples: &[ParticleSample]) -> f64 {
    let mut gap: f64 = 0.0;
    let mut j = 0;
    for rec in records {
        while j < samples.len() && samples[j].t < rec.t - 1e-9 {
            j += 1;
        }
        if j < samples.len() && (samples[j].t - rec.t).abs() <= 1e-9 {
            gap = gap.max((rec.r - samples[j].r).abs());
        }
    }
    gap
}

/// Exponential rate over the window that starts where `values` first follows
/// `trend` for [`TRANSIENT_RUN`] samples and runs to the end of the record.
pub fn auto_fit(times: &[f64], values: &[f64], trend: Trend) -> Result<RateFit, String> {
    let start = detect_transient(values, trend, TRANSIENT_RUN, 0.0).unwrap_or(0);
    let series: Vec<(f64, f64)> = times.iter().copied().zip(values.iter().copied()).collect();
    let end = *times.last().ok_or("empty series")?;
    fit_exponential_rate(&series, (times[start], end)).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum FitOutcome {
    Fit(RateFit),
    Failed { error: String },
}

impl From<Result<RateFit, String>> for FitOutcome {
    fn from(r: Result<RateFit, String>) -> Self {
        match r {
            Ok(f) => FitOutcome::Fit(f),
            Err(error) => FitOutcome::Failed { error },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Fits {
    pub lambda: Option<FitOutcome>,
    pub gamma_minus: Option<FitOutcome>,
    pub gamma_plus: Vec<FitOutcome>,
}

pub fn fits(run: &KineticRun) -> Fits {
    let t: Vec<f64> = run.records.iter().map(|r| r.t).collect();
    let column =
        |f: &dyn Fn(&DiagnosticsRecord) -> f64| -> Vec<f64> { run.records.iter().map(f).collect() };
    let first = run.records.first();
    let lambda = first.and_then(|r| r.lambda).map(|_| {
        auto_fit(
            &t,
            &column(&|r| r.lambda.unwrap_or(f64::NAN)),
            Trend::Decreasing,
        )
        .into()
    });
    let gamma_minus = first.and_then(|r| r.gamma_minus).map(|_| {
        auto_fit(
            &t,
            &column(&|r| r.gamma_minus.unwrap_or(f64::NAN)),
            Trend::Decreasing,
        )
        .into()
    });
    let n_plus = first.map_or(0, |r| r.gamma_plus.len());
    let gamma_plus = (0..n_plus)
        .map(|k| auto_fit(&t, &column(&|r| r.gamma_plus[k]), Trend::Increasing).into())
        .collect();
    Fits {
        lambda,
        gamma_minus,
        gamma_plus,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsSummary {
    pub steps: usize,
    pub dt_min: f64,
    pub dt_max: f64,
    pub min_step_dr: f64,
    pub max_slice_drift: f64,
    pub max_total_drift: f64,
    pub min_value: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KineticSummary {
    pub initial_r: f64,
    pub final_r: f64,
    pub final_phi: f64,
    /// Final interval masses, in configuration order.
    pub final_masses: Vec<f64>,
    pub final_mass_l_pi3: f64,
    pub r_infinity: f64,
    pub fits: Fits,
    pub checks: Vec<CheckSummary>,
    pub all_checks_pass: bool,
    pub stats: StatsSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParticleSummary {
    pub n: usize,
    pub final_r: f64,
    pub final_diameter: f64,
    pub final_potential: f64,
    /// `max_t |R − r|` against the kinetic run, when both were simulated.
    pub mean_field_gap: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub coupling: f64,
    pub m: f64,
    pub hypothesis: Option<HypothesisReport>,
    pub kinetic: Option<KineticSummary>,
    pub particle: Option<ParticleSummary>,
}

impl Summary {
    /// True when every recorded check passed.
    pub fn passed(&self) -> bool {
        self.kinetic.as_ref().is_none_or(|k| k.all_checks_pass)
    }
}

pub fn kinetic_summary(run: &KineticRun) -> KineticSummary {
    let last = run.records.last();
    let checks = summarize_checks(&run.checks);
    KineticSummary {
        initial_r: run.r0,
        final_r: run.final_r(),
        final_phi: last.map_or(f64::NAN, |r| r.phi),
        final_masses: last.map_or_else(Vec::new, |r| r.masses.clone()),
        final_mass_l_pi3: last.map_or(f64::NAN, |r| r.mass_l_pi3),
        r_infinity: r_infinity(run.m, run.coupling),
        fits: fits(run),
        all_checks_pass: checks.iter().all(|c| c.failed == 0),
        checks,
        stats: StatsSummary {
            steps: run.stats.steps,
            dt_min: run.stats.dt_min,
            dt_max: run.stats.dt_max,
            min_step_dr: run.stats.min_step_dr,
            max_slice_drift: run.stats.max_slice_drift,
            max_total_drift: run.stats.max_total_drift,
            min_value: run.stats.min_value,
            seconds: run.seconds,
        },
    }
}

#[derive(Debug, Serialize)]
struct ChecksFile<'a> {
    summaries: Vec<CheckSummary>,
    /// Every failed evaluation, in time order.
    failures: Vec<&'a BoundCheck>,
}

/// Runs one configuration at coupling `k` and writes its artifacts into `out`.
pub fn simulate_into(cfg: &ExperimentConfig, raw: &str, k: f64, out: &Path) -> CliResult<Summary> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_text(&out.join("config.json"), raw)?;
    let g = cfg.frequency.build()?;
    let m = g.support_bound();
    let want_kinetic = matches!(cfg.model, Model::Kinetic | Model::Both);
    let want_particle = matches!(cfg.model, Model::Particle | Model::Both);

    let r0 = global_order(&initial_kinetic(cfg, k)?).r;
    let hypothesis = cfg.hypothesis.map(|h| hypothesis_check(h.inputs(k, m, r0)));

    let kinetic = if want_kinetic {
        let run = run_kinetic(cfg, k)?;
        write_records_csv(
            &run.records,
            &cfg.diagnostics,
            run.final_state.n_omega(),
            out.join("trajectory.csv"),
        )?;
        let failures = run.checks.iter().filter(|c| !c.pass).collect();
        write_json(
            &out.join("checks.json"),
            &ChecksFile {
                summaries: summarize_checks(&run.checks),
                failures,
            },
        )?;
        write_text(
            &out.join("plot.gp"),
            &gnuplot_script(cfg, run.final_state.n_omega()),
        )?;
        Some(run)
    } else {
        None
    };
    let particle = if want_particle {
        let samples = run_particles(cfg, k)?;
        particle::write_trajectory_csv(&samples, out.join("particles.csv"))?;
        let last = samples
            .last()
            .copied()
            .expect("run returns the initial sample");
        Some(ParticleSummary {
            n: cfg.n_particles,
            final_r: last.r,
            final_diameter: last.diameter,
            final_potential: last.potential,
            mean_field_gap: kinetic
                .as_ref()
                .map(|run| mean_field_gap(&run.records, &samples)),
        })
    } else {
        None
    };
    if !want_kinetic {
        write_text(&out.join("plot.gp"), &particle_gnuplot_script())?;
    }
    let summary = Summary {
        coupling: k,
        m,
        hypothesis,
        kinetic: kinetic.as_ref().map(kinetic_summary),
        particle,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// `plot.gp`: `R(t)`, interval masses, and `Λ`/`Γ` on a log scale.
pub fn gnuplot_script(cfg: &ExperimentConfig, n_omega: usize) -> String {
    let header = kslab_core::diagnostics::csv_header(&cfg.diagnostics, n_omega);
    let col =
        |name: &str| format!("'trajectory.csv' using \"t\":\"{name}\" with lines title \"{name}\"");
    let masses: Vec<String> = std::iter::once("mass_Lplus_pi3".to_string())
        .chain(
            header
                .iter()
                .filter(|h| h.starts_with("mass_") && *h != "mass_Lplus_pi3")
                .cloned(),
        )
        .map(|h| col(&h))
        .collect();
    let lyap: Vec<String> = header
        .iter()
        .filter(|h| h.starts_with("Lambda") || h.starts_with("Gamma"))
        .map(|h| col(h))
        .collect();
    let panels = if lyap.is_empty() { 2 } else { 3 };
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set terminal pngcairo size 900,900\n");
    s.push_str("set output 'plot.png'\n");
    s.push_str(&format!("set multiplot layout {panels},1\n"));
    s.push_str("set xlabel 't'\n");
    s.push_str("set ylabel 'R'\nset yrange [0:1.05]\n");
    s.push_str(&format!("plot {}\n", col("R")));
    s.push_str("set ylabel 'mass'\nset yrange [0:1.05]\n");
    s.push_str(&format!("plot {}\n", masses.join(", \\\n     ")));
    if !lyap.is_empty() {
        s.push_str("set ylabel 'L2 functional'\nset autoscale y\nset logscale y\n");
        s.push_str(&format!("plot {}\n", lyap.join(", \\\n     ")));
        s.push_str("unset logscale y\n");
    }
    s.push_str("unset multiplot\n");
    s
}

fn particle_gnuplot_script() -> String {
    [
        "set datafile separator ','",
        "set terminal pngcairo size 900,600",
        "set output 'plot.png'",
        "set multiplot layout 2,1",
        "set xlabel 't'",
        "plot 'particles.csv' using \"t\":\"r\" with lines title \"r\"",
        "plot 'particles.csv' using \"t\":\"D\" with lines title \"D\"",
        "unset multiplot",
        "",
    ]
    .join("\n")
}
