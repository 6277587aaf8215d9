//! Characteristics traced through the recorded `(R, φ)` of a kinetic run.

use std::path::Path;

use kslab_core::diagnostics::write_records_csv;
use kslab_core::kinetic::{characteristics, OrderSeries};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::simulate::{run_kinetic, KineticRun};
use crate::{fmt_f64, write_text};

/// Order-parameter series of a finished run, for tracing.
pub fn order_series(run: &KineticRun) -> CliResult<OrderSeries> {
    let t = run.records.iter().map(|r| r.t).collect();
    let r = run.records.iter().map(|r| r.r).collect();
    let phi = run.records.iter().map(|r| r.phi).collect();
    Ok(OrderSeries::new(run.coupling, t, r, phi)?)
}

/// Runs the kinetic model and writes `characteristics.csv` with columns
/// `start,omega,t,theta,cos_rel`, where `cos_rel = cos(θ − φ(t))`.
pub fn trace_into(cfg: &ExperimentConfig, raw: &str, out: &Path) -> CliResult<usize> {
    let spec = cfg
        .characteristics
        .as_ref()
        .ok_or_else(|| CliError::config("config has no `characteristics` section"))?;
    let k = cfg.single_coupling()?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_text(&out.join("config.json"), raw)?;
    let run = run_kinetic(cfg, k)?;
    write_records_csv(
        &run.records,
        &cfg.diagnostics,
        run.final_state.n_omega(),
        out.join("trajectory.csv"),
    )?;
    let series = order_series(&run)?;

    let path = out.join("characteristics.csv");
    let io = |e: csv::Error| CliError::from(kslab_core::Error::from(e));
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    w.write_record(["start", "omega", "t", "theta", "cos_rel"])
        .map_err(io)?;
    let mut rows = 0;
    for (i, s) in spec.starts.iter().enumerate() {
        let path = characteristics(&series, s.theta, s.omega, s.t_start, s.t_stop, spec.step)?;
        for (t, th) in path {
            let (_, phi) = series.at(t)?;
            w.write_record([
                i.to_string(),
                fmt_f64(s.omega),
                fmt_f64(t),
                fmt_f64(th),
                fmt_f64((th - phi).cos()),
            ])
            .map_err(io)?;
            rows += 1;
        }
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(rows)
}
