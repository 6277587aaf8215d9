//! Fixed points of the self-consistency equation for a list of couplings.

use std::path::Path;

use kslab_core::diagnostics::{equilibrium_r, Equilibrium};
use kslab_core::FrequencyDensity;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::{fmt_f64, write_json};

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumRow {
    pub k: f64,
    #[serde(flatten)]
    pub result: Option<Equilibrium>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn equilibrium_table(g: &FrequencyDensity, ks: &[f64]) -> Vec<EquilibriumRow> {
    ks.iter()
        .map(|&k| match equilibrium_r(g, k) {
            Ok(e) => EquilibriumRow {
                k,
                result: Some(e),
                error: None,
            },
            Err(e) => EquilibriumRow {
                k,
                result: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

/// One line per row, for the terminal.
pub fn render(rows: &[EquilibriumRow]) -> String {
    let mut s = format!(
        "{:>10}  {:>12}  {:>18}  {:>10}  {:>12}  {:>12}  {:>12}\n",
        "K", "status", "R_inf", "residual", "H(1)", "support", "inner"
    );
    for row in rows {
        let line = match &row.result {
            Some(Equilibrium::Solution {
                r,
                residual,
                h_at_one,
                support_bound,
                inner_bound,
            }) => format!(
                "{:>10.4}  {:>12}  {:>18.15}  {:>10.2e}  {:>12.9}  {:>12.4e}  {:>12}",
                row.k,
                "solution",
                r,
                residual,
                h_at_one,
                support_bound.margin,
                inner_bound
                    .as_ref()
                    .map_or("-".to_string(), |b| format!("{:.4e}", b.margin)),
            ),
            Some(Equilibrium::NoSolution { h_at_one }) => format!(
                "{:>10.4}  {:>12}  {:>18}  {:>10}  {:>12.9}  {:>12}  {:>12}",
                row.k, "no_solution", "-", "-", h_at_one, "-", "-"
            ),
            None => format!(
                "{:>10.4}  {:>12}  {}",
                row.k,
                "error",
                row.error.as_deref().unwrap_or("")
            ),
        };
        s.push_str(&line);
        s.push('\n');
    }
    s
}

pub fn write_equilibrium(rows: &[EquilibriumRow], out: &Path) -> CliResult<()> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_json(&out.join("equilibrium.json"), rows)?;
    let path = out.join("equilibrium.csv");
    let io = |e: csv::Error| CliError::from(kslab_core::Error::from(e));
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    w.write_record([
        "K",
        "status",
        "R",
        "residual",
        "H_at_1",
        "support_margin",
        "inner_margin",
    ])
    .map_err(io)?;
    for row in rows {
        let rec = match &row.result {
            Some(Equilibrium::Solution {
                r,
                residual,
                h_at_one,
                support_bound,
                inner_bound,
            }) => vec![
                fmt_f64(row.k),
                "solution".into(),
                fmt_f64(*r),
                fmt_f64(*residual),
                fmt_f64(*h_at_one),
                fmt_f64(support_bound.margin),
                inner_bound
                    .as_ref()
                    .map(|b| fmt_f64(b.margin))
                    .unwrap_or_default(),
            ],
            Some(Equilibrium::NoSolution { h_at_one }) => vec![
                fmt_f64(row.k),
                "no_solution".into(),
                String::new(),
                String::new(),
                fmt_f64(*h_at_one),
                String::new(),
                String::new(),
            ],
            None => {
                let mut rec = vec![fmt_f64(row.k), "error".into()];
                rec.resize(7, String::new());
                rec
            }
        };
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))
}
