//! JSON experiment configuration. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use kslab_core::diagnostics::{DiagnosticsConfig, HypothesisInputs};
use kslab_core::{FrequencyDensity, InitialProfile, PhaseGrid, Scheme, StepperConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    #[default]
    Kinetic,
    Particle,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrequencySpec {
    Dirac,
    Uniform {
        halfwidth: f64,
    },
    Table {
        nodes: Vec<f64>,
        densities: Vec<f64>,
    },
    /// CSV with an `omega,density` header.
    TableCsv {
        path: PathBuf,
    },
}

impl FrequencySpec {
    pub fn build(&self) -> CliResult<FrequencyDensity> {
        let g = match self {
            FrequencySpec::Dirac => FrequencyDensity::dirac(),
            FrequencySpec::Uniform { halfwidth } => FrequencyDensity::uniform(*halfwidth)?,
            FrequencySpec::Table { nodes, densities } => {
                FrequencyDensity::table(nodes.clone(), densities.clone())?
            }
            FrequencySpec::TableCsv { path } => FrequencyDensity::from_csv(path)?,
        };
        g.validate()?;
        Ok(g)
    }
}

/// A single coupling strength or a list for sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingSpec {
    One(f64),
    Many(Vec<f64>),
}

impl CouplingSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            CouplingSpec::One(k) => vec![*k],
            CouplingSpec::Many(v) => v.clone(),
        }
    }
}

/// Parameters of the admissibility report that are not fixed by the run
/// itself (`K`, `M` and `R0` come from the run).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisParams {
    pub mu: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub eps0: f64,
    pub gamma0: f64,
}

impl HypothesisParams {
    pub fn inputs(&self, k: f64, m: f64, r0: f64) -> HypothesisInputs {
        HypothesisInputs {
            k,
            m,
            r0,
            mu: self.mu,
            gamma: self.gamma,
            kappa: self.kappa,
            eps0: self.eps0,
            gamma0: self.gamma0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacteristicStart {
    pub theta: f64,
    pub omega: f64,
    pub t_start: f64,
    pub t_stop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacteristicsSpec {
    pub starts: Vec<CharacteristicStart>,
    #[serde(default = "default_char_step")]
    pub step: f64,
}

fn default_char_step() -> f64 {
    1e-3
}
fn default_n_theta() -> usize {
    256
}
fn default_n_omega() -> usize {
    16
}
fn default_n_particles() -> usize {
    1000
}
fn default_cfl() -> f64 {
    0.4
}
fn default_dt_max() -> f64 {
    0.05
}
fn default_particle_dt() -> f64 {
    0.01
}
fn default_scheme() -> Scheme {
    Scheme::Muscl
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: Model,
    pub frequency: FrequencySpec,
    pub initial: InitialProfile,
    /// Kinetic cell values (`omega_index,theta_index,f`), overriding `initial`.
    #[serde(default)]
    pub initial_csv: Option<PathBuf>,
    /// Particle phases and frequencies (`theta,omega`); otherwise sampled from
    /// `g` and `initial`.
    #[serde(default)]
    pub particles_csv: Option<PathBuf>,
    pub coupling: CouplingSpec,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    #[serde(default = "default_n_omega")]
    pub n_omega: usize,
    #[serde(default = "default_n_particles")]
    pub n_particles: usize,
    pub t_end: f64,
    pub sample_every: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_particle_dt")]
    pub particle_dt: f64,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    /// Bound checks to keep in the outputs; all of them when absent.
    #[serde(default)]
    pub checks: Option<Vec<String>>,
    #[serde(default)]
    pub hypothesis: Option<HypothesisParams>,
    #[serde(default)]
    pub characteristics: Option<CharacteristicsSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Names accepted in `checks`. `mass_range` covers every configured interval.
pub const CHECK_NAMES: [&str; 13] = [
    "mass_range",
    "rdot_lipschitz",
    "rdot_formula",
    "phidot_bound",
    "phidot_formula",
    "energy_monotone",
    "dissipation",
    "sandwich_lower",
    "sandwich_upper",
    "slice_mass_drift",
    "total_mass_drift",
    "positivity",
    "r_nondecreasing",
];

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::config(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Returns the parsed config together with the raw text for echoing.
    pub fn load(path: &Path) -> CliResult<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok((Self::parse(&text)?, text))
    }

    /// Checks every field against the solver preconditions.
    pub fn validate(&self) -> CliResult<()> {
        let cfg_err = |e: kslab_core::Error| CliError::config(e.to_string());
        PhaseGrid::new(self.n_theta).map_err(cfg_err)?;
        if self.n_omega == 0 {
            return Err(CliError::config("n_omega must be at least 1"));
        }
        if self.n_particles == 0 {
            return Err(CliError::config("n_particles must be at least 1"));
        }
        positive("t_end", self.t_end)?;
        positive("sample_every", self.sample_every)?;
        positive("dt_max", self.dt_max)?;
        positive("particle_dt", self.particle_dt)?;
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(CliError::config(format!(
                "cfl must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        let ks = self.coupling.values();
        if ks.is_empty() {
            return Err(CliError::config("coupling list is empty"));
        }
        if let Some(k) = ks.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
            return Err(CliError::config(format!(
                "coupling must be finite and nonnegative, got {k}"
            )));
        }
        self.frequency
            .build()
            .map_err(|e| CliError::config(e.to_string()))?;
        self.initial.validate().map_err(cfg_err)?;
        self.diagnostics.validate().map_err(cfg_err)?;
        if let Some(names) = &self.checks {
            if let Some(bad) = names.iter().find(|n| !CHECK_NAMES.contains(&n.as_str())) {
                return Err(CliError::config(format!(
                    "unknown check `{bad}`; expected one of {}",
                    CHECK_NAMES.join(", ")
                )));
            }
        }
        if let Some(h) = &self.hypothesis {
            for (name, v) in [
                ("mu", h.mu),
                ("gamma", h.gamma),
                ("kappa", h.kappa),
                ("eps0", h.eps0),
                ("gamma0", h.gamma0),
            ] {
                positive(&format!("hypothesis.{name}"), v)?;
            }
        }
        if let Some(c) = &self.characteristics {
            positive("characteristics.step", c.step)?;
            for s in &c.starts {
                let ok = [s.theta, s.omega, s.t_start, s.t_stop]
                    .iter()
                    .all(|v| v.is_finite());
                if !ok
                    || s.t_start < 0.0
                    || s.t_stop < 0.0
                    || s.t_start > self.t_end
                    || s.t_stop > self.t_end
                {
                    return Err(CliError::config(format!(
                        "characteristic start {s:?} must be finite with times in [0, t_end]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn stepper(&self) -> StepperConfig {
        StepperConfig {
            scheme: self.scheme,
            cfl: self.cfl,
            dt_max: self.dt_max,
        }
    }

    /// The coupling when exactly one is given.
    pub fn single_coupling(&self) -> CliResult<f64> {
        match &self.coupling {
            CouplingSpec::One(k) => Ok(*k),
            CouplingSpec::Many(v) if v.len() == 1 => Ok(v[0]),
            CouplingSpec::Many(_) => Err(CliError::config(
                "this command takes a single coupling; use `sweep` for lists",
            )),
        }
    }
}

/// Input of the `equilibrium` command: either a full experiment config or
/// just the frequency density and couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumConfig {
    pub frequency: FrequencySpec,
    pub coupling: CouplingSpec,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl EquilibriumConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        let minimal = value.as_object().is_some_and(|o| {
            o.keys()
                .all(|k| matches!(k.as_str(), "frequency" | "coupling" | "output"))
        });
        let cfg = if minimal {
            serde_json::from_value(value).map_err(|e| CliError::config(e.to_string()))?
        } else {
            let full = ExperimentConfig::parse(text)?;
            EquilibriumConfig {
                frequency: full.frequency,
                coupling: full.coupling,
                output: full.output,
            }
        };
        cfg.frequency
            .build()
            .map_err(|e| CliError::config(e.to_string()))?;
        if cfg.coupling.values().is_empty() {
            return Err(CliError::config("coupling list is empty"));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "frequency": {"kind": "dirac"},
        "initial": {"kind": "cosine", "amplitude": 0.2, "center": 0.0},
        "coupling": 1.0,
        "t_end": 1.0,
        "sample_every": 0.1
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.model, Model::Kinetic);
        assert_eq!(c.n_theta, 256);
        assert_eq!(c.scheme, Scheme::Muscl);
        assert_eq!(c.single_coupling().unwrap(), 1.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("\"t_end\"", "\"gamma_0\": 1.1, \"t_end\"");
        assert!(matches!(
            ExperimentConfig::parse(&text),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn small_grid_rejected() {
        let text = MINIMAL.replace("\"t_end\"", "\"n_theta\": 8, \"t_end\"");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn check_selection_validated() {
        let ok = MINIMAL.replace(
            "\"t_end\"",
            "\"checks\": [\"mass_range\", \"positivity\"], \"t_end\"",
        );
        assert!(ExperimentConfig::parse(&ok).is_ok());
        let bad = MINIMAL.replace("\"t_end\"", "\"checks\": [\"phidot\"], \"t_end\"");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn roundtrip() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        let again = ExperimentConfig::parse(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn equilibrium_accepts_both_forms() {
        let short = r#"{"frequency": {"kind": "uniform", "halfwidth": 1.0}, "coupling": [1, 5]}"#;
        assert_eq!(
            EquilibriumConfig::parse(short).unwrap().coupling.values(),
            vec![1.0, 5.0]
        );
        assert!(EquilibriumConfig::parse(MINIMAL).is_ok());
        assert!(EquilibriumConfig::parse(
            r#"{"frequency": {"kind": "dirac"}, "coupling": 1, "seed": 3}"#
        )
        .is_err());
    }

    #[test]
    fn coupling_lists() {
        let text = MINIMAL.replace("\"coupling\": 1.0", "\"coupling\": [1.0, 2.0]");
        let c = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(c.coupling.values(), vec![1.0, 2.0]);
        assert!(c.single_coupling().is_err());
    }
}
