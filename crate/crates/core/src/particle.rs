//! Finite-N all-to-all Kuramoto model
//! `θ̇_i = ω_i + (K/N) Σ_j sin(θ_j − θ_i)`.
//!
//! Phases are stored lifted on the real line; they are only projected onto the
//! circle when order parameters or output rows are formed.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::frequency::FrequencyDensity;
use crate::order::{order_from_phasor, OrderParams};
use crate::{angle_diff, Error, Result};

/// Above this size the O(N²) direct sum is split across threads.
const PAR_THRESHOLD: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    thetas: Vec<f64>,
    omegas: Vec<f64>,
    coupling: f64,
    t: f64,
}

impl ParticleState {
    pub fn new(thetas: Vec<f64>, omegas: Vec<f64>, coupling: f64) -> Result<Self> {
        if thetas.is_empty() {
            return Err(Error::invalid("particle model needs N ≥ 1"));
        }
        if thetas.len() != omegas.len() {
            return Err(Error::invalid(format!(
                "{} phases but {} frequencies",
                thetas.len(),
                omegas.len()
            )));
        }
        if thetas.iter().chain(&omegas).any(|v| !v.is_finite()) {
            return Err(Error::invalid("phases and frequencies must be finite"));
        }
        if !(coupling.is_finite() && coupling >= 0.0) {
            return Err(Error::invalid(format!(
                "coupling K must be nonnegative, got {coupling}"
            )));
        }
        Ok(Self {
            thetas,
            omegas,
            coupling,
            t: 0.0,
        })
    }

    pub fn n(&self) -> usize {
        self.thetas.len()
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn set_t(&mut self, t: f64) {
        self.t = t;
    }

    /// Reads `theta,omega` rows (header required).
    pub fn from_csv(path: impl AsRef<Path>, coupling: f64) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            theta: f64,
            omega: f64,
        }
        let mut rdr = csv::Reader::from_path(path)?;
        let (mut th, mut om) = (Vec::new(), Vec::new());
        for row in rdr.deserialize() {
            let row: Row = row?;
            th.push(row.theta);
            om.push(row.omega);
        }
        Self::new(th, om, coupling)
    }

    /// Draws `n` oscillators from `f₀ = g(ω) ϱ₀(θ)`, with `ϱ₀` given by cell
    /// averages on a uniform grid over `[0, 2π)`. Frequencies and phases use
    /// independent streams of the same seed.
    pub fn sample(
        g: &FrequencyDensity,
        cells: &[f64],
        n: usize,
        coupling: f64,
        seed: u64,
    ) -> Result<Self> {
        let omegas = g.sample(n, seed)?;
        let thetas = sample_phases(cells, n, seed)?;
        Self::new(thetas, omegas, coupling)
    }
}

/// Inverse-CDF sampling of the piecewise-constant density with cell values
/// `cells` on `[0, 2π)`.
pub fn sample_phases(cells: &[f64], n: usize, seed: u64) -> Result<Vec<f64>> {
    if cells.is_empty() || cells.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid(
            "phase density cells must be finite and nonnegative",
        ));
    }
    let mut cum = Vec::with_capacity(cells.len() + 1);
    cum.push(0.0);
    for v in cells {
        cum.push(cum.last().unwrap() + v);
    }
    let total = *cum.last().unwrap();
    if !(total > 0.0) {
        return Err(Error::invalid("phase density has zero mass"));
    }
    let h = TAU / cells.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    Ok((0..n)
        .map(|_| {
            let u = rng.gen::<f64>() * total;
            let j = cum.partition_point(|&c| c <= u).clamp(1, cells.len()) - 1;
            let frac = if cells[j] > 0.0 {
                (u - cum[j]) / cells[j]
            } else {
                0.5
            };
            (j as f64 + frac.clamp(0.0, 1.0)) * h
        })
        .collect())
}

fn phasor(thetas: &[f64]) -> (f64, f64) {
    thetas
        .iter()
        .fold((0.0, 0.0), |(c, s), th| (c + th.cos(), s + th.sin()))
}

/// `θ̇_i = ω_i + (K/N) Σ_j sin(θ_j − θ_i)`, evaluated pairwise.
pub fn rhs_direct(state: &ParticleState) -> Vec<f64> {
    let n = state.n();
    let kn = state.coupling / n as f64;
    let th = &state.thetas;
    let one = |i: usize| -> f64 {
        let s: f64 = th.iter().map(|tj| (tj - th[i]).sin()).sum();
        state.omegas[i] + kn * s
    };
    if n >= PAR_THRESHOLD {
        (0..n).into_par_iter().map(one).collect()
    } else {
        (0..n).map(one).collect()
    }
}

/// Mean-field form `θ̇_i = ω_i − K r sin(θ_i − φ)`, written through the
/// phasor sums so that it stays valid when `r = 0`.
pub fn rhs_mean_field(state: &ParticleState) -> Vec<f64> {
    let mut out = vec![0.0; state.n()];
    mean_field_into(&state.thetas, &state.omegas, state.coupling, &mut out);
    out
}

fn mean_field_into(thetas: &[f64], omegas: &[f64], k: f64, out: &mut [f64]) {
    let n = thetas.len() as f64;
    let (c, s) = phasor(thetas);
    let (c, s) = (k * c / n, k * s / n);
    // K r sin(θ − φ) = K (sin θ · r cos φ − cos θ · r sin φ)
    for ((o, th), w) in out.iter_mut().zip(thetas).zip(omegas) {
        let (st, ct) = th.sin_cos();
        *o = w - (st * c - ct * s);
    }
}

/// One classic RK4 step of size `dt` (negative `dt` integrates backwards).
pub fn particle_step(state: &ParticleState, dt: f64) -> Result<ParticleState> {
    let mut next = state.clone();
    particle_step_mut(&mut next, dt)?;
    Ok(next)
}

/// In-place variant of [`particle_step`].
pub fn particle_step_mut(state: &mut ParticleState, dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt != 0.0) {
        return Err(Error::invalid(format!(
            "particle step needs finite nonzero dt, got {dt}"
        )));
    }
    let n = state.n();
    let k = state.coupling;
    let om = &state.omegas;
    let th = &state.thetas;
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    mean_field_into(th, om, k, &mut k1);
    for i in 0..n {
        tmp[i] = th[i] + 0.5 * dt * k1[i];
    }
    mean_field_into(&tmp, om, k, &mut k2);
    for i in 0..n {
        tmp[i] = th[i] + 0.5 * dt * k2[i];
    }
    mean_field_into(&tmp, om, k, &mut k3);
    for i in 0..n {
        tmp[i] = th[i] + dt * k3[i];
    }
    mean_field_into(&tmp, om, k, &mut k4);
    for i in 0..n {
        state.thetas[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    state.t += dt;
    Ok(())
}

/// `r e^{iφ} = (1/N) Σ e^{iθ_j}`; `φ` is undefined (reported as 0) when
/// `r ≤ 1e-12`.
pub fn particle_order(state: &ParticleState) -> OrderParams {
    let n = state.n() as f64;
    let (c, s) = phasor(&state.thetas);
    order_from_phasor(c / n, s / n, 0.0)
}

/// `V_p(Θ) = −Σ ω_i θ_i + (K/2N) Σ_{i,j} (1 − cos(θ_j − θ_i))`.
///
/// The pair sum equals `N²(1 − r²)`, which keeps this O(N).
pub fn potential(state: &ParticleState) -> f64 {
    let n = state.n() as f64;
    let (c, s) = phasor(&state.thetas);
    let drift: f64 = state
        .omegas
        .iter()
        .zip(&state.thetas)
        .map(|(w, t)| w * t)
        .sum();
    let pair = n * n - (c * c + s * s);
    -drift + state.coupling / (2.0 * n) * pair
}

/// `D(Θ) = max_{i,j} |θ_i − θ_j|` on lifted phases.
pub fn phase_diameter(state: &ParticleState) -> f64 {
    let (lo, hi) = state
        .thetas
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
            (lo.min(t), hi.max(t))
        });
    hi - lo
}

/// `(ṙ, φ̇)` from the order-parameter system; `φ̇` needs `r > 1e-12`.
pub fn order_rates(state: &ParticleState) -> Result<(f64, f64)> {
    let op = particle_order(state);
    let phi = op.phase()?;
    let n = state.n() as f64;
    let kr = state.coupling * op.r;
    let (mut rdot, mut pdot) = (0.0, 0.0);
    for (th, w) in state.thetas.iter().zip(&state.omegas) {
        let (s, c) = (th - phi).sin_cos();
        let v = w - kr * s;
        rdot -= s * v;
        pdot += c * v;
    }
    Ok((rdot / n, pdot / (op.r * n)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticLabel {
    Synchronous,
    AntiSynchronous,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub labels: Vec<AsymptoticLabel>,
    pub converged: bool,
    pub n_sync: usize,
    pub n_anti: usize,
    pub n_undetermined: usize,
}

/// Distance band (radians) used by [`classify_asymptotic`].
pub const CLASSIFY_BAND: f64 = 0.1;

/// Splits oscillators into those near `phi_ref` and those near `phi_ref + π`.
/// The state counts as converged when all pairwise speed differences are below
/// `tol`; otherwise every label is `Undetermined`.
pub fn classify_asymptotic(state: &ParticleState, phi_ref: f64, tol: f64) -> Classification {
    let v = rhs_mean_field(state);
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let converged = hi - lo < tol;
    let labels: Vec<AsymptoticLabel> = state
        .thetas
        .iter()
        .map(|&th| {
            if !converged {
                return AsymptoticLabel::Undetermined;
            }
            let d = angle_diff(th, phi_ref).abs();
            if d < CLASSIFY_BAND {
                AsymptoticLabel::Synchronous
            } else if (PI - d).abs() < CLASSIFY_BAND {
                AsymptoticLabel::AntiSynchronous
            } else {
                AsymptoticLabel::Undetermined
            }
        })
        .collect();
    let count = |l| labels.iter().filter(|&&x| x == l).count();
    Classification {
        n_sync: count(AsymptoticLabel::Synchronous),
        n_anti: count(AsymptoticLabel::AntiSynchronous),
        n_undetermined: count(AsymptoticLabel::Undetermined),
        labels,
        converged,
    }
}

/// One output row of a particle trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleSample {
    pub t: f64,
    pub r: f64,
    pub phi: f64,
    #[serde(rename = "D")]
    pub diameter: f64,
    #[serde(rename = "V_p")]
    pub potential: f64,
}

impl ParticleSample {
    pub fn of(state: &ParticleState) -> Self {
        let op = particle_order(state);
        Self {
            t: state.t,
            r: op.r,
            phi: if op.defined { op.phi } else { f64::NAN },
            diameter: phase_diameter(state),
            potential: potential(state),
        }
    }
}

/// Integrates to `t_end` with fixed steps no larger than `dt`, sampling every
/// `sample_every`. Returns the samples including the initial one.
pub fn run(
    state: &mut ParticleState,
    t_end: f64,
    dt: f64,
    sample_every: f64,
) -> Result<Vec<ParticleSample>> {
    if !(dt > 0.0 && sample_every > 0.0) {
        return Err(Error::invalid("dt and sample_every must be positive"));
    }
    if !(t_end >= state.t) {
        return Err(Error::invalid(format!(
            "t_end {t_end} precedes current time {}",
            state.t
        )));
    }
    let t0 = state.t;
    let mut out = vec![ParticleSample::of(state)];
    let mut i = 1usize;
    while state.t < t_end {
        let target = (t0 + i as f64 * sample_every).min(t_end);
        let span = target - state.t;
        let steps = (span / dt).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for _ in 0..steps {
            particle_step_mut(state, h)?;
        }
        state.t = target;
        out.push(ParticleSample::of(state));
        i += 1;
    }
    Ok(out)
}

/// Writes `t,r,phi,D,V_p` rows with 17 significant digits.
pub fn write_trajectory_csv(samples: &[ParticleSample], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "r", "phi", "D", "V_p"])?;
    for s in samples {
        w.write_record(
            [s.t, s.r, s.phi, s.diameter, s.potential]
                .iter()
                .map(|v| format!("{v:.16e}")),
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(th: &[f64], om: &[f64], k: f64) -> ParticleState {
        ParticleState::new(th.to_vec(), om.to_vec(), k).unwrap()
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ParticleState::new(vec![], vec![], 1.0).is_err());
        assert!(ParticleState::new(vec![0.0], vec![0.0, 1.0], 1.0).is_err());
        assert!(ParticleState::new(vec![f64::NAN], vec![0.0], 1.0).is_err());
    }

    #[test]
    fn single_oscillator_free() {
        let s = st(&[0.4], &[0.7], 3.0);
        assert_eq!(rhs_direct(&s), vec![0.7]);
        assert!((rhs_mean_field(&s)[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn three_oscillators() {
        let s = st(&[0.0, PI / 2.0, PI], &[0.0; 3], 1.0);
        let v = rhs_direct(&s);
        // (1/3)(sin 0 + sin π/2 + sin π), (1/3)(sin(−π/2) + 0 + sin π/2), ...
        let want = [1.0 / 3.0, 0.0, -1.0 / 3.0];
        for (a, b) in v.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn potential_values() {
        assert!(potential(&st(&[0.3; 5], &[0.0; 5], 2.0)).abs() < 1e-14);
        assert!((potential(&st(&[0.0, PI], &[0.0; 2], 1.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn order_values() {
        let op = particle_order(&st(&[0.0, PI / 2.0], &[0.0; 2], 1.0));
        assert!((op.r - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((op.phi - PI / 4.0).abs() < 1e-15);
        let op = particle_order(&st(&[0.0, PI / 2.0, PI, 1.5 * PI], &[0.0; 4], 1.0));
        assert!(!op.defined);
        let op = particle_order(&st(&[2.0; 3], &[0.0; 3], 1.0));
        assert!((op.r - 1.0).abs() < 1e-15 && (op.phi - 2.0).abs() < 1e-15);
    }

    #[test]
    fn diameter() {
        assert_eq!(phase_diameter(&st(&[0.0, 1.0, 2.0], &[0.0; 3], 1.0)), 2.0);
        assert_eq!(phase_diameter(&st(&[1.0; 3], &[0.0; 3], 1.0)), 0.0);
    }

    #[test]
    fn free_rotation_is_exact() {
        let s = st(&[0.1, 2.0], &[0.3, 0.3], 0.0);
        let mut p = s.clone();
        for _ in 0..10 {
            particle_step_mut(&mut p, 0.1).unwrap();
        }
        for (a, b) in p.thetas().iter().zip(s.thetas()) {
            assert!((a - b - 0.3).abs() < 1e-14);
        }
    }

    #[test]
    fn classification() {
        let s = st(&[0.0, 0.0, 0.0], &[0.0; 3], 1.0);
        let c = classify_asymptotic(&s, 0.0, 1e-6);
        assert!(c.converged && c.n_anti == 0 && c.n_sync == 3);
        let s = st(&[0.0, 0.0, 0.0, PI], &[0.0; 4], 1.0);
        let c = classify_asymptotic(&s, 0.0, 1e-6);
        assert!(c.converged && c.n_anti == 1 && c.n_sync == 3);
        let s = st(&[0.0, 1.0], &[0.0; 2], 1.0);
        let c = classify_asymptotic(&s, 0.0, 1e-6);
        assert!(!c.converged && c.n_undetermined == 2);
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("init.csv");
        std::fs::write(&p, "theta,omega\n0.5,0.1\n1.5,-0.1\n").unwrap();
        let s = ParticleState::from_csv(&p, 2.0).unwrap();
        assert_eq!(s.thetas(), &[0.5, 1.5]);
        let mut s2 = s.clone();
        let tr = run(&mut s2, 1.0, 0.01, 0.5).unwrap();
        assert_eq!(tr.len(), 3);
        assert_eq!(tr[2].t, 1.0);
        let out = dir.path().join("traj.csv");
        write_trajectory_csv(&tr, &out).unwrap();
        let text = std::fs::read_to_string(out).unwrap();
        assert!(text.starts_with("t,r,phi,D,V_p\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
