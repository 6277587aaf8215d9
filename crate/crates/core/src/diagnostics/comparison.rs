//! Comparison ODEs: the inhomogeneous Riccati equation for lower bounds on `R`
//! and the barrier equation that dominates `cos(θ − φ)` along characteristics.

use super::constants::{barrier_rate, r_pm};
use crate::{Error, Result};

fn riccati_rate(k: f64) -> f64 {
    k / (4.0 * 3f64.sqrt())
}

/// `β̇ = K/(4√3)(−β² + (√3/2)β − 4√3M/K − η)`.
pub fn riccati_rhs(beta: f64, eta: f64, m: f64, k: f64) -> f64 {
    let s3 = 3f64.sqrt();
    riccati_rate(k) * (-beta * beta + 0.5 * s3 * beta - 4.0 * s3 * m / k - eta)
}

/// Time after which a path started above `r_−` is within `e^{−40}` of `r_+`
/// (relative to its initial distance).
pub fn riccati_horizon(eta: f64, m: f64, k: f64) -> Result<f64> {
    let (lo, hi) = r_pm(eta, m, k)?;
    let gap = hi - lo;
    if gap <= 0.0 {
        return Err(Error::precondition(
            "Riccati roots coincide; no contraction rate",
        ));
    }
    Ok(40.0 / (riccati_rate(k) * gap))
}

/// RK4 path of the Riccati equation from `(t0, β_T)` over `horizon`. Starting
/// values that are a root to rounding accuracy give the constant path.
pub fn riccati_solve(
    t0: f64,
    eta: f64,
    beta_t: f64,
    m: f64,
    k: f64,
    horizon: f64,
) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = r_pm(eta, m, k)?;
    if !(horizon > 0.0 && beta_t.is_finite()) {
        return Err(Error::invalid(
            "Riccati horizon must be positive and β_T finite",
        ));
    }
    let h_max = 0.02 / (riccati_rate(k) * (hi - lo).max(1e-3));
    let steps = ((horizon / h_max).ceil() as usize).max(1);
    let h = horizon / steps as f64;
    let on_root = |r: f64| (beta_t - r).abs() <= 4.0 * f64::EPSILON * r.abs().max(1.0);
    if on_root(lo) || on_root(hi) {
        return Ok((0..=steps).map(|i| (t0 + i as f64 * h, beta_t)).collect());
    }
    let f = |b: f64| riccati_rhs(b, eta, m, k);
    let mut path = Vec::with_capacity(steps + 1);
    let mut b = beta_t;
    path.push((t0, b));
    for i in 0..steps {
        let k1 = f(b);
        let k2 = f(b + 0.5 * h * k1);
        let k3 = f(b + 0.5 * h * k2);
        let k4 = f(b + h * k3);
        b += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !b.is_finite() {
            return Err(Error::NonFinite { slice: 0, cell: i });
        }
        path.push((t0 + (i + 1) as f64 * h, b));
    }
    Ok(path)
}

/// Barrier through `p*` at `t*`, integrated backwards with RK4 down to
/// `t_kappa`. Returned in increasing time order.
pub fn barrier_solve(
    p_star: f64,
    t_star: f64,
    t_kappa: f64,
    kappa: f64,
    k: f64,
    eps_kappa: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(0.0..1.0).contains(&eps_kappa) {
        return Err(Error::precondition(format!(
            "ε_κ = {eps_kappa} outside [0, 1)"
        )));
    }
    let top = (1.0 - eps_kappa * eps_kappa).sqrt();
    if !(p_star.abs() <= top) {
        return Err(Error::precondition(format!(
            "|p*| = {} exceeds √(1 − ε_κ²) = {top}",
            p_star.abs()
        )));
    }
    if !(t_kappa <= t_star) {
        return Err(Error::invalid("barrier needs t_kappa ≤ t*"));
    }
    let span = t_star - t_kappa;
    let h_max = 0.01 / (kappa * k).max(1e-12);
    let steps = ((span / h_max).ceil() as usize).max(1);
    let h = -span / steps as f64;
    let f = |p: f64| barrier_rate(p, kappa, k, eps_kappa);
    let mut out = Vec::with_capacity(steps + 1);
    let mut p = p_star;
    out.push((t_star, p));
    for i in 0..steps {
        let k1 = f(p);
        let k2 = f(p + 0.5 * h * k1);
        let k3 = f(p + 0.5 * h * k2);
        let k4 = f(p + h * k3);
        // the band [−top, top] is invariant; keep RK4 overshoot out of it
        p = (p + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(-top, top);
        let t = if i + 1 == steps {
            t_kappa
        } else {
            t_star + (i + 1) as f64 * h
        };
        out.push((t, p));
    }
    out.reverse();
    Ok(out)
}

/// Forward time for a barrier to travel from `p_from` to `p_to`
/// (`−√(1 − ε_κ²) < p_from < p_to < √(1 − ε_κ²)`), by fine-step RK4 with
/// linear interpolation at the crossing.
pub fn crossing_time(p_from: f64, p_to: f64, kappa: f64, k: f64, eps_kappa: f64) -> Result<f64> {
    let top = (1.0 - eps_kappa * eps_kappa).sqrt();
    if !(-top < p_from && p_from < p_to && p_to < top) {
        return Err(Error::precondition(
            "crossing needs −√(1−ε_κ²) < p_from < p_to < √(1−ε_κ²)",
        ));
    }
    let f = |p: f64| barrier_rate(p, kappa, k, eps_kappa);
    let h = 1e-4 / (kappa * k);
    let (mut t, mut p) = (0.0, p_from);
    let limit = 1e9 as usize;
    for _ in 0..limit {
        let k1 = f(p);
        let k2 = f(p + 0.5 * h * k1);
        let k3 = f(p + 0.5 * h * k2);
        let k4 = f(p + h * k3);
        let next = p + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if next >= p_to {
            return Ok(t + h * (p_to - p) / (next - p));
        }
        p = next;
        t += h;
    }
    Err(Error::precondition(
        "barrier did not cross within the step budget",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn riccati_roots_are_constant() {
        for mk in [0.0, 1e-4, 1e-3] {
            let (lo, hi) = r_pm(0.0, mk, 1.0).unwrap();
            for r in [lo, hi] {
                let p = riccati_solve(0.0, 0.0, r, mk, 1.0, 50.0).unwrap();
                assert!(p.iter().all(|&(_, b)| (b - r).abs() <= 1e-12));
            }
        }
    }

    #[test]
    fn riccati_between_roots_increases() {
        let (lo, hi) = r_pm(0.0, 0.0, 10.0).unwrap();
        let p = riccati_solve(0.0, 0.0, 0.5 * (lo + hi), 0.0, 10.0, 20.0).unwrap();
        assert!(p.windows(2).all(|w| w[1].1 > w[0].1));
        assert!(p.last().unwrap().1 < hi);
    }

    #[test]
    fn barrier_fixed_points() {
        let eps: f64 = 0.3;
        let top = (1.0 - eps * eps).sqrt();
        for p0 in [top, -top] {
            let p = barrier_solve(p0, 5.0, 0.0, 0.8, 2.0, eps).unwrap();
            assert!(p.iter().all(|&(_, q)| q == p0));
            assert_eq!(p[0].0, 0.0);
        }
        assert!(barrier_solve(top + 1e-9, 5.0, 0.0, 0.8, 2.0, eps).is_err());
    }

    #[test]
    fn barrier_through_zero_increases() {
        let p = barrier_solve(0.0, 3.0, 0.0, 0.8, 2.0, 0.3).unwrap();
        assert!(p.windows(2).all(|w| w[1].1 > w[0].1));
        assert_eq!(p.last().unwrap(), &(3.0, 0.0));
    }
}
