use crate::{Error, Result};

/// Recorded `(R(t), φ(t))` series with `φ` unwrapped, linearly interpolated in
/// time. Drives characteristic tracing after a run has finished.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderSeries {
    coupling: f64,
    times: Vec<f64>,
    r: Vec<f64>,
    phi: Vec<f64>,
}

impl OrderSeries {
    /// `phi` may be wrapped; it is unwrapped here so that interpolation never
    /// crosses a branch cut.
    pub fn new(coupling: f64, times: Vec<f64>, r: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != r.len() || times.len() != phi.len() {
            return Err(Error::invalid(
                "order series needs equally long, nonempty columns",
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "order series times must be strictly increasing",
            ));
        }
        let mut unwrapped = Vec::with_capacity(phi.len());
        unwrapped.push(phi[0]);
        for w in phi.windows(2) {
            let prev = *unwrapped.last().unwrap();
            unwrapped.push(prev + crate::angle_diff(w[1], w[0]));
        }
        Ok(Self {
            coupling,
            times,
            r,
            phi: unwrapped,
        })
    }

    /// Constant `(R, φ)` on `[t0, t1]`.
    pub fn constant(coupling: f64, r: f64, phi: f64, t0: f64, t1: f64) -> Result<Self> {
        Self::new(coupling, vec![t0, t1], vec![r, r], vec![phi, phi])
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `(R(t), φ(t))` with `φ` unwrapped.
    pub fn at(&self, t: f64) -> Result<(f64, f64)> {
        let (start, end) = self.span();
        let slack = 1e-12 * (1.0 + end.abs());
        if t < start - slack || t > end + slack {
            return Err(Error::OutsideRecord { t, start, end });
        }
        let t = t.clamp(start, end);
        if self.times.len() == 1 {
            return Ok((self.r[0], self.phi[0]));
        }
        let i = self
            .times
            .partition_point(|&x| x <= t)
            .clamp(1, self.times.len() - 1);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let s = (t - t0) / (t1 - t0);
        Ok((
            self.r[i - 1] + s * (self.r[i] - self.r[i - 1]),
            self.phi[i - 1] + s * (self.phi[i] - self.phi[i - 1]),
        ))
    }
}

/// Traces `θ̇ = ω₀ − K R(t) sin(θ − φ(t))` from `(t₀, θ₀)` to `t₁` (either
/// direction) with classic RK4 at step size at most `h`. Returns the lifted path
/// `(t, θ)` including both endpoints.
pub fn characteristics(
    series: &OrderSeries,
    theta0: f64,
    omega0: f64,
    t0: f64,
    t1: f64,
    h: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(h > 0.0) {
        return Err(Error::invalid("characteristic step must be positive"));
    }
    let (start, end) = series.span();
    for t in [t0, t1] {
        if t < start - 1e-12 || t > end + 1e-12 {
            return Err(Error::OutsideRecord { t, start, end });
        }
    }
    let k = series.coupling();
    let rhs = |t: f64, th: f64| -> Result<f64> {
        let (r, phi) = series.at(t)?;
        Ok(omega0 - k * r * (th - phi).sin())
    };
    let span = t1 - t0;
    let steps = ((span.abs() / h).ceil() as usize).max(1);
    let dt = span / steps as f64;
    let mut path = Vec::with_capacity(steps + 1);
    let mut th = theta0;
    path.push((t0, th));
    for i in 0..steps {
        let t = t0 + i as f64 * dt;
        let k1 = rhs(t, th)?;
        let k2 = rhs(t + 0.5 * dt, th + 0.5 * dt * k1)?;
        let k3 = rhs(t + 0.5 * dt, th + 0.5 * dt * k2)?;
        let k4 = rhs(t + dt, th + dt * k3)?;
        th += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let tn = if i + 1 == steps {
            t1
        } else {
            t0 + (i + 1) as f64 * dt
        };
        path.push((tn, th));
    }
    Ok(path)
}
