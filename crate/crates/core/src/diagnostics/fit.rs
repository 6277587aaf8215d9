use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Least-squares fit of `log v = a + slope·t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Samples actually used.
    pub samples: usize,
    /// Window that was fitted, after shrinking.
    pub window: (f64, f64),
    /// True when nonpositive values forced the window to shrink.
    pub shrunk: bool,
}

/// Minimum number of samples for a rate fit.
pub const MIN_FIT_SAMPLES: usize = 5;

/// Fits an exponential rate to the samples with `t ∈ [t_a, t_b]`. If the
/// window contains nonpositive values it is shrunk to the longest contiguous
/// run of positive ones and the result is flagged.
pub fn fit_exponential_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let (ta, tb) = window;
    let inside: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= ta && t <= tb)
        .collect();
    let mut best = (0usize, 0usize);
    let mut start = 0usize;
    for i in 0..=inside.len() {
        let ok = i < inside.len() && inside[i].1 > 0.0 && inside[i].1.is_finite();
        if !ok {
            if i - start > best.1 - best.0 {
                best = (start, i);
            }
            start = i + 1;
        }
    }
    let used = &inside[best.0..best.1];
    if used.len() < MIN_FIT_SAMPLES {
        return Err(Error::invalid(format!(
            "rate fit needs at least {MIN_FIT_SAMPLES} positive samples in [{ta}, {tb}], found {}",
            used.len()
        )));
    }
    let shrunk = used.len() < inside.len();
    let n = used.len() as f64;
    let mt = used.iter().map(|p| p.0).sum::<f64>() / n;
    let my = used.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(t, v) in used {
        let (dx, dy) = (t - mt, v.ln() - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 {
        return Err(Error::invalid("rate fit window has no time extent"));
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 {
        (sxy * sxy) / (sxx * syy)
    } else {
        1.0
    };
    Ok(RateFit {
        slope,
        intercept: my - slope * mt,
        r2,
        samples: used.len(),
        window: (used[0].0, used[used.len() - 1].0),
        shrunk,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Increasing,
    Decreasing,
}

/// Number of consecutive monotone samples that ends a transient.
pub const TRANSIENT_RUN: usize = 20;

/// Index of the first sample from which the series follows `trend` for `run`
/// consecutive samples (strictly, up to `tol`).
pub fn detect_transient(values: &[f64], trend: Trend, run: usize, tol: f64) -> Option<usize> {
    if run == 0 || values.len() < run {
        return None;
    }
    let step_ok = |a: f64, b: f64| match trend {
        Trend::Increasing => b >= a - tol,
        Trend::Decreasing => b <= a + tol,
    };
    let mut streak_start = 0usize;
    for i in 1..values.len() {
        if !step_ok(values[i - 1], values[i]) {
            streak_start = i;
        }
        if i + 1 - streak_start >= run {
            return Some(streak_start);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential() {
        let s: Vec<(f64, f64)> = (0..50)
            .map(|i| (i as f64 * 0.1, (-2.0 * i as f64 * 0.1).exp()))
            .collect();
        let f = fit_exponential_rate(&s, (0.0, 10.0)).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-9);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!(!f.shrunk);
    }

    #[test]
    fn constant_series() {
        let s: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0)).collect();
        let f = fit_exponential_rate(&s, (0.0, 9.0)).unwrap();
        assert!(f.slope.abs() < 1e-15);
    }

    #[test]
    fn shrinks_around_zeros() {
        let mut s: Vec<(f64, f64)> = (0..30)
            .map(|i| (i as f64, (-0.5 * i as f64).exp()))
            .collect();
        s[3].1 = 0.0;
        s[25].1 = -1.0;
        let f = fit_exponential_rate(&s, (0.0, 29.0)).unwrap();
        assert!(f.shrunk);
        assert_eq!(f.samples, 21);
        assert_eq!(f.window, (4.0, 24.0));
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!(fit_exponential_rate(&s[..4], (0.0, 3.0)).is_err());
    }

    #[test]
    fn transient_detection() {
        let mut v = vec![1.0, 2.0, 1.5, 3.0, 2.0];
        v.extend((0..25).map(|i| 2.0 - 0.01 * i as f64));
        assert_eq!(detect_transient(&v, Trend::Decreasing, 20, 0.0), Some(3));
        assert_eq!(detect_transient(&v, Trend::Increasing, 20, 0.0), None);
        assert_eq!(detect_transient(&v[..10], Trend::Decreasing, 20, 0.0), None);
    }
}
