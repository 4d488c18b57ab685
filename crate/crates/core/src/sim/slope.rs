//! Log-log least-squares fits of regret curves.

use serde::{Deserialize, Serialize};

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n_points: usize,
    pub t_min: f64,
    pub t_max: f64,
}

/// Ordinary least squares of `ln r` on `ln t` over the points with
/// `t_min <= t <= t_max` and `r > 0`.
pub fn fit_slope(points: &[(f64, f64)], t_min: f64, t_max: f64) -> Result<SlopeFit, SimError> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(t, r)| t >= t_min && t <= t_max && t > 0.0 && r > 0.0)
        .map(|&(t, r)| (t.ln(), r.ln()))
        .collect();
    let n = xy.len();
    let insufficient = || SimError::InsufficientPoints {
        got: n,
        t_min,
        t_max,
    };
    if n < 3 {
        return Err(insufficient());
    }
    let nf = n as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = xy.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(insufficient());
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xy
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    // A constant curve is fitted exactly by a flat line.
    let r2 = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(SlopeFit {
        slope,
        intercept,
        r2,
        n_points: n,
        t_min,
        t_max,
    })
}

/// Keeps a log-uniform subset of points sorted by `t`: a point is kept when
/// `t >= next`, then `next = ceil(t * ratio)`.
pub fn thin_log_uniform(points: &[(f64, f64)], ratio: f64) -> Vec<(f64, f64)> {
    let mut next = f64::NEG_INFINITY;
    let mut out = Vec::new();
    for &(t, r) in points {
        if t >= next {
            out.push((t, r));
            next = (t * ratio).ceil();
        }
    }
    out
}

/// Upper half of the log-time axis of a run of length `horizon`:
/// `[sqrt(T), T]`.
pub fn upper_half(horizon: u64) -> (f64, f64) {
    let t = horizon as f64;
    (t.sqrt(), t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (1..=20)
            .map(|i| (i as f64 * 50.0, f(i as f64 * 50.0)))
            .collect()
    }

    #[test]
    fn exact_power_laws() {
        let fit = fit_slope(&curve(|t| 7.0 * t.powf(2.0 / 3.0)), 0.0, f64::INFINITY).unwrap();
        assert!((fit.slope - 2.0 / 3.0).abs() < 1e-9);
        assert!((fit.intercept - 7f64.ln()).abs() < 1e-9);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert_eq!(fit.n_points, 20);
        let fit = fit_slope(&curve(|_| 4.0), 0.0, f64::INFINITY).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        let fit = fit_slope(&curve(|t| 3.0 * t), 0.0, f64::INFINITY).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
    }

    #[test]
    fn range_and_zero_filtering() {
        let mut pts = curve(|t| t * t);
        pts[0].1 = 0.0;
        let fit = fit_slope(&pts, 100.0, 500.0).unwrap();
        assert_eq!(fit.n_points, 9);
        assert!(matches!(
            fit_slope(&pts, 1.0, 100.0),
            Err(SimError::InsufficientPoints { got: 1, .. })
        ));
        assert!(fit_slope(&[(5.0, 1.0); 4], 0.0, 10.0).is_err());
    }

    #[test]
    fn thinning() {
        let pts: Vec<(f64, f64)> = (1..=100).map(|t| (t as f64, 1.0)).collect();
        let kept: Vec<f64> = thin_log_uniform(&pts, 1.5).iter().map(|p| p.0).collect();
        assert_eq!(
            kept,
            vec![1.0, 2.0, 3.0, 5.0, 8.0, 12.0, 18.0, 27.0, 41.0, 62.0, 93.0]
        );
    }
}
