//! Straight-line fits in log-log coordinates.

use serde::Serialize;

use crate::error::{Error, Result};

/// Result of a linear regression `y ≈ slope·x + intercept`, usually with
/// `x, y` logarithms of a scale and a measured quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope.
    pub slope_stderr: f64,
    /// Smallest and largest abscissa used.
    pub window: (f64, f64),
    pub point_count: usize,
}

/// Minimum number of points accepted by [`fit_line`].
pub const MIN_FIT_POINTS: usize = 3;

impl ExponentFit {
    /// A value known without regression (e.g. a shortcut case).
    pub fn exact(slope: f64) -> Self {
        Self { slope, intercept: 0.0, r_squared: 1.0, slope_stderr: 0.0, window: (0.0, 0.0), point_count: 0 }
    }

    pub fn is_exact(&self) -> bool {
        self.point_count == 0
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Ordinary least squares.
pub fn fit_line(points: &[(f64, f64)]) -> Result<ExponentFit> {
    let w = vec![1.0; points.len()];
    fit_line_weighted(points, &w)
}

/// Weighted least squares with weights `w_i` (inverse variances).
///
/// The slope standard error is scaled by the residual variance, so it is
/// meaningful even when the weights are only relative.
pub fn fit_line_weighted(points: &[(f64, f64)], weights: &[f64]) -> Result<ExponentFit> {
    let pts: Vec<(f64, f64, f64)> = points
        .iter()
        .zip(weights)
        .filter(|((x, y), w)| x.is_finite() && y.is_finite() && w.is_finite() && **w > 0.0)
        .map(|(&(x, y), &w)| (x, y, w))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientSample(format!("{} usable points for a line fit", pts.len())));
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| p.2 * (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientSample("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| p.2 * (p.1 - slope * p.0 - intercept).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    let dof = (pts.len() - 2) as f64;
    let slope_stderr = if dof > 0.0 { (sse / dof / sxx).sqrt() } else { f64::INFINITY };
    let xmin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let xmax = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(ExponentFit { slope, intercept, r_squared, slope_stderr, window: (xmin, xmax), point_count: pts.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 1.5 * i as f64 - 2.0)).collect();
        let fit = fit_line(&pts).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-12);
        assert!((fit.intercept + 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.slope_stderr < 1e-12);
        assert_eq!(fit.window, (0.0, 9.0));
        assert_eq!(fit.point_count, 10);
    }

    #[test]
    fn weights_pull_toward_trusted_points() {
        let pts = [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 10.0)];
        let even = fit_line(&pts).unwrap();
        let weighted = fit_line_weighted(&pts, &[1.0, 1.0, 1.0, 1e-6]).unwrap();
        assert!((weighted.slope - 1.0).abs() < 1e-3);
        assert!(even.slope > 2.0);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(fit_line(&[(0.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(fit_line(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]).is_err());
        assert!(fit_line(&[(0.0, f64::NAN), (1.0, 2.0), (2.0, f64::INFINITY)]).is_err());
    }
}
