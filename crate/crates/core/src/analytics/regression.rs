use serde::Serialize;

use super::AnalyticsError;

/// Ordinary least-squares line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionFit {
    /// Change per bin.
    pub slope: f64,
    pub intercept: f64,
    pub residual_sse: f64,
    pub n_points: usize,
}

impl RegressionFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

pub fn fit_drift(points: &[(f64, f64)]) -> Result<RegressionFit, AnalyticsError> {
    let n = points.len();
    if n < 2 {
        return Err(AnalyticsError::InsufficientData(format!(
            "{n} defined points, need at least 2"
        )));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(AnalyticsError::InsufficientData(
            "all points share one bin index".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual_sse = points
        .iter()
        .map(|&(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(RegressionFit {
        slope,
        intercept,
        residual_sse,
        n_points: n,
    })
}

/// Fits over the defined values of a per-bin series.
pub fn fit_series(values: &[Option<f64>]) -> Result<RegressionFit, AnalyticsError> {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|y| (i as f64, y)))
        .collect();
    fit_drift(&pts)
}
