use serde::{Deserialize, Serialize};

use crate::numeric::special::t_critical;
use crate::{Error, Result};

/// Symmetric interval around a least-squares estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub slope_ci: Interval,
    /// `None` for regressions through the origin.
    pub intercept_ci: Option<Interval>,
    /// Centered R² with an intercept, uncentered (`1 - SSE / Σy²`) without.
    pub r2: f64,
    /// Residual standard deviation with `n - p` degrees of freedom.
    pub residual_sd: f64,
    pub n: usize,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

pub const CI_LEVEL: f64 = 0.95;

/// Least squares of `y` on `x`, with or without an intercept. Intervals are
/// Student-t at 95%.
pub fn ols(x: &[f64], y: &[f64], through_origin: bool) -> Result<OlsFit> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("x has {} values, y has {}", x.len(), y.len())));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("regression needs at least 3 points, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("regression data must be finite"));
    }
    let nf = n as f64;
    let p = if through_origin { 1.0 } else { 2.0 };
    let (slope, intercept, sxx) = if through_origin {
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        if sxx == 0.0 {
            return Err(Error::Degenerate("x is identically zero".into()));
        }
        (sxy / sxx, 0.0, sxx)
    } else {
        let mx = x.iter().sum::<f64>() / nf;
        let my = y.iter().sum::<f64>() / nf;
        let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        if !(sxx > 1e-300 && sxx > 1e-24 * x.iter().map(|v| v * v).sum::<f64>()) {
            return Err(Error::Degenerate("x has zero variance".into()));
        }
        let slope = sxy / sxx;
        (slope, my - slope * mx, sxx)
    };
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - intercept - slope * a).collect();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let sst = if through_origin {
        y.iter().map(|v| v * v).sum::<f64>()
    } else {
        let my = y.iter().sum::<f64>() / nf;
        y.iter().map(|v| (v - my).powi(2)).sum::<f64>()
    };
    let r2 = if sst > 0.0 { 1.0 - sse / sst } else { 1.0 };
    let df = nf - p;
    let s2 = sse / df;
    let slope_se = (s2 / sxx).sqrt();
    let t = t_critical(CI_LEVEL, df);
    let slope_ci = Interval { lower: slope - t * slope_se, upper: slope + t * slope_se, level: CI_LEVEL };
    let intercept_ci = (!through_origin).then(|| {
        let mx = x.iter().sum::<f64>() / nf;
        let se = (s2 * (1.0 / nf + mx * mx / sxx)).sqrt();
        Interval { lower: intercept - t * se, upper: intercept + t * se, level: CI_LEVEL }
    });
    Ok(OlsFit { slope, intercept, slope_se, slope_ci, intercept_ci, r2, residual_sd: s2.sqrt(), n, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn identity() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let f = ols(&x, &x, false).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-15 && f.intercept.abs() < 1e-14);
        assert!((f.r2 - 1.0).abs() < 1e-15);
        let g = ols(&x[1..], &x[1..], true).unwrap();
        assert!((g.slope - 1.0).abs() < 1e-15 && (g.r2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn through_origin_matches_closed_form() {
        let mut rng = crate::rng::stream(1, 0);
        let x: Vec<f64> = (0..200).map(|_| rng.random::<f64>() * 10.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.7 * v + rng.random::<f64>() - 0.5).collect();
        let f = ols(&x, &y, true).unwrap();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        assert!((f.slope - sxy / sxx).abs() < 1e-12);
        assert!(f.intercept_ci.is_none());
    }

    #[test]
    fn residual_mean_vanishes_with_intercept() {
        let mut rng = crate::rng::stream(2, 0);
        let x: Vec<f64> = (0..500).map(|_| rng.random::<f64>() * 100.0 + 1e3).collect();
        let y: Vec<f64> = x.iter().map(|v| -0.3 * v + 5.0 * rng.random::<f64>()).collect();
        let f = ols(&x, &y, false).unwrap();
        let mean = f.residuals.iter().sum::<f64>() / 500.0;
        assert!(mean.abs() < 1e-10, "{mean}");
        assert!(f.slope_ci.contains(f.slope));
    }

    #[test]
    fn degenerate_x() {
        assert!(matches!(ols(&[2.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0], false), Err(Error::Degenerate(_))));
        assert!(ols(&[1.0, 2.0], &[1.0, 2.0], false).is_err());
    }
}
