use serde::{Deserialize, Serialize};

use super::ols::{ols, Interval, OlsFit};
use crate::{Error, Result};

/// Minimum number of points in each regime.
pub const MIN_REGIME_POINTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub slope_ci: Interval,
    pub intercept_ci: Interval,
    /// Residual standard deviation.
    pub xi: f64,
    pub r2: f64,
    pub n: usize,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl Regime {
    fn from_ols(f: OlsFit) -> Self {
        Self {
            slope: f.slope,
            intercept: f.intercept,
            slope_se: f.slope_se,
            slope_ci: f.slope_ci,
            intercept_ci: f.intercept_ci.expect("regime fits have an intercept"),
            xi: f.residual_sd,
            r2: f.r2,
            n: f.n,
            residuals: f.residuals,
        }
    }
}

/// Two independent lines, below `theta1` and above `theta2`. Points in
/// `[theta1, theta2]` are counted in `n_gap` and used by neither.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedFit {
    pub theta1: f64,
    pub theta2: f64,
    pub lower: Regime,
    pub upper: Regime,
    pub n_gap: usize,
}

pub fn fit_double_linear(x: &[f64], y: &[f64], theta1: f64, theta2: f64) -> Result<SegmentedFit> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("x has {} values, y has {}", x.len(), y.len())));
    }
    if !(theta1 <= theta2) {
        return Err(Error::invalid(format!("theta1 {theta1} exceeds theta2 {theta2}")));
    }
    let (mut xl, mut yl, mut xu, mut yu) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut n_gap = 0;
    for (&a, &b) in x.iter().zip(y) {
        if a < theta1 {
            xl.push(a);
            yl.push(b);
        } else if a > theta2 {
            xu.push(a);
            yu.push(b);
        } else {
            n_gap += 1;
        }
    }
    for (name, len) in [("lower", xl.len()), ("upper", xu.len())] {
        if len < MIN_REGIME_POINTS {
            return Err(Error::InsufficientData(format!(
                "{name} regime has {len} points, need at least {MIN_REGIME_POINTS}"
            )));
        }
    }
    let lower = ols(&xl, &yl, false).map_err(|e| e.in_stage("lower regime"))?;
    let upper = ols(&xu, &yu, false).map_err(|e| e.in_stage("upper regime"))?;
    Ok(SegmentedFit { theta1, theta2, lower: Regime::from_ols(lower), upper: Regime::from_ols(upper), n_gap })
}
