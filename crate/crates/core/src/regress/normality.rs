use serde::{Deserialize, Serialize};

use super::segmented::SegmentedFit;
use crate::numeric::special::norm_cdf;
use crate::{Error, Result};

/// Normality diagnostics of one regime's residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub n: usize,
    /// KS distance of the standardized residuals from N(0, 1).
    pub ks: f64,
    /// Asymptotic 5% critical value `1.358 / sqrt(n)`.
    pub ks_critical: f64,
    /// Widest central fraction of the residuals over which the KS distance
    /// stays below the critical value.
    pub fraction_normal: f64,
    pub excess_kurtosis: f64,
    /// Excess kurtosis above three of its standard errors (`sqrt(24 / n)`).
    pub tail_excess: bool,
    /// Residuals with zero spread; the other fields are not meaningful.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualNormality {
    pub lower: NormalityReport,
    pub upper: NormalityReport,
}

const KS_5PCT: f64 = 1.358;
pub const MIN_RESIDUALS: usize = 50;

pub fn residual_normality(fit: &SegmentedFit) -> Result<ResidualNormality> {
    Ok(ResidualNormality {
        lower: normality_of(&fit.lower.residuals).map_err(|e| e.in_stage("lower regime"))?,
        upper: normality_of(&fit.upper.residuals).map_err(|e| e.in_stage("upper regime"))?,
    })
}

pub fn normality_of(residuals: &[f64]) -> Result<NormalityReport> {
    let n = residuals.len();
    if n < MIN_RESIDUALS {
        return Err(Error::InsufficientData(format!("{n} residuals, need at least {MIN_RESIDUALS}")));
    }
    let nf = n as f64;
    let mean = residuals.iter().sum::<f64>() / nf;
    let var = residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / nf;
    let crit = KS_5PCT / nf.sqrt();
    let scale = residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    if !(var.sqrt() > 1e-12 * scale.max(1e-300)) {
        return Ok(NormalityReport {
            n,
            ks: 0.0,
            ks_critical: crit,
            fraction_normal: 0.0,
            excess_kurtosis: 0.0,
            tail_excess: false,
            degenerate: true,
        });
    }
    let sd = var.sqrt();
    let mut z: Vec<f64> = residuals.iter().map(|r| (r - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    // Per-point two-sided deviation of the empirical CDF.
    let dev: Vec<f64> = z
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = norm_cdf(v);
            ((i + 1) as f64 / nf - f).abs().max((f - i as f64 / nf).abs())
        })
        .collect();
    let ks = dev.iter().fold(0.0f64, |a, &d| a.max(d));
    // Trim symmetric tails until the remaining band conforms.
    let mut fraction_normal = 0.0;
    for trim in 0..n / 2 {
        let band = &dev[trim..n - trim];
        if band.iter().all(|&d| d <= crit) {
            fraction_normal = band.len() as f64 / nf;
            break;
        }
    }
    let m4 = z.iter().map(|v| v.powi(4)).sum::<f64>() / nf;
    let excess_kurtosis = m4 - 3.0;
    Ok(NormalityReport {
        n,
        ks,
        ks_critical: crit,
        fraction_normal,
        excess_kurtosis,
        tail_excess: excess_kurtosis > 3.0 * (24.0 / nf).sqrt(),
        degenerate: false,
    })
}
