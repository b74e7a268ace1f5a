use serde::{Deserialize, Serialize};

use crate::regress::ols;
use crate::{Error, Result};

pub const MIN_OBSERVATIONS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetSharpe {
    pub index: usize,
    pub beta: f64,
    pub beta_se: f64,
    pub idio_variance: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedAsset {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpeEstimate {
    pub assets: Vec<AssetSharpe>,
    pub skipped: Vec<SkippedAsset>,
    pub mean_beta: f64,
    pub mean_idio_variance: f64,
}

/// Per-asset regression of excess returns on the market excess return,
/// through the origin. Non-finite observations are dropped pairwise; assets
/// left with fewer than 30 observations are skipped.
pub fn estimate_sharpe(asset_returns: &[Vec<f64>], market_returns: &[f64], r: f64) -> Result<SharpeEstimate> {
    let mut assets = Vec::new();
    let mut skipped = Vec::new();
    for (index, series) in asset_returns.iter().enumerate() {
        let (x, y): (Vec<f64>, Vec<f64>) = series
            .iter()
            .zip(market_returns)
            .filter(|(a, m)| a.is_finite() && m.is_finite())
            .map(|(a, m)| (m - r, a - r))
            .unzip();
        if x.len() < MIN_OBSERVATIONS {
            skipped.push(SkippedAsset {
                index,
                reason: format!("{} aligned observations, need {MIN_OBSERVATIONS}", x.len()),
            });
            continue;
        }
        match ols(&x, &y, true) {
            Ok(f) => assets.push(AssetSharpe {
                index,
                beta: f.slope,
                beta_se: f.slope_se,
                idio_variance: f.residual_sd * f.residual_sd,
                n: f.n,
            }),
            Err(e) => skipped.push(SkippedAsset { index, reason: e.to_string() }),
        }
    }
    if assets.is_empty() {
        return Err(Error::InsufficientData("no asset has enough aligned returns".into()));
    }
    let k = assets.len() as f64;
    Ok(SharpeEstimate {
        mean_beta: assets.iter().map(|a| a.beta).sum::<f64>() / k,
        mean_idio_variance: assets.iter().map(|a| a.idio_variance).sum::<f64>() / k,
        assets,
        skipped,
    })
}
