//! The full turnover-wealth pipeline on per-trader averages: loess, regime
//! thresholds, then one or two straight lines.

use serde::{Deserialize, Serialize};

use super::loess::{loess_fit_with, LoessConfig, LoessFit};
use super::ols::{ols, OlsFit};
use super::segmented::{fit_double_linear, SegmentedFit};
use super::thresholds::{detect_thresholds, Thresholds, SLOPE_TOLERANCE};
use crate::Result;

#[derive(Debug, Clone, Copy)]
pub struct LawConfig {
    pub loess: LoessConfig,
    pub slope_tolerance: f64,
}

impl Default for LawConfig {
    fn default() -> Self {
        Self { loess: LoessConfig::default(), slope_tolerance: SLOPE_TOLERANCE }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TurnoverLaw {
    pub n: usize,
    pub thresholds: Thresholds,
    /// Set when the loess profile shows one slope; `single` is then filled
    /// and `segmented` is not.
    pub single_regime: bool,
    pub segmented: Option<SegmentedFit>,
    pub single: Option<OlsFit>,
    #[serde(skip)]
    pub loess: Option<LoessFit>,
}

impl TurnoverLaw {
    /// `(slope, slope_se)` per regime, lower first.
    pub fn slopes(&self) -> Vec<(f64, f64)> {
        match (&self.segmented, &self.single) {
            (Some(s), _) => vec![(s.lower.slope, s.lower.slope_se), (s.upper.slope, s.upper.slope_se)],
            (None, Some(f)) => vec![(f.slope, f.slope_se)],
            _ => Vec::new(),
        }
    }
}

/// Runs the pipeline on `x = <log P_v>`, `y = <log T>`.
pub fn turnover_law(x: &[f64], y: &[f64], cfg: &LawConfig) -> Result<TurnoverLaw> {
    let fit = loess_fit_with(x, y, &cfg.loess).map_err(|e| e.in_stage("loess"))?;
    let th = detect_thresholds(&fit, cfg.slope_tolerance).map_err(|e| e.in_stage("thresholds"))?;
    let (segmented, single) = if th.single_regime {
        (None, Some(ols(x, y, false).map_err(|e| e.in_stage("ols"))?))
    } else {
        let s = fit_double_linear(x, y, th.theta1, th.theta2).map_err(|e| e.in_stage("double-linear"))?;
        (Some(s), None)
    };
    Ok(TurnoverLaw { n: x.len(), thresholds: th, single_regime: th.single_regime, segmented, single, loess: Some(fit) })
}
