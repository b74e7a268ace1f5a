//! Robust curve estimation and segmented linear regression.

mod law;
mod loess;
mod normality;
mod ols;
mod segmented;
mod thresholds;

pub use law::{turnover_law, LawConfig, TurnoverLaw};
pub use loess::{loess_fit, loess_fit_with, write_loess_csv, LoessConfig, LoessFit, LoessPoint};
pub use normality::{normality_of, residual_normality, NormalityReport, ResidualNormality};
pub use ols::{ols, Interval, OlsFit};
pub use segmented::{fit_double_linear, Regime, SegmentedFit, MIN_REGIME_POINTS};
pub use thresholds::{detect_thresholds, Thresholds, SLOPE_TOLERANCE};
