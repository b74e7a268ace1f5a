//! Heavy-tailed distribution fitting, sampling and bootstrap inference.

mod bootstrap;
mod family;
mod ks;
mod lognormal;
mod pareto;
mod report;
mod student;
mod weibull;
mod zipf;

pub use bootstrap::{bca_bootstrap, bca_bootstrap_multi, BootstrapCI, BootstrapConfig};
pub use family::{Family, Model};
pub use ks::ks_statistic;
pub use lognormal::{fit_lognormal, LogNormalFit};
pub use pareto::{fit_pareto_tail, ParetoOptions, ParetoTailFit};
pub use report::{fit_family, fit_with_ci, survival_curve, CurvePoint, FitReport};
pub use student::{fit_student, StudentFit};
pub use weibull::{fit_weibull, WeibullFit};
pub use zipf::{fit_zipf_mandelbrot, fit_zipf_mandelbrot_from, ZipfMandelbrotFit};

use crate::rng::{open_unit, stream};
use crate::{Error, Result};

/// `n` i.i.d. draws from `model` by inverting its survival function.
///
/// Deterministic in `seed`; draw `i` depends only on the first `i + 1`
/// uniforms of the stream, so prefixes of longer samples agree.
pub fn sample(model: &Model, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, 0);
    (0..n).map(|_| model.isf(open_unit(&mut rng))).collect()
}

pub(crate) fn check_positive(data: &[f64], min_n: usize) -> Result<()> {
    if data.len() < min_n {
        return Err(Error::InsufficientData(format!("{} points, need at least {min_n}", data.len())));
    }
    if let Some(bad) = data.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::invalid(format!("data must be positive and finite, found {bad}")));
    }
    Ok(())
}

/// Median without modifying the input.
pub(crate) fn median_of(data: &[f64]) -> f64 {
    let mut v = data.to_vec();
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}
