//! Bias-corrected and accelerated (BCa) bootstrap intervals.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numeric::special::{norm_cdf, norm_ppf};
use crate::par::{map_range, Exec};
use crate::rng::stream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
    /// Jackknife deletes groups of points once the data exceed this many
    /// points; group `g` holds the indices congruent to `g` modulo the count.
    pub max_jackknife_groups: usize,
    pub exec: Exec,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { replicates: 1999, level: 0.95, seed: 0, max_jackknife_groups: 200, exec: Exec::Parallel }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCI {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub replicates: usize,
    pub method: String,
    /// Bias correction.
    pub z0: f64,
    pub acceleration: f64,
}

impl BootstrapCI {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Resample with replacement, keeping the input order: the multiplicity of
/// every index is drawn, then the indices are expanded in order. Sorted input
/// therefore gives a sorted resample.
pub(crate) fn resample_in_order<R: Rng>(data: &[f64], rng: &mut R, counts: &mut Vec<u32>) -> Vec<f64> {
    let n = data.len();
    counts.clear();
    counts.resize(n, 0);
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1;
    }
    let mut out = Vec::with_capacity(n);
    for (v, &c) in data.iter().zip(counts.iter()) {
        for _ in 0..c {
            out.push(*v);
        }
    }
    out
}

/// Single-statistic form of [`bca_bootstrap_multi`].
pub fn bca_bootstrap<F>(estimator: F, data: &[f64], cfg: &BootstrapConfig) -> Result<BootstrapCI>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let mut cis = bca_bootstrap_multi(|d| estimator(d).map(|v| vec![v]), data, cfg)?;
    Ok(cis.remove(0))
}

/// BCa intervals for every component of a vector-valued estimator, computed
/// from one shared set of resamples.
///
/// Replicate `b` draws from stream `(seed, b)`, so the result is identical for
/// any thread count or execution mode. Resamples preserve the input order (see
/// [`resample_in_order`]); estimators that need sorted data can be handed
/// sorted data once instead of sorting every replicate. Failing replicates
/// are dropped unless they exceed 1% of `B`.
pub fn bca_bootstrap_multi<F>(estimator: F, data: &[f64], cfg: &BootstrapConfig) -> Result<Vec<BootstrapCI>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    if cfg.replicates < 200 {
        return Err(Error::invalid(format!("bootstrap needs at least 200 replicates, got {}", cfg.replicates)));
    }
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(Error::invalid(format!("confidence level {} outside (0, 1)", cfg.level)));
    }
    if data.len() < 2 {
        return Err(Error::InsufficientData("bootstrap needs at least 2 points".into()));
    }
    let theta = estimator(data)?;
    let k = theta.len();

    let reps: Vec<Option<Vec<f64>>> = map_range(cfg.exec, cfg.replicates, |b| {
        let mut rng = stream(cfg.seed, b as u64);
        let mut counts = Vec::new();
        let resample = resample_in_order(data, &mut rng, &mut counts);
        estimator(&resample).ok().filter(|v| v.len() == k && v.iter().all(|x| x.is_finite()))
    });
    let failures = reps.iter().filter(|r| r.is_none()).count();
    if failures * 100 > cfg.replicates {
        return Err(Error::Bootstrap { failures, replicates: cfg.replicates });
    }
    let reps: Vec<Vec<f64>> = reps.into_iter().flatten().collect();

    let jack = jackknife(&estimator, data, k, cfg)?;

    Ok((0..k)
        .map(|j| {
            let mut col: Vec<f64> = reps.iter().map(|r| r[j]).collect();
            col.sort_by(f64::total_cmp);
            let jcol: Vec<f64> = jack.iter().map(|r| r[j]).collect();
            bca_interval(theta[j], &col, &jcol, cfg.level, cfg.replicates)
        })
        .collect())
}

/// Leave-one-out (or leave-one-group-out) estimates.
fn jackknife<F>(estimator: &F, data: &[f64], k: usize, cfg: &BootstrapConfig) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let n = data.len();
    let groups = n.min(cfg.max_jackknife_groups.max(2));
    let out: Vec<Option<Vec<f64>>> = map_range(cfg.exec, groups, |g| {
        let kept: Vec<f64> = data.iter().enumerate().filter(|(i, _)| i % groups != g).map(|(_, v)| *v).collect();
        estimator(&kept).ok().filter(|v| v.len() == k && v.iter().all(|x| x.is_finite()))
    });
    let ok: Vec<Vec<f64>> = out.into_iter().flatten().collect();
    if ok.len() < 2 {
        return Err(Error::no_convergence("jackknife", "estimator failed on nearly every jackknife subsample"));
    }
    Ok(ok)
}

/// Linear interpolation between order statistics at fraction `p`, with the
/// `(B + 1) p` plotting position.
fn order_stat(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let pos = (p * (n + 1) as f64 - 1.0).clamp(0.0, (n - 1) as f64);
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < n {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[n - 1]
    }
}

fn bca_interval(theta: f64, sorted: &[f64], jack: &[f64], level: f64, replicates: usize) -> BootstrapCI {
    let b = sorted.len() as f64;
    let below = sorted.partition_point(|v| *v < theta);
    let equal = sorted[below..].partition_point(|v| *v <= theta);
    // Ties count half, and the fraction is kept off 0 and 1 so z0 stays finite.
    let frac = ((below as f64 + 0.5 * equal as f64) / b).clamp(0.5 / b, 1.0 - 0.5 / b);
    let z0 = norm_ppf(frac);

    let mean = jack.iter().sum::<f64>() / jack.len() as f64;
    let (mut s2, mut s3) = (0.0, 0.0);
    for v in jack {
        let d = mean - v;
        s2 += d * d;
        s3 += d * d * d;
    }
    let acceleration = if s2 > 0.0 { s3 / (6.0 * s2.powf(1.5)) } else { 0.0 };

    let adjust = |alpha: f64| {
        let z = norm_ppf(alpha);
        let denom = 1.0 - acceleration * (z0 + z);
        if denom <= 0.0 {
            // Acceleration so large the map folds over: fall back to the extreme.
            return if alpha < 0.5 { 0.0 } else { 1.0 };
        }
        norm_cdf(z0 + (z0 + z) / denom)
    };
    let tail = 0.5 * (1.0 - level);
    let (a1, a2) = (adjust(tail), adjust(1.0 - tail));
    let (lower, upper) = (order_stat(sorted, a1), order_stat(sorted, a2));
    BootstrapCI {
        lower: lower.min(upper),
        upper: upper.max(lower),
        level,
        replicates,
        method: "BCa".into(),
        z0,
        acceleration,
    }
}
