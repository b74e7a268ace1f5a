//! Pareto tail fit with the lower cutoff chosen by minimum KS distance.

use serde::{Deserialize, Serialize};

use super::bootstrap::BootstrapCI;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct ParetoOptions {
    /// Minimum number of observations required at all.
    pub min_points: usize,
    /// Minimum number of points at or above a candidate cutoff.
    pub min_tail: usize,
    /// Cap on the number of candidate cutoffs scanned. Candidates are spread
    /// evenly in log tail size, so the scan resolution is roughly
    /// `ln(n / min_tail) / max_candidates` in relative tail size.
    pub max_candidates: usize,
}

impl Default for ParetoOptions {
    fn default() -> Self {
        Self { min_points: 50, min_tail: 50, max_candidates: 256 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParetoTailFit {
    pub gamma: f64,
    pub x_min: f64,
    pub ks_distance: f64,
    pub n_tail: usize,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_gamma: Option<BootstrapCI>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_xmin: Option<BootstrapCI>,
}

impl ParetoTailFit {
    pub fn model(&self) -> super::Model {
        super::Model::Pareto { gamma: self.gamma, x_min: self.x_min }
    }
}

/// Sorted view of the data with the log values and their suffix sums, so each
/// candidate's Hill estimate costs O(1).
struct Prepared {
    x: Vec<f64>,
    lnx: Vec<f64>,
    suffix: Vec<f64>,
}

impl Prepared {
    fn new(sorted: Vec<f64>) -> Self {
        let lnx: Vec<f64> = sorted.iter().map(|v| v.ln()).collect();
        let mut suffix = vec![0.0; lnx.len() + 1];
        for i in (0..lnx.len()).rev() {
            suffix[i] = suffix[i + 1] + lnx[i];
        }
        Self { x: sorted, lnx, suffix }
    }

    fn n(&self) -> usize {
        self.x.len()
    }

    fn gamma_at(&self, k: usize) -> Option<f64> {
        let nt = (self.n() - k) as f64;
        let sum = self.suffix[k] - nt * self.lnx[k];
        (sum > 0.0).then(|| 1.0 + nt / sum)
    }

    /// KS distance of the tail `x[k..]` against the fitted Pareto, evaluated
    /// on every `stride`-th order statistic (always including both ends).
    fn ks(&self, k: usize, gamma: f64, stride: usize) -> f64 {
        let tail = &self.lnx[k..];
        let nt = tail.len();
        let inv = 1.0 / nt as f64;
        let base = self.lnx[k];
        let e = 1.0 - gamma;
        let mut d: f64 = 0.0;
        let mut j = 0;
        loop {
            let f = -(e * (tail[j] - base)).exp_m1();
            let hi = (j + 1) as f64 * inv - f;
            let lo = f - j as f64 * inv;
            d = d.max(hi.max(lo));
            if j == nt - 1 {
                break;
            }
            j = (j + stride).min(nt - 1);
        }
        d
    }
}

fn check_data(data: &[f64], opts: &ParetoOptions) -> Result<()> {
    if data.len() < opts.min_points {
        return Err(Error::InsufficientData(format!(
            "insufficient tail: {} points, need at least {}",
            data.len(),
            opts.min_points
        )));
    }
    if let Some(bad) = data.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::invalid(format!("Pareto fit requires positive finite data, found {bad}")));
    }
    Ok(())
}

/// Fits `p(x) ~ (x / x_min)^-gamma` above a KS-optimal `x_min`.
///
/// The cutoff is one of the observed values leaving at least `min_tail`
/// points; `gamma` is the continuous Hill estimator on that tail. Among equal
/// KS distances the smaller cutoff wins.
pub fn fit_pareto_tail(data: &[f64], opts: &ParetoOptions) -> Result<ParetoTailFit> {
    check_data(data, opts)?;
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    fit_sorted(sorted, opts)
}

pub(crate) fn fit_sorted(sorted: Vec<f64>, opts: &ParetoOptions) -> Result<ParetoTailFit> {
    check_data(&sorted, opts)?;
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::Degenerate("all values are equal".into()));
    }
    let p = Prepared::new(sorted);
    let n = p.n();
    let min_tail = opts.min_tail.max(2);
    if n < min_tail {
        return Err(Error::InsufficientData(format!("insufficient tail: {n} points, need {min_tail}")));
    }

    let candidates = candidate_indices(&p.x, min_tail, opts.max_candidates.max(2));
    if candidates.is_empty() {
        return Err(Error::Degenerate(format!("no distinct cutoff leaves at least {min_tail} tail points")));
    }

    // Screen every candidate on a thinned set of order statistics. The
    // thinned distance is a lower bound and `+ (stride-1)/n_tail` an upper
    // bound on the exact one, so only candidates whose lower bound beats the
    // best upper bound need the exact pass.
    const SCREEN_POINTS: usize = 1024;
    struct Screened {
        k: usize,
        gamma: f64,
        lo: f64,
        hi: f64,
        stride: usize,
    }
    let mut screened: Vec<Screened> = candidates
        .iter()
        .filter_map(|&k| {
            let gamma = p.gamma_at(k)?;
            let nt = n - k;
            let stride = nt.div_ceil(SCREEN_POINTS).max(1);
            let lo = p.ks(k, gamma, stride);
            Some(Screened { k, gamma, lo, hi: lo + (stride - 1) as f64 / nt as f64, stride })
        })
        .collect();
    if screened.is_empty() {
        return Err(Error::Degenerate("every candidate tail is constant".into()));
    }
    let bound = screened.iter().map(|s| s.hi).fold(f64::INFINITY, f64::min);
    screened.retain(|s| s.lo <= bound);
    screened.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.k.cmp(&b.k)));

    // Refine survivors on successively finer strides, dropping a candidate
    // as soon as its lower bound exceeds the best exact distance so far.
    let mut best: Option<(f64, usize, f64)> = None;
    for s in &mut screened {
        let beaten = |lo: f64, best: &Option<(f64, usize, f64)>| best.is_some_and(|(d, _, _)| lo > d);
        if beaten(s.lo, &best) {
            continue;
        }
        while s.stride > 1 && !beaten(s.lo, &best) {
            s.stride = (s.stride / 16).max(1);
            s.lo = p.ks(s.k, s.gamma, s.stride);
        }
        if beaten(s.lo, &best) {
            continue;
        }
        let exact = s.lo;
        let better = match best {
            None => true,
            Some((d, k, _)) => exact < d || (exact == d && s.k < k),
        };
        if better {
            best = Some((exact, s.k, s.gamma));
        }
    }
    let (ks_distance, k, gamma) = best.expect("at least one screened candidate");
    Ok(ParetoTailFit { gamma, x_min: p.x[k], ks_distance, n_tail: n - k, n, ci_gamma: None, ci_xmin: None })
}

/// First index of each distinct value leaving `>= min_tail` points, thinned to
/// at most `max` entries spread evenly in `ln(tail size)`.
fn candidate_indices(x: &[f64], min_tail: usize, max: usize) -> Vec<usize> {
    let n = x.len();
    let last = n - min_tail;
    let distinct: Vec<usize> = (0..=last).filter(|&k| k == 0 || x[k] > x[k - 1]).collect();
    if distinct.len() <= max {
        return distinct;
    }
    let hi = (n as f64).ln();
    let lo = (min_tail as f64).ln();
    let mut out = Vec::with_capacity(max);
    for i in 0..max {
        let tail = (hi - (hi - lo) * i as f64 / (max - 1) as f64).exp().round() as usize;
        let k = n.saturating_sub(tail).min(last);
        // Snap to the first occurrence of the value at or after k.
        let pos = distinct.partition_point(|&d| d < k).min(distinct.len() - 1);
        out.push(distinct[pos]);
    }
    out.sort_unstable();
    out.dedup();
    out
}
