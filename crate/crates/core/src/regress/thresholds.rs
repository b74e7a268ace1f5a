//! Regime boundaries from the slope profile of a loess curve.

use serde::{Deserialize, Serialize};

use super::loess::LoessFit;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub theta1: f64,
    pub theta2: f64,
    /// No slope change was found; both thresholds sit at the midpoint of the
    /// data range.
    pub single_regime: bool,
    /// Plateau slopes the scan compared against.
    pub lower_slope: f64,
    pub upper_slope: f64,
}

/// Default slope tolerance, in slope units.
pub const SLOPE_TOLERANCE: f64 = 0.05;

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Locates the transition between two slope plateaus of `fit`.
///
/// The plateau slopes are the medians of the local slopes over the outer
/// quarters of the grid. The transition index is the split that best
/// separates slopes nearer the lower plateau from slopes nearer the upper
/// one; `theta1` is the last grid point before it whose slope is within
/// `tolerance` of the lower plateau, `theta2` the first one after it within
/// `tolerance` of the upper plateau. Plateaus closer than `2 * tolerance` are
/// reported as a single regime.
pub fn detect_thresholds(fit: &LoessFit, tolerance: f64) -> Result<Thresholds> {
    let g = &fit.grid;
    if g.len() < 8 {
        return Err(Error::InsufficientData(format!("loess grid has {} points, need 8", g.len())));
    }
    let (lo, hi) = fit.x_range();
    if hi - lo < 2.0 * std::f64::consts::LN_10 {
        return Err(Error::invalid(format!(
            "curve spans {:.3} in natural-log units, need two decades ({:.3})",
            hi - lo,
            2.0 * std::f64::consts::LN_10
        )));
    }
    let m = g.len();
    let quarter = (m / 4).max(1);
    let lower = median(&mut g[..quarter].iter().map(|p| p.slope).collect::<Vec<_>>());
    let upper = median(&mut g[m - quarter..].iter().map(|p| p.slope).collect::<Vec<_>>());
    let mid_x = 0.5 * (lo + hi);
    if (upper - lower).abs() <= 2.0 * tolerance {
        return Ok(Thresholds {
            theta1: mid_x,
            theta2: mid_x,
            single_regime: true,
            lower_slope: lower,
            upper_slope: upper,
        });
    }
    // Split c minimizing misclassified points: index < c should sit on the
    // lower side of the midpoint slope, index >= c on the upper side.
    let mid = 0.5 * (lower + upper);
    let upper_side = |s: f64| (s - mid) * (upper - lower) > 0.0;
    let total_upper = g.iter().filter(|p| upper_side(p.slope)).count();
    let (mut best_c, mut best_err) = (0, total_upper);
    let mut upper_before = 0;
    for c in 1..=m {
        if upper_side(g[c - 1].slope) {
            upper_before += 1;
        }
        let lower_after = (m - c) - (total_upper - upper_before);
        let err = upper_before + lower_after;
        if err < best_err {
            best_err = err;
            best_c = c;
        }
    }
    let c = best_c.clamp(1, m - 1);
    let theta1 = (0..c).rev().find(|&i| (g[i].slope - lower).abs() <= tolerance).map_or(g[0].x, |i| g[i].x);
    let theta2 = (c..m).find(|&i| (g[i].slope - upper).abs() <= tolerance).map_or(g[m - 1].x, |i| g[i].x);
    Ok(Thresholds {
        theta1: theta1.min(theta2),
        theta2: theta2.max(theta1),
        single_regime: false,
        lower_slope: lower,
        upper_slope: upper,
    })
}
