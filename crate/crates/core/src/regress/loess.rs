//! Robust locally weighted linear regression.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::par::{map_slice, Exec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LoessConfig {
    /// Fraction of the data in each local neighbourhood.
    pub span: f64,
    pub robustness_iters: usize,
    /// Number of evenly spaced evaluation points over the data range. Fitted
    /// values at the data points, needed for the robustness weights, are
    /// interpolated between them.
    pub grid_points: usize,
    pub exec: Exec,
}

impl Default for LoessConfig {
    fn default() -> Self {
        Self { span: 0.75, robustness_iters: 4, grid_points: 200, exec: Exec::Parallel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoessPoint {
    pub x: f64,
    pub y: f64,
    /// Slope of the local line, i.e. the curve's derivative estimate.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoessFit {
    pub span: f64,
    pub robustness_iters: usize,
    pub n: usize,
    pub grid: Vec<LoessPoint>,
}

impl LoessFit {
    pub fn x_range(&self) -> (f64, f64) {
        (self.grid[0].x, self.grid[self.grid.len() - 1].x)
    }

    /// Curve value by linear interpolation between grid points, clamped to
    /// the end values outside the data range.
    pub fn eval(&self, x: f64) -> f64 {
        interpolate(&self.grid, x)
    }
}

fn interpolate(grid: &[LoessPoint], x: f64) -> f64 {
    let i = grid.partition_point(|p| p.x < x);
    if i == 0 {
        return grid[0].y;
    }
    if i == grid.len() {
        return grid[grid.len() - 1].y;
    }
    let (a, b) = (grid[i - 1], grid[i]);
    if b.x == a.x {
        return a.y;
    }
    a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x)
}

/// Loess with the default grid and execution settings.
pub fn loess_fit(x: &[f64], y: &[f64], span: f64, robustness_iters: usize) -> Result<LoessFit> {
    loess_fit_with(x, y, &LoessConfig { span, robustness_iters, ..Default::default() })
}

/// Local linear regression with tricube weights over the `ceil(span * n)`
/// nearest neighbours, followed by `robustness_iters` passes of bisquare
/// reweighting on residuals scaled by six median absolute residuals.
pub fn loess_fit_with(x: &[f64], y: &[f64], cfg: &LoessConfig) -> Result<LoessFit> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("x has {} values, y has {}", x.len(), y.len())));
    }
    let n = x.len();
    if n < 20 {
        return Err(Error::InsufficientData(format!("loess needs at least 20 points, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("loess data must be finite"));
    }
    if !(cfg.span > 0.0 && cfg.span <= 1.0) {
        return Err(Error::invalid(format!("span {} outside (0, 1]", cfg.span)));
    }
    let q = (cfg.span * n as f64).ceil() as usize;
    if q < 3 {
        return Err(Error::invalid(format!("span {} leaves {q} points per neighbourhood, need 3", cfg.span)));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let (lo, hi) = (xs[0], xs[n - 1]);
    if hi == lo {
        return Err(Error::Degenerate("all x values are equal".into()));
    }
    let m = cfg.grid_points.max(2);
    let anchors: Vec<f64> =
        (0..m).map(|i| if i == m - 1 { hi } else { lo + (hi - lo) * i as f64 / (m - 1) as f64 }).collect();

    let mut robust = vec![1.0; n];
    let mut grid = Vec::new();
    for pass in 0..=cfg.robustness_iters {
        grid = map_slice(cfg.exec, &anchors, |&x0| {
            let (y, slope) = local_line(&xs, &ys, &robust, x0, q);
            LoessPoint { x: x0, y, slope }
        });
        if pass == cfg.robustness_iters {
            break;
        }
        let resid: Vec<f64> = xs.iter().zip(&ys).map(|(&a, &b)| b - interpolate(&grid, a)).collect();
        let mut abs: Vec<f64> = resid.iter().map(|r| r.abs()).collect();
        let mid = n / 2;
        let (_, med, _) = abs.select_nth_unstable_by(mid, f64::total_cmp);
        let s = *med;
        let scale = ys.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        if s <= 1e-12 * scale {
            break;
        }
        for (w, r) in robust.iter_mut().zip(&resid) {
            let u = r / (6.0 * s);
            *w = if u.abs() < 1.0 { (1.0 - u * u).powi(2) } else { 0.0 };
        }
    }
    Ok(LoessFit { span: cfg.span, robustness_iters: cfg.robustness_iters, n, grid })
}

/// Weighted local line at `x0` over its `q` nearest neighbours in sorted `xs`.
fn local_line(xs: &[f64], ys: &[f64], robust: &[f64], x0: f64, q: usize) -> (f64, f64) {
    let n = xs.len();
    let p = xs.partition_point(|v| *v < x0);
    let (mut lo, mut hi) = (p, p);
    while hi - lo < q {
        if lo == 0 {
            hi += 1;
        } else if hi == n || x0 - xs[lo - 1] <= xs[hi] - x0 {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    let h = (x0 - xs[lo]).max(xs[hi - 1] - x0);
    let fit = |use_robust: bool| {
        let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in lo..hi {
            let d = xs[i] - x0;
            let u = if h > 0.0 { d.abs() / h } else { 0.0 };
            if u >= 1.0 {
                continue;
            }
            let mut w = (1.0 - u * u * u).powi(3);
            if use_robust {
                w *= robust[i];
            }
            s0 += w;
            s1 += w * d;
            s2 += w * d * d;
            t0 += w * ys[i];
            t1 += w * d * ys[i];
        }
        (s0, s1, s2, t0, t1)
    };
    let (mut s0, mut s1, mut s2, mut t0, mut t1) = fit(true);
    if !(s0 > 0.0) {
        // Every neighbour was downweighted to zero; ignore robustness here.
        (s0, s1, s2, t0, t1) = fit(false);
    }
    if !(s0 > 0.0) {
        let mean = ys[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        return (mean, 0.0);
    }
    let det = s0 * s2 - s1 * s1;
    if det <= 1e-12 * s0 * s2 || det <= 0.0 {
        return (t0 / s0, 0.0);
    }
    let slope = (s0 * t1 - s1 * t0) / det;
    ((t0 - slope * s1) / s0, slope)
}

/// Writes the fitted curve as `x,y_fit` rows.
pub fn write_loess_csv<W: Write>(mut w: W, fit: &LoessFit) -> Result<()> {
    writeln!(w, "x,y_fit")?;
    for p in &fit.grid {
        writeln!(w, "{},{}", p.x, p.y)?;
    }
    Ok(())
}
