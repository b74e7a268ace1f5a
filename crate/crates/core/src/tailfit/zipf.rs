//! Zipf-Mandelbrot law, optionally with an exponential cutoff.
//!
//! Survival `S(x) = (1 + x/c)^-gamma e^{-beta x}`, density
//! `S(x) (beta + gamma / (c + x))`.

use serde::{Deserialize, Serialize};

use super::bootstrap::BootstrapCI;
use super::{check_positive, median_of};
use nalgebra::DMatrix;

use crate::numeric::optim::{minimize_from, BfgsOptions, BfgsResult};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZipfMandelbrotFit {
    pub c: f64,
    pub gamma: f64,
    pub beta_cut: f64,
    pub with_cutoff: bool,
    /// The unconstrained optimum had a negative cutoff rate; `beta_cut` was
    /// clamped to zero and the pure law refitted.
    pub boundary: bool,
    pub n: usize,
    pub grad_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_c: Option<BootstrapCI>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_gamma: Option<BootstrapCI>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_beta_cut: Option<BootstrapCI>,
    /// Scaling median and inverse Hessian of the solve, for warm starts.
    #[serde(skip)]
    warm: Option<(f64, DMatrix<f64>)>,
}

impl ZipfMandelbrotFit {
    pub fn model(&self) -> super::Model {
        super::Model::ZipfMandelbrot { c: self.c, gamma: self.gamma, beta_cut: self.beta_cut }
    }
}

/// Negative mean log-likelihood on data scaled by its median, given as
/// `(value, multiplicity)` pairs. `theta` is `(ln c, ln gamma)` or
/// `(ln c, ln gamma, beta)` in scaled units.
fn objective(y: &[(f64, f64)], theta: &[f64]) -> (f64, Vec<f64>) {
    let c = theta[0].exp();
    let g = theta[1].exp();
    let b = theta.get(2).copied().unwrap_or(0.0);
    let (mut n, mut ll, mut dc, mut dg, mut db) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(v, w) in y {
        let cv = c + v;
        let dens = b + g / cv;
        if !(dens > 0.0) {
            return (f64::INFINITY, vec![f64::NAN; theta.len()]);
        }
        let l = (v / c).ln_1p();
        let inv_cd = 1.0 / (cv * dens);
        n += w;
        ll += w * (-g * l - b * v + dens.ln());
        dc += w * (g * v / (c * cv) - g * inv_cd / cv);
        dg += w * (inv_cd - l);
        db += w * (1.0 / dens - v);
    }
    let mut grad = vec![-c * dc / n, -g * dg / n];
    if theta.len() == 3 {
        grad.push(-db / n);
    }
    (-ll / n, grad)
}

/// Collapses runs of equal values (as produced by in-order resampling).
fn runs(y: &[f64]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(y.len());
    for &v in y {
        match out.last_mut() {
            Some((last, w)) if *last == v => *w += 1.0,
            _ => out.push((v, 1.0)),
        }
    }
    out
}

fn validated(data: &[f64]) -> Result<(f64, Vec<(f64, f64)>)> {
    check_positive(data, 100)?;
    let m = median_of(data);
    let y: Vec<f64> = data.iter().map(|v| v / m).collect();
    if y.iter().all(|v| *v == y[0]) {
        return Err(Error::Degenerate("all values are equal".into()));
    }
    Ok((m, runs(&y)))
}

fn finish(data_len: usize, m: f64, r: BfgsResult, with_cutoff: bool, boundary: bool) -> ZipfMandelbrotFit {
    ZipfMandelbrotFit {
        c: r.x[0].exp() * m,
        gamma: r.x[1].exp(),
        beta_cut: if with_cutoff { r.x[2] / m } else { 0.0 },
        with_cutoff,
        boundary,
        n: data_len,
        grad_norm: r.grad_norm,
        ci_c: None,
        ci_gamma: None,
        ci_beta_cut: None,
        warm: Some((m, r.inv_hessian)),
    }
}

fn solve(y: &[(f64, f64)], starts: &[Vec<f64>], hinv: Option<&DMatrix<f64>>) -> Result<BfgsResult> {
    let mut best: Option<BfgsResult> = None;
    let mut errors = Vec::new();
    for s in starts {
        match minimize_from(|t| objective(y, t), s, hinv, BfgsOptions::default()) {
            Ok(r) if best.as_ref().is_none_or(|b| r.value < b.value) => best = Some(r),
            Ok(_) => {}
            Err(e) => errors.push(e.to_string()),
        }
    }
    best.ok_or_else(|| {
        Error::no_convergence(
            "Zipf-Mandelbrot MLE",
            format!("all {} starts failed: {}", starts.len(), errors.join("; ")),
        )
    })
}

/// Resolves a negative cutoff by refitting the pure law.
fn with_clamp(y: &[(f64, f64)], r: BfgsResult, pure_starts: &[Vec<f64>]) -> Result<(BfgsResult, bool, bool)> {
    if r.x.len() == 3 && r.x[2] < 0.0 {
        let pure = solve(y, pure_starts, None)?;
        return Ok((pure, false, true));
    }
    let cut = r.x.len() == 3;
    Ok((r, cut, false))
}

/// Maximum-likelihood fit; `with_cutoff = false` fixes `beta_cut = 0`.
///
/// Three deterministic starting points (tail exponents 1, 2 and 4 with `c`
/// matched to the median) guard against local optima; the best converged
/// one wins.
pub fn fit_zipf_mandelbrot(data: &[f64], with_cutoff: bool) -> Result<ZipfMandelbrotFit> {
    let (m, y) = validated(data)?;
    let mut sorted: Vec<f64> = y.iter().map(|p| p.0).collect();
    sorted.sort_by(f64::total_cmp);
    let q99 = sorted[(0.99 * (sorted.len() - 1) as f64) as usize];
    let pure: Vec<Vec<f64>> =
        [2.0f64, 1.0, 4.0].iter().map(|&g| vec![(1.0 / (2f64.powf(1.0 / g) - 1.0)).ln(), g.ln()]).collect();
    let starts: Vec<Vec<f64>> = if with_cutoff {
        pure.iter().zip([0.0, 0.1 / q99, 1.0 / q99]).map(|(p, b)| vec![p[0], p[1], b]).collect()
    } else {
        pure.clone()
    };
    let r = solve(&y, &starts, None)?;
    let (r, cut, boundary) = with_clamp(&y, r, &pure)?;
    Ok(finish(data.len(), m, r, cut || (with_cutoff && !boundary), boundary))
}

/// Single-start fit from a previous solution, for resamples of the data the
/// previous fit came from.
pub fn fit_zipf_mandelbrot_from(data: &[f64], start: &ZipfMandelbrotFit) -> Result<ZipfMandelbrotFit> {
    let (m, y) = validated(data)?;
    let mut s = vec![(start.c / m).ln(), start.gamma.ln()];
    let pure = vec![s.clone()];
    let with_cutoff = start.with_cutoff;
    if with_cutoff {
        s.push(start.beta_cut * m);
    }
    // Re-express the previous curvature in this sample's scaling: only the
    // cutoff coordinate changes, by the ratio of medians.
    let hinv = start.warm.as_ref().map(|(m0, h)| {
        let mut h = h.clone();
        if h.nrows() == 3 && with_cutoff {
            let r = m / m0;
            for i in 0..3 {
                h[(i, 2)] *= r;
                h[(2, i)] *= r;
            }
        }
        h
    });
    let r = solve(&y, &[s], hinv.as_ref().filter(|h| h.nrows() == pure[0].len() + with_cutoff as usize))?;
    let (r, cut, boundary) = with_clamp(&y, r, &pure)?;
    Ok(finish(data.len(), m, r, cut, boundary))
}
