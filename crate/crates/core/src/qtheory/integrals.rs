//! Density, distribution and moments of `Q = T / P_v` by quadrature over
//! `u = log p_v`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::model::{TurnoverWealthModel, TwRegime};
use crate::numeric::quad::{integrate_with_breaks, QuadOptions};
use crate::numeric::special::{norm_cdf, norm_pdf, norm_sf};
use crate::par::{map_slice, Exec};
use crate::tailfit::Model;
use crate::{Error, Result};

const QUAD: QuadOptions = QuadOptions { abs_tol: 1e-9, rel_tol: 1e-12, max_intervals: 4000 };

/// Density of `u = log P_v`: `p f(p)` at `p = e^u`.
#[inline]
fn log_density(pv: &Model, u: f64) -> f64 {
    let lp = pv.ln_pdf(u.exp());
    if lp == f64::NEG_INFINITY {
        0.0
    } else {
        (u + lp).exp()
    }
}

/// Points in log space where the account-value density changes character.
fn pv_breaks(pv: &Model) -> Vec<f64> {
    [1e-6, 1e-3, 0.05, 0.25, 0.5, 0.75, 0.95, 0.999, 1.0 - 1e-6]
        .iter()
        .map(|&p| pv.quantile(p).ln())
        .filter(|u| u.is_finite())
        .collect()
}

fn kernel_breaks(r: &TwRegime, ln_q: f64, out: &mut Vec<f64>) {
    let k = 1.0 - r.beta;
    if k > 0.0 {
        let centre = (r.a - ln_q) / k;
        let width = r.xi / k;
        out.extend([-8.0, -3.0, -1.0, 0.0, 1.0, 3.0, 8.0].map(|s| centre + s * width));
    }
}

fn check_inputs(q: f64, model: &TurnoverWealthModel, pv: &Model) -> Result<()> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::invalid(format!("q must be positive and finite, got {q}")));
    }
    model.validate()?;
    pv.validate()
}

/// `sum over regime pieces of ∫ g(regime, u) f_U(u) du`.
fn integrate_pieces<G>(q: f64, model: &TurnoverWealthModel, pv: &Model, g: G) -> Result<f64>
where
    G: Fn(&TwRegime, f64) -> f64,
{
    let (lo, hi) = pv.log_support();
    let ln_q = q.ln();
    let base = pv_breaks(pv);
    let mut total = 0.0;
    for (a, b, r) in model.pieces(lo, hi) {
        if a >= b {
            continue;
        }
        let mut breaks = base.clone();
        kernel_breaks(&r, ln_q, &mut breaks);
        let res = integrate_with_breaks(|u| g(&r, u) * log_density(pv, u), a, b, &breaks, QUAD)?;
        total += res.value;
    }
    Ok(total)
}

/// Density of `Q` at `q`.
pub fn q_pdf(q: f64, model: &TurnoverWealthModel, pv: &Model) -> Result<f64> {
    check_inputs(q, model, pv)?;
    let ln_q = q.ln();
    integrate_pieces(q, model, pv, |r, u| norm_pdf(r.z(ln_q, u)) / (r.xi * q))
}

/// `P(Q <= q)`.
pub fn q_cdf(q: f64, model: &TurnoverWealthModel, pv: &Model) -> Result<f64> {
    check_inputs(q, model, pv)?;
    let ln_q = q.ln();
    let v = integrate_pieces(q, model, pv, |r, u| norm_cdf(r.z(ln_q, u)))?;
    Ok(v.clamp(0.0, 1.0))
}

/// `P(Q > q)`, integrated directly so the upper tail keeps relative accuracy.
pub fn q_sf(q: f64, model: &TurnoverWealthModel, pv: &Model) -> Result<f64> {
    check_inputs(q, model, pv)?;
    let ln_q = q.ln();
    let v = integrate_pieces(q, model, pv, |r, u| norm_sf(r.z(ln_q, u)))?;
    Ok(v.clamp(0.0, 1.0))
}

/// `P(Q <= q)` for a two-regime model with log-normal account values: the
/// regimes' conditional laws weighted by the log-normal mass on each side
/// of theta.
pub fn bilinear_q_cdf(q: f64, model: &TurnoverWealthModel, mu: f64, sigma: f64) -> Result<f64> {
    if model.is_single() {
        return Err(Error::invalid("bilinear_q_cdf needs a two-regime model"));
    }
    q_cdf(q, model, &Model::Lognormal { mu, sigma })
}

/// Power `s` with `f(p) ~ p^s` as `p -> 0`, or `None` if the support is
/// bounded away from zero or the density vanishes faster than any power.
fn small_p_exponent(pv: &Model) -> Option<f64> {
    match *pv {
        Model::Pareto { .. } | Model::Lognormal { .. } => None,
        Model::Weibull { shape, .. } => Some(shape - 1.0),
        Model::Student { .. } | Model::ZipfMandelbrot { .. } => Some(0.0),
    }
}

/// Log of the tilted integrand `p^{-k} f(p)` in `u = log p` (Jacobian included).
fn ln_tilted(pv: &Model, k: f64, u: f64) -> f64 {
    let v = (1.0 - k) * u + pv.ln_pdf(u.exp());
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Log-space range outside which the tilted integrand is below `e^-45` of
/// its peak, together with that peak.
fn tilted_range(pv: &Model, k: f64) -> Result<(f64, f64, f64)> {
    let (mut lo, mut hi) = pv.log_support();
    let step = (hi - lo) / 4.0;
    let grid = 64;
    let mut peak =
        (0..=grid).map(|i| ln_tilted(pv, k, lo + (hi - lo) * i as f64 / grid as f64)).fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..400 {
        let v = ln_tilted(pv, k, lo);
        if v <= peak - 45.0 {
            break;
        }
        peak = peak.max(v);
        lo -= step;
    }
    for _ in 0..400 {
        let v = ln_tilted(pv, k, hi);
        if v <= peak - 45.0 {
            break;
        }
        peak = peak.max(v);
        hi += step;
    }
    if ln_tilted(pv, k, lo) > peak - 45.0 || ln_tilted(pv, k, hi) > peak - 45.0 {
        return Err(Error::no_convergence("moment integral", "tilted integrand does not decay"));
    }
    Ok((lo, hi, peak))
}

/// `E(Q^n) = Σ_regimes exp(n a + n^2 xi^2 / 2) ∫ p^{-n(1-beta)} dP`.
pub fn q_moment(n: u32, model: &TurnoverWealthModel, pv: &Model) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    model.validate()?;
    pv.validate()?;
    let nf = f64::from(n);
    let tilt = |r: &TwRegime| nf * (1.0 - r.beta);

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in &model.regimes {
        let (a, b, _) = tilted_range(pv, tilt(r))?;
        lo = lo.min(a);
        hi = hi.max(b);
    }
    let pieces = model.pieces(lo, hi);
    if let Some(s) = small_p_exponent(pv) {
        let k = tilt(&pieces[0].2);
        if s - k <= -1.0 {
            return Err(Error::invalid(format!("moment {n} diverges: density ~ p^{s} near zero against p^-{k}")));
        }
    }

    // Each piece is scaled by its own peak so the tolerances act relatively.
    let opts = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-13, max_intervals: 4000 };
    let whole = pieces.len() == 1;
    let mut total = 0.0;
    for (a, b, r) in pieces {
        let lognormal_factor = (nf * r.a + 0.5 * nf * nf * r.xi * r.xi).exp();
        if whole && r.beta == 1.0 {
            // The integral factor is the total mass.
            return Ok(lognormal_factor);
        }
        if a >= b {
            continue;
        }
        let k = tilt(&r);
        let (_, _, peak) = tilted_range(pv, k)?;
        let mut breaks = pv_breaks(pv);
        let (slo, shi) = pv.log_support();
        breaks.extend([slo, shi]);
        breaks.extend((1..16).map(|i| a + (b - a) * i as f64 / 16.0));
        let res = integrate_with_breaks(|u| (ln_tilted(pv, k, u) - peak).exp(), a, b, &breaks, opts)?;
        total += lognormal_factor * peak.exp() * res.value;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Pdf,
    Cdf,
    Sf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QPoint {
    pub q: f64,
    pub value: f64,
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Evaluates a curve on `grid`; points are returned in grid order.
pub fn q_curve(
    kind: CurveKind,
    grid: &[f64],
    model: &TurnoverWealthModel,
    pv: &Model,
    exec: Exec,
) -> Result<Vec<QPoint>> {
    let f = match kind {
        CurveKind::Pdf => q_pdf,
        CurveKind::Cdf => q_cdf,
        CurveKind::Sf => q_sf,
    };
    map_slice(exec, grid, |&q| f(q, model, pv).map(|value| QPoint { q, value })).into_iter().collect()
}

/// Writes `q,value` rows.
pub fn write_curve_csv<W: Write>(out: W, points: &[QPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["q", "value"]).map_err(csv_err)?;
    for p in points {
        w.write_record([p.q.to_string(), p.value.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
