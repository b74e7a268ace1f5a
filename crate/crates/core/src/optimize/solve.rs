use serde::{Deserialize, Serialize};

use super::fees::PowerLawFee;
use super::market::{objective, MarketParams};
use crate::numeric::roots::{bisect, bisect_rel, golden_max};
use crate::{Error, Result};

/// Largest number of assets the N* solver will consider.
pub const N_MAX: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XStar {
    pub x: f64,
    pub objective: f64,
    /// `|x - RHS(x)|` of the first-order condition; zero at a boundary.
    pub residual: f64,
    /// The optimum sits at `x = 0` or `x = 1`.
    pub boundary: bool,
    /// The objective has both an interior local maximum and one at `x = 0`.
    pub multimodal: bool,
}

fn check(pv: f64, market: &MarketParams, fee: &PowerLawFee) -> Result<()> {
    if !(pv > 0.0 && pv.is_finite()) {
        return Err(Error::invalid(format!("account value must be positive, got {pv}")));
    }
    market.validate()?;
    fee.validate()
}

/// Right-hand side of the first-order condition in `x` at fixed `n`:
/// `x = lambda/2 (beta_bar(E-r) - delta(1+r)C (n/(x P_v))^(1-delta)) / (beta_bar^2 Var(R_M) + Var(eps)/n)`.
pub fn x_fixed_point_rhs(x: f64, n: f64, lambda: f64, pv: f64, market: &MarketParams, fee: &PowerLawFee) -> f64 {
    let cost = fee.delta * (1.0 + market.risk_free) * fee.c * (n / (x * pv)).powf(1.0 - fee.delta);
    0.5 * lambda * (market.risk_premium() - cost) / market.variance_factor(n)
}

/// Optimal invested fraction for `n` assets and risk tolerance `lambda`.
pub fn solve_x_star(n: f64, lambda: f64, pv: f64, market: &MarketParams, fee: &PowerLawFee) -> Result<XStar> {
    check(pv, market, fee)?;
    if !(n >= 1.0 && n.is_finite()) {
        return Err(Error::invalid(format!("number of assets must be >= 1, got {n}")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("risk tolerance must be positive, got {lambda}")));
    }
    let d = fee.delta;
    let s = 0.5 * lambda / market.variance_factor(n);
    let l = |x: f64| objective(x, n, lambda, pv, market, fee);

    // Interior stationary point that is a local maximum, if any, and the
    // left end of the interval on which the objective is concave.
    let (candidate, concave_from) = if fee.c == 0.0 || d == 0.0 {
        (Some(s * market.risk_premium()), 0.0)
    } else if d == 1.0 {
        (Some(s * (market.risk_premium() - (1.0 + market.risk_free) * fee.c)), 0.0)
    } else {
        // RHS(x) = s (B - k x^(d-1)) is increasing and concave; x - RHS(x)
        // is smallest where RHS' = 1.
        let k = d * (1.0 + market.risk_free) * fee.c * (n / pv).powf(1.0 - d);
        let peak = (s * k * (1.0 - d)).powf(1.0 / (2.0 - d));
        let g = |x: f64| x - s * (market.risk_premium() - k * x.powf(d - 1.0));
        if g(peak) > 0.0 {
            (None, peak)
        } else {
            let hi = (s * market.risk_premium()).max(peak);
            let root = if g(hi) <= 0.0 { hi } else { bisect(g, peak, hi, 1e-14)? };
            (Some(root), peak)
        }
    };

    let zero = XStar { x: 0.0, objective: l(0.0), residual: 0.0, boundary: true, multimodal: false };
    let Some(c) = candidate.filter(|&c| c > 0.0) else {
        return Ok(zero);
    };
    let interior = c < 1.0;
    let x = c.min(1.0);
    let residual = if interior { (x - x_fixed_point_rhs(x, n, lambda, pv, market, fee)).abs() } else { 0.0 };
    let best = XStar { x, objective: l(x), residual, boundary: !interior, multimodal: fee.c > 0.0 && d < 1.0 };

    // Cross-check: the objective is unimodal on [concave_from, 1].
    if interior && concave_from < 1.0 {
        let (xg, _) = golden_max(l, concave_from, 1.0, 1e-10);
        if (xg - x).abs() > 1e-6 * x.max(1e-3) && l(xg) > l(x) + 1e-12 * l(x).abs().max(1.0) {
            return Err(Error::no_convergence(
                "x* solver",
                format!("golden-section maximum {xg} disagrees with fixed point {x}"),
            ));
        }
    }
    if zero.objective > best.objective {
        return Ok(XStar { multimodal: best.multimodal, ..zero });
    }
    Ok(best)
}

fn check_n_regime(market: &MarketParams, fee: &PowerLawFee) -> Result<()> {
    if fee.delta >= 1.0 {
        return Err(Error::Unsupported("delta >= 1: the optimal investment does not depend on N".into()));
    }
    if fee.c <= 0.0 {
        return Err(Error::Unsupported("C = 0: without fees N grows without bound".into()));
    }
    if market.risk_premium() <= 0.0 {
        return Err(Error::invalid("beta_bar (E(R_M) - r) must be positive for a risky investment"));
    }
    Ok(())
}

/// `beta_bar (E(R_M) - r) / ((1-delta) C (1+r)) (x P_v)^(1-delta)`.
fn n_drive(x: f64, pv: f64, market: &MarketParams, fee: &PowerLawFee) -> f64 {
    market.risk_premium() / ((1.0 - fee.delta) * fee.c * (1.0 + market.risk_free)) * (x * pv).powf(1.0 - fee.delta)
}

/// Residual of the joint first-order condition in `n`:
/// `n^(2-delta) (1 + delta K'/((1-delta) n)) - K' drive` with `K' = K(n)/4`.
pub fn n_condition(n: f64, x: f64, pv: f64, market: &MarketParams, fee: &PowerLawFee) -> f64 {
    let d = fee.delta;
    let kq = 0.25 * market.k_ratio(n);
    n.powf(2.0 - d) * (1.0 + d * kq / ((1.0 - d) * n)) - kq * n_drive(x, pv, market, fee)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NStar {
    pub n: f64,
    pub k_ratio: f64,
    /// Relative residual of the first-order condition at `n`.
    pub residual: f64,
}

/// Number of assets that, together with `x`, satisfies both first-order
/// conditions.
pub fn solve_n_star(x: f64, pv: f64, market: &MarketParams, fee: &PowerLawFee) -> Result<NStar> {
    check(pv, market, fee)?;
    check_n_regime(market, fee)?;
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::invalid(format!("invested fraction must lie in (0, 1], got {x}")));
    }
    let d = fee.delta;
    let b = market.systematic_ratio();
    let drive = n_drive(x, pv, market, fee);
    // Multiplying the condition by 4/K = 2(b + 1/n) gives a left side that
    // increases strictly in n.
    let f = |n: f64| 2.0 * (b + 1.0 / n) * n.powf(2.0 - d) + d / (1.0 - d) * n.powf(1.0 - d) - drive;
    if f(1.0) > 0.0 {
        return Err(Error::no_convergence(
            "N* solver",
            format!("no root in [1, {N_MAX:e}]: the optimum holds fewer than one asset"),
        ));
    }
    let mut hi = 2.0;
    while f(hi) < 0.0 {
        if hi >= N_MAX {
            return Err(Error::no_convergence("N* solver", format!("no root in [1, {N_MAX:e}]")));
        }
        hi = (hi * 2.0).min(N_MAX);
    }
    let n = bisect_rel(f, (hi / 2.0).max(1.0), hi, 1e-10)?;
    let kq = 0.25 * market.k_ratio(n);
    Ok(NStar { n, k_ratio: market.k_ratio(n), residual: n_condition(n, x, pv, market, fee) / (kq * drive) })
}

/// High-diversification closed form
/// `N = (K' drive)^(1/(2-delta))` with `K' = K_inf / 4`.
pub fn n_star_asymptotic(x: f64, pv: f64, market: &MarketParams, fee: &PowerLawFee) -> Result<f64> {
    check(pv, market, fee)?;
    check_n_regime(market, fee)?;
    if !(x > 0.0) {
        return Err(Error::invalid(format!("invested fraction must be positive, got {x}")));
    }
    let kq = 0.25 * market.k_ratio_asymptotic();
    Ok((kq * n_drive(x, pv, market, fee)).powf(1.0 / (2.0 - fee.delta)))
}

/// Risk tolerance for which `n` assets are optimal at fraction `x`.
pub fn lambda_from_n(x: f64, n: f64, pv: f64, market: &MarketParams, fee: &PowerLawFee) -> Result<f64> {
    check(pv, market, fee)?;
    check_n_regime(market, fee)?;
    let d = fee.delta;
    Ok(market.mean_idio_variance * pv.powf(1.0 - d)
        / ((1.0 - d) * fee.c * (1.0 + market.risk_free) * (n / x).powf(2.0 - d)))
}

/// Risk tolerance for which `x` is optimal with `n` assets.
pub fn lambda_from_x(x: f64, n: f64, pv: f64, market: &MarketParams, fee: &PowerLawFee) -> Result<f64> {
    check(pv, market, fee)?;
    let cost = fee.delta * (1.0 + market.risk_free) * fee.c * (n / (x * pv)).powf(1.0 - fee.delta);
    let margin = market.risk_premium() - cost;
    if !(x > 0.0) || margin <= 0.0 {
        return Err(Error::invalid("no positive risk tolerance makes this fraction optimal"));
    }
    Ok(2.0 * x * market.variance_factor(n) / margin)
}

/// Ratio `N / x` at the optimum for risk tolerance `lambda`.
fn n_per_x(lambda: f64, pv: f64, market: &MarketParams, fee: &PowerLawFee) -> f64 {
    let d = fee.delta;
    (market.mean_idio_variance * pv.powf(1.0 - d) / (lambda * (1.0 - d) * fee.c * (1.0 + market.risk_free)))
        .powf(1.0 / (2.0 - d))
}

/// Which quantities are given; the rest are solved for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortfolioProblem {
    pub account_value: f64,
    #[serde(default)]
    pub risk_tolerance: Option<f64>,
    #[serde(default)]
    pub target_fraction: Option<f64>,
    #[serde(default)]
    pub n_assets: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborValue {
    pub n: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AllocationFlags {
    pub boundary: bool,
    pub multimodal: bool,
    /// The unconstrained optimum had fewer than one asset.
    pub n_clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalAllocation {
    pub x_star: f64,
    pub n_star: f64,
    pub n_rounded: f64,
    /// Objective at the integers either side of `n_star`.
    pub n_neighbors: [NeighborValue; 2],
    pub lambda: f64,
    pub k_ratio: f64,
    pub objective_value: f64,
    /// First-order residual in `x`, when `x` was solved for in the interior.
    pub x_residual: Option<f64>,
    pub flags: AllocationFlags,
}

/// Solves `problem` for whichever of `x`, `N`, `lambda` are not given.
pub fn optimize(problem: &PortfolioProblem, market: &MarketParams, fee: &PowerLawFee) -> Result<OptimalAllocation> {
    let pv = problem.account_value;
    check(pv, market, fee)?;
    let mut flags = AllocationFlags::default();
    let mut x_residual = None;
    let (x, n, lambda) = match (problem.target_fraction, problem.n_assets, problem.risk_tolerance) {
        (Some(x), Some(n), Some(l)) => (x, n, l),
        (None, Some(n), Some(l)) => {
            let s = solve_x_star(n, l, pv, market, fee)?;
            flags.boundary = s.boundary;
            flags.multimodal = s.multimodal;
            x_residual = (!s.boundary).then_some(s.residual);
            (s.x, n, l)
        }
        (Some(x), Some(n), None) => (x, n, lambda_from_x(x, n, pv, market, fee)?),
        (Some(x), None, None) => {
            let ns = solve_n_star(x, pv, market, fee)?;
            (x, ns.n, lambda_from_n(x, ns.n, pv, market, fee)?)
        }
        (Some(x), None, Some(l)) => {
            check_n_regime(market, fee)?;
            let mut n = n_per_x(l, pv, market, fee) * x;
            if n < 1.0 {
                n = 1.0;
                flags.n_clamped = true;
            }
            (x, n, l)
        }
        (None, None, Some(l)) => {
            check_n_regime(market, fee)?;
            // With N/x pinned by the N condition, the objective is quadratic in x.
            let nu = n_per_x(l, pv, market, fee);
            let d = fee.delta;
            let slope = l * (market.risk_premium() - (1.0 + market.risk_free) * fee.c * (nu / pv).powf(1.0 - d))
                - market.mean_idio_variance / nu;
            let curv = market.mean_beta * market.mean_beta * market.market_variance;
            let x_free = slope / (2.0 * curv);
            if x_free <= 0.0 {
                flags.boundary = true;
                (0.0, 1.0, l)
            } else {
                let x = x_free.min(1.0);
                flags.boundary = x_free >= 1.0;
                if nu * x < 1.0 {
                    flags.n_clamped = true;
                    let s = solve_x_star(1.0, l, pv, market, fee)?;
                    flags.boundary = s.boundary;
                    flags.multimodal = s.multimodal;
                    x_residual = (!s.boundary).then_some(s.residual);
                    (s.x, 1.0, l)
                } else {
                    (x, nu * x, l)
                }
            }
        }
        _ => {
            return Err(Error::invalid(
                "give a risk tolerance, a target fraction, or both; the number of assets alone is not enough",
            ))
        }
    };
    if !(0.0..=1.0).contains(&x) || !(n >= 1.0) || !(lambda > 0.0) {
        return Err(Error::invalid(format!("inconsistent problem: x={x}, N={n}, lambda={lambda}")));
    }
    let lo = n.floor().max(1.0);
    let hi = n.ceil().max(1.0);
    Ok(OptimalAllocation {
        x_star: x,
        n_star: n,
        n_rounded: n.round().max(1.0),
        n_neighbors: [
            NeighborValue { n: lo, objective: objective(x, lo, lambda, pv, market, fee) },
            NeighborValue { n: hi, objective: objective(x, hi, lambda, pv, market, fee) },
        ],
        lambda,
        k_ratio: market.k_ratio(n),
        objective_value: objective(x, n, lambda, pv, market, fee),
        x_residual,
        flags,
    })
}
