use serde::{Deserialize, Serialize};

use super::fees::PowerLawFee;
use crate::{Error, Result};

/// One-factor market: `R_i = beta_i (R_M - r) + r + eps_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub expected_market_return: f64,
    pub market_variance: f64,
    pub risk_free: f64,
    pub mean_beta: f64,
    pub mean_idio_variance: f64,
}

impl MarketParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.expected_market_return,
            self.market_variance,
            self.risk_free,
            self.mean_beta,
            self.mean_idio_variance,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("market parameters must be finite"));
        }
        if self.market_variance <= 0.0 {
            return Err(Error::invalid("market_variance must be positive"));
        }
        if self.mean_idio_variance <= 0.0 {
            return Err(Error::invalid("mean_idio_variance must be positive"));
        }
        if self.risk_free < 0.0 {
            return Err(Error::invalid("risk_free must be non-negative"));
        }
        Ok(())
    }

    /// `beta_bar (E(R_M) - r)`.
    pub fn risk_premium(&self) -> f64 {
        self.mean_beta * (self.expected_market_return - self.risk_free)
    }

    /// `beta_bar^2 Var(R_M) / Var(eps)`.
    pub fn systematic_ratio(&self) -> f64 {
        self.mean_beta * self.mean_beta * self.market_variance / self.mean_idio_variance
    }

    /// Portfolio variance per unit `x^2` with `n` equally weighted assets.
    pub fn variance_factor(&self, n: f64) -> f64 {
        self.mean_beta * self.mean_beta * self.market_variance + self.mean_idio_variance / n
    }

    /// Residual-to-market risk ratio `K = 2 (beta_bar^2 Var(R_M)/Var(eps) + 1/N)^-1`.
    pub fn k_ratio(&self, n: f64) -> f64 {
        2.0 / (self.systematic_ratio() + 1.0 / n)
    }

    /// Large-`N` limit of [`k_ratio`](Self::k_ratio).
    pub fn k_ratio_asymptotic(&self) -> f64 {
        2.0 / self.systematic_ratio()
    }
}

/// Total fee drag on the return: `(1+r) C P_v^(delta-1) N (x/N)^delta`.
pub fn fee_drag(x: f64, n: f64, pv: f64, market: &MarketParams, fee: &PowerLawFee) -> f64 {
    if x <= 0.0 || fee.c == 0.0 {
        return 0.0;
    }
    (1.0 + market.risk_free) * fee.c * pv.powf(fee.delta - 1.0) * n * (x / n).powf(fee.delta)
}

/// Expected return with `x` invested equally in `n` assets.
pub fn expected_return(x: f64, n: f64, pv: f64, market: &MarketParams, fee: &PowerLawFee) -> f64 {
    market.risk_premium() * x + market.risk_free - fee_drag(x, n, pv, market, fee)
}

/// Return variance with `x` invested equally in `n` assets.
pub fn variance(x: f64, n: f64, market: &MarketParams) -> f64 {
    market.variance_factor(n) * x * x
}

/// `L = lambda E(R) - Var(R)`.
pub fn objective(x: f64, n: f64, lambda: f64, pv: f64, market: &MarketParams, fee: &PowerLawFee) -> f64 {
    lambda * expected_return(x, n, pv, market, fee) - variance(x, n, market)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    pub(crate) fn market() -> MarketParams {
        MarketParams {
            expected_market_return: 0.08,
            market_variance: 0.04,
            risk_free: 0.02,
            mean_beta: 1.0,
            mean_idio_variance: 0.09,
        }
    }

    #[test]
    fn all_cash() {
        let f = PowerLawFee { c: 0.13, delta: 0.63, f_max: None };
        assert_eq!(objective(0.0, 10.0, 2.0, 1e5, &market(), &f), 2.0 * 0.02);
    }

    #[test]
    fn idiosyncratic_risk_diversifies_away() {
        let m = market();
        let v = variance(0.7, 1e12, &m);
        assert!((v - 0.04 * 0.49).abs() < 1e-12);
    }

    #[test]
    fn matches_asset_by_asset_sum() {
        let mut rng = stream(4, 0);
        for _ in 0..200 {
            let m = MarketParams {
                expected_market_return: rng.random_range(0.0..0.15),
                market_variance: rng.random_range(0.005..0.1),
                risk_free: rng.random_range(0.0..0.05),
                mean_beta: rng.random_range(0.5..1.5),
                mean_idio_variance: rng.random_range(0.01..0.3),
            };
            let f = PowerLawFee { c: rng.random_range(0.0..2.0), delta: rng.random_range(0.0..1.0), f_max: None };
            let x: f64 = rng.random_range(0.01..1.0);
            let n = rng.random_range(1..200u32);
            let pv: f64 = rng.random_range(1e3..1e7);
            let lambda = rng.random_range(0.1..5.0);
            // Every asset carries weight x/n, beta_bar and Var(eps).
            let w = x / f64::from(n);
            let (mut er, mut var) = (m.risk_free, 0.0);
            let mut sum_wb = 0.0;
            for _ in 0..n {
                er += (m.expected_market_return - m.risk_free) * w * m.mean_beta
                    - (1.0 + m.risk_free) * f.c / pv.powf(1.0 - f.delta) * w.powf(f.delta);
                sum_wb += w * m.mean_beta;
                var += w * w * m.mean_idio_variance;
            }
            var += m.market_variance * sum_wb * sum_wb;
            let want = lambda * er - var;
            let got = objective(x, f64::from(n), lambda, pv, &m, &f);
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{got} vs {want}");
        }
    }

    #[test]
    fn k_ratio_limits() {
        let m = market();
        assert!((m.k_ratio(1e15) - m.k_ratio_asymptotic()).abs() < 1e-12);
        assert!((m.k_ratio_asymptotic() - 2.0 * 0.09 / 0.04).abs() < 1e-12);
    }
}
