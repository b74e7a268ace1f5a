use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::optimize::{exponents, MarketParams, PowerLawFee};
use crate::qtheory::{TurnoverWealthModel, TwRegime};
use crate::trader_data::Category;
use crate::{Error, Result};

/// Log-normal account-value law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvLaw {
    pub mu: f64,
    pub sigma: f64,
}

fn default_x() -> f64 {
    1.0
}

fn default_category() -> Category {
    Category::Individual
}

fn default_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 1, 3).expect("valid date")
}

/// A synthetic population of one-shot portfolio builders.
///
/// Each trader draws `P_v`, picks the fee regime by `log P_v` against
/// `theta` (the first regime applies below it), sizes `N` from the
/// high-diversification law scaled by `exp(zeta)`, and buys `N` assets at
/// once for `x P_v / N` each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationConfig {
    pub n_traders: usize,
    pub seed: u64,
    pub pv_law: PvLaw,
    pub market: MarketParams,
    /// One fee law per regime.
    pub fees: Vec<PowerLawFee>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Standard deviation of the per-trader log-offset `zeta`.
    #[serde(default)]
    pub kappa_noise: f64,
    /// Invested fraction of the account.
    #[serde(default = "default_x")]
    pub x: f64,
    #[serde(default = "default_category")]
    pub category: Category,
    /// Day of the buys; the account snapshot is dated the day before.
    #[serde(default = "default_date")]
    pub trade_date: NaiveDate,
}

impl PopulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_traders == 0 {
            return Err(Error::invalid("n_traders must be at least 1"));
        }
        if !(self.pv_law.mu.is_finite() && self.pv_law.sigma >= 0.0 && self.pv_law.sigma.is_finite()) {
            return Err(Error::invalid(format!("invalid pv_law {:?}", self.pv_law)));
        }
        self.market.validate()?;
        match (self.fees.len(), self.theta) {
            (1, None) | (2, Some(_)) => {}
            (2, None) => return Err(Error::invalid("two fee regimes need a theta")),
            (n, _) => return Err(Error::invalid(format!("expected 1 fee regime, or 2 with theta; got {n}"))),
        }
        for f in &self.fees {
            f.validate()?;
            if f.delta >= 1.0 || f.c <= 0.0 {
                return Err(Error::Unsupported(format!(
                    "fee regime C={}, delta={} has no finite optimal N",
                    f.c, f.delta
                )));
            }
        }
        if self.market.risk_premium() <= 0.0 {
            return Err(Error::invalid("market risk premium must be positive"));
        }
        if !(self.kappa_noise >= 0.0 && self.kappa_noise.is_finite()) {
            return Err(Error::invalid("kappa_noise must be non-negative"));
        }
        if !(self.x > 0.0 && self.x <= 1.0) {
            return Err(Error::invalid("x must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Index of the fee regime for `log P_v = u`.
    pub fn regime_of(&self, u: f64) -> usize {
        match self.theta {
            Some(t) if u >= t => 1,
            _ => 0,
        }
    }

    /// `log N = ln A + alpha log(x P_v)` for a regime, as `(ln A, alpha)`.
    pub fn n_law(&self, regime: usize) -> (f64, f64) {
        let f = &self.fees[regime];
        let m = &self.market;
        let d = f.delta;
        let kq = 0.25 * m.k_ratio_asymptotic();
        let g = kq * m.risk_premium() / ((1.0 - d) * f.c * (1.0 + m.risk_free));
        (g.ln() / (2.0 - d), (1.0 - d) / (2.0 - d))
    }

    /// The turnover-wealth relation the population obeys (before `N` is
    /// rounded): `log T = a + beta log P_v - zeta` with `beta = 1/(2-delta)`.
    /// A noise-free population gets a nominal `xi` of 1e-6.
    pub fn implied_tw_model(&self) -> Result<TurnoverWealthModel> {
        let xi = self.kappa_noise.max(1e-6);
        let regimes: Vec<TwRegime> = (0..self.fees.len())
            .map(|r| {
                let (ln_a, alpha) = self.n_law(r);
                let beta = exponents(self.fees[r].delta).map(|e| e.beta).unwrap_or(1.0 - alpha);
                TwRegime { a: beta * self.x.ln() - ln_a, beta, xi }
            })
            .collect();
        match self.theta {
            None => TurnoverWealthModel::single(regimes[0].a, regimes[0].beta, xi),
            Some(t) => TurnoverWealthModel::bilinear(regimes[0], regimes[1], t),
        }
    }

    /// Fee coefficient for the upper regime, with exponent `upper_delta`,
    /// that makes `N` continuous at `theta`.
    pub fn continuous_upper_cost(&self, upper_delta: f64) -> Result<f64> {
        let theta = self.theta.ok_or_else(|| Error::invalid("no theta"))?;
        let (ln_a, alpha) = self.n_law(0);
        let lx = self.x.ln() + theta;
        let ln_n = ln_a + alpha * lx;
        let m = &self.market;
        let d = upper_delta;
        let alpha2 = (1.0 - d) / (2.0 - d);
        let kq = 0.25 * m.k_ratio_asymptotic();
        let ln_c = (kq * m.risk_premium() / ((1.0 - d) * (1.0 + m.risk_free))).ln() - (2.0 - d) * (ln_n - alpha2 * lx);
        Ok(ln_c.exp())
    }
}
