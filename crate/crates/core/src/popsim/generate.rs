use std::io::Write;

use chrono::{Duration, NaiveTime};
use serde::{Deserialize, Serialize};

use super::config::PopulationConfig;
use crate::optimize::n_star_asymptotic;
use crate::par::{map_range, Exec};
use crate::rng::{std_normal, stream};
use crate::trader_data::{write_snapshots, write_transactions, AccountSnapshot, AssetClass, Side, Transaction};
use crate::{Error, Result};

/// Price of every synthetic buy; volumes carry the turnover.
pub const UNIT_PRICE: f64 = 100.0;

/// Guard against configurations that would emit absurdly large logs.
pub const MAX_ASSETS_PER_TRADER: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTrader {
    pub trader_id: String,
    pub pv: f64,
    pub zeta: f64,
    pub regime: usize,
    /// Optimal `N` before rounding.
    pub n_raw: f64,
    pub n_assets: usize,
    /// `n_raw < 1`: the trader holds one asset and is off the law.
    pub clamped: bool,
    /// Turnover of each buy, `x P_v / N`.
    pub turnover: f64,
}

impl SyntheticTrader {
    /// Turnover-to-wealth ratio of one buy.
    pub fn q(&self) -> f64 {
        self.turnover / self.pv
    }
}

#[derive(Debug, Clone)]
pub struct Population {
    pub config: PopulationConfig,
    pub traders: Vec<SyntheticTrader>,
}

impl Population {
    pub fn n_clamped(&self) -> usize {
        self.traders.iter().filter(|t| t.clamped).count()
    }

    /// Every buy, trader by trader, assets `A0001, A0002, ...`.
    pub fn transactions(&self) -> Vec<Transaction> {
        let ts = self.config.trade_date.and_time(NaiveTime::from_hms_opt(12, 0, 0).expect("valid time")).and_utc();
        let mut out = Vec::with_capacity(self.traders.iter().map(|t| t.n_assets).sum());
        for t in &self.traders {
            let volume = t.turnover / UNIT_PRICE;
            for k in 1..=t.n_assets {
                out.push(Transaction::new(
                    t.trader_id.clone(),
                    self.config.category,
                    ts,
                    format!("A{k:04}"),
                    AssetClass::Stock,
                    Side::Buy,
                    UNIT_PRICE,
                    volume,
                ));
            }
        }
        out
    }

    /// One snapshot per trader, dated the day before the buys.
    pub fn snapshots(&self) -> Vec<AccountSnapshot> {
        let date = self.config.trade_date - Duration::days(1);
        self.traders
            .iter()
            .map(|t| AccountSnapshot { trader_id: t.trader_id.clone(), date, account_value: t.pv })
            .collect()
    }

    pub fn write_transactions_csv<W: Write>(&self, w: W) -> Result<()> {
        write_transactions(w, &self.transactions())
    }

    pub fn write_snapshots_csv<W: Write>(&self, w: W) -> Result<()> {
        write_snapshots(w, &self.snapshots())
    }
}

/// Draws the population. Trader `i` uses stream `(seed, i)`: the first normal
/// sets `P_v`, the second `zeta`, so the output does not depend on the
/// execution mode.
pub fn generate_population(cfg: &PopulationConfig, exec: Exec) -> Result<Population> {
    cfg.validate()?;
    let width = (cfg.n_traders - 1).to_string().len();
    let traders = map_range(exec, cfg.n_traders, |i| -> Result<SyntheticTrader> {
        let mut rng = stream(cfg.seed, i as u64);
        let z1 = std_normal(&mut rng);
        let z2 = std_normal(&mut rng);
        let u = cfg.pv_law.mu + cfg.pv_law.sigma * z1;
        let pv = u.exp();
        let zeta = cfg.kappa_noise * z2;
        let regime = cfg.regime_of(u);
        let n_raw = n_star_asymptotic(cfg.x, pv, &cfg.market, &cfg.fees[regime])? * zeta.exp();
        if !(n_raw <= MAX_ASSETS_PER_TRADER) {
            return Err(Error::invalid(format!(
                "trader {i} would hold {n_raw:.3e} assets; check the fee and market parameters"
            )));
        }
        let clamped = n_raw < 1.0;
        let n_assets = if clamped { 1 } else { n_raw.round() as usize };
        Ok(SyntheticTrader {
            trader_id: format!("T{i:0width$}"),
            pv,
            zeta,
            regime,
            n_raw,
            n_assets,
            clamped,
            turnover: cfg.x * pv / n_assets as f64,
        })
    });
    Ok(Population { config: cfg.clone(), traders: traders.into_iter().collect::<Result<_>>()? })
}
