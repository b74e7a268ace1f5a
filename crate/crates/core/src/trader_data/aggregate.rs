use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::types::{Category, Side, SnapshotIndex, Transaction};
use crate::par::{map_slice, Exec};
use crate::{Error, Result};

/// Indices of the portfolio-building transactions: the first buy of every
/// asset not bought before. Sells are ignored, and a sell does not mark its
/// asset as seen.
///
/// Expects one trader's transactions in time order.
pub fn extract_portfolio_building(txs: &[Transaction]) -> Vec<usize> {
    let mut seen = HashSet::new();
    txs.iter()
        .enumerate()
        .filter(|(_, t)| t.side == Side::Buy && seen.insert(t.asset_id.as_str()))
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraderAggregate {
    pub trader_id: String,
    pub category: Category,
    pub n_transactions: usize,
    /// Mean turnover per transaction over all transactions.
    pub mean_turnover: f64,
    pub mean_log_turnover: f64,
    /// Mean of `ln P_v` at the transactions with a known account value.
    pub mean_log_pv: f64,
    /// Mean of `T / P_v` over the transactions with a known account value.
    pub q_ratio: f64,
    /// Total turnover of the portfolio-building transactions.
    pub phi_turnover: f64,
    /// Number of portfolio-building transactions, the estimate of the number
    /// of assets held.
    pub n_assets: usize,
    /// Mean account value at the portfolio-building transactions; `None` when
    /// none of them has a known account value.
    pub mean_pv_phi: Option<f64>,
    /// Transactions without a usable account value (absent or zero).
    pub dropped: usize,
}

/// Aggregates one trader's time-ordered transactions.
///
/// Transactions whose account value cannot be resolved (no earlier snapshot,
/// or a zero balance) still count towards the turnover statistics but not
/// towards `q_ratio`, `mean_log_pv` or `mean_pv_phi`.
pub fn aggregate_trader(txs: &[Transaction], snapshots: &SnapshotIndex) -> Result<TraderAggregate> {
    let first = txs.first().ok_or_else(|| Error::InsufficientData("trader has no transactions".into()))?;
    if let Some(other) = txs.iter().find(|t| t.trader_id != first.trader_id) {
        return Err(Error::invalid(format!(
            "mixed traders `{}` and `{}` in one aggregate",
            first.trader_id, other.trader_id
        )));
    }
    let pv: Vec<Option<f64>> =
        txs.iter().map(|t| snapshots.account_value_at(&t.trader_id, t.timestamp).ok().filter(|v| *v > 0.0)).collect();
    let usable = pv.iter().flatten().count();
    if usable == 0 {
        return Err(Error::InsufficientData(format!(
            "trader `{}` has no transaction with a known account value",
            first.trader_id
        )));
    }
    let n = txs.len() as f64;
    let mean_turnover = txs.iter().map(|t| t.turnover).sum::<f64>() / n;
    let mean_log_turnover = txs.iter().map(|t| t.turnover.ln()).sum::<f64>() / n;
    let (mut q_sum, mut lpv_sum) = (0.0, 0.0);
    for (t, p) in txs.iter().zip(&pv) {
        if let Some(p) = p {
            q_sum += t.turnover / p;
            lpv_sum += p.ln();
        }
    }
    let phi = extract_portfolio_building(txs);
    let phi_turnover = phi.iter().map(|&i| txs[i].turnover).sum();
    let phi_pv: Vec<f64> = phi.iter().filter_map(|&i| pv[i]).collect();
    let mean_pv_phi = (!phi_pv.is_empty()).then(|| phi_pv.iter().sum::<f64>() / phi_pv.len() as f64);
    Ok(TraderAggregate {
        trader_id: first.trader_id.clone(),
        category: first.category,
        n_transactions: txs.len(),
        mean_turnover,
        mean_log_turnover,
        mean_log_pv: lpv_sum / usable as f64,
        q_ratio: q_sum / usable as f64,
        phi_turnover,
        n_assets: phi.len(),
        mean_pv_phi,
        dropped: txs.len() - usable,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedTrader {
    pub trader_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub aggregates: Vec<TraderAggregate>,
    pub skipped: Vec<SkippedTrader>,
    /// Transactions excluded from the account-value statistics, summed over
    /// the aggregated traders.
    pub dropped_rows: usize,
}

/// Aggregates every trader in a log sorted by trader id (as returned by the
/// parser). Output follows trader-id order whatever the execution mode.
pub fn aggregate_all(txs: &[Transaction], snapshots: &SnapshotIndex, exec: Exec) -> AggregateSummary {
    let mut groups: Vec<&[Transaction]> = Vec::new();
    let mut start = 0;
    for i in 1..=txs.len() {
        if i == txs.len() || txs[i].trader_id != txs[start].trader_id {
            groups.push(&txs[start..i]);
            start = i;
        }
    }
    let results = map_slice(exec, &groups, |g| aggregate_trader(g, snapshots));
    let mut out = AggregateSummary::default();
    for (g, r) in groups.iter().zip(results) {
        match r {
            Ok(a) => {
                out.dropped_rows += a.dropped;
                out.aggregates.push(a);
            }
            Err(e) => out.skipped.push(SkippedTrader { trader_id: g[0].trader_id.clone(), reason: e.to_string() }),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trader_data::{AccountSnapshot, AssetClass};
    use chrono::{Duration, TimeZone, Utc};
    use rand::Rng;
    use std::collections::HashMap;

    fn tx(asset: &str, side: Side, price: f64, volume: f64, day: u32) -> Transaction {
        Transaction::new(
            "A",
            Category::Individual,
            Utc.with_ymd_and_hms(2024, 1, day, 12, 0, 0).unwrap(),
            asset,
            AssetClass::Stock,
            side,
            price,
            volume,
        )
    }

    fn snaps(value: f64) -> SnapshotIndex {
        SnapshotIndex::new([AccountSnapshot {
            trader_id: "A".into(),
            date: "2024-01-01".parse().unwrap(),
            account_value: value,
        }])
        .unwrap()
    }

    #[test]
    fn new_asset_after_others_joins_phi() {
        let t = vec![
            tx("A", Side::Buy, 1.0, 1.0, 2),
            tx("B", Side::Buy, 1.0, 1.0, 2),
            tx("C", Side::Buy, 1.0, 1.0, 3),
            tx("D", Side::Buy, 1.0, 1.0, 4),
        ];
        assert!(extract_portfolio_building(&t).contains(&3));
    }

    #[test]
    fn repeat_buys_and_leading_sells() {
        let t =
            vec![tx("A", Side::Sell, 1.0, 1.0, 2), tx("A", Side::Buy, 1.0, 1.0, 2), tx("A", Side::Buy, 1.0, 1.0, 3)];
        assert_eq!(extract_portfolio_building(&t), vec![1]);
    }

    #[test]
    fn matches_first_buy_dictionary() {
        let mut rng = crate::rng::stream(5, 0);
        let t: Vec<Transaction> = (0..500)
            .map(|_| {
                let asset = format!("S{}", rng.random_range(0..20));
                let side = if rng.random::<f64>() < 0.6 { Side::Buy } else { Side::Sell };
                tx(&asset, side, 1.0, 1.0, 2)
            })
            .collect();
        let mut first: HashMap<&str, usize> = HashMap::new();
        for (i, x) in t.iter().enumerate() {
            if x.side == Side::Buy {
                first.entry(&x.asset_id).or_insert(i);
            }
        }
        let mut oracle: Vec<usize> = first.into_values().collect();
        oracle.sort();
        let phi = extract_portfolio_building(&t);
        assert_eq!(phi, oracle);
        // Idempotent on its own output.
        let sub: Vec<Transaction> = phi.iter().map(|&i| t[i].clone()).collect();
        assert_eq!(extract_portfolio_building(&sub), (0..sub.len()).collect::<Vec<_>>());
    }

    #[test]
    fn single_buy() {
        let a = aggregate_trader(&[tx("X", Side::Buy, 10.0, 5.0, 2)], &snaps(100.0)).unwrap();
        assert_eq!((a.mean_turnover, a.q_ratio, a.phi_turnover, a.n_assets), (50.0, 0.5, 50.0, 1));
        assert_eq!(a.mean_pv_phi, Some(100.0));
    }

    #[test]
    fn repeat_purchase() {
        let t = [tx("X", Side::Buy, 10.0, 1.0, 2), tx("X", Side::Buy, 30.0, 1.0, 3)];
        let a = aggregate_trader(&t, &snaps(100.0)).unwrap();
        assert_eq!((a.mean_turnover, a.q_ratio, a.phi_turnover, a.n_assets), (20.0, 0.2, 10.0, 1));
    }

    #[test]
    fn unresolved_rows_are_dropped_from_q_only() {
        let t = [tx("X", Side::Buy, 10.0, 1.0, 1), tx("Y", Side::Buy, 30.0, 1.0, 3)];
        let a = aggregate_trader(&t, &snaps(100.0)).unwrap();
        assert_eq!(a.mean_turnover, 20.0);
        assert_eq!(a.q_ratio, 0.3);
        assert_eq!(a.dropped, 1);
        assert_eq!(a.n_assets, 2);
        assert!(aggregate_trader(&t[..1], &snaps(100.0)).is_err());
        assert!(aggregate_trader(&[], &snaps(100.0)).is_err());
    }

    #[test]
    fn grouping_and_order() {
        let mut t = vec![tx("X", Side::Buy, 1.0, 1.0, 2)];
        let mut b = tx("X", Side::Buy, 1.0, 1.0, 2);
        b.trader_id = "B".into();
        t.push(b);
        let summary = aggregate_all(&t, &snaps(10.0), Exec::Sequential);
        assert_eq!(summary.aggregates.len(), 1);
        assert_eq!(summary.skipped.len(), 1);
        assert_eq!(summary.skipped[0].trader_id, "B");
        let par = aggregate_all(&t, &snaps(10.0), Exec::Parallel);
        assert_eq!(par, summary);
        let _ = Duration::days(1);
    }
}
