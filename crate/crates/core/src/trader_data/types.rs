use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

macro_rules! label_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $label)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $label),+ }
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($label => Ok($name::$variant),)+
                    other => Err(format!(
                        "unknown value `{other}`, expected one of: {}",
                        [$($label),+].join(", ")
                    )),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

label_enum!(
    /// Client category; every trader carries exactly one.
    Category { Individual => "individual", Company => "company", AssetManager => "asset_manager" }
);
label_enum!(AssetClass { Stock => "stock", Derivative => "derivative", Bond => "bond", Fund => "fund" });
label_enum!(Side { Buy => "buy", Sell => "sell" });

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub trader_id: String,
    pub category: Category,
    pub timestamp: DateTime<Utc>,
    pub asset_id: String,
    pub asset_class: AssetClass,
    pub side: Side,
    pub price: f64,
    pub volume: f64,
    /// `price * volume`, fees excluded.
    pub turnover: f64,
}

impl Transaction {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        trader_id: impl Into<String>,
        category: Category,
        timestamp: DateTime<Utc>,
        asset_id: impl Into<String>,
        asset_class: AssetClass,
        side: Side,
        price: f64,
        volume: f64,
    ) -> Self {
        Self {
            trader_id: trader_id.into(),
            category,
            timestamp,
            asset_id: asset_id.into(),
            asset_class,
            side,
            price,
            volume,
            turnover: price * volume,
        }
    }
}

/// End-of-day account value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountSnapshot {
    pub trader_id: String,
    pub date: NaiveDate,
    pub account_value: f64,
}

/// Value in force at `t`: the latest snapshot dated strictly before the
/// calendar day of `t`. A day's own snapshot is taken after the close and is
/// not visible intraday.
///
/// Linear scan; use [`SnapshotIndex`] for repeated queries.
pub fn account_value_at(snapshots: &[AccountSnapshot], trader_id: &str, t: DateTime<Utc>) -> Result<f64> {
    let day = t.date_naive();
    snapshots
        .iter()
        .filter(|s| s.trader_id == trader_id && s.date < day)
        .max_by_key(|s| s.date)
        .map(|s| s.account_value)
        .ok_or_else(|| no_value(trader_id, t))
}

fn no_value(trader_id: &str, t: DateTime<Utc>) -> Error {
    Error::NoAccountValue { trader: trader_id.to_string(), at: t.to_rfc3339() }
}

/// Snapshots grouped per trader and sorted by date.
#[derive(Debug, Clone, Default)]
pub struct SnapshotIndex {
    by_trader: HashMap<String, Vec<(NaiveDate, f64)>>,
}

impl SnapshotIndex {
    /// Rejects a second snapshot for the same trader and date.
    pub fn new(snapshots: impl IntoIterator<Item = AccountSnapshot>) -> Result<Self> {
        let mut by_trader: HashMap<String, Vec<(NaiveDate, f64)>> = HashMap::new();
        for s in snapshots {
            by_trader.entry(s.trader_id).or_default().push((s.date, s.account_value));
        }
        for (trader, v) in by_trader.iter_mut() {
            v.sort_by_key(|(d, _)| *d);
            if let Some(w) = v.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::DuplicateSnapshot { trader: trader.clone(), date: w[0].0.to_string() });
            }
        }
        Ok(Self { by_trader })
    }

    pub fn account_value_at(&self, trader_id: &str, t: DateTime<Utc>) -> Result<f64> {
        let day = t.date_naive();
        let v = self.by_trader.get(trader_id).ok_or_else(|| no_value(trader_id, t))?;
        let pos = v.partition_point(|(d, _)| *d < day);
        if pos == 0 {
            return Err(no_value(trader_id, t));
        }
        Ok(v[pos - 1].1)
    }

    pub fn len(&self) -> usize {
        self.by_trader.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_trader.is_empty()
    }
}
