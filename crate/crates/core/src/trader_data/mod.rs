//! Transaction and account-value ingestion, portfolio-building extraction and
//! per-trader aggregates.

mod aggregate;
mod csvio;
mod types;

pub use aggregate::{
    aggregate_all, aggregate_trader, extract_portfolio_building, AggregateSummary, SkippedTrader, TraderAggregate,
};
pub use csvio::{
    parse_snapshots, parse_transactions, read_snapshots, read_transactions, write_snapshots, write_transactions,
    SNAPSHOT_HEADER, TRANSACTION_HEADER,
};
pub use types::{account_value_at, AccountSnapshot, AssetClass, Category, Side, SnapshotIndex, Transaction};
