//! CSV formats for transactions and account snapshots.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, SecondsFormat, Utc};

use super::types::{AccountSnapshot, SnapshotIndex, Transaction};
use crate::{Error, Result};

pub const TRANSACTION_HEADER: [&str; 8] =
    ["trader_id", "category", "timestamp", "asset_id", "asset_class", "side", "price", "volume"];

pub const SNAPSHOT_HEADER: [&str; 3] = ["trader_id", "date", "account_value"];

fn parse_err(line: u64, column: &str, reason: impl Into<String>) -> Error {
    Error::Parse { line, column: column.to_string(), reason: reason.into() }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    parse_err(line, "", e.to_string())
}

fn check_header(found: &csv::StringRecord, expected: &[&str], optional_tail: Option<&str>) -> Result<bool> {
    let fields: Vec<&str> = found.iter().collect();
    let base_ok = fields.len() >= expected.len() && fields[..expected.len()] == *expected;
    let extra = &fields[expected.len().min(fields.len())..];
    let (ok, has_tail) = match (extra, optional_tail) {
        ([], _) => (base_ok, false),
        ([t], Some(opt)) if *t == opt => (base_ok, true),
        _ => (false, false),
    };
    if !ok {
        let mut want = expected.join(",");
        if let Some(opt) = optional_tail {
            want.push_str(&format!("[,{opt}]"));
        }
        return Err(parse_err(1, "", format!("header must be `{want}`, found `{}`", fields.join(","))));
    }
    Ok(has_tail)
}

fn positive(line: u64, column: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| parse_err(line, column, format!("`{raw}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, column, format!("`{raw}` is not finite")));
    }
    if v <= 0.0 {
        return Err(parse_err(line, column, format!("must be positive, found {raw}")));
    }
    Ok(v)
}

fn required<'a>(line: u64, column: &str, raw: &'a str) -> Result<&'a str> {
    let s = raw.trim();
    if s.is_empty() {
        return Err(parse_err(line, column, "empty value"));
    }
    Ok(s)
}

/// Parses a transaction log and sorts it by `(trader_id, timestamp)`; rows
/// with equal keys keep their input order.
///
/// An optional trailing `currency` column is accepted as long as every row
/// names the same currency.
pub fn parse_transactions<R: Read>(reader: R) -> Result<Vec<Transaction>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let has_currency = check_header(rdr.headers().map_err(csv_err)?, &TRANSACTION_HEADER, Some("currency"))?;
    let mut currency: Option<String> = None;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or("");
        let trader_id = required(line, "trader_id", field(0))?.to_string();
        let category = field(1).trim().parse().map_err(|e: String| parse_err(line, "category", e))?;
        let ts = required(line, "timestamp", field(2))?;
        let timestamp = DateTime::parse_from_rfc3339(ts)
            .map_err(|e| parse_err(line, "timestamp", format!("`{ts}`: {e}")))?
            .with_timezone(&Utc);
        let asset_id = required(line, "asset_id", field(3))?.to_string();
        let asset_class = field(4).trim().parse().map_err(|e: String| parse_err(line, "asset_class", e))?;
        let side = field(5).trim().parse().map_err(|e: String| parse_err(line, "side", e))?;
        let price = positive(line, "price", field(6))?;
        let volume = positive(line, "volume", field(7))?;
        if has_currency {
            let c = required(line, "currency", field(8))?;
            match &currency {
                None => currency = Some(c.to_string()),
                Some(first) if first != c => {
                    return Err(parse_err(
                        line,
                        "currency",
                        format!("mixed currencies `{first}` and `{c}` are not supported"),
                    ))
                }
                Some(_) => {}
            }
        }
        out.push(Transaction::new(trader_id, category, timestamp, asset_id, asset_class, side, price, volume));
    }
    out.sort_by(|a, b| a.trader_id.cmp(&b.trader_id).then(a.timestamp.cmp(&b.timestamp)));
    Ok(out)
}

/// Parses account snapshots into an index; duplicate `(trader_id, date)`
/// pairs are an error.
pub fn parse_snapshots<R: Read>(reader: R) -> Result<SnapshotIndex> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    check_header(rdr.headers().map_err(csv_err)?, &SNAPSHOT_HEADER, None)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or("");
        let trader_id = required(line, "trader_id", field(0))?.to_string();
        let raw_date = required(line, "date", field(1))?;
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d")
            .map_err(|e| parse_err(line, "date", format!("`{raw_date}`: {e}")))?;
        let raw = field(2).trim();
        let account_value: f64 =
            raw.parse().map_err(|_| parse_err(line, "account_value", format!("`{raw}` is not a number")))?;
        if !(account_value.is_finite() && account_value >= 0.0) {
            return Err(parse_err(line, "account_value", format!("must be finite and non-negative, found {raw}")));
        }
        out.push(AccountSnapshot { trader_id, date, account_value });
    }
    SnapshotIndex::new(out)
}

pub fn read_transactions(path: &Path) -> Result<Vec<Transaction>> {
    parse_transactions(BufReader::new(File::open(path)?))
}

pub fn read_snapshots(path: &Path) -> Result<SnapshotIndex> {
    parse_snapshots(BufReader::new(File::open(path)?))
}

fn io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::invalid(format!("{other:?}")),
    }
}

/// Writes transactions in the ingestion format. Numbers use the shortest
/// representation that parses back to the same value.
pub fn write_transactions<W: Write>(writer: W, txs: &[Transaction]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRANSACTION_HEADER).map_err(io)?;
    for t in txs {
        w.write_record([
            t.trader_id.as_str(),
            t.category.as_str(),
            &t.timestamp.to_rfc3339_opts(SecondsFormat::AutoSi, true),
            t.asset_id.as_str(),
            t.asset_class.as_str(),
            t.side.as_str(),
            &t.price.to_string(),
            &t.volume.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_snapshots<W: Write>(writer: W, snaps: &[AccountSnapshot]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SNAPSHOT_HEADER).map_err(io)?;
    for s in snaps {
        w.write_record([s.trader_id.as_str(), &s.date.format("%Y-%m-%d").to_string(), &s.account_value.to_string()])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
