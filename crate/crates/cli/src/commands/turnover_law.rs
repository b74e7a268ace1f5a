use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use costfolio::regress::{turnover_law, write_loess_csv, LawConfig, LoessConfig, TurnoverLaw, SLOPE_TOLERANCE};
use costfolio::trader_data::{aggregate_all, parse_snapshots, parse_transactions, Category};
use costfolio::Exec;
use serde::{Deserialize, Serialize};

use super::{csv_bytes, Done, Report};
use crate::error::{CliError, CliResult};
use crate::output::Inputs;

#[derive(Debug, Args, Serialize)]
pub struct TurnoverLawArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Transaction log CSV.
    #[arg(long)]
    pub transactions: Option<PathBuf>,
    /// Account-value snapshot CSV.
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
    /// Keep one category: individual, company or asset_manager.
    #[arg(long)]
    pub category: Option<String>,
    /// Loess span.
    #[arg(long)]
    pub span: Option<f64>,
    #[arg(long)]
    pub robustness_iters: Option<usize>,
    /// Slope change (in slope units) that ends a regime plateau.
    #[arg(long)]
    pub slope_tolerance: Option<f64>,
}

fn default_span() -> f64 {
    LoessConfig::default().span
}

fn default_iters() -> usize {
    LoessConfig::default().robustness_iters
}

fn default_tolerance() -> f64 {
    SLOPE_TOLERANCE
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurnoverLawConfig {
    pub out: PathBuf,
    pub transactions: PathBuf,
    pub snapshots: PathBuf,
    #[serde(default)]
    pub category: Option<String>,
    #[serde(default = "default_span")]
    pub span: f64,
    #[serde(default = "default_iters")]
    pub robustness_iters: usize,
    #[serde(default = "default_tolerance")]
    pub slope_tolerance: f64,
}

impl TurnoverLawConfig {
    pub fn law(&self) -> LawConfig {
        LawConfig {
            loess: LoessConfig { span: self.span, robustness_iters: self.robustness_iters, ..LoessConfig::default() },
            slope_tolerance: self.slope_tolerance,
        }
    }
}

#[derive(Serialize)]
struct Body<'a> {
    /// Traders per category in the log, before filtering.
    traders_by_category: BTreeMap<String, usize>,
    n_traders: usize,
    n_skipped: usize,
    dropped_rows: usize,
    law: &'a TurnoverLaw,
}

pub fn run(args: &TurnoverLawArgs) -> CliResult<Done> {
    let mut inputs = Inputs::default();
    let cfg: TurnoverLawConfig = crate::config::resolve(args.config.as_ref(), "turnover-law", args, &mut inputs)?;
    let category: Option<Category> =
        cfg.category.as_deref().map(|c| c.parse().map_err(|e: String| CliError::input("config", e))).transpose()?;
    let txs = parse_transactions(inputs.read(&cfg.transactions)?.as_slice()).map_err(|e| e.in_stage("transactions"))?;
    let snaps = parse_snapshots(inputs.read(&cfg.snapshots)?.as_slice()).map_err(|e| e.in_stage("snapshots"))?;

    let mut traders_by_category = BTreeMap::new();
    for (i, t) in txs.iter().enumerate() {
        if i == 0 || txs[i - 1].trader_id != t.trader_id {
            *traders_by_category.entry(t.category.to_string()).or_insert(0) += 1;
        }
    }
    let kept: Vec<_> = txs.into_iter().filter(|t| category.is_none_or(|c| t.category == c)).collect();
    let summary = aggregate_all(&kept, &snaps, Exec::Parallel);
    let (x, y): (Vec<f64>, Vec<f64>) = summary
        .aggregates
        .iter()
        .filter(|a| a.mean_log_pv.is_finite() && a.mean_log_turnover.is_finite())
        .map(|a| (a.mean_log_pv, a.mean_log_turnover))
        .unzip();
    let law = turnover_law(&x, &y, &cfg.law())?;

    let mut done = Done::new(cfg.out.clone(), &cfg, inputs, None)?;
    let body = Body {
        traders_by_category,
        n_traders: x.len(),
        n_skipped: summary.skipped.len(),
        dropped_rows: summary.dropped_rows,
        law: &law,
    };
    done.outputs.add_json("turnover_law.json", &Report { config: &cfg, body })?;
    if let Some(fit) = &law.loess {
        done.outputs.add("loess.csv", csv_bytes(|w| write_loess_csv(w, fit))?);
    }
    Ok(done)
}
