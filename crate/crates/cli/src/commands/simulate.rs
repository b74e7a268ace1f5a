use std::path::PathBuf;

use clap::Args;
use costfolio::popsim::{
    generate_population, validate_population, validate_q, Population, PopulationConfig, QValidation, ValidationReport,
};
use costfolio::qtheory::TurnoverWealthModel;
use costfolio::regress::{LawConfig, LoessConfig, SLOPE_TOLERANCE};
use costfolio::Exec;
use serde::{Deserialize, Serialize};

use super::{csv_bytes, Done, Report};
use crate::error::{CliError, CliResult};
use crate::output::Inputs;

#[derive(Debug, Args, Serialize)]
pub struct PopulationArgs {
    /// TOML population config; flags override its values.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_traders: Option<usize>,
    #[arg(long)]
    pub kappa_noise: Option<f64>,
    /// Invested fraction of each account.
    #[arg(long)]
    pub x: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSettings {
    pub span: f64,
    pub robustness_iters: usize,
    pub slope_tolerance: f64,
}

impl Default for LawSettings {
    fn default() -> Self {
        let l = LoessConfig::default();
        Self { span: l.span, robustness_iters: l.robustness_iters, slope_tolerance: SLOPE_TOLERANCE }
    }
}

impl LawSettings {
    fn config(&self) -> LawConfig {
        LawConfig {
            loess: LoessConfig { span: self.span, robustness_iters: self.robustness_iters, ..LoessConfig::default() },
            slope_tolerance: self.slope_tolerance,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub out: PathBuf,
    #[serde(flatten)]
    pub population: PopulationConfig,
    /// Turnover-law settings used by `validate`.
    #[serde(default)]
    pub law: LawSettings,
}

#[derive(Serialize)]
struct PopulationSummary<'a> {
    n_traders: usize,
    n_clamped: usize,
    n_transactions: usize,
    implied_turnover_wealth: &'a TurnoverWealthModel,
}

fn traders_csv(pop: &Population) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::input("io", e.to_string());
    w.write_record(["trader_id", "pv", "zeta", "regime", "n_raw", "n_assets", "clamped", "turnover"]).map_err(err)?;
    for t in &pop.traders {
        w.write_record([
            t.trader_id.clone(),
            t.pv.to_string(),
            t.zeta.to_string(),
            t.regime.to_string(),
            t.n_raw.to_string(),
            t.n_assets.to_string(),
            t.clamped.to_string(),
            t.turnover.to_string(),
        ])
        .map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::input("io", e.to_string()))
}

fn simulate(args: &PopulationArgs, section: &str) -> CliResult<(Done, SimulateConfig, Population)> {
    let mut inputs = Inputs::default();
    if args.config.is_none() {
        return Err(CliError::input("config", "--config is required"));
    }
    let cfg: SimulateConfig = crate::config::resolve(args.config.as_ref(), section, args, &mut inputs)?;
    let pop = generate_population(&cfg.population, Exec::Parallel)?;
    let implied = cfg.population.implied_tw_model()?;
    let mut done = Done::new(cfg.out.clone(), &cfg, inputs, Some(cfg.population.seed))?;
    done.outputs.add("transactions.csv", csv_bytes(|w| pop.write_transactions_csv(w))?);
    done.outputs.add("snapshots.csv", csv_bytes(|w| pop.write_snapshots_csv(w))?);
    done.outputs.add("traders.csv", traders_csv(&pop)?);
    let summary = PopulationSummary {
        n_traders: pop.traders.len(),
        n_clamped: pop.n_clamped(),
        n_transactions: pop.traders.iter().map(|t| t.n_assets).sum(),
        implied_turnover_wealth: &implied,
    };
    done.outputs.add_json("population.json", &Report { config: &cfg, body: summary })?;
    Ok((done, cfg, pop))
}

pub fn run_simulate(args: &PopulationArgs) -> CliResult<Done> {
    Ok(simulate(args, "simulate")?.0)
}

#[derive(Serialize)]
struct ValidationBody<'a> {
    validation: &'a ValidationReport,
    /// `null` for a degenerate wealth law.
    q: Option<&'a QValidation>,
}

pub fn run_validate(args: &PopulationArgs) -> CliResult<Done> {
    let (mut done, cfg, pop) = simulate(args, "validate")?;
    let report = validate_population(&pop, &cfg.law.config(), Exec::Parallel)?;
    let q = if cfg.population.pv_law.sigma > 0.0 { Some(validate_q(&pop, None, Exec::Parallel)?) } else { None };
    done.outputs.add_json(
        "validation.json",
        &Report { config: &cfg, body: ValidationBody { validation: &report, q: q.as_ref() } },
    )?;
    let mut text = report.to_text();
    if let Some(q) = &q {
        text.push_str(&format!(
            "Q KS {:.4} (5% critical {:.4}; {:.4} with integer holdings): {}\n",
            q.ks,
            q.critical_5pct,
            q.ks_rounded,
            if q.pass { "PASS" } else { "FAIL" }
        ));
    }
    done.outputs.add("validation.txt", text.into_bytes());
    if !report.pass || q.as_ref().is_some_and(|q| !q.pass) {
        done.failure = Some(CliError::validation("closed-loop checks failed; see validation.txt"));
    }
    Ok(done)
}
