use std::path::PathBuf;

use clap::Args;
use costfolio::optimize::{
    fit_fee_powerlaw, optimize, parse_fee_segments, FeeFit, MarketParams, OptimalAllocation, PortfolioProblem,
    PowerLawFee,
};
use serde::{Deserialize, Serialize};

use super::{Done, Report};
use crate::error::{CliError, CliResult};
use crate::output::Inputs;

#[derive(Debug, Args, Serialize)]
pub struct OptimizeArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fee staircase CSV (`lower_bound,upper_bound,fee`), fitted to `C T^delta`.
    #[arg(long, conflicts_with_all = ["fee_c", "fee_delta"])]
    pub fees: Option<PathBuf>,
    /// Power-law fee coefficient, instead of `--fees`.
    #[arg(long)]
    pub fee_c: Option<f64>,
    /// Power-law fee exponent, instead of `--fees`.
    #[arg(long)]
    pub fee_delta: Option<f64>,
    /// JSON file with the market parameters.
    #[arg(long)]
    pub market: Option<PathBuf>,
    /// Account value.
    #[arg(long)]
    pub pv: Option<f64>,
    /// Risk tolerance.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Invested fraction.
    #[arg(long)]
    pub x: Option<f64>,
    /// Number of assets.
    #[arg(long)]
    pub n: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub out: PathBuf,
    #[serde(default)]
    pub fees: Option<PathBuf>,
    #[serde(default)]
    pub fee_c: Option<f64>,
    #[serde(default)]
    pub fee_delta: Option<f64>,
    pub market: PathBuf,
    pub pv: f64,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub x: Option<f64>,
    #[serde(default)]
    pub n: Option<f64>,
}

#[derive(Serialize)]
struct Body<'a> {
    fee: PowerLawFee,
    fee_fit: Option<&'a FeeFit>,
    market: MarketParams,
    allocation: &'a OptimalAllocation,
}

pub fn run(args: &OptimizeArgs) -> CliResult<Done> {
    let mut inputs = Inputs::default();
    let mut cfg: OptimizeConfig = crate::config::resolve(args.config.as_ref(), "optimize", args, &mut inputs)?;
    // A fee given as flags replaces the one from the file.
    if args.fees.is_some() {
        (cfg.fee_c, cfg.fee_delta) = (None, None);
    } else if args.fee_c.is_some() || args.fee_delta.is_some() {
        cfg.fees = None;
    }
    let (fee, fit) = match (&cfg.fees, cfg.fee_c, cfg.fee_delta) {
        (Some(path), None, None) => {
            let segments = parse_fee_segments(inputs.read(path)?.as_slice())?;
            let fit = fit_fee_powerlaw(&segments, None)?;
            (fit.law(), Some(fit))
        }
        (None, Some(c), Some(delta)) => (PowerLawFee::new(c, delta, None)?, None),
        _ => return Err(CliError::input("config", "give either fees, or both fee_c and fee_delta")),
    };
    let market: MarketParams = serde_json::from_slice(&inputs.read(&cfg.market)?)
        .map_err(|e| CliError::input("json", format!("market: {e}")))?;
    market.validate()?;
    let problem =
        PortfolioProblem { account_value: cfg.pv, risk_tolerance: cfg.lambda, target_fraction: cfg.x, n_assets: cfg.n };
    let allocation = optimize(&problem, &market, &fee)?;

    let mut done = Done::new(cfg.out.clone(), &cfg, inputs, None)?;
    let body = Body { fee, fee_fit: fit.as_ref(), market, allocation: &allocation };
    done.outputs.add_json("allocation.json", &Report { config: &cfg, body })?;
    Ok(done)
}
