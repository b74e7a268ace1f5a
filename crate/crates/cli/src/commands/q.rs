use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use costfolio::qtheory::{
    closed_form_q, log_grid, q_curve, q_moment, write_curve_csv, CurveKind, QModel, TurnoverWealthModel,
};
use costfolio::regress::TurnoverLaw;
use costfolio::tailfit::{FitReport, Model};
use costfolio::Exec;
use serde::{Deserialize, Serialize};

use super::{csv_bytes, Done, Report};
use crate::error::{CliError, CliResult};
use crate::output::Inputs;

#[derive(Debug, Args, Serialize)]
pub struct QArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with `turnover_wealth` and `pv` models.
    #[arg(long, conflicts_with = "from_fits")]
    pub params: Option<PathBuf>,
    /// A turnover-law report and a fit-dist report of account values.
    #[arg(long, num_args = 2, value_names = ["TURNOVER_LAW_JSON", "FIT_JSON"])]
    pub from_fits: Option<Vec<PathBuf>>,
    #[arg(long)]
    pub q_min: Option<f64>,
    #[arg(long)]
    pub q_max: Option<f64>,
    /// Log-spaced grid points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Highest moment E(Q^n) to report.
    #[arg(long)]
    pub max_moment: Option<u32>,
}

fn default_q_min() -> f64 {
    1e-4
}

fn default_q_max() -> f64 {
    10.0
}

fn default_points() -> usize {
    200
}

fn default_max_moment() -> u32 {
    2
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QConfig {
    pub out: PathBuf,
    #[serde(default)]
    pub params: Option<PathBuf>,
    #[serde(default)]
    pub from_fits: Option<Vec<PathBuf>>,
    #[serde(default = "default_q_min")]
    pub q_min: f64,
    #[serde(default = "default_q_max")]
    pub q_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_max_moment")]
    pub max_moment: u32,
}

/// The `--params` file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QParams {
    pub turnover_wealth: TurnoverWealthModel,
    pub pv: Model,
}

#[derive(Deserialize)]
struct LawReport {
    law: TurnoverLaw,
}

#[derive(Deserialize)]
struct FitDistReport {
    report: FitReport,
}

fn json<T: serde::de::DeserializeOwned>(bytes: &[u8], what: &str) -> CliResult<T> {
    serde_json::from_slice(bytes).map_err(|e| CliError::input("json", format!("{what}: {e}")))
}

fn params_from_fits(law_bytes: &[u8], fit_bytes: &[u8]) -> CliResult<QParams> {
    let law: LawReport = json(law_bytes, "turnover-law report")?;
    let fit: FitDistReport = json(fit_bytes, "fit-dist report")?;
    let turnover_wealth = match (&law.law.segmented, &law.law.single) {
        (Some(s), _) => TurnoverWealthModel::from_segmented(s)?,
        (None, Some(f)) => TurnoverWealthModel::single(f.intercept, f.slope, f.residual_sd)?,
        _ => return Err(CliError::input("invalid_input", "turnover-law report holds no fit")),
    };
    Ok(QParams { turnover_wealth, pv: fit.report.model()? })
}

#[derive(Serialize)]
struct Body<'a> {
    params: &'a QParams,
    /// Log-normal form of Q, available for one regime and log-normal wealth.
    closed_form: Option<QModel>,
    /// `E(Q^n)`; `null` where the moment diverges.
    moments: BTreeMap<String, Option<f64>>,
}

pub fn run(args: &QArgs) -> CliResult<Done> {
    let mut inputs = Inputs::default();
    let mut cfg: QConfig = crate::config::resolve(args.config.as_ref(), "q", args, &mut inputs)?;
    // A source given as a flag replaces the other one from the file.
    if args.from_fits.is_some() {
        cfg.params = None;
    } else if args.params.is_some() {
        cfg.from_fits = None;
    }
    let params = match (&cfg.params, &cfg.from_fits) {
        (Some(p), None) => json::<QParams>(&inputs.read(p)?, "params")?,
        (None, Some(paths)) if paths.len() == 2 => {
            let law = inputs.read(&paths[0])?;
            let fit = inputs.read(&paths[1])?;
            params_from_fits(&law, &fit)?
        }
        (None, Some(_)) => return Err(CliError::input("config", "from_fits takes exactly two files")),
        _ => return Err(CliError::input("config", "give exactly one of params or from_fits")),
    };
    params.turnover_wealth.validate()?;
    params.pv.validate()?;
    if !(cfg.q_min > 0.0 && cfg.q_max > cfg.q_min && cfg.points >= 2) {
        return Err(CliError::input("config", "need 0 < q_min < q_max and points >= 2"));
    }
    let (tw, pv) = (&params.turnover_wealth, &params.pv);
    let grid = log_grid(cfg.q_min, cfg.q_max, cfg.points);
    let closed_form = match *pv {
        Model::Lognormal { mu, sigma } if tw.is_single() => Some(closed_form_q(tw, mu, sigma)?),
        _ => None,
    };
    let moments = (1..=cfg.max_moment).map(|n| (n.to_string(), q_moment(n, tw, pv).ok())).collect();

    let mut done = Done::new(cfg.out.clone(), &cfg, inputs, None)?;
    for (kind, name) in [(CurveKind::Pdf, "q_pdf.csv"), (CurveKind::Cdf, "q_cdf.csv"), (CurveKind::Sf, "q_sf.csv")] {
        let points = q_curve(kind, &grid, tw, pv, Exec::Parallel)?;
        done.outputs.add(name, csv_bytes(|w| write_curve_csv(w, &points))?);
    }
    done.outputs.add_json("q.json", &Report { config: &cfg, body: Body { params: &params, closed_form, moments } })?;
    Ok(done)
}
