use std::path::{Path, PathBuf};

use clap::Args;
use costfolio::tailfit::{fit_with_ci, survival_curve, BootstrapConfig, Family, FitReport};
use serde::{Deserialize, Serialize};

use super::{Done, Report};
use crate::error::{CliError, CliResult};
use crate::output::Inputs;

#[derive(Debug, Args, Serialize)]
pub struct FitDistArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV file with a header row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Column holding the positive sample.
    #[arg(long)]
    pub column: Option<String>,
    /// pareto, lognormal, weibull, student, zm or zm-cutoff.
    #[arg(long)]
    pub family: Option<String>,
    /// BCa bootstrap replicates (0 disables the intervals).
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Points on the survival curve.
    #[arg(long)]
    pub curve_points: Option<usize>,
}

fn default_bootstrap() -> usize {
    1999
}

fn default_curve_points() -> usize {
    100
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitDistConfig {
    pub out: PathBuf,
    pub input: PathBuf,
    pub column: String,
    pub family: String,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_curve_points")]
    pub curve_points: usize,
}

/// Reads one numeric column; empty cells are errors.
pub fn read_column(bytes: &[u8], column: &str, path: &Path) -> CliResult<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let headers = rdr.headers().map_err(|e| CliError::input("parse", format!("{}: {e}", path.display())))?.clone();
    let idx = headers.iter().position(|h| h == column).ok_or_else(|| {
        CliError::input("parse", format!("{}: no column `{column}` in header {:?}", path.display(), headers))
    })?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| CliError::input("parse", format!("{}: line {line}: {e}", path.display())))?;
        let cell = rec.get(idx).unwrap_or("");
        let v: f64 = cell.parse().map_err(|_| {
            CliError::input(
                "parse",
                format!("{}: line {line}, column `{column}`: `{cell}` is not a number", path.display()),
            )
        })?;
        out.push(v);
    }
    Ok(out)
}

#[derive(Serialize)]
struct Body<'a> {
    report: &'a FitReport,
}

pub fn run(args: &FitDistArgs) -> CliResult<Done> {
    let mut inputs = Inputs::default();
    let cfg: FitDistConfig = crate::config::resolve(args.config.as_ref(), "fit-dist", args, &mut inputs)?;
    let family: Family = cfg.family.parse().map_err(|e: costfolio::Error| CliError::input("config", e.to_string()))?;
    let bytes = inputs.read(&cfg.input)?;
    let data = read_column(&bytes, &cfg.column, &cfg.input)?;
    let boot = BootstrapConfig { replicates: cfg.bootstrap, seed: cfg.seed, ..Default::default() };
    let report = fit_with_ci(family, &data, (cfg.bootstrap > 0).then_some(&boot))?;
    let curve = survival_curve(&data, &report.model()?, cfg.curve_points);

    let mut done = Done::new(cfg.out.clone(), &cfg, inputs, Some(cfg.seed))?;
    done.outputs.add_json("fit.json", &Report { config: &cfg, body: Body { report: &report } })?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "empirical_sf", "model_sf"]).map_err(|e| CliError::input("io", e.to_string()))?;
    for p in &curve {
        w.write_record([p.x.to_string(), p.empirical.to_string(), p.model.to_string()])
            .map_err(|e| CliError::input("io", e.to_string()))?;
    }
    let csv = w.into_inner().map_err(|e| CliError::input("io", e.to_string()))?;
    done.outputs.add("survival.csv", csv);
    Ok(done)
}
