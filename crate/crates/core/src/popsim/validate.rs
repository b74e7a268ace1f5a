use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::PopulationConfig;
use super::generate::{generate_population, Population};
use crate::optimize::{delta_eff, exponents};
use crate::par::{map_slice, Exec};
use crate::qtheory::{bilinear_q_cdf, closed_form_q, TurnoverWealthModel};
use crate::regress::{ols, turnover_law, Interval, LawConfig, OlsFit, Thresholds};
use crate::trader_data::{aggregate_all, parse_snapshots, parse_transactions};
use crate::{Error, Result};

/// Smallest population the closed loop accepts.
pub const MIN_VALIDATION_TRADERS: usize = 2000;

/// Fixed part of the exponent tolerance; three standard errors are added on
/// top so the check widens with the noise level.
pub const EXPONENT_TOLERANCE: f64 = 0.01;
pub const CHI_TOLERANCE: f64 = 0.02;

/// Asymptotic 5% Kolmogorov-Smirnov coefficient.
const KS_5PCT: f64 = 1.358;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub ci: Interval,
}

impl From<&OlsFit> for Estimate {
    fn from(f: &OlsFit) -> Self {
        Self { value: f.slope, se: f.slope_se, ci: f.slope_ci }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub target: f64,
    pub tolerance: f64,
    pub deviation: f64,
    pub pass: bool,
}

impl Verdict {
    fn new(est: Option<&Estimate>, target: f64, fixed: f64) -> Self {
        match est {
            Some(e) => {
                let tolerance = fixed + 3.0 * e.se;
                let deviation = e.value - target;
                Self { target, tolerance, deviation, pass: deviation.abs() <= tolerance }
            }
            None => Self { target, tolerance: fixed, deviation: f64::NAN, pass: false },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub delta: f64,
    pub n_traders: usize,
    /// Slope of `log N` on `log T_Phi`.
    pub alpha_hat: Option<Estimate>,
    /// Slope of `<log T>` on `<log P_v>` from the turnover-law pipeline.
    pub beta_hat: Option<Estimate>,
    /// `2 - 1/beta_hat`, when `beta_hat` lies in `[1/2, 1]`.
    pub delta_eff: Option<f64>,
    pub alpha: Verdict,
    pub beta: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n_traders: usize,
    /// Traders used in the fits (clamped and skipped ones left out).
    pub n_used: usize,
    pub n_clamped: usize,
    pub n_skipped: usize,
    pub thresholds: Thresholds,
    pub regimes: Vec<RegimeReport>,
    /// Through-origin slope of `log <P_v>_Phi` on `log T_Phi`.
    pub chi_hat: Estimate,
    pub chi: Verdict,
    pub pass: bool,
}

impl ValidationReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mark = |v: &Verdict| if v.pass { "PASS" } else { "FAIL" };
        let est = |e: &Option<Estimate>| match e {
            Some(e) => format!("{:.4} ± {:.4}", e.value, e.se),
            None => "n/a".to_string(),
        };
        let _ = writeln!(
            s,
            "traders: {} (used {}, clamped {}, skipped {})",
            self.n_traders, self.n_used, self.n_clamped, self.n_skipped
        );
        if self.thresholds.single_regime {
            let _ = writeln!(s, "turnover law: single regime");
        } else {
            let _ =
                writeln!(s, "turnover law: thresholds {:.3} / {:.3}", self.thresholds.theta1, self.thresholds.theta2);
        }
        for (i, r) in self.regimes.iter().enumerate() {
            let _ = writeln!(s, "regime {} (delta = {}, {} traders)", i + 1, r.delta, r.n_traders);
            let _ = writeln!(
                s,
                "  alpha {}  target {:.4}  tol {:.4}  {}",
                est(&r.alpha_hat),
                r.alpha.target,
                r.alpha.tolerance,
                mark(&r.alpha)
            );
            let _ = writeln!(
                s,
                "  beta  {}  target {:.4}  tol {:.4}  {}",
                est(&r.beta_hat),
                r.beta.target,
                r.beta.tolerance,
                mark(&r.beta)
            );
            if let Some(d) = r.delta_eff {
                let _ = writeln!(s, "  delta_eff {d:.4}");
            }
        }
        let _ = writeln!(
            s,
            "chi   {:.4} ± {:.4}  target 1  tol {:.4}  {}",
            self.chi_hat.value,
            self.chi_hat.se,
            self.chi.tolerance,
            mark(&self.chi)
        );
        let _ = writeln!(s, "overall: {}", if self.pass { "PASS" } else { "FAIL" });
        s
    }
}

/// Generates the population and runs [`validate_population`].
pub fn run_validation(cfg: &PopulationConfig, law: &LawConfig, exec: Exec) -> Result<ValidationReport> {
    let pop = generate_population(cfg, exec).map_err(|e| e.in_stage("generate"))?;
    validate_population(&pop, law, exec)
}

/// Writes the population's logs, ingests them again and re-derives the
/// exponents: `alpha` from `log N` against `log T_Phi` per configured regime,
/// `beta` from the turnover-law pipeline, `chi` from the portfolio-building
/// account values.
pub fn validate_population(pop: &Population, law: &LawConfig, exec: Exec) -> Result<ValidationReport> {
    let cfg = &pop.config;
    if pop.traders.len() < MIN_VALIDATION_TRADERS {
        return Err(Error::InsufficientData(format!(
            "closed-loop validation needs at least {MIN_VALIDATION_TRADERS} traders, got {}",
            pop.traders.len()
        )));
    }
    let mut tx_csv = Vec::new();
    let mut snap_csv = Vec::new();
    pop.write_transactions_csv(&mut tx_csv).map_err(|e| e.in_stage("write"))?;
    pop.write_snapshots_csv(&mut snap_csv).map_err(|e| e.in_stage("write"))?;
    let txs = parse_transactions(tx_csv.as_slice()).map_err(|e| e.in_stage("ingest"))?;
    let snaps = parse_snapshots(snap_csv.as_slice()).map_err(|e| e.in_stage("ingest"))?;
    let summary = aggregate_all(&txs, &snaps, exec);

    let clamped: HashSet<&str> = pop.traders.iter().filter(|t| t.clamped).map(|t| t.trader_id.as_str()).collect();
    let aggs: Vec<_> = summary
        .aggregates
        .iter()
        .filter(|a| !clamped.contains(a.trader_id.as_str()) && a.mean_pv_phi.is_some())
        .collect();
    if aggs.len() < MIN_VALIDATION_TRADERS / 2 {
        return Err(
            Error::InsufficientData(format!("only {} traders left after clamping", aggs.len())).in_stage("aggregate")
        );
    }

    let u: Vec<f64> = aggs.iter().map(|a| a.mean_log_pv).collect();
    let lt: Vec<f64> = aggs.iter().map(|a| a.mean_log_turnover).collect();
    let fit = turnover_law(&u, &lt, law)?;
    let betas: Vec<Estimate> = match (&fit.segmented, &fit.single) {
        (Some(s), _) => {
            [&s.lower, &s.upper].iter().map(|r| Estimate { value: r.slope, se: r.slope_se, ci: r.slope_ci }).collect()
        }
        (None, Some(f)) => vec![f.into()],
        _ => Vec::new(),
    };
    let beta_for = |r: usize| -> Option<Estimate> {
        if betas.len() == cfg.fees.len() {
            betas.get(r).copied()
        } else {
            None
        }
    };

    let mut regimes = Vec::with_capacity(cfg.fees.len());
    for (r, fee) in cfg.fees.iter().enumerate() {
        let (lphi, ln): (Vec<f64>, Vec<f64>) = aggs
            .iter()
            .filter(|a| cfg.regime_of(a.mean_log_pv) == r)
            .map(|a| (a.phi_turnover.ln(), (a.n_assets as f64).ln()))
            .unzip();
        let alpha_hat = ols(&lphi, &ln, false).ok().map(|f| Estimate::from(&f));
        let beta_hat = beta_for(r);
        let target = exponents(fee.delta)?;
        regimes.push(RegimeReport {
            delta: fee.delta,
            n_traders: lphi.len(),
            alpha: Verdict::new(alpha_hat.as_ref(), target.alpha, EXPONENT_TOLERANCE),
            beta: Verdict::new(beta_hat.as_ref(), target.beta, EXPONENT_TOLERANCE),
            delta_eff: beta_hat.and_then(|b| delta_eff(b.value).ok()),
            alpha_hat,
            beta_hat,
        });
    }

    let (lphi, lpv): (Vec<f64>, Vec<f64>) =
        aggs.iter().map(|a| (a.phi_turnover.ln(), a.mean_pv_phi.expect("filtered above").ln())).unzip();
    let chi_fit = ols(&lphi, &lpv, true).map_err(|e| e.in_stage("chi"))?;
    let chi_hat = Estimate::from(&chi_fit);
    let chi = Verdict::new(Some(&chi_hat), 1.0, CHI_TOLERANCE);

    let pass = chi.pass && regimes.iter().all(|r| r.alpha.pass && r.beta.pass);
    Ok(ValidationReport {
        n_traders: pop.traders.len(),
        n_used: aggs.len(),
        n_clamped: clamped.len(),
        n_skipped: summary.skipped.len(),
        thresholds: fit.thresholds,
        regimes,
        chi_hat,
        chi,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QValidation {
    pub n: usize,
    pub predictor: TurnoverWealthModel,
    /// KS distance of the unrounded ratios `x / N_raw`; this decides `pass`.
    pub ks: f64,
    /// KS distance of the realised `T / P_v` (integer holdings), for reference.
    pub ks_rounded: f64,
    /// Asymptotic 5% critical value `1.358 / sqrt(n)`.
    pub critical_5pct: f64,
    pub pass: bool,
}

/// Two-sided KS distance between `sample` and a CDF evaluated over its
/// distinct values.
fn ks_distance(mut sample: Vec<f64>, cdf: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<f64> {
    sample.sort_by(f64::total_cmp);
    let mut distinct = sample.clone();
    distinct.dedup();
    let f = cdf(&distinct)?;
    let n = sample.len() as f64;
    let mut ks: f64 = 0.0;
    let mut below = 0usize;
    for (v, f) in distinct.iter().zip(&f) {
        let upto = below + sample[below..].partition_point(|x| x <= v);
        ks = ks.max((upto as f64 / n - f).abs()).max((f - below as f64 / n).abs());
        below = upto;
    }
    Ok(ks)
}

/// Kolmogorov-Smirnov check of the per-trader `Q` against the prediction of
/// `predictor` (by default the population's own implied model) under the
/// configured log-normal wealth law. The prediction treats `N` as continuous,
/// so the test statistic uses the unrounded holdings.
pub fn validate_q(pop: &Population, predictor: Option<&TurnoverWealthModel>, exec: Exec) -> Result<QValidation> {
    let cfg = &pop.config;
    let model = match predictor {
        Some(m) => {
            m.validate()?;
            m.clone()
        }
        None => cfg.implied_tw_model()?,
    };
    if !(cfg.pv_law.sigma > 0.0) {
        return Err(Error::Degenerate("Q prediction needs a non-degenerate wealth law".into()));
    }
    let (mu, sigma) = (cfg.pv_law.mu, cfg.pv_law.sigma);
    let closed = if model.is_single() { Some(closed_form_q(&model, mu, sigma)?) } else { None };
    let cdf = |q: &[f64]| -> Result<Vec<f64>> {
        match &closed {
            Some(qm) => Ok(q.iter().map(|&v| qm.cdf(v)).collect()),
            None => map_slice(exec, q, |&v| bilinear_q_cdf(v, &model, mu, sigma)).into_iter().collect(),
        }
    };
    let ks = ks_distance(pop.traders.iter().map(|t| cfg.x / t.n_raw).collect(), cdf)?;
    let ks_rounded = ks_distance(pop.traders.iter().map(|t| t.q()).collect(), cdf)?;
    let n = pop.traders.len();
    let critical_5pct = KS_5PCT / (n as f64).sqrt();
    Ok(QValidation { n, predictor: model, ks, ks_rounded, critical_5pct, pass: ks <= critical_5pct })
}
