use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::regress::{ols, Interval};
use crate::tailfit::{bca_bootstrap_multi, BootstrapCI, BootstrapConfig};
use crate::{Error, Result};

pub const FEE_HEADER: [&str; 3] = ["lower_bound", "upper_bound", "fee"];

/// Flat fee charged for amounts in `[lower, upper)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeeSegment {
    pub lower: f64,
    pub upper: f64,
    pub fee: f64,
}

impl FeeSegment {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// `F(a) = min(C a^delta, f_max)`; no cap when `f_max` is absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFee {
    #[serde(rename = "C")]
    pub c: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_max: Option<f64>,
}

impl PowerLawFee {
    pub fn new(c: f64, delta: f64, f_max: Option<f64>) -> Result<Self> {
        let f = Self { c, delta, f_max };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::invalid(format!("fee coefficient C must be >= 0, got {}", self.c)));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::invalid(format!("fee exponent delta must lie in [0, 1], got {}", self.delta)));
        }
        if let Some(m) = self.f_max {
            if !(m > 0.0) {
                return Err(Error::invalid(format!("fee cap must be positive, got {m}")));
            }
        }
        Ok(())
    }

    pub fn fee(&self, amount: f64) -> f64 {
        let raw = if self.delta == 0.0 {
            self.c
        } else if amount <= 0.0 {
            0.0
        } else {
            self.c * amount.powf(self.delta)
        };
        self.f_max.map_or(raw, |m| raw.min(m))
    }
}

/// A broker grid, a fitted power law, or both. Lookups prefer the grid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeeSchedule {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<FeeSegment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitted: Option<PowerLawFee>,
}

impl FeeSchedule {
    pub fn from_segments(segments: Vec<FeeSegment>) -> Result<Self> {
        validate_segments(&segments)?;
        Ok(Self { segments, fitted: None })
    }

    pub fn power_law(fee: PowerLawFee) -> Result<Self> {
        fee.validate()?;
        Ok(Self { segments: Vec::new(), fitted: Some(fee) })
    }

    /// The power law used by the optimizer.
    pub fn law(&self) -> Result<PowerLawFee> {
        self.fitted.ok_or_else(|| Error::invalid("fee schedule has no power-law parameters; fit the grid first"))
    }
}

/// Fee for one trade of `amount`.
pub fn fee(amount: f64, schedule: &FeeSchedule) -> f64 {
    if schedule.segments.is_empty() {
        return schedule.fitted.map_or(0.0, |f| f.fee(amount));
    }
    if amount <= 0.0 {
        return 0.0;
    }
    let idx = schedule.segments.partition_point(|s| s.lower <= amount);
    schedule.segments[idx.saturating_sub(1)].fee
}

fn validate_segments(segments: &[FeeSegment]) -> Result<()> {
    if segments.is_empty() {
        return Err(Error::invalid("fee grid has no segments"));
    }
    for (i, s) in segments.iter().enumerate() {
        if !(s.lower >= 0.0 && s.upper > s.lower && s.fee >= 0.0 && s.fee.is_finite()) {
            return Err(Error::invalid(format!("fee segment {} is malformed: {s:?}", i + 1)));
        }
    }
    for (i, w) in segments.windows(2).enumerate() {
        if w[1].lower < w[0].upper {
            return Err(Error::invalid(format!("fee segments {} and {} overlap or are unsorted", i + 1, i + 2)));
        }
        if w[1].fee < w[0].fee {
            return Err(Error::invalid(format!("fee decreases between segments {} and {}", i + 1, i + 2)));
        }
    }
    Ok(())
}

fn parse_err(line: u64, column: &str, reason: impl Into<String>) -> Error {
    Error::Parse { line, column: column.to_string(), reason: reason.into() }
}

/// Reads `lower_bound,upper_bound,fee` rows; `upper_bound` may be `inf`.
pub fn parse_fee_segments<R: Read>(reader: R) -> Result<Vec<FeeSegment>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| parse_err(1, "", e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != FEE_HEADER {
        return Err(parse_err(1, "", format!("header must be `{}`", FEE_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), "", e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut vals = [0.0f64; 3];
        for (k, col) in FEE_HEADER.iter().enumerate() {
            let raw = rec.get(k).unwrap_or("");
            vals[k] = raw.parse().map_err(|_| parse_err(line, col, format!("`{raw}` is not a number")))?;
            if vals[k].is_nan() || (k != 1 && vals[k].is_infinite()) {
                return Err(parse_err(line, col, format!("`{raw}` is not a finite number")));
            }
        }
        out.push(FeeSegment { lower: vals[0], upper: vals[1], fee: vals[2] });
    }
    validate_segments(&out)?;
    Ok(out)
}

pub fn read_fee_segments(path: &Path) -> Result<Vec<FeeSegment>> {
    parse_fee_segments(BufReader::new(File::open(path)?))
}

/// Power law fitted to a fee grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeeFit {
    #[serde(rename = "C")]
    pub c: f64,
    pub delta: f64,
    pub f_max: f64,
    pub c_ci: Option<BootstrapCI>,
    pub delta_ci: Option<BootstrapCI>,
    /// t-interval from the log-log regression.
    pub delta_ols_ci: Interval,
    pub r2: f64,
    pub n_segments: usize,
    /// Open-ended segments carry no midpoint and are left out of the fit.
    pub n_unbounded: usize,
}

impl FeeFit {
    pub fn law(&self) -> PowerLawFee {
        PowerLawFee { c: self.c, delta: self.delta, f_max: Some(self.f_max) }
    }

    pub fn schedule(&self, segments: Vec<FeeSegment>) -> FeeSchedule {
        FeeSchedule { segments, fitted: Some(self.law()) }
    }
}

fn loglog(points: &[(f64, f64)]) -> Result<(f64, f64, crate::regress::OlsFit)> {
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let f = ols(&x, &y, false)?;
    Ok((f.intercept.exp(), f.slope, f))
}

/// Least squares of `log fee` on `log midpoint`, with BCa intervals over
/// resampled segments when `boot` is given.
pub fn fit_fee_powerlaw(segments: &[FeeSegment], boot: Option<&BootstrapConfig>) -> Result<FeeFit> {
    validate_segments(segments)?;
    let points: Vec<(f64, f64)> =
        segments.iter().filter(|s| s.upper.is_finite()).map(|s| (s.midpoint(), s.fee)).collect();
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "fee fit needs at least 3 bounded segments, got {}",
            points.len()
        )));
    }
    if points.iter().any(|p| p.1 <= 0.0) {
        return Err(Error::invalid("fee fit needs positive fees"));
    }
    let (c, delta, f) = loglog(&points)?;
    let (c_ci, delta_ci) = match boot {
        None => (None, None),
        Some(cfg) => {
            let idx: Vec<f64> = (0..points.len()).map(|i| i as f64).collect();
            let cis = bca_bootstrap_multi(
                |sample| {
                    let pts: Vec<(f64, f64)> = sample.iter().map(|&i| points[i as usize]).collect();
                    let (c, d, _) = loglog(&pts)?;
                    Ok(vec![c, d])
                },
                &idx,
                cfg,
            )?;
            (Some(cis[0].clone()), Some(cis[1].clone()))
        }
    };
    Ok(FeeFit {
        c,
        delta,
        f_max: segments.iter().map(|s| s.fee).fold(0.0, f64::max),
        c_ci,
        delta_ci,
        delta_ols_ci: f.slope_ci,
        r2: f.r2,
        n_segments: segments.len(),
        n_unbounded: segments.len() - points.len(),
    })
}
