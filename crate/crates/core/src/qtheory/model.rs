use serde::{Deserialize, Serialize};

use crate::numeric::special::{norm_cdf, norm_pdf, norm_sf};
use crate::regress::SegmentedFit;
use crate::rng::{std_normal, stream};
use crate::{Error, Result};

/// One log-linear branch `log T = a + beta·log P_v + xi·Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwRegime {
    pub a: f64,
    pub beta: f64,
    pub xi: f64,
}

impl TwRegime {
    pub fn new(a: f64, beta: f64, xi: f64) -> Result<Self> {
        let r = Self { a, beta, xi };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.a.is_finite() {
            return Err(Error::invalid(format!("intercept a must be finite, got {}", self.a)));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::invalid(format!("beta must lie in (0, 1], got {}", self.beta)));
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return Err(Error::invalid(format!("xi must be positive, got {}", self.xi)));
        }
        Ok(())
    }

    /// Log-normal law of `Q` when `log P_v ~ N(mu, sigma^2)`.
    pub fn closed_form(&self, mu: f64, sigma: f64) -> QModel {
        let k = 1.0 - self.beta;
        QModel { m: self.a - k * mu, s: self.xi.hypot(k * sigma) }
    }

    /// Standardized log-residual of `q` given `u = log p_v`.
    #[inline]
    pub(crate) fn z(&self, ln_q: f64, u: f64) -> f64 {
        (ln_q + (1.0 - self.beta) * u - self.a) / self.xi
    }
}

/// Turnover-wealth relation with one regime, or two split at `log P_v = theta`
/// (the first regime applies strictly below `theta`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnoverWealthModel {
    pub regimes: Vec<TwRegime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl TurnoverWealthModel {
    pub fn single(a: f64, beta: f64, xi: f64) -> Result<Self> {
        let m = Self { regimes: vec![TwRegime { a, beta, xi }], theta: None };
        m.validate()?;
        Ok(m)
    }

    pub fn bilinear(lower: TwRegime, upper: TwRegime, theta: f64) -> Result<Self> {
        let m = Self { regimes: vec![lower, upper], theta: Some(theta) };
        m.validate()?;
        Ok(m)
    }

    /// Model implied by a double-linear fit, switching at its lower threshold.
    pub fn from_segmented(fit: &SegmentedFit) -> Result<Self> {
        Self::bilinear(
            TwRegime { a: fit.lower.intercept, beta: fit.lower.slope, xi: fit.lower.xi },
            TwRegime { a: fit.upper.intercept, beta: fit.upper.slope, xi: fit.upper.xi },
            fit.theta1,
        )
    }

    pub fn validate(&self) -> Result<()> {
        match (self.regimes.len(), self.theta) {
            (1, None) => {}
            (2, Some(t)) if !t.is_nan() => {}
            (2, _) => return Err(Error::invalid("a two-regime model needs a boundary theta")),
            (1, Some(_)) => return Err(Error::invalid("theta given for a single-regime model")),
            (n, _) => return Err(Error::invalid(format!("expected 1 or 2 regimes, got {n}"))),
        }
        self.regimes.iter().try_for_each(TwRegime::validate)
    }

    pub fn is_single(&self) -> bool {
        self.regimes.len() == 1
    }

    pub fn regime_at(&self, u: f64) -> &TwRegime {
        match self.theta {
            Some(t) if u >= t => &self.regimes[1],
            _ => &self.regimes[0],
        }
    }

    /// `[lo, hi]` cut at theta into pieces that each use a single regime.
    pub(crate) fn pieces(&self, lo: f64, hi: f64) -> Vec<(f64, f64, TwRegime)> {
        match self.theta {
            None => vec![(lo, hi, self.regimes[0])],
            Some(t) if t <= lo => vec![(lo, hi, self.regimes[1])],
            Some(t) if t >= hi => vec![(lo, hi, self.regimes[0])],
            Some(t) => vec![(lo, t, self.regimes[0]), (t, hi, self.regimes[1])],
        }
    }
}

/// `Q ~ ln N(M, S^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QModel {
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "S")]
    pub s: f64,
}

impl QModel {
    pub fn validate(&self) -> Result<()> {
        if !self.m.is_finite() || !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(Error::invalid(format!("invalid Q model M={}, S={}", self.m, self.s)));
        }
        Ok(())
    }

    pub fn median(&self) -> f64 {
        self.m.exp()
    }

    pub fn pdf(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        norm_pdf((q.ln() - self.m) / self.s) / (self.s * q)
    }

    pub fn cdf(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        norm_cdf((q.ln() - self.m) / self.s)
    }

    pub fn sf(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 1.0;
        }
        norm_sf((q.ln() - self.m) / self.s)
    }

    /// `E(Q^n) = exp(n M + n^2 S^2 / 2)`.
    pub fn moment(&self, n: u32) -> f64 {
        let n = f64::from(n);
        (n * self.m + 0.5 * n * n * self.s * self.s).exp()
    }
}

/// Closed form for a single-regime model and log-normal account values.
pub fn closed_form_q(model: &TurnoverWealthModel, mu: f64, sigma: f64) -> Result<QModel> {
    model.validate()?;
    if !model.is_single() {
        return Err(Error::invalid("the closed form needs a single-regime model"));
    }
    if !(mu.is_finite() && sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("invalid log-normal mu={mu}, sigma={sigma}")));
    }
    Ok(model.regimes[0].closed_form(mu, sigma))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSample {
    pub values: Vec<f64>,
    /// Share of draws above 1, i.e. trading more than the whole account.
    pub fraction_above_one: f64,
}

/// `n` draws `Q = exp(M + S X)`, deterministic in `seed`.
pub fn sample_q(qmodel: &QModel, n: usize, seed: u64) -> Result<QSample> {
    qmodel.validate()?;
    let mut rng = stream(seed, 0);
    let values: Vec<f64> = (0..n).map(|_| (qmodel.m + qmodel.s * std_normal(&mut rng)).exp()).collect();
    let above = values.iter().filter(|&&q| q > 1.0).count();
    let fraction_above_one = if n == 0 { 0.0 } else { above as f64 / n as f64 };
    Ok(QSample { values, fraction_above_one })
}
