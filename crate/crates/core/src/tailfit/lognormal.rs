use serde::{Deserialize, Serialize};

use super::bootstrap::BootstrapCI;
use super::check_positive;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogNormalFit {
    pub mu: f64,
    pub sigma: f64,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_mu: Option<BootstrapCI>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_sigma: Option<BootstrapCI>,
}

impl LogNormalFit {
    pub fn model(&self) -> super::Model {
        super::Model::Lognormal { mu: self.mu, sigma: self.sigma }
    }
}

/// Closed-form maximum likelihood: mean and (biased) standard deviation of `ln x`.
pub fn fit_lognormal(data: &[f64]) -> Result<LogNormalFit> {
    check_positive(data, 10)?;
    let n = data.len() as f64;
    let mu = data.iter().map(|v| v.ln()).sum::<f64>() / n;
    let var = data.iter().map(|v| (v.ln() - mu).powi(2)).sum::<f64>() / n;
    let sigma = var.sqrt();
    if !(sigma > 1e-12 * (1.0 + mu.abs())) {
        return Err(Error::Degenerate("log-values have zero variance".into()));
    }
    Ok(LogNormalFit { mu, sigma, n: data.len(), ci_mu: None, ci_sigma: None })
}
