use serde::{Deserialize, Serialize};

use super::bootstrap::BootstrapCI;
use super::{check_positive, median_of};
use crate::numeric::optim::{minimize, BfgsOptions};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeibullFit {
    pub shape: f64,
    pub scale: f64,
    pub n: usize,
    pub grad_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_shape: Option<BootstrapCI>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_scale: Option<BootstrapCI>,
}

impl WeibullFit {
    pub fn model(&self) -> super::Model {
        super::Model::Weibull { shape: self.shape, scale: self.scale }
    }
}

/// Negative mean log-likelihood over `(ln shape, ln scale)` on median-scaled logs.
fn objective(lnx: &[f64], theta: &[f64]) -> (f64, Vec<f64>) {
    let (k, lam_ln) = (theta[0].exp(), theta[1]);
    let n = lnx.len() as f64;
    let (mut ll, mut gk, mut gl) = (0.0, 0.0, 0.0);
    for &lx in lnx {
        let z = lx - lam_ln;
        let t = (k * z).exp();
        ll += (k - 1.0) * z - t;
        gk += k * z - k * t * z;
        gl += k * t;
    }
    let ll = ll / n + k.ln() - lam_ln;
    let gk = 1.0 + gk / n;
    let gl = -k + gl / n;
    (-ll, vec![-gk, -gl])
}

/// Maximum-likelihood Weibull fit by BFGS in log-parameters, started from the
/// log-moment estimates.
pub fn fit_weibull(data: &[f64]) -> Result<WeibullFit> {
    check_positive(data, 10)?;
    let m = median_of(data);
    let lnx: Vec<f64> = data.iter().map(|v| (v / m).ln()).collect();
    let n = lnx.len() as f64;
    let mean = lnx.iter().sum::<f64>() / n;
    let sd = (lnx.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if !(sd > 1e-12) {
        return Err(Error::Degenerate("all values are equal".into()));
    }
    let k0 = std::f64::consts::PI / (sd * 6f64.sqrt());
    let lam0 = mean + 0.577_215_664_901_532_9 / k0;
    let r = minimize(|t| objective(&lnx, t), &[k0.ln(), lam0], BfgsOptions::default())
        .map_err(|e| Error::no_convergence("Weibull MLE", e.to_string()))?;
    Ok(WeibullFit {
        shape: r.x[0].exp(),
        scale: r.x[1].exp() * m,
        n: data.len(),
        grad_norm: r.grad_norm,
        ci_shape: None,
        ci_scale: None,
    })
}
