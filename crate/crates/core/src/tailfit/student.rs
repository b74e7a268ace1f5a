use serde::{Deserialize, Serialize};

use super::bootstrap::BootstrapCI;
use super::{check_positive, median_of};
use crate::numeric::optim::{minimize, BfgsOptions};
use crate::numeric::special::{digamma, ln_gamma};
use crate::{Error, Result};

/// Student-t folded onto the positive axis, fitted to magnitudes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudentFit {
    pub dof: f64,
    pub scale: f64,
    pub n: usize,
    pub grad_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_dof: Option<BootstrapCI>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_scale: Option<BootstrapCI>,
}

impl StudentFit {
    pub fn model(&self) -> super::Model {
        super::Model::Student { dof: self.dof, scale: self.scale }
    }
}

fn objective(x: &[f64], theta: &[f64]) -> (f64, Vec<f64>) {
    let nu = theta[0].exp();
    let s = theta[1].exp();
    let n = x.len() as f64;
    let (mut sum_log, mut sum_ratio, mut sum_w) = (0.0, 0.0, 0.0);
    for &v in x {
        let t2 = (v / s).powi(2);
        sum_log += (t2 / nu).ln_1p();
        let w = t2 / (nu + t2);
        sum_ratio += w;
        sum_w += w;
    }
    let (mean_log, mean_ratio) = (sum_log / n, sum_ratio / n);
    let constant = std::f64::consts::LN_2 + ln_gamma((nu + 1.0) / 2.0)
        - ln_gamma(nu / 2.0)
        - 0.5 * (nu * std::f64::consts::PI).ln()
        - s.ln();
    let ll = constant - (nu + 1.0) / 2.0 * mean_log;
    // d/dnu of -(nu+1)/2 ln(1 + t^2/nu) = -ln(1+t^2/nu)/2 + (nu+1)/(2 nu) * t^2/(nu+t^2)
    let dnu = 0.5 * digamma((nu + 1.0) / 2.0) - 0.5 * digamma(nu / 2.0) - 0.5 / nu - 0.5 * mean_log
        + (nu + 1.0) / (2.0 * nu) * mean_ratio;
    let dlns = -1.0 + (nu + 1.0) * (sum_w / n);
    (-ll, vec![-nu * dnu, -dlns])
}

/// Maximum-likelihood fit of the folded Student-t by BFGS in log-parameters.
pub fn fit_student(data: &[f64]) -> Result<StudentFit> {
    check_positive(data, 10)?;
    let m = median_of(data);
    let x: Vec<f64> = data.iter().map(|v| v / m).collect();
    if x.iter().all(|v| *v == x[0]) {
        return Err(Error::Degenerate("all values are equal".into()));
    }
    let mut last_err = None;
    let mut best: Option<crate::numeric::optim::BfgsResult> = None;
    // Heavy and moderate tails; the median of a folded t(nu) is ~0.67..1 scale.
    for start in [[(2.0f64).ln(), 0.0], [(8.0f64).ln(), (1.3f64).ln()]] {
        match minimize(|t| objective(&x, t), &start, BfgsOptions::default()) {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.value < b.value) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let r = best.ok_or_else(|| {
        Error::no_convergence("folded Student MLE", last_err.map(|e| e.to_string()).unwrap_or_default())
    })?;
    Ok(StudentFit {
        dof: r.x[0].exp(),
        scale: r.x[1].exp() * m,
        n: data.len(),
        grad_norm: r.grad_norm,
        ci_dof: None,
        ci_scale: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tailfit::{sample, Model};

    #[test]
    fn recovers_folded_t() {
        let m = Model::Student { dof: 2.5, scale: 40.0 };
        let data = sample(&m, 8000, 9);
        let f = fit_student(&data).unwrap();
        assert!(f.grad_norm < 1e-8);
        assert!((f.dof / 2.5 - 1.0).abs() < 0.12, "{f:?}");
        assert!((f.scale / 40.0 - 1.0).abs() < 0.06, "{f:?}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x: Vec<f64> = (1..200).map(|i| (i as f64 * 0.37).sin().abs() * 3.0 + 0.01).collect();
        let theta = [0.4, -0.2];
        let (_, g) = objective(&x, &theta);
        for j in 0..2 {
            let h = 1e-6;
            let mut tp = theta;
            tp[j] += h;
            let mut tm = theta;
            tm[j] -= h;
            let fd = (objective(&x, &tp).0 - objective(&x, &tm).0) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-7, "component {j}: {fd} vs {}", g[j]);
        }
    }
}
