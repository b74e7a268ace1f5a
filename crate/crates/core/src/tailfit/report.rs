//! Uniform front end over the families: point fit, BCa intervals, KS distance
//! and survival-curve export.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::bootstrap::{bca_bootstrap_multi, BootstrapCI, BootstrapConfig};
use super::{
    fit_lognormal, fit_pareto_tail, fit_student, fit_weibull, fit_zipf_mandelbrot, ks_statistic, pareto, zipf, Family,
    Model, ParetoOptions,
};
use crate::Result;

/// Serializable summary of one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub family: String,
    pub params: BTreeMap<String, f64>,
    pub ci: BTreeMap<String, BootstrapCI>,
    pub ks: f64,
    pub n: usize,
    pub seed: u64,
    #[serde(rename = "B")]
    pub replicates: usize,
    /// Family-specific diagnostics (`x_min` tail size, optimizer gradient
    /// norm, cutoff boundary flag).
    pub details: BTreeMap<String, serde_json::Value>,
}

impl FitReport {
    pub fn model(&self) -> Result<Model> {
        let p = |k: &str| self.params.get(k).copied().unwrap_or(f64::NAN);
        let m = match self.family.as_str() {
            "pareto" => Model::Pareto { gamma: p("gamma"), x_min: p("x_min") },
            "lognormal" => Model::Lognormal { mu: p("mu"), sigma: p("sigma") },
            "weibull" => Model::Weibull { shape: p("shape"), scale: p("scale") },
            "student" => Model::Student { dof: p("dof"), scale: p("scale") },
            "zm" | "zm-cutoff" => Model::ZipfMandelbrot {
                c: p("c"),
                gamma: p("gamma"),
                beta_cut: self.params.get("beta_cut").copied().unwrap_or(0.0),
            },
            other => return Err(crate::Error::invalid(format!("unknown family `{other}`"))),
        };
        m.validate()?;
        Ok(m)
    }
}

type Details = BTreeMap<String, serde_json::Value>;

fn point_fit(family: Family, data: &[f64], pareto_opts: &ParetoOptions) -> Result<(Model, Details)> {
    let mut d = Details::new();
    let model = match family {
        Family::Pareto => {
            let f = fit_pareto_tail(data, pareto_opts)?;
            d.insert("n_tail".into(), f.n_tail.into());
            d.insert("ks_tail".into(), f.ks_distance.into());
            f.model()
        }
        Family::Lognormal => fit_lognormal(data)?.model(),
        Family::Weibull => {
            let f = fit_weibull(data)?;
            d.insert("grad_norm".into(), f.grad_norm.into());
            f.model()
        }
        Family::Student => {
            let f = fit_student(data)?;
            d.insert("grad_norm".into(), f.grad_norm.into());
            f.model()
        }
        Family::Zm | Family::ZmCutoff => {
            let f = fit_zipf_mandelbrot(data, family == Family::ZmCutoff)?;
            d.insert("grad_norm".into(), f.grad_norm.into());
            d.insert("boundary".into(), f.boundary.into());
            f.model()
        }
    };
    Ok((model, d))
}

/// Point fit of `family`, without intervals.
pub fn fit_family(family: Family, data: &[f64]) -> Result<Model> {
    Ok(point_fit(family, data, &ParetoOptions::default())?.0)
}

fn param_names(family: Family) -> &'static [&'static str] {
    match family {
        Family::Pareto => &["gamma", "x_min"],
        Family::Lognormal => &["mu", "sigma"],
        Family::Weibull => &["shape", "scale"],
        Family::Student => &["dof", "scale"],
        Family::Zm => &["c", "gamma"],
        Family::ZmCutoff => &["c", "gamma", "beta_cut"],
    }
}

fn values(family: Family, m: &Model) -> Vec<f64> {
    let all = m.params();
    param_names(family).iter().map(|name| all.iter().find(|(k, _)| k == name).map(|(_, v)| *v).unwrap_or(0.0)).collect()
}

/// Fits `family`, attaches BCa intervals for every parameter (skipped when
/// `cfg` is `None`) and the KS distance of the whole sample.
///
/// The Pareto estimator sees sorted resamples; Zipf-Mandelbrot resamples are
/// warm-started from the full-sample fit.
pub fn fit_with_ci(family: Family, data: &[f64], cfg: Option<&BootstrapConfig>) -> Result<FitReport> {
    let opts = ParetoOptions::default();
    let (model, details) = point_fit(family, data, &opts)?;
    let names = param_names(family);
    let mut ci = BTreeMap::new();
    if let Some(cfg) = cfg {
        let cis: Vec<BootstrapCI> = match family {
            Family::Pareto => {
                let mut sorted = data.to_vec();
                sorted.sort_by(f64::total_cmp);
                bca_bootstrap_multi(
                    |d| pareto::fit_sorted(d.to_vec(), &opts).map(|f| vec![f.gamma, f.x_min]),
                    &sorted,
                    cfg,
                )?
            }
            Family::Zm | Family::ZmCutoff => {
                let full = fit_zipf_mandelbrot(data, family == Family::ZmCutoff)?;
                bca_bootstrap_multi(
                    |d| zipf::fit_zipf_mandelbrot_from(d, &full).map(|f| values(family, &f.model())),
                    data,
                    cfg,
                )?
            }
            Family::Lognormal => {
                // Same resamples on the log scale; saves a logarithm per draw.
                let logs: Vec<f64> = data.iter().map(|v| v.ln()).collect();
                bca_bootstrap_multi(
                    |d| {
                        let n = d.len() as f64;
                        let mu = d.iter().sum::<f64>() / n;
                        let var = d.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
                        Ok(vec![mu, var.sqrt()])
                    },
                    &logs,
                    cfg,
                )?
            }
            _ => bca_bootstrap_multi(|d| point_fit(family, d, &opts).map(|(m, _)| values(family, &m)), data, cfg)?,
        };
        for (name, c) in names.iter().zip(cis) {
            ci.insert(name.to_string(), c);
        }
    }
    let params = names.iter().zip(values(family, &model)).map(|(k, v)| (k.to_string(), v)).collect();
    Ok(FitReport {
        family: family.as_str().to_string(),
        params,
        ci,
        ks: ks_statistic(data, &model),
        n: data.len(),
        seed: cfg.map_or(0, |c| c.seed),
        replicates: cfg.map_or(0, |c| c.replicates),
        details,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub empirical: f64,
    pub model: f64,
}

/// Empirical and model survival `P(X > x)` on `points` log-spaced abscissae
/// spanning the data range.
pub fn survival_curve(data: &[f64], model: &Model, points: usize) -> Vec<CurvePoint> {
    if data.is_empty() || points == 0 {
        return Vec::new();
    }
    let mut xs = data.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let (lo, hi) = (xs[0].ln(), xs[xs.len() - 1].ln());
    (0..points)
        .map(|i| {
            let t = if points == 1 { 0.0 } else { i as f64 / (points - 1) as f64 };
            let x = (lo + (hi - lo) * t).exp();
            let above = xs.len() - xs.partition_point(|v| *v <= x);
            CurvePoint { x, empirical: above as f64 / n, model: model.sf(x) }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tailfit::sample;

    #[test]
    fn report_round_trips_through_json() {
        let m = Model::Lognormal { mu: 2.0, sigma: 0.7 };
        let data = sample(&m, 2_000, 3);
        let cfg = BootstrapConfig { replicates: 200, seed: 4, ..Default::default() };
        let r = fit_with_ci(Family::Lognormal, &data, Some(&cfg)).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        for key in ["\"family\"", "\"params\"", "\"ci\"", "\"ks\"", "\"n\"", "\"seed\"", "\"B\""] {
            assert!(json.contains(key), "{key} missing from {json}");
        }
        let back: FitReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert!(r.ci["mu"].contains(r.params["mu"]));
        assert_eq!(back.model().unwrap(), fit_family(Family::Lognormal, &data).unwrap());
    }

    #[test]
    fn survival_curve_endpoints() {
        let data: Vec<f64> = (1..=100).map(f64::from).collect();
        let m = Model::Pareto { gamma: 2.0, x_min: 1.0 };
        let c = survival_curve(&data, &m, 11);
        assert_eq!(c.len(), 11);
        assert!((c[0].empirical - 0.99).abs() < 1e-12);
        assert_eq!(c[10].empirical, 0.0);
        assert!(c.windows(2).all(|w| w[1].x > w[0].x && w[1].empirical <= w[0].empirical));
    }
}
