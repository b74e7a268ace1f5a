//! Closed-form and numerically inverted distribution functions for every
//! fitted family.

use serde::{Deserialize, Serialize};

use crate::numeric::special::{ln_gamma, norm_cdf, norm_ppf, norm_sf};
use crate::{Error, Result};

/// Family selector used by the fitting front ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Pareto,
    Lognormal,
    Weibull,
    Student,
    Zm,
    ZmCutoff,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Pareto => "pareto",
            Family::Lognormal => "lognormal",
            Family::Weibull => "weibull",
            Family::Student => "student",
            Family::Zm => "zm",
            Family::ZmCutoff => "zm-cutoff",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "pareto" => Family::Pareto,
            "lognormal" => Family::Lognormal,
            "weibull" => Family::Weibull,
            "student" => Family::Student,
            "zm" => Family::Zm,
            "zm-cutoff" => Family::ZmCutoff,
            other => return Err(Error::invalid(format!("unknown family `{other}`"))),
        })
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fully parameterized distribution on the positive half-line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Model {
    /// Density proportional to `(x / x_min)^-gamma` above `x_min`.
    Pareto {
        gamma: f64,
        x_min: f64,
    },
    /// `ln x ~ N(mu, sigma^2)`.
    Lognormal {
        mu: f64,
        sigma: f64,
    },
    Weibull {
        shape: f64,
        scale: f64,
    },
    /// Student-t folded onto the positive axis (location zero).
    Student {
        dof: f64,
        scale: f64,
    },
    /// Survival `c^gamma e^{-beta_cut x} / (c + x)^gamma`; `beta_cut = 0` is the
    /// plain Zipf-Mandelbrot law.
    ZipfMandelbrot {
        c: f64,
        gamma: f64,
        beta_cut: f64,
    },
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Model::Pareto { gamma, x_min } => gamma > 1.0 && x_min > 0.0,
            Model::Lognormal { mu, sigma } => mu.is_finite() && sigma > 0.0,
            Model::Weibull { shape, scale } => shape > 0.0 && scale > 0.0,
            Model::Student { dof, scale } => dof > 0.0 && scale > 0.0,
            Model::ZipfMandelbrot { c, gamma, beta_cut } => c > 0.0 && gamma > 0.0 && beta_cut >= 0.0,
        };
        let finite = self.params().iter().all(|(_, v)| v.is_finite());
        if ok && finite {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid model parameters: {self:?}")))
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Model::Pareto { .. } => "pareto",
            Model::Lognormal { .. } => "lognormal",
            Model::Weibull { .. } => "weibull",
            Model::Student { .. } => "student",
            Model::ZipfMandelbrot { beta_cut, .. } if *beta_cut > 0.0 => "zm-cutoff",
            Model::ZipfMandelbrot { .. } => "zm",
        }
    }

    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Model::Pareto { gamma, x_min } => vec![("gamma", gamma), ("x_min", x_min)],
            Model::Lognormal { mu, sigma } => vec![("mu", mu), ("sigma", sigma)],
            Model::Weibull { shape, scale } => vec![("shape", shape), ("scale", scale)],
            Model::Student { dof, scale } => vec![("dof", dof), ("scale", scale)],
            Model::ZipfMandelbrot { c, gamma, beta_cut } => {
                vec![("c", c), ("gamma", gamma), ("beta_cut", beta_cut)]
            }
        }
    }

    /// Survival function `P(X > x)`.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match *self {
            Model::Pareto { gamma, x_min } => {
                if x <= x_min {
                    1.0
                } else {
                    ((1.0 - gamma) * (x / x_min).ln()).exp()
                }
            }
            Model::Lognormal { mu, sigma } => norm_sf((x.ln() - mu) / sigma),
            Model::Weibull { shape, scale } => (-(x / scale).powf(shape)).exp(),
            Model::Student { dof, scale } => student_split(dof, x / scale).1,
            Model::ZipfMandelbrot { c, gamma, beta_cut } => zm_ln_sf(c, gamma, beta_cut, x).exp(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            Model::Pareto { gamma, x_min } => {
                if x <= x_min {
                    0.0
                } else {
                    -((1.0 - gamma) * (x / x_min).ln()).exp_m1()
                }
            }
            Model::Lognormal { mu, sigma } => norm_cdf((x.ln() - mu) / sigma),
            Model::Weibull { shape, scale } => -(-(x / scale).powf(shape)).exp_m1(),
            Model::Student { dof, scale } => student_split(dof, x / scale).0,
            Model::ZipfMandelbrot { c, gamma, beta_cut } => -zm_ln_sf(c, gamma, beta_cut, x).exp_m1(),
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return f64::NEG_INFINITY;
        }
        match *self {
            Model::Pareto { gamma, x_min } => {
                if x < x_min {
                    f64::NEG_INFINITY
                } else {
                    (gamma - 1.0).ln() - x_min.ln() - gamma * (x / x_min).ln()
                }
            }
            Model::Lognormal { mu, sigma } => {
                if x == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let z = (x.ln() - mu) / sigma;
                -0.5 * z * z - x.ln() - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            Model::Weibull { shape, scale } => {
                let z = x / scale;
                shape.ln() - scale.ln() + (shape - 1.0) * z.ln() - z.powf(shape)
            }
            Model::Student { dof, scale } => {
                let t = x / scale;
                std::f64::consts::LN_2 + ln_gamma((dof + 1.0) / 2.0)
                    - ln_gamma(dof / 2.0)
                    - 0.5 * (dof * std::f64::consts::PI).ln()
                    - scale.ln()
                    - (dof + 1.0) / 2.0 * (t * t / dof).ln_1p()
            }
            Model::ZipfMandelbrot { c, gamma, beta_cut } => {
                zm_ln_sf(c, gamma, beta_cut, x) + (beta_cut + gamma / (c + x)).ln()
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// Inverse survival function: the `x` with `sf(x) = v`, for `v` in (0, 1).
    pub fn isf(&self, v: f64) -> f64 {
        debug_assert!(v > 0.0 && v < 1.0);
        match *self {
            Model::Pareto { gamma, x_min } => x_min * (-v.ln() / (gamma - 1.0)).exp(),
            Model::Lognormal { mu, sigma } => (mu - sigma * norm_ppf(v)).exp(),
            Model::Weibull { shape, scale } => scale * (-v.ln()).powf(1.0 / shape),
            Model::ZipfMandelbrot { c, gamma, beta_cut: 0.0 } => c * (-v.ln() / gamma).exp_m1(),
            Model::ZipfMandelbrot { c, gamma, beta_cut } => {
                // The cutoff only lowers the survival, so the plain-law root bounds it.
                let target = v.ln();
                let hi = c * (-target / gamma).exp_m1();
                let hi = hi.min(-target / beta_cut);
                invert_decreasing(|x| zm_ln_sf(c, gamma, beta_cut, x) - target, hi)
            }
            Model::Student { .. } => {
                let mut hi = match *self {
                    Model::Student { scale, .. } => scale,
                    _ => unreachable!(),
                };
                while self.sf(hi) > v {
                    hi *= 2.0;
                    if !hi.is_finite() {
                        return f64::INFINITY;
                    }
                }
                // Work in whichever tail keeps the target away from 1.
                if v < 0.5 {
                    invert_decreasing(|x| self.sf(x).ln() - v.ln(), hi)
                } else {
                    let u = 1.0 - v;
                    invert_decreasing(|x| u - self.cdf(x), hi)
                }
            }
        }
    }

    /// Quantile function `F^{-1}(u)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Model::Lognormal { mu, sigma } => (mu + sigma * norm_ppf(u)).exp(),
            _ => self.isf(1.0 - u),
        }
    }

    /// Range of `ln x` that carries all but a negligible (~1e-18) part of the mass.
    pub fn log_support(&self) -> (f64, f64) {
        const TAIL: f64 = 40.0; // e^-40 ~ 4e-18
        match *self {
            Model::Pareto { gamma, x_min } => (x_min.ln(), x_min.ln() + TAIL / (gamma - 1.0)),
            Model::Lognormal { mu, sigma } => (mu - 10.0 * sigma, mu + 10.0 * sigma),
            Model::Weibull { shape, scale } => (scale.ln() - TAIL / shape, scale.ln() + TAIL.ln() / shape),
            Model::Student { dof, scale } => (scale.ln() - TAIL, scale.ln() + TAIL / dof + 2.0),
            Model::ZipfMandelbrot { c, gamma, beta_cut } => {
                let density0 = beta_cut + gamma / c;
                let lo = -TAIL - density0.ln();
                let mut hi = (c * (TAIL / gamma).exp_m1()).ln();
                if beta_cut > 0.0 {
                    hi = hi.min((TAIL / beta_cut).ln());
                }
                (lo, hi)
            }
        }
    }
}

/// `(cdf, sf)` of the folded Student-t at `t > 0`; the smaller of the two is
/// computed directly and the other as its complement.
fn student_split(dof: f64, t: f64) -> (f64, f64) {
    use statrs::function::beta::beta_reg;
    let t2 = t * t;
    if t2 < dof {
        let cdf = beta_reg(0.5, dof / 2.0, t2 / (dof + t2));
        (cdf, 1.0 - cdf)
    } else {
        let sf = beta_reg(dof / 2.0, 0.5, dof / (dof + t2));
        (1.0 - sf, sf)
    }
}

pub(crate) fn zm_ln_sf(c: f64, gamma: f64, beta_cut: f64, x: f64) -> f64 {
    -gamma * (x / c).ln_1p() - beta_cut * x
}

/// Root of a decreasing function on `[0, hi]` by bisection to a relative
/// bracket width of 1e-12.
fn invert_decreasing<F: Fn(f64) -> f64>(g: F, hi: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * mid || mid <= lo || mid >= hi {
            return mid;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::quad::{integrate_with_breaks, QuadOptions};

    fn models() -> Vec<Model> {
        vec![
            Model::Pareto { gamma: 2.33, x_min: 2.3e6 },
            Model::Lognormal { mu: 13.94, sigma: 2.87 },
            Model::Weibull { shape: 0.7, scale: 3.0 },
            Model::Weibull { shape: 2.5, scale: 1e4 },
            Model::Student { dof: 1.7, scale: 5.0 },
            Model::ZipfMandelbrot { c: 2e4, gamma: 1.97, beta_cut: 0.98e-6 },
            Model::ZipfMandelbrot { c: 2e4, gamma: 1.98, beta_cut: 0.0 },
        ]
    }

    #[test]
    fn cdf_and_sf_are_complementary() {
        for m in models() {
            for &u in &[1e-6, 0.01, 0.3, 0.5, 0.9, 0.999] {
                let x = m.quantile(u);
                let tot = m.cdf(x) + m.sf(x);
                assert!((tot - 1.0).abs() < 1e-12, "{m:?} at {x}: {tot}");
                assert!((m.cdf(x) - u).abs() < 1e-9 * (1.0 + 1.0 / (1.0 - u)), "{m:?} u={u} cdf={}", m.cdf(x));
            }
        }
    }

    #[test]
    fn density_integrates_to_distribution() {
        // Integrate in log space: F(X) = \int_{-inf}^{ln X} e^u f(e^u) du.
        for m in models() {
            let (lo, _) = m.log_support();
            let lo = match m {
                Model::Pareto { x_min, .. } => x_min.ln(),
                _ => lo,
            };
            for &p in &[0.2, 0.5, 0.9, 0.9999] {
                let x = m.quantile(p);
                let r = integrate_with_breaks(
                    |u| {
                        let x = u.exp();
                        x * m.pdf(x)
                    },
                    lo,
                    x.ln(),
                    &[m.quantile(0.5).ln()],
                    QuadOptions { abs_tol: 1e-11, rel_tol: 1e-13, max_intervals: 4000 },
                )
                .unwrap();
                let want = 1.0 - m.sf(x);
                assert!((r.value - want).abs() < 1e-8, "{m:?} X={x}: {} vs {want}", r.value);
            }
        }
    }

    #[test]
    fn zm_without_cutoff_matches_pure_form() {
        let (c, g) = (3.0, 1.5);
        let with = Model::ZipfMandelbrot { c, gamma: g, beta_cut: 0.0 };
        for &x in &[0.0, 0.1, 1.0, 10.0, 1e4] {
            let pure = c.powf(g) / (c + x).powf(g);
            assert!((with.sf(x) - pure).abs() < 1e-14 * pure.max(1e-300) + 1e-300);
        }
        assert_eq!(with.sf(0.0), 1.0);
    }

    #[test]
    fn zm_large_offset_tends_to_exponential() {
        let rate = 0.5;
        let c = 1e6;
        let m = Model::ZipfMandelbrot { c, gamma: rate * c, beta_cut: 0.0 };
        let sup = (0..2000).map(|i| i as f64 * 0.01).map(|x| (m.sf(x) - (-rate * x).exp()).abs()).fold(0.0, f64::max);
        assert!(sup < 1e-3, "sup-norm {sup}");
    }

    #[test]
    fn validate_rejects_bad_parameters() {
        assert!(Model::Pareto { gamma: 1.0, x_min: 1.0 }.validate().is_err());
        assert!(Model::Lognormal { mu: 0.0, sigma: 0.0 }.validate().is_err());
        assert!(Model::ZipfMandelbrot { c: 1.0, gamma: 1.0, beta_cut: -1e-9 }.validate().is_err());
        assert!(Model::Student { dof: 3.0, scale: 1.0 }.validate().is_ok());
    }
}
