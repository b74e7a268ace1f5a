//! Normal-distribution helpers on top of `statrs`' error functions.

use std::f64::consts::{PI, SQRT_2};

pub fn erfc(x: f64) -> f64 {
    statrs::function::erf::erfc(x)
}

pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Upper tail `P(Z > z)` without cancellation for large `z`.
pub fn norm_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Inverse of [`norm_cdf`]. `p` must lie in (0, 1).
pub fn norm_ppf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0, "norm_ppf({p})");
    -SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p)
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub fn digamma(x: f64) -> f64 {
    statrs::function::gamma::digamma(x)
}

/// Two-sided Student-t critical value for confidence `level` and `df` degrees of freedom.
///
/// Large `df` uses the Cornish-Fisher expansion around the normal quantile,
/// which is accurate to rounding there while the incomplete-beta inversion is not.
pub fn t_critical(level: f64, df: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let p = 0.5 + level / 2.0;
    if df >= 200.0 {
        let z = norm_ppf(p);
        let z2 = z * z;
        let g1 = z * (z2 + 1.0) / 4.0;
        let g2 = z * ((5.0 * z2 + 16.0) * z2 + 3.0) / 96.0;
        let g3 = z * (((3.0 * z2 + 19.0) * z2 + 17.0) * z2 - 15.0) / 384.0;
        let g4 = z * ((((79.0 * z2 + 776.0) * z2 + 1482.0) * z2 - 1920.0) * z2 - 945.0) / 92160.0;
        return z + (g1 + (g2 + (g3 + g4 / df) / df) / df) / df;
    }
    match StudentsT::new(0.0, 1.0, df) {
        Ok(t) => t.inverse_cdf(p),
        Err(_) => norm_ppf(p),
    }
}
