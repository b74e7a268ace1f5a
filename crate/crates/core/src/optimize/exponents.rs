use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Scaling exponents implied by the fee exponent `delta`:
/// `log N = alpha log T_phi + cst` and `log T = beta log P_v + cst`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub alpha: f64,
    pub beta: f64,
}

pub fn exponents(delta: f64) -> Result<Exponents> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta must lie in [0, 1], got {delta}")));
    }
    Ok(Exponents { alpha: (1.0 - delta) / (2.0 - delta), beta: 1.0 / (2.0 - delta) })
}

/// Fee exponent that would produce the turnover-wealth slope `beta`.
///
/// `beta = 1/2` is the flat-fee point and maps to 0; anything below has no
/// non-negative fee exponent.
pub fn delta_eff(beta: f64) -> Result<f64> {
    if !(beta >= 0.5) {
        return Err(Error::invalid(format!("beta = {beta} < 1/2: sub-flat regime, no effective fee exponent")));
    }
    if beta > 1.0 {
        return Err(Error::invalid(format!("beta = {beta} > 1 is outside the model")));
    }
    Ok(2.0 - 1.0 / beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_values() {
        assert_eq!(exponents(0.0).unwrap(), Exponents { alpha: 0.5, beta: 0.5 });
        assert_eq!(exponents(1.0).unwrap(), Exponents { alpha: 0.0, beta: 1.0 });
        assert_eq!((delta_eff(0.51).unwrap() * 100.0).round() / 100.0, 0.04);
        assert_eq!((delta_eff(0.73).unwrap() * 100.0).round() / 100.0, 0.63);
        assert!((exponents(0.63).unwrap().alpha - 0.270).abs() < 5e-4);
    }

    #[test]
    fn round_trip() {
        for i in 0..100 {
            let d = i as f64 / 100.0;
            let b = exponents(d).unwrap().beta;
            assert!((exponents(delta_eff(b).unwrap()).unwrap().beta - b).abs() < 1e-14);
            assert!((delta_eff(b).unwrap() - d).abs() < 1e-14);
        }
    }

    #[test]
    fn out_of_range() {
        assert_eq!(delta_eff(0.5).unwrap(), 0.0);
        assert!(delta_eff(0.4999).is_err());
        assert!(delta_eff(0.3).is_err());
        assert!(delta_eff(1.2).is_err());
        assert!(exponents(-0.1).is_err());
    }
}
