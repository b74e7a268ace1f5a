//! Synthetic populations of cost-aware one-shot portfolio builders, and the
//! closed loop that pushes their logs through ingestion and regression to
//! re-derive the fee, diversification and turnover exponents.

mod config;
mod generate;
mod validate;

pub use config::{PopulationConfig, PvLaw};
pub use generate::{generate_population, Population, SyntheticTrader, MAX_ASSETS_PER_TRADER, UNIT_PRICE};
pub use validate::{
    run_validation, validate_population, validate_q, Estimate, QValidation, RegimeReport, ValidationReport, Verdict,
    CHI_TOLERANCE, EXPONENT_TOLERANCE, MIN_VALIDATION_TRADERS,
};

#[cfg(test)]
mod tests;
