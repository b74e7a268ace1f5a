//! Equally-weighted mean-variance portfolios under power-law broker fees.

mod exponents;
mod fees;
mod market;
mod sharpe;
mod solve;

pub use exponents::{delta_eff, exponents, Exponents};
pub use fees::{
    fee, fit_fee_powerlaw, parse_fee_segments, read_fee_segments, FeeFit, FeeSchedule, FeeSegment, PowerLawFee,
    FEE_HEADER,
};
pub use market::{expected_return, fee_drag, objective, variance, MarketParams};
pub use sharpe::{estimate_sharpe, AssetSharpe, SharpeEstimate, SkippedAsset, MIN_OBSERVATIONS};
pub use solve::{
    lambda_from_n, lambda_from_x, n_condition, n_star_asymptotic, optimize, solve_n_star, solve_x_star,
    x_fixed_point_rhs, AllocationFlags, NStar, NeighborValue, OptimalAllocation, PortfolioProblem, XStar, N_MAX,
};
