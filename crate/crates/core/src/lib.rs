//! Statistical pipeline for retail trading populations.
//!
//! The crate covers five areas that feed one another:
//!
//! * [`trader_data`]: transaction and account-value ingestion, portfolio-building
//!   extraction and per-trader aggregates.
//! * [`tailfit`]: maximum-likelihood fits of heavy-tailed families, KS distances,
//!   inverse-CDF sampling and BCa bootstrap intervals.
//! * [`regress`]: robust loess, regime-threshold detection, double-linear and
//!   ordinary least-squares fits.
//! * [`qtheory`]: distribution of the turnover-to-wealth ratio `Q = T / P_v`.
//! * [`optimize`]: equally-weighted mean-variance portfolios under power-law
//!   broker fees, and the exponent relations between fees, turnover and
//!   diversification.
//! * [`popsim`]: synthetic populations of cost-aware optimizers and the
//!   closed-loop check that re-derives the exponents from emitted logs.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and plain iterators otherwise. Every
//! randomized routine derives its streams from an explicit seed, so results do
//! not depend on the execution mode or the thread count.

// `!(x < y)` is used on purpose so that NaN fails range checks; quadrature
// and series constants keep their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod numeric;
pub mod optimize;
pub mod par;
pub mod popsim;
pub mod qtheory;
pub mod regress;
pub mod rng;
pub mod tailfit;
pub mod trader_data;

pub use error::{Error, Result};
pub use par::Exec;
