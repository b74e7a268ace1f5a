//! Distribution of the wealth fraction moved per transaction, `Q = T / P_v`,
//! implied by a turnover-wealth relation and an account-value law.

mod integrals;
mod model;

pub use integrals::{
    bilinear_q_cdf, log_grid, q_cdf, q_curve, q_moment, q_pdf, q_sf, write_curve_csv, CurveKind, QPoint,
};
pub use model::{closed_form_q, sample_q, QModel, QSample, TurnoverWealthModel, TwRegime};
