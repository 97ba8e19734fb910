//! The four leading indicators of critical slowing down.
//!
//! * return rate, `1 - λ` with `λ` the dominant eigenvalue modulus of a
//!   first-order autoregressive fit on the observable matrix,
//! * lag-1 autocorrelation `ρ1`,
//! * coefficient of variation `SD / μ`,
//! * skewness `γ`.
//!
//! Undefined values are never NaN: every indicator is a [`Reading`], either a
//! number or the [`NullReason`] it could not be computed.

mod return_rate;
mod stats;
mod trajectory;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::return_rate::{return_rate, Ar1Fit, MIN_RETURN_RATE_COLUMNS};
pub use self::stats::{
    coefficient_of_variation, detrend_linear, lag1_autocorrelation, skewness, summary_stats, SkewVariant,
    SummaryStats,
};
pub use self::trajectory::{
    indicator_trajectory, trajectory_from_matrix, write_trajectory_csv, IndicatorSample, SeriesSource,
    TrajectoryConfig, TrajectoryError, TRAJECTORY_CSV_HEADER,
};

/// Why an indicator value is missing.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullReason {
    #[error("series too short")]
    TooShort,
    #[error("zero variance")]
    SigmaZero,
    #[error("zero mean")]
    ZeroMean,
    #[error("all matrix rows constant")]
    DegenerateMatrix,
    #[error("autoregressive fit is ill-conditioned")]
    IllConditioned,
    #[error("no data for the selected series")]
    NoData,
    #[error("too few valid values for a trend")]
    TooFewValid,
}

impl NullReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            NullReason::TooShort => "too_short",
            NullReason::SigmaZero => "sigma_zero",
            NullReason::ZeroMean => "zero_mean",
            NullReason::DegenerateMatrix => "degenerate_matrix",
            NullReason::IllConditioned => "ill_conditioned",
            NullReason::NoData => "no_data",
            NullReason::TooFewValid => "too_few_valid",
        }
    }
}

/// An indicator value or the reason it is undefined.
pub type Reading = Result<f64, NullReason>;

/// Identifies one of the four indicators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Indicator {
    ReturnRate,
    Ac1,
    Cv,
    Skewness,
}

impl Indicator {
    pub const ALL: [Indicator; 4] = [Indicator::ReturnRate, Indicator::Ac1, Indicator::Cv, Indicator::Skewness];

    pub fn name(&self) -> &'static str {
        match self {
            Indicator::ReturnRate => "return_rate",
            Indicator::Ac1 => "ac1",
            Indicator::Cv => "cv",
            Indicator::Skewness => "skewness",
        }
    }
}
