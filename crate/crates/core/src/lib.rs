//! Early warning indicators for volumetric DDoS attacks in packet traces.
//!
//! The pipeline reads a capture ([`ingest`]), cuts it into one-minute windows
//! and bins each window into a destinations × time matrix ([`timeseries`]),
//! tracks four leading indicators of critical slowing down over rolling
//! sub-windows ([`indicators`]), and turns their Kendall trends into a
//! per-window precursor verdict ([`detector`]). [`synth`] generates seeded
//! traces with known dynamics for validation.
//!
//! ```
//! use ews_core::detector::{analyze_trace, AnalysisConfig};
//! use ews_core::synth::{generate_scenario, ScenarioSpec};
//!
//! let trace = generate_scenario(&ScenarioSpec::baseline(1, 180.0)).unwrap();
//! let report = analyze_trace(&trace, &AnalysisConfig::default()).unwrap();
//! assert_eq!(report.windows.len() + report.skipped.len(), report.meta.window_count);
//! ```

pub mod detector;
pub mod indicators;
pub mod ingest;
pub mod synth;
pub mod timeseries;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/indicators.md")]
    mod indicators {}
    #[doc = include_str!("../../../book/src/return-rate.md")]
    mod return_rate {}
    #[doc = include_str!("../../../book/src/windows.md")]
    mod windows {}
    #[doc = include_str!("../../../book/src/trends.md")]
    mod trends {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
}
