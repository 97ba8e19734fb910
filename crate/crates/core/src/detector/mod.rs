//! Trend statistics, precursor verdicts and whole-trace reports.

mod analyze;
mod classify;
mod kendall;

pub use self::analyze::{
    analyze_stream, analyze_trace, analyze_window, AnalysisConfig, AnalysisError, AnalysisReport, ReportMeta,
    SkippedWindow, WindowAnalysis, WindowInfo, WindowVerdict,
};
pub use self::classify::{
    classify_precursor, verdict_from_trend, DetectorConfig, Label, PerIndicator, PrecursorVerdict, TrendStats,
};
pub use self::kendall::{kendall_tau, kendall_tau_readings};
