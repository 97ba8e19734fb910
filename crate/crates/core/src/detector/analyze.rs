use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::classify::{classify_precursor, DetectorConfig, Label, PerIndicator, PrecursorVerdict};
use crate::indicators::{trajectory_from_matrix, IndicatorSample, TrajectoryConfig, TrajectoryError};
use crate::ingest::{IngestError, IngestSummary, PacketRecord, SourceConfig, MICROS_PER_SEC};
use crate::timeseries::{build_observable_matrix, MatrixConfig, ObservableMatrix, TimeseriesError, Window, WindowConfig, Windows};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Timeseries(#[from] TimeseriesError),
}

/// Every parameter of an analysis run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub window: WindowConfig,
    pub matrix: MatrixConfig,
    pub trajectory: TrajectoryConfig,
    pub detector: DetectorConfig,
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let config = |e: String| AnalysisError::Config(e);
        self.window.validate().map_err(|e| config(e.to_string()))?;
        self.detector.validate().map_err(config)?;
        let t = &self.trajectory;
        if !(t.sub_len_s > 0.0 && t.sub_len_s < self.window.window_len_s) {
            return Err(config(format!("sub-window length {} s must lie in (0, window length)", t.sub_len_s)));
        }
        if !(t.sub_stride_s > 0.0) {
            return Err(config(format!("sub-window stride must be positive, got {}", t.sub_stride_s)));
        }
        let b = self.matrix.bin_width_s;
        if !(b > 0.0 && b <= t.sub_len_s) {
            return Err(config(format!("bin width {b} s must lie in (0, sub-window length]")));
        }
        Ok(())
    }
}

/// Everything computed for one analyzed window.
#[derive(Debug, Clone)]
pub struct WindowAnalysis {
    pub window: WindowInfo,
    pub matrix: ObservableMatrix,
    pub trajectory: Vec<IndicatorSample>,
    pub verdict: PrecursorVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowInfo {
    pub index: usize,
    pub start_t: f64,
    pub end_t: f64,
    pub partial: bool,
    pub records: usize,
}

impl From<&Window> for WindowInfo {
    fn from(w: &Window) -> Self {
        Self { index: w.index, start_t: w.start_t(), end_t: w.end_t(), partial: w.partial, records: w.records.len() }
    }
}

/// Report entry of a classified window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowVerdict {
    pub index: usize,
    pub start_t: f64,
    pub end_t: f64,
    pub partial: bool,
    pub records: usize,
    pub samples: usize,
    pub label: Label,
    pub tau: PerIndicator<Option<f64>>,
    pub valid_fraction: PerIndicator<f64>,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedWindow {
    pub index: usize,
    pub start_t: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportMeta {
    pub tool: String,
    pub version: String,
    /// Wall-clock time of the run; the only field that differs between reruns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingest: Option<IngestSummary>,
    pub records: u64,
    pub trace_end_s: f64,
    pub window_count: usize,
    pub precursor_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub meta: ReportMeta,
    pub config: AnalysisConfig,
    pub windows: Vec<WindowVerdict>,
    pub skipped: Vec<SkippedWindow>,
}

impl AnalysisReport {
    pub fn precursor_windows(&self) -> impl Iterator<Item = &WindowVerdict> + '_ {
        self.windows.iter().filter(|w| w.label == Label::Precursor)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn to_entry(info: &WindowInfo, v: &PrecursorVerdict) -> WindowVerdict {
    WindowVerdict {
        index: info.index,
        start_t: info.start_t,
        end_t: info.end_t,
        partial: info.partial,
        records: info.records,
        samples: v.trend.samples,
        label: v.label,
        tau: PerIndicator::from_fn(|i| v.trend.tau.get(i).ok()),
        valid_fraction: v.trend.valid_fraction,
        explanation: v.explanation.clone(),
    }
}

/// Matrix, trajectory and verdict for one window, or the reason it is skipped.
pub fn analyze_window(w: &Window, cfg: &AnalysisConfig) -> Result<WindowAnalysis, String> {
    let matrix = match build_observable_matrix(w, &cfg.matrix) {
        Ok(m) => m,
        Err(TimeseriesError::EmptyWindow) if w.records.is_empty() => return Err("no records".into()),
        Err(TimeseriesError::EmptyWindow) => {
            return Err(format!("no destination with at least {} records", cfg.matrix.min_samples))
        }
        Err(e) => return Err(e.to_string()),
    };
    let trajectory = trajectory_from_matrix(w, &matrix, &cfg.trajectory).map_err(|e: TrajectoryError| e.to_string())?;
    if trajectory.is_empty() {
        return Err(format!(
            "window covers {:.3} s, shorter than one sub-window",
            w.covered_len_us() as f64 / MICROS_PER_SEC as f64
        ));
    }
    let verdict = classify_precursor(&trajectory, &cfg.detector, w.index);
    Ok(WindowAnalysis { window: w.into(), matrix, trajectory, verdict })
}

/// Windows analyzed per parallel batch.
const BATCH: usize = 64;

/// Segments the stream, analyzes every window and assembles the report.
///
/// Windows are processed in parallel batches; `on_window` sees them in index
/// order. Per-window failures become skip entries.
pub fn analyze_stream<I>(
    records: I,
    cfg: &AnalysisConfig,
    mut on_window: impl FnMut(&WindowAnalysis),
) -> Result<AnalysisReport, AnalysisError>
where
    I: Iterator<Item = Result<PacketRecord, AnalysisError>>,
{
    cfg.validate()?;
    let mut count = 0u64;
    let mut last_t = 0u64;
    let counted = records.inspect(|r| {
        if let Ok(r) = r {
            count += 1;
            last_t = r.t_us;
        }
    });
    let mut windows_iter = Windows::new(counted, cfg.window, None)?;

    let mut report = AnalysisReport {
        meta: ReportMeta {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            ..Default::default()
        },
        config: *cfg,
        windows: Vec::new(),
        skipped: Vec::new(),
    };
    let mut window_count = 0;
    loop {
        let batch: Vec<Window> = windows_iter.by_ref().take(BATCH).collect::<Result<_, _>>()?;
        if batch.is_empty() {
            break;
        }
        window_count += batch.len();
        let results: Vec<_> = batch.par_iter().map(|w| (WindowInfo::from(w), analyze_window(w, cfg))).collect();
        for (info, res) in results {
            match res {
                Ok(a) => {
                    on_window(&a);
                    report.windows.push(to_entry(&info, &a.verdict));
                }
                Err(reason) => report.skipped.push(SkippedWindow { index: info.index, start_t: info.start_t, reason }),
            }
        }
    }
    drop(windows_iter);
    report.meta.records = count;
    report.meta.trace_end_s = last_t as f64 / MICROS_PER_SEC as f64;
    report.meta.window_count = window_count;
    report.meta.precursor_count = report.precursor_windows().count();
    Ok(report)
}

/// In-memory convenience over [`analyze_stream`].
pub fn analyze_trace(records: &[PacketRecord], cfg: &AnalysisConfig) -> Result<AnalysisReport, AnalysisError> {
    analyze_stream(records.iter().copied().map(Ok), cfg, |_| {})
}
