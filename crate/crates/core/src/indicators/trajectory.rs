use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    coefficient_of_variation, detrend_linear, lag1_autocorrelation, return_rate, skewness, NullReason, Reading,
    SkewVariant,
};
use crate::ingest::{DestId, MICROS_PER_SEC};
use crate::timeseries::{build_observable_matrix, positive_micros, MatrixConfig, ObservableMatrix, TimeseriesError, Window};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Timeseries(#[from] TimeseriesError),
}

/// Which scalar series feeds ρ1, CV and skewness. The return rate always
/// uses the full sub-matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesSource {
    /// Column-wise mean over destinations.
    #[default]
    Aggregate,
    Destination(DestId),
    /// Packet sizes in arrival order, no binning.
    RawPerPacket,
}

/// Rolling sub-window settings used inside each window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub sub_len_s: f64,
    pub sub_stride_s: f64,
    pub series: SeriesSource,
    pub skew: SkewVariant,
    /// Remove a linear trend from each sub-window before computing.
    pub detrend: bool,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self { sub_len_s: 10.0, sub_stride_s: 1.0, series: SeriesSource::Aggregate, skew: SkewVariant::Standard, detrend: false }
    }
}

/// The four indicators at one sub-window position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorSample {
    /// Centre of the sub-window, seconds on the trace axis.
    pub t_mid: f64,
    pub return_rate: Reading,
    pub ac1: Reading,
    pub cv: Reading,
    pub skewness: Reading,
}

impl IndicatorSample {
    pub fn readings(&self) -> [Reading; 4] {
        [self.return_rate, self.ac1, self.cv, self.skewness]
    }
}

/// Bins the window and computes the rolling indicator trajectory.
pub fn indicator_trajectory(
    w: &Window,
    matrix_cfg: &MatrixConfig,
    cfg: &TrajectoryConfig,
) -> Result<Vec<IndicatorSample>, TrajectoryError> {
    check_config(w.end_us - w.start_us, cfg)?;
    let m = build_observable_matrix(w, matrix_cfg)?;
    trajectory_from_matrix(w, &m, cfg)
}

fn check_config(window_len_us: u64, cfg: &TrajectoryConfig) -> Result<(u64, u64), TrajectoryError> {
    let bad = |e: TimeseriesError| match e {
        TimeseriesError::BadConfig(m) => TrajectoryError::BadConfig(m),
        other => other.into(),
    };
    let len = positive_micros("sub-window length", cfg.sub_len_s).map_err(bad)?;
    let stride = positive_micros("sub-window stride", cfg.sub_stride_s).map_err(bad)?;
    if len >= window_len_us {
        return Err(TrajectoryError::BadConfig(format!(
            "sub-window length {} s must be shorter than the window",
            cfg.sub_len_s
        )));
    }
    Ok((len, stride))
}

/// Trajectory over a prebuilt observable matrix of `w`.
///
/// Sub-windows slide over the matrix columns; every position yields a sample,
/// with undefined indicators carried as null readings.
pub fn trajectory_from_matrix(
    w: &Window,
    m: &ObservableMatrix,
    cfg: &TrajectoryConfig,
) -> Result<Vec<IndicatorSample>, TrajectoryError> {
    let (len_us, stride_us) = check_config(w.end_us - w.start_us, cfg)?;
    let bin_us = (m.bin_width_s() * MICROS_PER_SEC as f64).round() as u64;
    let positions: Vec<u64> = (0u64..)
        .map(|k| k * stride_us)
        .take_while(|&s| (s + len_us).div_ceil(bin_us) as usize <= m.cols())
        .collect();
    let dest_row = match cfg.series {
        SeriesSource::Destination(d) => Some(m.dests().iter().position(|&x| x == d)),
        _ => None,
    };

    let samples = positions
        .par_iter()
        .map(|&start| {
            let c0 = (start / bin_us) as usize;
            let c1 = (start + len_us).div_ceil(bin_us) as usize;
            let sub = m.sub_columns(c0..c1);
            let series: Result<Vec<f64>, NullReason> = match (cfg.series, dest_row) {
                (SeriesSource::Aggregate, _) => Ok(sub.column_mean()),
                (SeriesSource::Destination(_), Some(Some(r))) => Ok(sub.row(r).to_vec()),
                (SeriesSource::Destination(_), _) => Err(NullReason::NoData),
                (SeriesSource::RawPerPacket, _) => {
                    let lo = w.start_us + start;
                    let hi = lo + len_us;
                    Ok(w.records.iter().filter(|r| r.t_us >= lo && r.t_us < hi).map(|r| r.size as f64).collect())
                }
            };
            let series = series.map(|z| if cfg.detrend { detrend_linear(&z) } else { z });
            let rr_input = if cfg.detrend {
                let rows = sub.iter_rows().map(detrend_linear).collect();
                ObservableMatrix::from_rows(sub.dests().to_vec(), sub.bin_width_s(), rows)
            } else {
                sub
            };
            let on_series = |f: &dyn Fn(&[f64]) -> Reading| series.as_ref().map_err(|e| *e).and_then(|z| f(z));
            IndicatorSample {
                t_mid: (w.start_us + start) as f64 / MICROS_PER_SEC as f64 + cfg.sub_len_s / 2.0,
                return_rate: return_rate(&rr_input).map(|(rr, _)| rr),
                ac1: on_series(&lag1_autocorrelation),
                cv: on_series(&coefficient_of_variation),
                skewness: on_series(&|z| skewness(z, cfg.skew)),
            }
        })
        .collect();
    Ok(samples)
}

pub const TRAJECTORY_CSV_HEADER: &str = "t_mid,return_rate,ac1,cv,skewness,null_reasons";

/// Writes `t_mid,return_rate,ac1,cv,skewness,null_reasons`; null cells are
/// empty and the last column lists `name=reason` pairs separated by `;`.
pub fn write_trajectory_csv(w: &mut impl Write, samples: &[IndicatorSample]) -> std::io::Result<()> {
    writeln!(w, "{TRAJECTORY_CSV_HEADER}")?;
    for s in samples {
        write!(w, "{}", s.t_mid)?;
        let mut reasons = Vec::new();
        for (ind, reading) in super::Indicator::ALL.iter().zip(s.readings()) {
            match reading {
                Ok(v) => write!(w, ",{v}")?,
                Err(r) => {
                    write!(w, ",")?;
                    reasons.push(format!("{}={}", ind.name(), r.as_str()));
                }
            }
        }
        writeln!(w, ",{}", reasons.join(";"))?;
    }
    Ok(())
}
