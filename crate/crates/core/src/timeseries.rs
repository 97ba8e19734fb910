//! Windowing and the per-window observable matrix.
//!
//! A trace is cut into fixed-length windows (one minute by default). Inside a
//! window the packets are binned on a regular time grid into an
//! [`ObservableMatrix`] with one row per destination and one column per bin,
//! from which scalar [`WindowSeries`] are extracted for the indicators.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{secs_to_micros, DestId, PacketRecord, MICROS_PER_SEC};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimeseriesError {
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("no destination has enough records in the window")]
    EmptyWindow,
    #[error("records out of time order at {t_us} us")]
    NonMonotone { t_us: u64 },
}

/// Window length and stride in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window_len_s: f64,
    pub stride_s: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { window_len_s: 60.0, stride_s: 60.0 }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<(u64, u64), TimeseriesError> {
        let len = positive_micros("window length", self.window_len_s)?;
        let stride = positive_micros("stride", self.stride_s)?;
        if stride > len {
            return Err(TimeseriesError::BadConfig(format!(
                "stride {} s exceeds window length {} s",
                self.stride_s, self.window_len_s
            )));
        }
        Ok((len, stride))
    }
}

pub(crate) fn positive_micros(what: &str, secs: f64) -> Result<u64, TimeseriesError> {
    if !(secs.is_finite() && secs > 0.0) {
        return Err(TimeseriesError::BadConfig(format!("{what} must be positive, got {secs}")));
    }
    let us = secs_to_micros(secs);
    if us == 0 {
        return Err(TimeseriesError::BadConfig(format!("{what} below one microsecond")));
    }
    Ok(us)
}

/// A time slice `[start, end)` of the trace and the records inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub index: usize,
    pub start_us: u64,
    pub end_us: u64,
    /// End of the part of the window the trace actually covers.
    pub covered_end_us: u64,
    /// Set on a final window that runs past the end of the trace.
    pub partial: bool,
    pub records: Vec<PacketRecord>,
}

impl Window {
    pub fn start_t(&self) -> f64 {
        self.start_us as f64 / MICROS_PER_SEC as f64
    }

    pub fn end_t(&self) -> f64 {
        self.end_us as f64 / MICROS_PER_SEC as f64
    }

    pub fn covered_len_us(&self) -> u64 {
        self.covered_end_us - self.start_us
    }
}

/// Streaming window segmentation over a time-ordered record stream.
///
/// Windows start at multiples of the stride and tile `[0, trace_end)`; empty
/// windows inside the trace are still produced. Without an explicit trace end
/// the last record bounds the trace.
pub struct Windows<I> {
    input: I,
    len_us: u64,
    stride_us: u64,
    trace_end_us: Option<u64>,
    buf: VecDeque<PacketRecord>,
    last_t: Option<u64>,
    exhausted: bool,
    next_index: usize,
    finished: bool,
}

impl<I, E> Windows<I>
where
    I: Iterator<Item = Result<PacketRecord, E>>,
    E: From<TimeseriesError>,
{
    pub fn new(input: I, cfg: WindowConfig, trace_end_s: Option<f64>) -> Result<Self, TimeseriesError> {
        let (len_us, stride_us) = cfg.validate()?;
        Ok(Self {
            input,
            len_us,
            stride_us,
            trace_end_us: trace_end_s.map(secs_to_micros),
            buf: VecDeque::new(),
            last_t: None,
            exhausted: false,
            next_index: 0,
            finished: false,
        })
    }

    fn pull(&mut self) -> Result<bool, E> {
        match self.input.next() {
            None => {
                self.exhausted = true;
                Ok(false)
            }
            Some(Err(e)) => Err(e),
            Some(Ok(r)) => {
                if self.last_t.is_some_and(|t| r.t_us < t) {
                    return Err(TimeseriesError::NonMonotone { t_us: r.t_us }.into());
                }
                self.last_t = Some(r.t_us);
                self.buf.push_back(r);
                Ok(true)
            }
        }
    }

    fn next_window(&mut self) -> Result<Option<Window>, E> {
        if self.finished {
            return Ok(None);
        }
        let start = self.next_index as u64 * self.stride_us;
        let end = start + self.len_us;
        while !self.exhausted && self.last_t.is_none_or(|t| t < end) {
            self.pull()?;
        }
        // exclusive end of the trace
        let trace_end = match (self.trace_end_us, self.last_t) {
            (Some(e), _) => e,
            (None, Some(t)) => t + 1,
            (None, None) => 0,
        };
        if start >= trace_end && self.exhausted {
            self.finished = true;
            return Ok(None);
        }
        while self.buf.front().is_some_and(|r| r.t_us < start) {
            self.buf.pop_front();
        }
        let records: Vec<_> = self.buf.iter().take_while(|r| r.t_us < end).copied().collect();
        let covered_end = end.min(trace_end.max(start));
        let window = Window {
            index: self.next_index,
            start_us: start,
            end_us: end,
            covered_end_us: if self.exhausted { covered_end } else { end },
            partial: self.exhausted && end > trace_end,
            records,
        };
        self.next_index += 1;
        if self.exhausted && end >= trace_end {
            self.finished = true;
        }
        Ok(Some(window))
    }
}

impl<I, E> Iterator for Windows<I>
where
    I: Iterator<Item = Result<PacketRecord, E>>,
    E: From<TimeseriesError>,
{
    type Item = Result<Window, E>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.next_window() {
            Ok(w) => w.map(Ok),
            Err(e) => {
                self.finished = true;
                Some(Err(e))
            }
        }
    }
}

/// Cuts an in-memory record list into windows.
pub fn segment_windows(
    records: &[PacketRecord],
    cfg: WindowConfig,
    trace_end_s: Option<f64>,
) -> Result<Vec<Window>, TimeseriesError> {
    Windows::new(records.iter().copied().map(Ok), cfg, trace_end_s)?.collect()
}

/// How packets falling in the same (destination, bin) cell are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    #[default]
    MeanSize,
    SumSize,
    MaxSize,
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixConfig {
    pub bin_width_s: f64,
    pub agg: Aggregation,
    /// Destinations with fewer records in the window are dropped.
    pub min_samples: usize,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        Self { bin_width_s: 0.1, agg: Aggregation::MeanSize, min_samples: 10 }
    }
}

/// Destinations by time-bins grid of aggregated packet sizes for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableMatrix {
    dests: Vec<DestId>,
    bin_us: u64,
    cols: usize,
    values: Vec<f64>,
}

impl ObservableMatrix {
    /// Builds a matrix directly from rows; all rows must have equal length.
    pub fn from_rows(dests: Vec<DestId>, bin_width_s: f64, rows: Vec<Vec<f64>>) -> Self {
        assert_eq!(dests.len(), rows.len());
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix rows");
        Self { dests, bin_us: secs_to_micros(bin_width_s), cols, values: rows.concat() }
    }

    pub fn rows(&self) -> usize {
        self.dests.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dests(&self) -> &[DestId] {
        &self.dests
    }

    pub fn bin_width_s(&self) -> f64 {
        self.bin_us as f64 / MICROS_PER_SEC as f64
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows()).map(move |r| self.row(r))
    }

    /// Copy restricted to the given column range.
    pub fn sub_columns(&self, cols: Range<usize>) -> ObservableMatrix {
        assert!(cols.end <= self.cols);
        let values = self.iter_rows().flat_map(|row| row[cols.clone()].iter().copied()).collect();
        ObservableMatrix { dests: self.dests.clone(), bin_us: self.bin_us, cols: cols.len(), values }
    }

    /// Column-wise mean over the rows.
    pub fn column_mean(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for row in self.iter_rows() {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        let n = self.rows() as f64;
        out.iter_mut().for_each(|o| *o /= n);
        out
    }

    /// Debug dump: header `dest_id,bin_0..bin_{k-1}`, one line per row.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        write!(w, "dest_id")?;
        for c in 0..self.cols {
            write!(w, ",bin_{c}")?;
        }
        writeln!(w)?;
        for (d, row) in self.dests.iter().zip(self.iter_rows()) {
            write!(w, "{d}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Bins the window's records into a destinations × bins matrix.
pub fn build_observable_matrix(w: &Window, cfg: &MatrixConfig) -> Result<ObservableMatrix, TimeseriesError> {
    let bin_us = positive_micros("bin width", cfg.bin_width_s)?;
    let span = w.covered_len_us().max(1);
    let cols = span.div_ceil(bin_us) as usize;

    let mut per_dest: BTreeMap<DestId, Vec<&PacketRecord>> = BTreeMap::new();
    for r in &w.records {
        per_dest.entry(r.dest).or_default().push(r);
    }
    per_dest.retain(|_, recs| recs.len() >= cfg.min_samples.max(1));
    if per_dest.is_empty() {
        return Err(TimeseriesError::EmptyWindow);
    }

    let mut dests = Vec::with_capacity(per_dest.len());
    let mut values = vec![0.0; per_dest.len() * cols];
    let mut counts = vec![0u32; cols];
    for (r, (dest, recs)) in per_dest.into_iter().enumerate() {
        dests.push(dest);
        let row = &mut values[r * cols..(r + 1) * cols];
        counts.iter_mut().for_each(|c| *c = 0);
        for rec in recs {
            let c = (((rec.t_us - w.start_us) / bin_us) as usize).min(cols - 1);
            let size = rec.size as f64;
            counts[c] += 1;
            match cfg.agg {
                Aggregation::MeanSize | Aggregation::SumSize => row[c] += size,
                Aggregation::MaxSize => row[c] = row[c].max(size),
                Aggregation::Count => row[c] += 1.0,
            }
        }
        if cfg.agg == Aggregation::MeanSize {
            for (v, &n) in row.iter_mut().zip(&counts) {
                if n > 0 {
                    *v /= n as f64;
                }
            }
        }
    }
    Ok(ObservableMatrix { dests, bin_us, cols, values })
}

/// Where a series came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesOrigin {
    Aggregate,
    Destination(DestId),
    RawPerPacket,
}

/// An ordered scalar series `z_1..z_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSeries {
    pub values: Vec<f64>,
    pub origin: SeriesOrigin,
}

impl WindowSeries {
    pub fn new(values: Vec<f64>, origin: SeriesOrigin) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values, origin }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesMode {
    Aggregate,
    PerDestination,
}

pub fn extract_series(m: &ObservableMatrix, mode: SeriesMode) -> Vec<WindowSeries> {
    match mode {
        SeriesMode::Aggregate => vec![WindowSeries::new(m.column_mean(), SeriesOrigin::Aggregate)],
        SeriesMode::PerDestination => m
            .dests()
            .iter()
            .zip(m.iter_rows())
            .map(|(d, row)| WindowSeries::new(row.to_vec(), SeriesOrigin::Destination(*d)))
            .collect(),
    }
}

/// Packet sizes in arrival order, without binning.
pub fn raw_series(records: &[PacketRecord]) -> WindowSeries {
    WindowSeries::new(records.iter().map(|r| r.size as f64).collect(), SeriesOrigin::RawPerPacket)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(t: f64, d: u32, s: u16) -> PacketRecord {
        PacketRecord::from_secs(t, DestId(d), s)
    }

    fn window(records: Vec<PacketRecord>) -> Window {
        Window { index: 0, start_us: 0, end_us: 60_000_000, covered_end_us: 60_000_000, partial: false, records }
    }

    #[test]
    fn hour_long_trace_gives_sixty_windows() {
        let recs: Vec<_> = (0..3600).map(|i| rec(i as f64 + 0.5, 0, 60)).collect();
        let ws = segment_windows(&recs, WindowConfig::default(), Some(3600.0)).unwrap();
        assert_eq!(ws.len(), 60);
        assert!(ws.iter().all(|w| !w.partial && w.records.len() == 60));
        let ws = segment_windows(&recs, WindowConfig::default(), None).unwrap();
        assert_eq!(ws.len(), 60);
    }

    #[test]
    fn trailing_partial_window() {
        let recs = vec![rec(0.0, 0, 60), rec(89.0, 0, 60)];
        let ws = segment_windows(&recs, WindowConfig::default(), Some(90.0)).unwrap();
        assert_eq!(ws.len(), 2);
        assert!(!ws[0].partial);
        assert!(ws[1].partial);
        assert_eq!((ws[1].start_t(), ws[1].end_t()), (60.0, 120.0));
        assert_eq!(ws[1].covered_end_us, 90_000_000);
    }

    #[test]
    fn rejects_bad_window_config() {
        for (len, stride) in [(60.0, 0.0), (0.0, 1.0), (60.0, -1.0), (10.0, 20.0), (f64::NAN, 1.0)] {
            let cfg = WindowConfig { window_len_s: len, stride_s: stride };
            assert!(matches!(segment_windows(&[], cfg, None), Err(TimeseriesError::BadConfig(_))));
        }
    }

    #[test]
    fn empty_trace_has_no_windows() {
        assert!(segment_windows(&[], WindowConfig::default(), None).unwrap().is_empty());
    }

    #[test]
    fn gaps_yield_empty_windows() {
        let recs = vec![rec(1.0, 0, 60), rec(150.0, 0, 60)];
        let ws = segment_windows(&recs, WindowConfig::default(), None).unwrap();
        assert_eq!(ws.iter().map(|w| w.records.len()).collect::<Vec<_>>(), vec![1, 0, 1]);
    }

    #[test]
    fn overlapping_windows() {
        let recs: Vec<_> = (0..90).map(|i| rec(i as f64, 0, 60)).collect();
        let cfg = WindowConfig { window_len_s: 60.0, stride_s: 30.0 };
        let ws = segment_windows(&recs, cfg, Some(90.0)).unwrap();
        assert_eq!(ws.len(), 2);
        assert_eq!(ws[1].records.first().unwrap().t_us, 30_000_000);
        assert_eq!(ws[1].records.len(), 60);
    }

    #[test]
    fn matrix_shape_and_mean_cell() {
        let mut recs: Vec<_> = (0..20).map(|i| rec(i as f64 * 0.5, i % 2, 60)).collect();
        recs.sort_by_key(|r| r.t_us);
        let m = build_observable_matrix(&window(recs), &MatrixConfig::default()).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 600));

        let w = window(vec![rec(0.05, 0, 60), rec(0.07, 0, 1500)]);
        let cfg = MatrixConfig { min_samples: 1, ..Default::default() };
        let m = build_observable_matrix(&w, &cfg).unwrap();
        assert_eq!(m.get(0, 0), 780.0);
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn sparse_rows_are_dropped() {
        let mut recs: Vec<_> = (0..12).map(|i| rec(i as f64, 3, 60)).collect();
        recs.push(rec(30.0, 1, 60));
        recs.sort_by_key(|r| r.t_us);
        let m = build_observable_matrix(&window(recs), &MatrixConfig::default()).unwrap();
        assert_eq!(m.dests(), &[DestId(3)]);
        assert_eq!(
            build_observable_matrix(&window(vec![]), &MatrixConfig::default()),
            Err(TimeseriesError::EmptyWindow)
        );
    }

    #[test]
    fn aggregate_series() {
        let m = ObservableMatrix::from_rows(vec![DestId(0)], 0.1, vec![vec![1.0, 5.0, 2.0]]);
        assert_eq!(extract_series(&m, SeriesMode::Aggregate)[0].values, vec![1.0, 5.0, 2.0]);
        let m = ObservableMatrix::from_rows(
            vec![DestId(0), DestId(1)],
            0.1,
            vec![vec![2.0, 2.0, 2.0], vec![4.0, 4.0, 4.0]],
        );
        assert_eq!(extract_series(&m, SeriesMode::Aggregate)[0].values, vec![3.0, 3.0, 3.0]);
        let per = extract_series(&m, SeriesMode::PerDestination);
        assert_eq!(per.len(), 2);
        assert_eq!(per[1].origin, SeriesOrigin::Destination(DestId(1)));
    }

    #[test]
    fn matrix_dump_header() {
        let m = ObservableMatrix::from_rows(vec![DestId(7)], 0.1, vec![vec![1.0, 2.5]]);
        let mut out = Vec::new();
        m.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "dest_id,bin_0,bin_1\n7,1,2.5\n");
    }

    fn arb_records() -> impl Strategy<Value = Vec<PacketRecord>> {
        prop::collection::vec((0u64..60_000_000, 0u32..4, 60u16..=1500), 0..400).prop_map(|mut v| {
            v.sort_by_key(|r| r.0);
            v.into_iter().map(|(t, d, s)| PacketRecord::new(t, DestId(d), s)).collect()
        })
    }

    proptest! {
        #[test]
        fn count_and_bytes_are_conserved(recs in arb_records(), min_samples in 1usize..20) {
            let w = window(recs.clone());
            let kept = |m: &ObservableMatrix| recs.iter().filter(|r| m.dests().contains(&r.dest)).collect::<Vec<_>>();
            let cfg = MatrixConfig { agg: Aggregation::Count, min_samples, ..Default::default() };
            if let Ok(m) = build_observable_matrix(&w, &cfg) {
                let total: f64 = m.iter_rows().flatten().sum();
                prop_assert_eq!(total as usize, kept(&m).len());
            }
            let cfg = MatrixConfig { agg: Aggregation::SumSize, min_samples, ..Default::default() };
            if let Ok(m) = build_observable_matrix(&w, &cfg) {
                let total: f64 = m.iter_rows().flatten().sum();
                let bytes: u64 = kept(&m).iter().map(|r| r.size as u64).sum();
                prop_assert_eq!(total as u64, bytes);
            }
        }

        #[test]
        fn halving_bins_keeps_row_totals(recs in arb_records()) {
            let w = window(recs);
            let coarse = MatrixConfig { bin_width_s: 0.2, agg: Aggregation::SumSize, min_samples: 1 };
            let fine = MatrixConfig { bin_width_s: 0.1, ..coarse };
            if let (Ok(a), Ok(b)) = (build_observable_matrix(&w, &coarse), build_observable_matrix(&w, &fine)) {
                for (ra, rb) in a.iter_rows().zip(b.iter_rows()) {
                    prop_assert_eq!(ra.iter().sum::<f64>(), rb.iter().sum::<f64>());
                }
            }
        }

        #[test]
        fn tiling_partitions_records(mut ts in prop::collection::vec(0u64..500_000_000, 1..300)) {
            ts.sort();
            let recs: Vec<_> = ts.iter().map(|&t| PacketRecord::new(t, DestId(0), 60)).collect();
            let ws = segment_windows(&recs, WindowConfig::default(), None).unwrap();
            let seen: Vec<_> = ws.iter().flat_map(|w| w.records.iter().copied()).collect();
            prop_assert_eq!(seen, recs);
            for w in &ws {
                prop_assert!(w.records.iter().all(|r| w.start_us <= r.t_us && r.t_us < w.end_us));
                prop_assert_eq!(w.end_us - w.start_us, 60_000_000);
            }
        }
    }
}
