//! Packet trace ingestion.
//!
//! Captures and packet logs are normalized into a stream of [`PacketRecord`]s:
//! a relative timestamp (microseconds since the first frame), an opaque
//! destination handle and the on-wire packet size. Two sources are supported,
//! classic tcpdump savefiles ([`PcapReader`]) and the plain-text CSV
//! interchange format ([`read_csv`] / [`write_csv`]).

mod csv;
mod dest;
mod pcap;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::csv::{read_csv, read_csv_from, write_csv, write_csv_to, CSV_HEADER};
pub use self::dest::{max_dests_from_env, DestTable, DEFAULT_MAX_DESTS, MAX_DESTS_ENV};
pub use self::pcap::{read_pcap, PcapFiles, PcapOptions, PcapReader, PcapWriter, LINKTYPE_ETHERNET, LINKTYPE_RAW};

/// Microseconds per second; record timestamps are integral microseconds.
pub const MICROS_PER_SEC: u64 = 1_000_000;

/// Opaque destination handle, assigned in order of first appearance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DestId(pub u32);

impl fmt::Display for DestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One captured packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PacketRecord {
    /// Time since the first frame of the trace, in microseconds.
    pub t_us: u64,
    pub dest: DestId,
    /// Original (on-wire) length in bytes, never zero.
    pub size: u16,
}

impl PacketRecord {
    pub fn new(t_us: u64, dest: DestId, size: u16) -> Self {
        debug_assert!(size >= 1);
        Self { t_us, dest, size }
    }

    /// Builds a record from a time in seconds, rounded to the nearest microsecond.
    pub fn from_secs(t: f64, dest: DestId, size: u16) -> Self {
        Self::new(secs_to_micros(t), dest, size)
    }

    pub fn t_secs(&self) -> f64 {
        self.t_us as f64 / MICROS_PER_SEC as f64
    }
}

/// Rounds non-negative seconds to integral microseconds.
pub fn secs_to_micros(t: f64) -> u64 {
    (t * MICROS_PER_SEC as f64).round().max(0.0) as u64
}

/// Per-source counters. For a pcap source
/// `yielded + malformed + non_ip + filtered == frames`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub frames: u64,
    pub yielded: u64,
    pub malformed: u64,
    pub non_ip: u64,
    pub filtered: u64,
    /// Frames whose timestamp went backwards and were pinned to the previous time.
    pub reordered: u64,
}

impl IngestSummary {
    pub fn merge(&mut self, other: &IngestSummary) {
        self.frames += other.frames;
        self.yielded += other.yielded;
        self.malformed += other.malformed;
        self.non_ip += other.non_ip;
        self.filtered += other.filtered;
        self.reordered += other.reordered;
    }
}

/// How the input of a run was read, echoed in reports so the run can be
/// replayed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceConfig {
    /// `pcap` or `csv`.
    pub format: String,
    /// Monitored addresses; empty means every packet is kept.
    pub monitored: Vec<String>,
    pub both_directions: bool,
    pub max_dests: usize,
}

/// Fatal ingestion failures. Malformed and non-IP frames are not errors,
/// they are skipped and counted in [`IngestSummary`].
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unreadable capture file: {0}")]
    UnreadableFile(String),
    #[error("unsupported link type {0}")]
    UnsupportedLinkType(u32),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV schema error: {0}")]
    Schema(String),
    #[error("invalid value at data row {row}: {message}")]
    InvalidRow { row: u64, message: String },
    #[error("time goes backwards at data row {row}")]
    NonMonotoneTime { row: u64 },
    #[error("destination table exceeded its limit of {limit} entries")]
    TooManyDestinations { limit: usize },
}

impl From<::csv::Error> for IngestError {
    fn from(err: ::csv::Error) -> Self {
        let row = err.position().map(|p| p.record()).unwrap_or(0);
        match err.into_kind() {
            ::csv::ErrorKind::Io(e) => IngestError::Io(e),
            ::csv::ErrorKind::UnequalLengths { expected_len, len, .. } => IngestError::Schema(format!(
                "row {row} has {len} columns, expected {expected_len}"
            )),
            other => IngestError::Schema(format!("{other:?}")),
        }
    }
}
