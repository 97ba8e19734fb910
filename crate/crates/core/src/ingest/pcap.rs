//! Classic tcpdump savefile reader.
//!
//! Handles both byte orders and the microsecond / nanosecond magic variants.
//! Frames are decoded only as far as the IP destination address.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::net::IpAddr;
use std::path::Path;

use super::{DestId, DestTable, IngestError, IngestSummary, PacketRecord};

const MAGIC_MICROS: u32 = 0xa1b2_c3d4;
const MAGIC_NANOS: u32 = 0xa1b2_3c4d;
const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;
/// Larger captured lengths are taken as a corrupt record header.
const MAX_CAPTURED_LEN: u32 = 16 * 1024 * 1024;

pub const LINKTYPE_NULL: u32 = 0;
pub const LINKTYPE_ETHERNET: u32 = 1;
pub const LINKTYPE_RAW: u32 = 101;
const LINKTYPE_DLT_RAW: u32 = 12;
const LINKTYPE_OPENBSD_RAW: u32 = 14;
const LINKTYPE_LINUX_SLL: u32 = 113;
const LINKTYPE_IPV4: u32 = 228;
const LINKTYPE_IPV6: u32 = 229;

const ETHERTYPE_IPV4: u16 = 0x0800;
const ETHERTYPE_IPV6: u16 = 0x86dd;
const ETHERTYPE_VLAN: u16 = 0x8100;
const ETHERTYPE_QINQ: u16 = 0x88a8;

/// Selection applied while reading a capture.
#[derive(Debug, Clone, Default)]
pub struct PcapOptions {
    /// Monitored (victim) addresses. When non-empty, only packets sent to one
    /// of them are kept, plus packets sent from them if `both_directions`.
    pub monitored: Vec<IpAddr>,
    pub both_directions: bool,
    /// Keep only these destination ids.
    pub allow: Option<HashSet<DestId>>,
    /// Timestamp origin in nanoseconds since the epoch. Defaults to the first
    /// frame of the file; set it to share one time axis across several files.
    pub origin_ns: Option<i128>,
}

#[derive(Debug, Clone, Copy)]
enum Endian {
    Little,
    Big,
}

impl Endian {
    fn u32(self, b: &[u8]) -> u32 {
        let a = [b[0], b[1], b[2], b[3]];
        match self {
            Endian::Little => u32::from_le_bytes(a),
            Endian::Big => u32::from_be_bytes(a),
        }
    }
}

enum Frame {
    Ip { src: IpAddr, dst: IpAddr },
    NonIp,
    Malformed,
}

/// Streaming savefile reader yielding one [`PacketRecord`] per accepted frame.
///
/// Fatal problems (bad magic, I/O failure, destination table overflow) are
/// yielded as `Err` and end the stream; skipped frames are only counted.
pub struct PcapReader<R> {
    inner: R,
    endian: Endian,
    nanos: bool,
    linktype: u32,
    opts: PcapOptions,
    table: DestTable,
    summary: IngestSummary,
    last_t_us: u64,
    buf: Vec<u8>,
    done: bool,
}

impl PcapReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>, opts: PcapOptions, table: DestTable) -> Result<Self, IngestError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| IngestError::Open { path: path.to_path_buf(), source })?;
        Self::new(BufReader::new(file), opts, table)
    }
}

impl<R: Read> PcapReader<R> {
    pub fn new(mut inner: R, opts: PcapOptions, table: DestTable) -> Result<Self, IngestError> {
        let mut header = [0u8; GLOBAL_HEADER_LEN];
        read_full(&mut inner, &mut header)?
            .then_some(())
            .ok_or_else(|| IngestError::UnreadableFile("truncated global header".into()))?;
        let raw_magic = u32::from_le_bytes([header[0], header[1], header[2], header[3]]);
        let (endian, nanos) = match raw_magic {
            MAGIC_MICROS => (Endian::Little, false),
            MAGIC_NANOS => (Endian::Little, true),
            m if m.swap_bytes() == MAGIC_MICROS => (Endian::Big, false),
            m if m.swap_bytes() == MAGIC_NANOS => (Endian::Big, true),
            m => return Err(IngestError::UnreadableFile(format!("bad magic 0x{m:08x}"))),
        };
        let linktype = endian.u32(&header[20..24]) & 0x0fff_ffff;
        if !matches!(
            linktype,
            LINKTYPE_NULL
                | LINKTYPE_ETHERNET
                | LINKTYPE_RAW
                | LINKTYPE_DLT_RAW
                | LINKTYPE_OPENBSD_RAW
                | LINKTYPE_LINUX_SLL
                | LINKTYPE_IPV4
                | LINKTYPE_IPV6
        ) {
            return Err(IngestError::UnsupportedLinkType(linktype));
        }
        Ok(Self {
            inner,
            endian,
            nanos,
            linktype,
            opts,
            table,
            summary: IngestSummary::default(),
            last_t_us: 0,
            buf: Vec::with_capacity(2048),
            done: false,
        })
    }

    pub fn summary(&self) -> &IngestSummary {
        &self.summary
    }

    /// Origin in use, known once the first frame has been read.
    pub fn origin_ns(&self) -> Option<i128> {
        self.opts.origin_ns
    }

    pub fn linktype(&self) -> u32 {
        self.linktype
    }

    pub fn into_table(self) -> DestTable {
        self.table
    }

    fn next_record(&mut self) -> Result<Option<PacketRecord>, IngestError> {
        loop {
            let mut rh = [0u8; RECORD_HEADER_LEN];
            match read_partial(&mut self.inner, &mut rh)? {
                0 => return Ok(None),
                RECORD_HEADER_LEN => {}
                _ => {
                    // trailing garbage shorter than a record header
                    self.summary.frames += 1;
                    self.summary.malformed += 1;
                    return Ok(None);
                }
            }
            self.summary.frames += 1;
            let e = self.endian;
            let ts_sec = e.u32(&rh[0..4]) as i128;
            let ts_frac = e.u32(&rh[4..8]) as i128;
            let incl_len = e.u32(&rh[8..12]);
            let orig_len = e.u32(&rh[12..16]);
            if incl_len > MAX_CAPTURED_LEN {
                self.summary.malformed += 1;
                return Ok(None);
            }
            self.buf.resize(incl_len as usize, 0);
            if !read_full(&mut self.inner, &mut self.buf)? {
                self.summary.malformed += 1;
                return Ok(None);
            }

            let ts_ns = ts_sec * 1_000_000_000 + if self.nanos { ts_frac } else { ts_frac * 1_000 };
            let origin = *self.opts.origin_ns.get_or_insert(ts_ns);

            if orig_len == 0 || orig_len > u16::MAX as u32 {
                self.summary.malformed += 1;
                continue;
            }
            let (src, dst) = match decode_frame(self.linktype, &self.buf) {
                Frame::Ip { src, dst } => (src, dst),
                Frame::NonIp => {
                    self.summary.non_ip += 1;
                    continue;
                }
                Frame::Malformed => {
                    self.summary.malformed += 1;
                    continue;
                }
            };
            if !self.opts.monitored.is_empty() {
                let inbound = self.opts.monitored.contains(&dst);
                let outbound = self.opts.both_directions && self.opts.monitored.contains(&src);
                if !(inbound || outbound) {
                    self.summary.filtered += 1;
                    continue;
                }
            }
            let dest = match dst {
                IpAddr::V4(a) => self.table.map_destination(&a.octets())?,
                IpAddr::V6(a) => self.table.map_destination(&a.octets())?,
            };
            if let Some(allow) = &self.opts.allow {
                if !allow.contains(&dest) {
                    self.summary.filtered += 1;
                    continue;
                }
            }

            let rel_ns = ts_ns - origin;
            let mut t_us = if rel_ns > 0 { (rel_ns / 1_000) as u64 } else { 0 };
            if t_us < self.last_t_us || rel_ns < 0 {
                self.summary.reordered += 1;
                t_us = self.last_t_us;
            }
            self.last_t_us = t_us;
            self.summary.yielded += 1;
            return Ok(Some(PacketRecord::new(t_us, dest, orig_len as u16)));
        }
    }
}

impl<R: Read> Iterator for PcapReader<R> {
    type Item = Result<PacketRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_record() {
            Ok(Some(r)) => Some(Ok(r)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Streams several savefiles, in order, onto one time axis and destination
/// table.
///
/// The origin is the first frame of the first file, so consecutive capture
/// files of one trace line up. A file that opens badly ends the stream with
/// that error.
pub struct PcapFiles<P> {
    paths: std::vec::IntoIter<P>,
    opts: PcapOptions,
    table: Option<DestTable>,
    current: Option<PcapReader<BufReader<File>>>,
    summary: IngestSummary,
    floor: u64,
    failed: bool,
}

impl<P: AsRef<Path>> PcapFiles<P> {
    pub fn new(paths: Vec<P>, opts: PcapOptions, table: DestTable) -> Self {
        Self {
            paths: paths.into_iter(),
            opts,
            table: Some(table),
            current: None,
            summary: IngestSummary::default(),
            floor: 0,
            failed: false,
        }
    }

    /// Counters over every file read so far.
    pub fn summary(&self) -> IngestSummary {
        let mut s = self.summary;
        if let Some(r) = &self.current {
            s.merge(r.summary());
        }
        s
    }

    /// The destination table, once the stream is exhausted.
    pub fn into_table(mut self) -> DestTable {
        self.close_current();
        self.table.take().unwrap_or_default()
    }

    fn close_current(&mut self) {
        if let Some(r) = self.current.take() {
            self.summary.merge(r.summary());
            self.floor = r.last_t_us;
            self.opts.origin_ns = r.origin_ns().or(self.opts.origin_ns);
            self.table = Some(r.into_table());
        }
    }
}

impl<P: AsRef<Path>> Iterator for PcapFiles<P> {
    type Item = Result<PacketRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.failed {
                return None;
            }
            if let Some(r) = self.current.as_mut() {
                match r.next() {
                    Some(Err(e)) => {
                        self.failed = true;
                        return Some(Err(e));
                    }
                    Some(ok) => return Some(ok),
                    None => self.close_current(),
                }
            }
            let path = self.paths.next()?;
            let table = self.table.take().unwrap_or_default();
            match PcapReader::open(path, self.opts.clone(), table) {
                Ok(mut r) => {
                    r.last_t_us = self.floor;
                    self.current = Some(r);
                }
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
        }
    }
}

/// Reads one or more savefiles into memory; see [`PcapFiles`].
pub fn read_pcap<P: AsRef<Path>>(
    paths: &[P],
    opts: PcapOptions,
    table: DestTable,
) -> Result<(Vec<PacketRecord>, IngestSummary, DestTable), IngestError> {
    let mut files = PcapFiles::new(paths.iter().collect(), opts, table);
    let records = files.by_ref().collect::<Result<Vec<_>, _>>()?;
    let summary = files.summary();
    Ok((records, summary, files.into_table()))
}

fn decode_frame(linktype: u32, data: &[u8]) -> Frame {
    match linktype {
        LINKTYPE_ETHERNET => {
            if data.len() < 14 {
                return Frame::Malformed;
            }
            let mut ethertype = u16::from_be_bytes([data[12], data[13]]);
            let mut offset = 14;
            while ethertype == ETHERTYPE_VLAN || ethertype == ETHERTYPE_QINQ {
                if data.len() < offset + 4 {
                    return Frame::Malformed;
                }
                ethertype = u16::from_be_bytes([data[offset + 2], data[offset + 3]]);
                offset += 4;
            }
            match ethertype {
                ETHERTYPE_IPV4 => decode_ipv4(&data[offset..]),
                ETHERTYPE_IPV6 => decode_ipv6(&data[offset..]),
                _ => Frame::NonIp,
            }
        }
        LINKTYPE_LINUX_SLL => {
            if data.len() < 16 {
                return Frame::Malformed;
            }
            match u16::from_be_bytes([data[14], data[15]]) {
                ETHERTYPE_IPV4 => decode_ipv4(&data[16..]),
                ETHERTYPE_IPV6 => decode_ipv6(&data[16..]),
                _ => Frame::NonIp,
            }
        }
        LINKTYPE_NULL => {
            if data.len() < 4 {
                return Frame::Malformed;
            }
            // address family in the capturing host's byte order
            let le = u32::from_le_bytes([data[0], data[1], data[2], data[3]]);
            let be = u32::from_be_bytes([data[0], data[1], data[2], data[3]]);
            let family = if le < 256 { le } else { be };
            match family {
                2 => decode_ipv4(&data[4..]),
                24 | 28 | 30 => decode_ipv6(&data[4..]),
                _ => Frame::NonIp,
            }
        }
        LINKTYPE_IPV4 => decode_ipv4(data),
        LINKTYPE_IPV6 => decode_ipv6(data),
        _ => match data.first().map(|b| b >> 4) {
            Some(4) => decode_ipv4(data),
            Some(6) => decode_ipv6(data),
            Some(_) => Frame::NonIp,
            None => Frame::Malformed,
        },
    }
}

fn decode_ipv4(data: &[u8]) -> Frame {
    if data.len() < 20 || data[0] >> 4 != 4 || (data[0] & 0x0f) < 5 {
        return Frame::Malformed;
    }
    let src: [u8; 4] = data[12..16].try_into().unwrap();
    let dst: [u8; 4] = data[16..20].try_into().unwrap();
    Frame::Ip { src: IpAddr::from(src), dst: IpAddr::from(dst) }
}

fn decode_ipv6(data: &[u8]) -> Frame {
    if data.len() < 40 || data[0] >> 4 != 6 {
        return Frame::Malformed;
    }
    let src: [u8; 16] = data[8..24].try_into().unwrap();
    let dst: [u8; 16] = data[24..40].try_into().unwrap();
    Frame::Ip { src: IpAddr::from(src), dst: IpAddr::from(dst) }
}

/// Fills `buf` completely; `false` on a clean or partial EOF.
fn read_full(r: &mut impl Read, buf: &mut [u8]) -> std::io::Result<bool> {
    Ok(read_partial(r, buf)? == buf.len())
}

fn read_partial(r: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Minimal little-endian savefile writer, used for fixtures.
pub struct PcapWriter<W: Write> {
    inner: W,
    nanos: bool,
}

impl PcapWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>, linktype: u32) -> std::io::Result<Self> {
        Self::new(BufWriter::new(File::create(path)?), linktype, false)
    }
}

impl<W: Write> PcapWriter<W> {
    pub fn new(mut inner: W, linktype: u32, nanos: bool) -> std::io::Result<Self> {
        let magic = if nanos { MAGIC_NANOS } else { MAGIC_MICROS };
        inner.write_all(&magic.to_le_bytes())?;
        inner.write_all(&2u16.to_le_bytes())?;
        inner.write_all(&4u16.to_le_bytes())?;
        inner.write_all(&0i32.to_le_bytes())?;
        inner.write_all(&0u32.to_le_bytes())?;
        inner.write_all(&65535u32.to_le_bytes())?;
        inner.write_all(&linktype.to_le_bytes())?;
        Ok(Self { inner, nanos })
    }

    /// Writes one frame. `ts_frac` is micro- or nanoseconds depending on the file variant.
    pub fn write_frame(&mut self, ts_sec: u32, ts_frac: u32, orig_len: u32, data: &[u8]) -> std::io::Result<()> {
        debug_assert!(!self.nanos || ts_frac < 1_000_000_000);
        self.inner.write_all(&ts_sec.to_le_bytes())?;
        self.inner.write_all(&ts_frac.to_le_bytes())?;
        self.inner.write_all(&(data.len() as u32).to_le_bytes())?;
        self.inner.write_all(&orig_len.to_le_bytes())?;
        self.inner.write_all(data)
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}
