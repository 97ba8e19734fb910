use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{DestId, IngestError, PacketRecord, MICROS_PER_SEC};

pub const CSV_HEADER: [&str; 3] = ["relative_time_seconds", "dest_id", "size_bytes"];

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<PacketRecord>, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::Open { path: path.to_path_buf(), source })?;
    read_csv_from(BufReader::new(file))
}

/// Parses the packet CSV interchange format. Rows must be in non-decreasing time order.
pub fn read_csv_from(reader: impl Read) -> Result<Vec<PacketRecord>, IngestError> {
    let mut rdr = ::csv::ReaderBuilder::new().has_headers(true).trim(::csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() != CSV_HEADER.len() || header.iter().zip(CSV_HEADER).any(|(a, b)| a != b) {
        return Err(IngestError::Schema(format!(
            "expected header `{}`, found `{}`",
            CSV_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut out = Vec::new();
    let mut prev = 0u64;
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let n = i as u64 + 1;
        let bad = |message: String| IngestError::InvalidRow { row: n, message };
        let t_us = parse_micros(&row[0]).ok_or_else(|| bad(format!("bad time `{}`", &row[0])))?;
        let dest: u32 = row[1].parse().map_err(|_| bad(format!("bad dest_id `{}`", &row[1])))?;
        let size: u16 = row[2]
            .parse()
            .ok()
            .filter(|&s| s >= 1)
            .ok_or_else(|| bad(format!("bad size_bytes `{}`", &row[2])))?;
        if t_us < prev {
            return Err(IngestError::NonMonotoneTime { row: n });
        }
        prev = t_us;
        out.push(PacketRecord::new(t_us, DestId(dest), size));
    }
    Ok(out)
}

pub fn write_csv(path: impl AsRef<Path>, records: &[PacketRecord]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_csv_to(&mut w, records)?;
    w.flush()
}

pub fn write_csv_to(w: &mut impl Write, records: &[PacketRecord]) -> std::io::Result<()> {
    writeln!(w, "{}", CSV_HEADER.join(","))?;
    for r in records {
        writeln!(
            w,
            "{}.{:06},{},{}",
            r.t_us / MICROS_PER_SEC,
            r.t_us % MICROS_PER_SEC,
            r.dest.0,
            r.size
        )?;
    }
    Ok(())
}

/// Exact decimal-seconds parse with at most six fractional digits.
fn parse_micros(s: &str) -> Option<u64> {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if frac.len() > 6 || !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let whole: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let mut micros: u64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    for _ in frac.len()..6 {
        micros *= 10;
    }
    whole.checked_mul(MICROS_PER_SEC)?.checked_add(micros)
}
