use std::net::{IpAddr, Ipv4Addr};
use std::path::Path;

use ews_core::detector::{analyze_stream, analyze_trace, AnalysisConfig, AnalysisError};
use ews_core::ingest::{
    read_csv, read_pcap, write_csv, DestId, DestTable, IngestError, PacketRecord, PcapFiles, PcapOptions, PcapWriter,
    LINKTYPE_ETHERNET,
};
use ews_core::synth::{generate_scenario, ScenarioSpec};

const VICTIM: [u8; 4] = [10, 0, 0, 1];
const OTHER: [u8; 4] = [10, 0, 0, 2];
const CLIENT: [u8; 4] = [192, 0, 2, 7];
/// 2007-08-04 20:50:00 UTC
const EPOCH: u64 = 1_186_260_600;

fn ipv4_frame(src: [u8; 4], dst: [u8; 4]) -> Vec<u8> {
    let mut f = vec![0u8; 14 + 20];
    f[12..14].copy_from_slice(&0x0800u16.to_be_bytes());
    f[14] = 0x45;
    f[14 + 12..14 + 16].copy_from_slice(&src);
    f[14 + 16..14 + 20].copy_from_slice(&dst);
    f
}

fn arp_frame() -> Vec<u8> {
    let mut f = vec![0u8; 42];
    f[12..14].copy_from_slice(&0x0806u16.to_be_bytes());
    f
}

/// Writes `records` as frames to the victim, with a reply from the victim,
/// a packet to another host and an ARP frame after every tenth record, and
/// one truncated IPv4 header. Returns the number of frames written.
fn write_fixture(path: &Path, records: &[PacketRecord], first_index: usize) -> u64 {
    let mut w = PcapWriter::create(path, LINKTYPE_ETHERNET).unwrap();
    let mut frames = 0;
    let mut put = |w: &mut PcapWriter<_>, t_us: u64, len: u32, data: &[u8]| {
        let sec = EPOCH + t_us / 1_000_000;
        w.write_frame(sec as u32, (t_us % 1_000_000) as u32, len, data).unwrap();
        frames += 1;
    };
    for (i, r) in records.iter().enumerate() {
        put(&mut w, r.t_us, r.size as u32, &ipv4_frame(CLIENT, VICTIM));
        if (first_index + i) % 10 == 0 {
            put(&mut w, r.t_us, 1500, &ipv4_frame(VICTIM, CLIENT));
            put(&mut w, r.t_us, 100, &ipv4_frame(CLIENT, OTHER));
            put(&mut w, r.t_us, 42, &arp_frame());
        }
        if first_index + i == 5 {
            put(&mut w, r.t_us, 60, &ipv4_frame(CLIENT, VICTIM)[..20]);
        }
    }
    w.finish().unwrap();
    frames
}

fn victim_only() -> PcapOptions {
    PcapOptions { monitored: vec![IpAddr::V4(Ipv4Addr::from(VICTIM))], ..Default::default() }
}

#[test]
fn two_file_capture_reproduces_the_trace_and_its_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let trace = generate_scenario(&ScenarioSpec::baseline(11, 150.0)).unwrap();
    let split = trace.partition_point(|r| r.t_us < 90_000_000);
    let (a, b) = (dir.path().join("part0.pcap"), dir.path().join("part1.pcap"));
    let frames = write_fixture(&a, &trace[..split], 0) + write_fixture(&b, &trace[split..], split);

    let (records, summary, table) = read_pcap(&[&a, &b], victim_only(), DestTable::default()).unwrap();
    // the fixture starts at the first record, so times match exactly
    let origin = trace[0].t_us;
    let shifted: Vec<_> = trace.iter().map(|r| PacketRecord::new(r.t_us - origin, r.dest, r.size)).collect();
    assert_eq!(records, shifted);
    assert_eq!(table.len(), 1);
    assert_eq!(summary.frames, frames);
    assert_eq!(summary.yielded + summary.malformed + summary.non_ip + summary.filtered, summary.frames);
    assert_eq!(summary.malformed, 1);
    assert_eq!(summary.reordered, 0);

    let cfg = AnalysisConfig::default();
    let from_pcap = analyze_trace(&records, &cfg).unwrap();
    let streamed = analyze_stream(
        PcapFiles::new(vec![&a, &b], victim_only(), DestTable::default()).map(|r| r.map_err(AnalysisError::from)),
        &cfg,
        |_| {},
    )
    .unwrap();
    assert_eq!(streamed, from_pcap);
    assert_eq!(from_pcap, analyze_trace(&shifted, &cfg).unwrap());
    assert_eq!(from_pcap.meta.window_count, 3);
}

#[test]
fn direction_and_victim_filters() {
    let dir = tempfile::tempdir().unwrap();
    let trace = generate_scenario(&ScenarioSpec::baseline(12, 5.0)).unwrap();
    let path = dir.path().join("t.pcap");
    write_fixture(&path, &trace, 0);
    let replies = trace.len().div_ceil(10);

    let both = PcapOptions { both_directions: true, ..victim_only() };
    let (records, _, table) = read_pcap(&[&path], both, DestTable::default()).unwrap();
    assert_eq!(records.len(), trace.len() + replies);
    // replies are keyed by their own destination, the client
    assert_eq!(table.len(), 2);
    assert_eq!(records.iter().filter(|r| r.dest == DestId(1)).count(), replies);

    let (all, summary, table) = read_pcap(&[&path], PcapOptions::default(), DestTable::default()).unwrap();
    assert_eq!(all.len(), trace.len() + 2 * replies);
    assert_eq!(summary.filtered, 0);
    assert_eq!(table.len(), 3);
}

#[test]
fn destination_cap_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let trace = generate_scenario(&ScenarioSpec::baseline(13, 2.0)).unwrap();
    let path = dir.path().join("t.pcap");
    write_fixture(&path, &trace, 0);
    let err = read_pcap(&[&path], PcapOptions::default(), DestTable::with_limit(2)).unwrap_err();
    assert!(matches!(err, IngestError::TooManyDestinations { limit: 2 }));
}

#[test]
fn missing_second_file_ends_the_stream_with_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let trace = generate_scenario(&ScenarioSpec::baseline(14, 2.0)).unwrap();
    let path = dir.path().join("t.pcap");
    write_fixture(&path, &trace, 0);
    let missing = dir.path().join("nope.pcap");
    let results: Vec<_> = PcapFiles::new(vec![&path, &missing], victim_only(), DestTable::default()).collect();
    assert_eq!(results.iter().filter(|r| r.is_ok()).count(), trace.len());
    assert!(matches!(results.last(), Some(Err(IngestError::Open { .. }))));
}

#[test]
fn csv_round_trip_of_a_generated_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = generate_scenario(&ScenarioSpec::canonical(3)).unwrap();
    let path = dir.path().join("t.csv");
    write_csv(&path, &trace).unwrap();
    assert_eq!(read_csv(&path).unwrap(), trace);
}
