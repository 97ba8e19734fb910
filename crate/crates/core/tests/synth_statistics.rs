//! Statistical checks of the generator over 100 seeds each.

use ews_core::detector::kendall_tau_readings;
use ews_core::indicators::{indicator_trajectory, lag1_autocorrelation, TrajectoryConfig};
use ews_core::ingest::PacketRecord;
use ews_core::synth::{generate_scenario, PhaseKind, PhaseSpec, ScenarioSpec, SynthError};
use ews_core::timeseries::{segment_windows, MatrixConfig, WindowConfig};

const SEEDS: u64 = 100;

fn scenario(seed: u64, phases: Vec<PhaseSpec>) -> ScenarioSpec {
    ScenarioSpec { duration_s: phases.iter().map(|p| p.duration_s).sum(), seed, dest_count: 1, phases }
}

fn in_span(trace: &[PacketRecord], t0: f64, t1: f64) -> Vec<PacketRecord> {
    trace.iter().copied().filter(|r| r.t_secs() >= t0 && r.t_secs() < t1).collect()
}

#[test]
fn poisson_record_count() {
    let expected: f64 = 9000.0;
    let band = 4.0 * expected.sqrt();
    for seed in 0..SEEDS {
        let spec = scenario(
            seed,
            vec![PhaseSpec::baseline(30.0, 100.0, 60.0, 20.0), PhaseSpec::baseline(60.0, 100.0, 400.0, 50.0)],
        );
        let n = generate_scenario(&spec).unwrap().len() as f64;
        assert!((n - expected).abs() <= band, "seed {seed}: {n} records");
    }
}

#[test]
fn mean_inter_arrival_per_phase() {
    let ramp = PhaseSpec::csd_ramp(30.0, 300.0, 150.0, 10.0, 0.2, 0.95);
    let phases = vec![PhaseSpec::baseline(30.0, 200.0, 60.0, 20.0), ramp, PhaseSpec::attack_steady(10.0, 5000.0, 1500.0, 20.0)];
    for seed in 0..SEEDS {
        let spec = scenario(seed, phases.clone());
        let trace = generate_scenario(&spec).unwrap();
        for (p, start) in spec.phases.iter().zip(spec.phase_starts()) {
            let span = in_span(&trace, start, start + p.duration_s);
            let gaps: Vec<f64> = span.windows(2).map(|w| (w[1].t_us - w[0].t_us) as f64 * 1e-6).collect();
            let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
            let rel = (mean * p.rate - 1.0).abs();
            assert!(rel < 0.05, "seed {seed} {:?}: mean gap {mean} vs {}", p.kind, 1.0 / p.rate);
        }
    }
}

#[test]
fn sizes_stay_in_range_and_times_increase() {
    for seed in 0..10 {
        let trace = generate_scenario(&ScenarioSpec::canonical(seed)).unwrap();
        assert!(trace.windows(2).all(|w| w[0].t_us < w[1].t_us));
        assert!(trace.iter().all(|r| (60..=1500).contains(&r.size)));
    }
}

#[test]
fn oversized_mean_is_rejected() {
    let spec = scenario(0, vec![PhaseSpec::baseline(10.0, 100.0, 2000.0, 0.0)]);
    assert!(matches!(generate_scenario(&spec), Err(SynthError::BadSpec(_))));
}

/// Return-rate and ac1 trends over one 60 s ramp window.
fn ramp_taus(seed: u64, phase: &PhaseSpec, sub_len_s: f64) -> (f64, f64) {
    let trace = generate_scenario(&scenario(seed, vec![phase.clone()])).unwrap();
    let windows = segment_windows(&trace, WindowConfig::default(), Some(60.0)).unwrap();
    let cfg = TrajectoryConfig { sub_len_s, ..TrajectoryConfig::default() };
    let traj = indicator_trajectory(&windows[0], &MatrixConfig::default(), &cfg).unwrap();
    let tau = |k: usize| kendall_tau_readings(traj.iter().map(|s| s.readings()[k])).unwrap();
    (tau(0), tau(1))
}

/// Seeds out of 100 with return-rate tau below `-level` and ac1 tau above `level`.
fn ramp_hits(phase: &PhaseSpec, sub_len_s: f64, level: f64) -> (usize, usize) {
    let taus: Vec<_> = (0..SEEDS).map(|seed| ramp_taus(seed, phase, sub_len_s)).collect();
    (taus.iter().filter(|t| t.0 < -level).count(), taus.iter().filter(|t| t.1 > level).count())
}

fn ramps() -> [PhaseSpec; 2] {
    let canonical = ScenarioSpec::canonical(0);
    let skewed = canonical.phases.iter().find(|p| p.kind == PhaseKind::CsdRamp).unwrap().clone();
    // Gaussian innovations on the default latent step
    let plain = PhaseSpec::csd_ramp(60.0, 200.0, 300.0, 20.0, 0.2, 0.95);
    [skewed, plain]
}

#[test]
fn ramp_drives_autocorrelation_up_and_return_rate_down() {
    for ramp in ramps() {
        // 20 s sub-windows: |tau| > 0.7 in at least 95% of seeds
        let (rr, ac1) = ramp_hits(&ramp, 20.0, 0.7);
        assert!(rr >= 95 && ac1 >= 95, "20 s sub-windows: rr {rr}/100, ac1 {ac1}/100");
    }
}

#[test]
fn ramp_trends_at_default_sub_windows() {
    // 100-bin sub-windows make single ac1 estimates noisy: the trend clears
    // the detector's 0.5 threshold almost always, the stricter 0.7 less often
    for ramp in ramps() {
        let (rr, ac1) = ramp_hits(&ramp, 10.0, 0.5);
        assert!(rr >= 98 && ac1 >= 98, "tau 0.5: rr {rr}/100, ac1 {ac1}/100");
        let (rr, ac1) = ramp_hits(&ramp, 10.0, 0.7);
        assert!(rr >= 80 && ac1 >= 80, "tau 0.7: rr {rr}/100, ac1 {ac1}/100");
    }
}

#[test]
fn flat_ramp_has_no_memory() {
    let phase = PhaseSpec { latent_bin_s: 0.1, ..PhaseSpec::csd_ramp(200.0, 200.0, 300.0, 0.0, 0.0, 0.0) };
    let mut inside = 0;
    for seed in 0..SEEDS {
        let trace = generate_scenario(&scenario(seed, vec![phase.clone()])).unwrap();
        // latent steps are 0.1 s, so compare 0.1 s bin means
        let mut bins = vec![(0.0, 0u32); 2000];
        for r in &trace {
            let b = &mut bins[((r.t_secs() * 10.0) as usize).min(1999)];
            b.0 += r.size as f64;
            b.1 += 1;
        }
        let series: Vec<f64> = bins.iter().filter(|b| b.1 > 0).map(|b| b.0 / b.1 as f64).collect();
        let rho = lag1_autocorrelation(&series).unwrap();
        inside += (rho.abs() < 3.0 / (series.len() as f64).sqrt()) as u32;
    }
    assert!(inside >= 95, "{inside}/100");
}

#[test]
fn kickoff_boundaries() {
    // surge 1: the step changes sizes only, so the count stays Poisson at the base rate
    let flat = PhaseSpec { surge: 1.0, ..PhaseSpec::kickoff_step(60.0, 200.0, 60.0, 20.0, 1500.0, 30.0) };
    for seed in 0..20 {
        let n = generate_scenario(&scenario(seed, vec![flat.clone()])).unwrap().len() as f64;
        assert!((n - 12_000.0).abs() <= 4.0 * 12_000f64.sqrt(), "seed {seed}: {n}");
    }
    // step at 0: the whole phase is attack traffic
    let immediate = PhaseSpec::kickoff_step(10.0, 200.0, 60.0, 0.0, 1500.0, 0.0);
    let trace = generate_scenario(&scenario(1, vec![immediate])).unwrap();
    assert!(trace.iter().all(|r| r.size == 1500));
    assert!((trace.len() as f64 - 100_000.0).abs() <= 4.0 * 100_000f64.sqrt());
}
