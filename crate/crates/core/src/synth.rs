//! Seeded synthetic packet traces.
//!
//! A scenario is a sequence of phases laid end to end. Arrivals are Poisson
//! (exponential inter-arrival times) at each phase's rate; packet sizes are
//! clamped to 60..=1500 bytes. The phase kinds model quiet traffic, a
//! critical-slowing-down ramp on a latent AR(1) load process, an abrupt
//! attack kickoff, sustained attack traffic and short oversized bursts.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{secs_to_micros, DestId, PacketRecord};

pub const MIN_SIZE: f64 = 60.0;
pub const MAX_SIZE: f64 = 1500.0;
pub const MAX_INNOVATION_SKEW: f64 = 10.0;
/// Generator algorithm recorded alongside generated traces.
pub const RNG_NAME: &str = "ChaCha8Rng";

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    BadSpec(String),
    #[error("cannot read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseKind {
    Baseline,
    CsdRamp,
    KickoffStep,
    AttackSteady,
    /// Baseline traffic with occasional short trains of `step_size` packets.
    Burst,
}

fn default_gain() -> f64 {
    25.0
}
fn default_surge() -> f64 {
    50.0
}
fn default_latent_bin() -> f64 {
    0.1
}
fn default_burst_len() -> u32 {
    20
}

/// One phase of a scenario. Fields not used by a kind are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub kind: PhaseKind,
    pub duration_s: f64,
    /// Packets per second.
    pub rate: f64,
    pub size_mean: f64,
    /// Standard deviation of the per-packet size noise.
    #[serde(default)]
    pub size_jitter: f64,
    #[serde(default)]
    pub phi_start: f64,
    #[serde(default)]
    pub phi_end: f64,
    /// Bytes of latent load per unit of the AR(1) state.
    #[serde(default = "default_gain")]
    pub gain: f64,
    /// Time step of the latent AR(1) process.
    #[serde(default = "default_latent_bin")]
    pub latent_bin_s: f64,
    /// Skewness of the unit-variance latent innovations; 0 gives Gaussian
    /// innovations, other values a shifted gamma law.
    #[serde(default)]
    pub innovation_skew: f64,
    /// Post-step packet size (kickoff) or burst packet size (burst).
    #[serde(default)]
    pub step_size: f64,
    /// Seconds into the phase at which the kickoff step happens.
    #[serde(default)]
    pub step_at: f64,
    /// Rate multiplier after the kickoff step and inside bursts.
    #[serde(default = "default_surge")]
    pub surge: f64,
    /// Bursts per second.
    #[serde(default)]
    pub burst_rate: f64,
    #[serde(default = "default_burst_len")]
    pub burst_len: u32,
}

impl PhaseSpec {
    fn plain(kind: PhaseKind, duration_s: f64, rate: f64, size_mean: f64, size_jitter: f64) -> Self {
        Self {
            kind,
            duration_s,
            rate,
            size_mean,
            size_jitter,
            phi_start: 0.0,
            phi_end: 0.0,
            gain: default_gain(),
            latent_bin_s: default_latent_bin(),
            innovation_skew: 0.0,
            step_size: 0.0,
            step_at: 0.0,
            surge: default_surge(),
            burst_rate: 0.0,
            burst_len: default_burst_len(),
        }
    }

    pub fn baseline(duration_s: f64, rate: f64, size_mean: f64, size_jitter: f64) -> Self {
        Self::plain(PhaseKind::Baseline, duration_s, rate, size_mean, size_jitter)
    }

    pub fn attack_steady(duration_s: f64, rate: f64, size_mean: f64, size_jitter: f64) -> Self {
        Self::plain(PhaseKind::AttackSteady, duration_s, rate, size_mean, size_jitter)
    }

    pub fn csd_ramp(duration_s: f64, rate: f64, size_mean: f64, size_jitter: f64, phi_start: f64, phi_end: f64) -> Self {
        Self { phi_start, phi_end, ..Self::plain(PhaseKind::CsdRamp, duration_s, rate, size_mean, size_jitter) }
    }

    pub fn kickoff_step(duration_s: f64, rate: f64, size_mean: f64, size_jitter: f64, step_size: f64, step_at: f64) -> Self {
        Self { step_size, step_at, ..Self::plain(PhaseKind::KickoffStep, duration_s, rate, size_mean, size_jitter) }
    }

    fn validate(&self, i: usize) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::BadSpec(format!("phase {i}: {m}")));
        let size_ok = |s: f64| (MIN_SIZE..=MAX_SIZE).contains(&s);
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!("duration must be positive, got {}", self.duration_s));
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return bad(format!("rate must be positive, got {}", self.rate));
        }
        if !size_ok(self.size_mean) {
            return bad(format!("size_mean {} outside [60, 1500]", self.size_mean));
        }
        if !(self.size_jitter.is_finite() && self.size_jitter >= 0.0) {
            return bad(format!("size_jitter must be non-negative, got {}", self.size_jitter));
        }
        match self.kind {
            PhaseKind::CsdRamp => {
                if !(0.0 <= self.phi_start && self.phi_start <= self.phi_end && self.phi_end < 1.0) {
                    return bad(format!("need 0 <= phi_start <= phi_end < 1, got {} -> {}", self.phi_start, self.phi_end));
                }
                if !(self.gain.is_finite() && self.gain >= 0.0) {
                    return bad(format!("gain must be non-negative, got {}", self.gain));
                }
                if !(self.latent_bin_s > 0.0 && self.latent_bin_s <= self.duration_s) {
                    return bad(format!("latent_bin_s must lie in (0, duration], got {}", self.latent_bin_s));
                }
                if !(self.innovation_skew.abs() <= MAX_INNOVATION_SKEW) {
                    return bad(format!(
                        "innovation_skew must lie in [-{MAX_INNOVATION_SKEW}, {MAX_INNOVATION_SKEW}], got {}",
                        self.innovation_skew
                    ));
                }
            }
            PhaseKind::KickoffStep => {
                if !size_ok(self.step_size) {
                    return bad(format!("step_size {} outside [60, 1500]", self.step_size));
                }
                if !(0.0..=self.duration_s).contains(&self.step_at) {
                    return bad(format!("step_at {} outside the phase", self.step_at));
                }
                if !(self.surge.is_finite() && self.surge > 0.0) {
                    return bad(format!("surge must be positive, got {}", self.surge));
                }
            }
            PhaseKind::Burst => {
                if !size_ok(self.step_size) {
                    return bad(format!("step_size {} outside [60, 1500]", self.step_size));
                }
                if !(self.burst_rate.is_finite() && self.burst_rate > 0.0) || self.burst_len == 0 {
                    return bad("burst_rate and burst_len must be positive".into());
                }
                if !(self.surge.is_finite() && self.surge > 0.0) {
                    return bad(format!("surge must be positive, got {}", self.surge));
                }
            }
            PhaseKind::Baseline | PhaseKind::AttackSteady => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub duration_s: f64,
    pub seed: u64,
    pub dest_count: u32,
    pub phases: Vec<PhaseSpec>,
}

/// Traffic level of the quiet phases in the canonical scenarios.
const QUIET_RATE: f64 = 200.0;
const QUIET_SIZE: f64 = 60.0;
const QUIET_JITTER: f64 = 20.0;
/// Latent-load ramp of the canonical preparation phase.
const RAMP_SIZE: f64 = 150.0;
const RAMP_JITTER: f64 = 10.0;
const RAMP_GAIN: f64 = 90.0;
const RAMP_LATENT_BIN: f64 = 0.05;
const RAMP_INNOVATION_SKEW: f64 = -4.0;

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let spec: ScenarioSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(SynthError::BadSpec(format!("duration must be positive, got {}", self.duration_s)));
        }
        if self.dest_count == 0 {
            return Err(SynthError::BadSpec("dest_count must be at least 1".into()));
        }
        if self.phases.is_empty() {
            return Err(SynthError::BadSpec("no phases".into()));
        }
        for (i, p) in self.phases.iter().enumerate() {
            p.validate(i)?;
        }
        let total: f64 = self.phases.iter().map(|p| p.duration_s).sum();
        if (total - self.duration_s).abs() > 1e-6 {
            return Err(SynthError::BadSpec(format!(
                "phase durations sum to {total} s, scenario duration is {} s",
                self.duration_s
            )));
        }
        Ok(())
    }

    /// Start time of each phase.
    pub fn phase_starts(&self) -> Vec<f64> {
        self.phases
            .iter()
            .scan(0.0, |t, p| {
                let start = *t;
                *t += p.duration_s;
                Some(start)
            })
            .collect()
    }

    /// Absolute time of the first kickoff step, if any.
    pub fn kickoff_time_s(&self) -> Option<f64> {
        self.phases
            .iter()
            .zip(self.phase_starts())
            .find(|(p, _)| p.kind == PhaseKind::KickoffStep)
            .map(|(p, start)| start + p.step_at)
    }

    /// Start of the first csd-ramp phase, if any.
    pub fn ramp_start_s(&self) -> Option<f64> {
        self.phases.iter().zip(self.phase_starts()).find(|(p, _)| p.kind == PhaseKind::CsdRamp).map(|(_, s)| s)
    }

    /// The reference attack timeline: one quiet minute, a two-minute
    /// preparation phase of two AR(1) ramps (φ 0.2 → 0.95 each), quiet traffic
    /// up to minute 23, a kickoff minute whose sizes jump from 60 to 1500
    /// bytes half way with a 50× rate surge, then one minute of attack.
    ///
    /// The ramps are driven by left-skewed innovations (occasional deep dips
    /// in the latent load) so that, as φ grows, the observed distribution
    /// becomes less left-skewed: skewness rises together with variance and
    /// autocorrelation.
    ///
    /// The kickoff lands 22 one-minute windows after the start of the ramp.
    pub fn canonical(seed: u64) -> Self {
        let ramp = PhaseSpec {
            gain: RAMP_GAIN,
            latent_bin_s: RAMP_LATENT_BIN,
            innovation_skew: RAMP_INNOVATION_SKEW,
            ..PhaseSpec::csd_ramp(60.0, QUIET_RATE, RAMP_SIZE, RAMP_JITTER, 0.2, 0.95)
        };
        let phases = vec![
            PhaseSpec::baseline(60.0, QUIET_RATE, QUIET_SIZE, QUIET_JITTER),
            ramp.clone(),
            ramp,
            PhaseSpec::baseline(1200.0, QUIET_RATE, QUIET_SIZE, QUIET_JITTER),
            PhaseSpec::kickoff_step(60.0, QUIET_RATE, QUIET_SIZE, QUIET_JITTER, MAX_SIZE, 30.0),
            PhaseSpec::attack_steady(60.0, QUIET_RATE * default_surge(), MAX_SIZE, QUIET_JITTER),
        ];
        let duration_s = phases.iter().map(|p| p.duration_s).sum();
        Self { duration_s, seed, dest_count: 1, phases }
    }

    /// Quiet Poisson traffic only.
    pub fn baseline(seed: u64, duration_s: f64) -> Self {
        Self {
            duration_s,
            seed,
            dest_count: 1,
            phases: vec![PhaseSpec::baseline(duration_s, QUIET_RATE, QUIET_SIZE, QUIET_JITTER)],
        }
    }
}

fn clamp_size(v: f64) -> u16 {
    v.round().clamp(MIN_SIZE, MAX_SIZE) as u16
}

fn jittered<R: Rng>(rng: &mut R, mean: f64, jitter: f64) -> f64 {
    if jitter > 0.0 {
        mean + jitter * rng.sample::<f64, _>(StandardNormal)
    } else {
        mean
    }
}

fn pick_dest<R: Rng>(rng: &mut R, dest_count: u32) -> DestId {
    if dest_count <= 1 {
        DestId(0)
    } else {
        DestId(rng.random_range(0..dest_count))
    }
}

/// Poisson arrival times on `[start, end)`.
fn arrivals<R: Rng>(rng: &mut R, rate: f64, start: f64, end: f64) -> Vec<f64> {
    let exp = Exp::new(rate).expect("positive rate");
    let mut out = Vec::with_capacity(((end - start) * rate * 1.1) as usize + 8);
    let mut t = start;
    loop {
        t += exp.sample(rng);
        if t >= end {
            return out;
        }
        out.push(t);
    }
}

/// Where a phase sits on the scenario's time axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clock {
    pub start_s: f64,
    pub dest_count: u32,
}

/// Quiet (or steady attack) traffic: i.i.d. sizes around `size_mean`.
pub fn generate_steady<R: Rng>(phase: &PhaseSpec, clock: Clock, rng: &mut R) -> Vec<PacketRecord> {
    arrivals(rng, phase.rate, clock.start_s, clock.start_s + phase.duration_s)
        .into_iter()
        .map(|t| {
            let size = clamp_size(jittered(rng, phase.size_mean, phase.size_jitter));
            PacketRecord::from_secs(t, pick_dest(rng, clock.dest_count), size)
        })
        .collect()
}

/// Critical-slowing-down ramp.
///
/// A latent load `x_{j+1} = φ(j) x_j + ε_j` evolves on `latent_bin_s` steps
/// with φ interpolated linearly from `phi_start` to `phi_end`; a packet in
/// step `j` has size `clamp(size_mean + gain·x_j + jitter)`.
pub fn generate_csd_ramp<R: Rng>(phase: &PhaseSpec, clock: Clock, rng: &mut R) -> Vec<PacketRecord> {
    let steps = (phase.duration_s / phase.latent_bin_s).ceil().max(1.0) as usize;
    let phi = |j: usize| {
        let frac = if steps > 1 { j as f64 / (steps - 1) as f64 } else { 0.0 };
        phase.phi_start + (phase.phi_end - phase.phi_start) * frac
    };
    let innovation = Innovation::new(phase.innovation_skew);
    // start from the stationary law at phi_start
    let burn_in = (20.0 / (1.0 - phase.phi_start)).ceil() as usize;
    let mut x = 0.0;
    for _ in 0..burn_in {
        x = phase.phi_start * x + innovation.sample(rng);
    }
    let mut latent = Vec::with_capacity(steps);
    for j in 0..steps {
        latent.push(x);
        x = phi(j) * x + innovation.sample(rng);
    }
    arrivals(rng, phase.rate, clock.start_s, clock.start_s + phase.duration_s)
        .into_iter()
        .map(|t| {
            let j = (((t - clock.start_s) / phase.latent_bin_s) as usize).min(steps - 1);
            let mean = phase.size_mean + phase.gain * latent[j];
            let size = clamp_size(jittered(rng, mean, phase.size_jitter));
            PacketRecord::from_secs(t, pick_dest(rng, clock.dest_count), size)
        })
        .collect()
}

/// Zero-mean, unit-variance innovations with a chosen skewness.
enum Innovation {
    Normal,
    /// `sign · (G − k) / √k` with `G ~ Gamma(k, 1)`, `k = 4 / skew²`.
    Gamma { law: Gamma<f64>, k: f64, sign: f64 },
}

impl Innovation {
    fn new(skew: f64) -> Self {
        if skew == 0.0 {
            return Innovation::Normal;
        }
        let k = 4.0 / (skew * skew);
        Innovation::Gamma { law: Gamma::new(k, 1.0).expect("positive shape"), k, sign: skew.signum() }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Innovation::Normal => rng.sample(StandardNormal),
            Innovation::Gamma { law, k, sign } => sign * (law.sample(rng) - k) / k.sqrt(),
        }
    }
}

/// Abrupt attack start: `size_mean` traffic at `rate` until `step_at`, then
/// `step_size` traffic at `rate × surge`.
pub fn generate_kickoff_step<R: Rng>(phase: &PhaseSpec, clock: Clock, rng: &mut R) -> Vec<PacketRecord> {
    let step = clock.start_s + phase.step_at;
    let end = clock.start_s + phase.duration_s;
    let mut out = Vec::new();
    for (t0, t1, rate, size) in [
        (clock.start_s, step, phase.rate, phase.size_mean),
        (step, end, phase.rate * phase.surge, phase.step_size),
    ] {
        if t1 <= t0 {
            continue;
        }
        for t in arrivals(rng, rate, t0, t1) {
            let s = clamp_size(jittered(rng, size, phase.size_jitter));
            out.push(PacketRecord::from_secs(t, pick_dest(rng, clock.dest_count), s));
        }
    }
    out
}

/// Quiet traffic with Poisson-timed trains of `burst_len` oversized packets.
pub fn generate_bursts<R: Rng>(phase: &PhaseSpec, clock: Clock, rng: &mut R) -> Vec<PacketRecord> {
    let end = clock.start_s + phase.duration_s;
    let mut out = generate_steady(phase, clock, rng);
    let gap = Exp::new(phase.rate * phase.surge).expect("positive rate");
    for t0 in arrivals(rng, phase.burst_rate, clock.start_s, end) {
        let mut t = t0;
        for _ in 0..phase.burst_len {
            if t >= end {
                break;
            }
            let s = clamp_size(jittered(rng, phase.step_size, phase.size_jitter));
            out.push(PacketRecord::from_secs(t, pick_dest(rng, clock.dest_count), s));
            t += gap.sample(rng);
        }
    }
    out.sort_by_key(|r| r.t_us);
    out
}

/// Generates the whole scenario. Output is a pure function of the spec.
///
/// Timestamps are strictly increasing microseconds: arrivals that round onto
/// an already used microsecond are nudged forward by one.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Vec<PacketRecord>, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out: Vec<PacketRecord> = Vec::new();
    for (phase, start_s) in spec.phases.iter().zip(spec.phase_starts()) {
        let clock = Clock { start_s, dest_count: spec.dest_count };
        let part = match phase.kind {
            PhaseKind::Baseline | PhaseKind::AttackSteady => generate_steady(phase, clock, &mut rng),
            PhaseKind::CsdRamp => generate_csd_ramp(phase, clock, &mut rng),
            PhaseKind::KickoffStep => generate_kickoff_step(phase, clock, &mut rng),
            PhaseKind::Burst => generate_bursts(phase, clock, &mut rng),
        };
        out.extend(part);
    }
    let mut prev: Option<u64> = None;
    for r in &mut out {
        if let Some(p) = prev {
            r.t_us = r.t_us.max(p + 1);
        }
        prev = Some(r.t_us);
    }
    debug_assert!(out.last().is_none_or(|r| r.t_us <= secs_to_micros(spec.duration_s) + out.len() as u64));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicators::lag1_autocorrelation;

    #[test]
    fn innovations_have_unit_variance_and_requested_skew() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for target in [0.0, -1.0, 2.0, -4.0] {
            let law = Innovation::new(target);
            let xs: Vec<f64> = (0..400_000).map(|_| law.sample(&mut rng)).collect();
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
            assert!(mean.abs() < 0.01, "{target}: mean {mean}");
            assert!((m2 - 1.0).abs() < 0.02, "{target}: variance {m2}");
            assert!((m3 / m2.powf(1.5) - target).abs() < 0.15 * target.abs().max(1.0), "{target}: skew {}", m3 / m2.powf(1.5));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = ScenarioSpec::baseline(7, 30.0);
        assert_eq!(generate_scenario(&spec).unwrap(), generate_scenario(&spec).unwrap());
        let other = ScenarioSpec { seed: 8, ..spec.clone() };
        assert_ne!(generate_scenario(&spec).unwrap(), generate_scenario(&other).unwrap());
    }

    #[test]
    fn strictly_increasing_and_in_range() {
        let recs = generate_scenario(&ScenarioSpec::canonical(3)).unwrap();
        assert!(recs.windows(2).all(|p| p[0].t_us < p[1].t_us));
        assert!(recs.iter().all(|r| (60..=1500).contains(&r.size)));
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = ScenarioSpec::baseline(1, 60.0);
        spec.phases[0].size_mean = 2000.0;
        assert!(matches!(spec.validate(), Err(SynthError::BadSpec(_))));
        let mut spec = ScenarioSpec::baseline(1, 60.0);
        spec.duration_s = 90.0;
        assert!(matches!(spec.validate(), Err(SynthError::BadSpec(_))));
        let mut spec = ScenarioSpec::canonical(1);
        spec.phases[1].phi_start = 0.9;
        spec.phases[1].phi_end = 0.5;
        assert!(matches!(spec.validate(), Err(SynthError::BadSpec(_))));
        spec.phases[1].phi_end = 1.0;
        assert!(matches!(spec.validate(), Err(SynthError::BadSpec(_))));
        assert!(matches!(ScenarioSpec::from_json("{ not json"), Err(SynthError::Json(_))));
    }

    #[test]
    fn canonical_timeline() {
        let spec = ScenarioSpec::canonical(0);
        spec.validate().unwrap();
        assert_eq!(spec.ramp_start_s(), Some(60.0));
        assert_eq!(spec.kickoff_time_s(), Some(1410.0));
        assert_eq!(spec.phase_starts()[4], 1380.0);
    }

    #[test]
    fn json_round_trip_with_defaults() {
        let text = r#"{"duration_s": 10, "seed": 4, "dest_count": 2,
            "phases": [{"kind": "kickoff-step", "duration_s": 10, "rate": 50, "size_mean": 60, "step_size": 1500, "step_at": 5}]}"#;
        let spec = ScenarioSpec::from_json(text).unwrap();
        assert_eq!(spec.phases[0].surge, 50.0);
        assert_eq!(ScenarioSpec::from_json(&spec.to_json()).unwrap(), spec);
    }

    #[test]
    fn flat_ramp_is_uncorrelated() {
        let phase = PhaseSpec::csd_ramp(600.0, 50.0, 700.0, 0.0, 0.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let recs = generate_csd_ramp(&phase, Clock { start_s: 0.0, dest_count: 1 }, &mut rng);
        let mut sums = vec![(0.0, 0usize); 6000];
        for r in &recs {
            let j = (r.t_us / 100_000) as usize;
            sums[j].0 += r.size as f64;
            sums[j].1 += 1;
        }
        let bins: Vec<f64> = sums.iter().filter(|s| s.1 > 0).map(|s| s.0 / s.1 as f64).collect();
        let mean = bins.iter().sum::<f64>() / bins.len() as f64;
        assert!((mean - 700.0).abs() < 2.0, "{mean}");
        assert!(lag1_autocorrelation(&bins).unwrap().abs() < 0.05);
    }

    #[test]
    fn kickoff_sizes_split_at_step() {
        let phase = PhaseSpec::kickoff_step(60.0, 100.0, 60.0, 0.0, 1500.0, 30.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let recs = generate_kickoff_step(&phase, Clock { start_s: 0.0, dest_count: 1 }, &mut rng);
        let mean = |lo: f64, hi: f64| {
            let v: Vec<f64> =
                recs.iter().filter(|r| r.t_secs() >= lo && r.t_secs() < hi).map(|r| r.size as f64).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert_eq!(mean(0.0, 30.0), 60.0);
        assert_eq!(mean(30.0, 60.0), 1500.0);

        let all_step = PhaseSpec { step_at: 0.0, ..phase.clone() };
        let recs = generate_kickoff_step(&all_step, Clock { start_s: 0.0, dest_count: 1 }, &mut rng);
        assert!(recs.iter().all(|r| r.size == 1500));

        let no_surge = PhaseSpec { surge: 1.0, ..phase };
        let n = generate_kickoff_step(&no_surge, Clock { start_s: 0.0, dest_count: 1 }, &mut rng).len() as f64;
        assert!((n - 6000.0).abs() < 4.0 * 6000f64.sqrt(), "{n}");
    }

    #[test]
    fn bursts_add_oversized_trains() {
        let phase = PhaseSpec {
            kind: PhaseKind::Burst,
            step_size: 1500.0,
            burst_rate: 0.5,
            burst_len: 10,
            ..PhaseSpec::baseline(60.0, 100.0, 60.0, 0.0)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let recs = generate_bursts(&phase, Clock { start_s: 0.0, dest_count: 3 }, &mut rng);
        assert!(recs.windows(2).all(|p| p[0].t_us <= p[1].t_us));
        let big = recs.iter().filter(|r| r.size == 1500).count();
        assert!(big > 50 && big < 600, "{big}");
        assert!(recs.iter().all(|r| r.dest.0 < 3));
    }
}
