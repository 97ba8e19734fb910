use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::kendall::kendall_tau_readings;
use crate::indicators::{Indicator, IndicatorSample, NullReason, Reading};

/// Trend thresholds for the precursor verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Minimum |tau| for a trend to count, in `(0, 1]`.
    pub tau_min: f64,
    /// Minimum fraction of non-null samples per indicator, in `[0, 1]`.
    pub min_valid: f64,
    /// Only use the last `suffix` samples of each trajectory.
    pub suffix: Option<usize>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { tau_min: 0.5, min_valid: 0.6, suffix: None }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tau_min > 0.0 && self.tau_min <= 1.0) {
            return Err(format!("tau_min must lie in (0, 1], got {}", self.tau_min));
        }
        if !(0.0..=1.0).contains(&self.min_valid) {
            return Err(format!("min_valid must lie in [0, 1], got {}", self.min_valid));
        }
        if self.suffix == Some(0) {
            return Err("suffix must be positive".into());
        }
        Ok(())
    }
}

/// One value per indicator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerIndicator<T> {
    pub rr: T,
    pub ac1: T,
    pub cv: T,
    pub skew: T,
}

impl<T: Copy> PerIndicator<T> {
    pub fn get(&self, ind: Indicator) -> T {
        match ind {
            Indicator::ReturnRate => self.rr,
            Indicator::Ac1 => self.ac1,
            Indicator::Cv => self.cv,
            Indicator::Skewness => self.skew,
        }
    }

    pub fn from_fn(mut f: impl FnMut(Indicator) -> T) -> Self {
        Self {
            rr: f(Indicator::ReturnRate),
            ac1: f(Indicator::Ac1),
            cv: f(Indicator::Cv),
            skew: f(Indicator::Skewness),
        }
    }
}

/// Kendall trend of each indicator across one window's trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendStats {
    pub tau: PerIndicator<Reading>,
    pub valid_fraction: PerIndicator<f64>,
    pub samples: usize,
}

impl TrendStats {
    pub fn from_trajectory(traj: &[IndicatorSample], suffix: Option<usize>) -> Self {
        let skip = suffix.map_or(0, |k| traj.len().saturating_sub(k));
        let traj = &traj[skip..];
        let column = |ind: Indicator| traj.iter().map(move |s| s.readings()[ind as usize]);
        let valid_fraction = PerIndicator::from_fn(|ind| {
            if traj.is_empty() {
                0.0
            } else {
                column(ind).filter(Result::is_ok).count() as f64 / traj.len() as f64
            }
        });
        Self { tau: PerIndicator::from_fn(|ind| kendall_tau_readings(column(ind))), valid_fraction, samples: traj.len() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Precursor,
    NoPrecursor,
    Inconclusive,
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Label::Precursor => "Precursor",
            Label::NoPrecursor => "NoPrecursor",
            Label::Inconclusive => "Inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecursorVerdict {
    pub label: Label,
    pub trend: TrendStats,
    pub window_index: usize,
    pub explanation: String,
}

/// Direction each indicator takes ahead of a critical transition: the return
/// rate falls, the other three rise.
fn expected_sign(ind: Indicator) -> f64 {
    match ind {
        Indicator::ReturnRate => -1.0,
        _ => 1.0,
    }
}

fn short_name(ind: Indicator) -> &'static str {
    match ind {
        Indicator::ReturnRate => "rr",
        Indicator::Ac1 => "ac1",
        Indicator::Cv => "cv",
        Indicator::Skewness => "skew",
    }
}

pub fn classify_precursor(traj: &[IndicatorSample], cfg: &DetectorConfig, window_index: usize) -> PrecursorVerdict {
    verdict_from_trend(TrendStats::from_trajectory(traj, cfg.suffix), cfg, window_index)
}

/// Three-way verdict from the trend statistics.
///
/// * `Precursor`: all four taus defined, every indicator valid often enough,
///   and each moves in its expected direction by at least `tau_min`.
/// * `NoPrecursor`: all four taus defined and at least one moves against its
///   expected direction by at least `tau_min`.
/// * `Inconclusive`: anything else.
pub fn verdict_from_trend(trend: TrendStats, cfg: &DetectorConfig, window_index: usize) -> PrecursorVerdict {
    let mut summary = String::new();
    for ind in Indicator::ALL {
        let _ = match trend.tau.get(ind) {
            Ok(t) => write!(summary, "{} {:+.2}, ", short_name(ind), t),
            Err(r) => write!(summary, "{} null ({}), ", short_name(ind), r.as_str()),
        };
    }
    summary.truncate(summary.len().saturating_sub(2));

    let verdict = |label, explanation: String| PrecursorVerdict { label, trend, window_index, explanation };

    if trend.samples == 0 {
        return verdict(Label::Inconclusive, "empty trajectory".into());
    }
    let missing: Vec<(Indicator, NullReason)> =
        Indicator::ALL.iter().filter_map(|&i| trend.tau.get(i).err().map(|r| (i, r))).collect();
    if !missing.is_empty() {
        let names: Vec<_> = missing.iter().map(|(i, r)| format!("{} ({})", short_name(*i), r.as_str())).collect();
        return verdict(Label::Inconclusive, format!("trend undefined for {}; {summary}", names.join(", ")));
    }

    let signed = |ind: Indicator| expected_sign(ind) * trend.tau.get(ind).unwrap_or(0.0);
    let opposite: Vec<_> = Indicator::ALL.iter().copied().filter(|&i| signed(i) <= -cfg.tau_min).collect();
    if !opposite.is_empty() {
        let names: Vec<_> = opposite.iter().map(|&i| short_name(i)).collect();
        return verdict(
            Label::NoPrecursor,
            format!("{} against the precursor direction at tau_min {:.2}; {summary}", names.join(", "), cfg.tau_min),
        );
    }

    let sparse: Vec<_> =
        Indicator::ALL.iter().copied().filter(|&i| trend.valid_fraction.get(i) < cfg.min_valid).collect();
    if !sparse.is_empty() {
        let names: Vec<_> =
            sparse.iter().map(|&i| format!("{} {:.2}", short_name(i), trend.valid_fraction.get(i))).collect();
        return verdict(
            Label::Inconclusive,
            format!("valid fraction below {:.2} for {}; {summary}", cfg.min_valid, names.join(", ")),
        );
    }

    let weak: Vec<_> = Indicator::ALL.iter().copied().filter(|&i| signed(i) < cfg.tau_min).collect();
    if weak.is_empty() {
        verdict(Label::Precursor, format!("full signature at tau_min {:.2}; {summary}", cfg.tau_min))
    } else {
        let names: Vec<_> = weak.iter().map(|&i| short_name(i)).collect();
        verdict(
            Label::Inconclusive,
            format!("{} below tau_min {:.2}; {summary}", names.join(", "), cfg.tau_min),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trend(rr: f64, ac1: f64, cv: f64, skew: f64) -> TrendStats {
        TrendStats {
            tau: PerIndicator { rr: Ok(rr), ac1: Ok(ac1), cv: Ok(cv), skew: Ok(skew) },
            valid_fraction: PerIndicator { rr: 1.0, ac1: 1.0, cv: 1.0, skew: 1.0 },
            samples: 51,
        }
    }

    fn label(t: TrendStats) -> Label {
        verdict_from_trend(t, &DetectorConfig::default(), 0).label
    }

    #[test]
    fn three_way_examples() {
        assert_eq!(label(trend(-0.8, 0.9, 0.7, 0.6)), Label::Precursor);
        assert_eq!(label(trend(0.6, -0.7, -0.6, -0.5)), Label::NoPrecursor);
        assert_eq!(label(trend(-0.2, 0.1, 0.9, 0.9)), Label::Inconclusive);
    }

    #[test]
    fn threshold_is_inclusive() {
        assert_eq!(label(trend(-0.5, 0.5, 0.5, 0.5)), Label::Precursor);
        assert_eq!(label(trend(-0.9, 0.9, 0.9, -0.5)), Label::NoPrecursor);
    }

    #[test]
    fn sparse_or_missing_is_inconclusive() {
        let mut t = trend(-0.8, 0.9, 0.7, 0.6);
        t.valid_fraction.skew = 0.3;
        assert_eq!(label(t), Label::Inconclusive);
        let mut t = trend(-0.8, 0.9, 0.7, 0.6);
        t.tau.ac1 = Err(NullReason::TooFewValid);
        let v = verdict_from_trend(t, &DetectorConfig::default(), 4);
        assert_eq!(v.label, Label::Inconclusive);
        assert!(v.explanation.contains("too_few_valid"));
        assert_eq!(v.window_index, 4);
    }

    #[test]
    fn empty_trajectory() {
        assert_eq!(classify_precursor(&[], &DetectorConfig::default(), 0).label, Label::Inconclusive);
    }

    #[test]
    fn suffix_restricts_the_trend() {
        let s = |i: usize, v: f64| IndicatorSample { t_mid: i as f64, return_rate: Ok(-v), ac1: Ok(v), cv: Ok(v), skewness: Ok(v) };
        // rises over the first half, falls over the second
        let traj: Vec<_> = (0..20).map(|i| s(i, if i < 10 { i as f64 } else { (20 - i) as f64 })).collect();
        let full = TrendStats::from_trajectory(&traj, None);
        let tail = TrendStats::from_trajectory(&traj, Some(10));
        assert_eq!(tail.samples, 10);
        assert_eq!(tail.tau.ac1, Ok(-1.0));
        assert!(full.tau.ac1.unwrap().abs() < 0.2);
    }

    #[test]
    fn config_validation() {
        assert!(DetectorConfig::default().validate().is_ok());
        assert!(DetectorConfig { tau_min: 0.0, ..Default::default() }.validate().is_err());
        assert!(DetectorConfig { tau_min: 1.5, ..Default::default() }.validate().is_err());
        assert!(DetectorConfig { min_valid: -0.1, ..Default::default() }.validate().is_err());
    }
}
