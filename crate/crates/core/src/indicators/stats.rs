use serde::{Deserialize, Serialize};

use super::NullReason;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub n: usize,
    pub mu: f64,
    /// Sample standard deviation, divisor `n - 1`.
    pub sd: f64,
    /// Population variance, divisor `n`.
    pub var: f64,
}

fn is_constant(z: &[f64]) -> bool {
    z.iter().all(|&v| v == z[0])
}

fn mean(z: &[f64]) -> f64 {
    z.iter().sum::<f64>() / z.len() as f64
}

/// Mean, sample standard deviation and population variance. Needs `n >= 2`.
pub fn summary_stats(z: &[f64]) -> Result<SummaryStats, NullReason> {
    let n = z.len();
    if n < 2 {
        return Err(NullReason::TooShort);
    }
    if is_constant(z) {
        return Ok(SummaryStats { n, mu: z[0], sd: 0.0, var: 0.0 });
    }
    let mu = mean(z);
    let ss: f64 = z.iter().map(|v| (v - mu).powi(2)).sum();
    Ok(SummaryStats { n, mu, sd: (ss / (n - 1) as f64).sqrt(), var: ss / n as f64 })
}

/// Lag-1 autocorrelation with a single window mean and the population
/// variance in the denominator:
///
/// `ρ1 = mean_{t<n}[(z_t - μ)(z_{t+1} - μ)] / σ²`, clamped to `[-1, 1]`.
pub fn lag1_autocorrelation(z: &[f64]) -> Result<f64, NullReason> {
    if z.len() < 3 {
        return Err(NullReason::TooShort);
    }
    let s = summary_stats(z)?;
    if s.var == 0.0 {
        return Err(NullReason::SigmaZero);
    }
    let cross: f64 = z.windows(2).map(|p| (p[0] - s.mu) * (p[1] - s.mu)).sum();
    let rho = cross / (z.len() - 1) as f64 / s.var;
    Ok(rho.clamp(-1.0, 1.0))
}

/// `SD / μ` with the `n - 1` standard deviation.
pub fn coefficient_of_variation(z: &[f64]) -> Result<f64, NullReason> {
    let s = summary_stats(z)?;
    if s.mu == 0.0 {
        return Err(NullReason::ZeroMean);
    }
    Ok(s.sd / s.mu)
}

/// Normalization of the third central moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkewVariant {
    /// `m3 / m2^(3/2)`, the dimensionless moment coefficient.
    #[default]
    Standard,
    /// `m3 / m2^(1/2)`. Carries units of the series squared.
    RootM2,
}

pub fn skewness(z: &[f64], variant: SkewVariant) -> Result<f64, NullReason> {
    if z.len() < 3 {
        return Err(NullReason::TooShort);
    }
    let s = summary_stats(z)?;
    if s.var == 0.0 {
        return Err(NullReason::SigmaZero);
    }
    let n = z.len() as f64;
    let m2 = s.var;
    let m3 = z.iter().map(|v| (v - s.mu).powi(3)).sum::<f64>() / n;
    Ok(match variant {
        SkewVariant::Standard => m3 / m2.powf(1.5),
        SkewVariant::RootM2 => m3 / m2.sqrt(),
    })
}

/// Removes the least-squares line and adds the mean back, so the level
/// (and therefore the coefficient of variation) stays meaningful.
pub fn detrend_linear(z: &[f64]) -> Vec<f64> {
    let n = z.len();
    if n < 3 {
        return z.to_vec();
    }
    let t_mean = (n - 1) as f64 / 2.0;
    let z_mean = mean(z);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, v) in z.iter().enumerate() {
        let dt = t as f64 - t_mean;
        sxy += dt * (v - z_mean);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    z.iter().enumerate().map(|(t, v)| v - slope * (t as f64 - t_mean)).collect()
}
