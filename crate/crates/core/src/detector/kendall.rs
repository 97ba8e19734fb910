use std::cmp::Ordering;

use crate::indicators::{NullReason, Reading};

/// Kendall's tau-a of the values against their index order.
///
/// `(concordant - discordant) / C(n, 2)`; tied pairs count as neither. Needs
/// at least three values.
pub fn kendall_tau(values: &[f64]) -> Result<f64, NullReason> {
    let n = values.len();
    if n < 3 {
        return Err(NullReason::TooFewValid);
    }
    let mut score: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            match values[j].partial_cmp(&values[i]) {
                Some(Ordering::Greater) => score += 1,
                Some(Ordering::Less) => score -= 1,
                _ => {}
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(score as f64 / pairs)
}

/// Tau over the non-null readings, in their original order.
pub fn kendall_tau_readings(readings: impl IntoIterator<Item = Reading>) -> Result<f64, NullReason> {
    let values: Vec<f64> = readings.into_iter().filter_map(Result::ok).collect();
    kendall_tau(&values)
}
