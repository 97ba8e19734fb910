use nalgebra::DMatrix;

use super::NullReason;
use crate::timeseries::ObservableMatrix;

/// Fewer bins than this cannot support an autoregressive fit.
pub const MIN_RETURN_RATE_COLUMNS: usize = 10;

/// Ridge strength relative to the mean row variance, multivariate fits only.
const RIDGE_FACTOR: f64 = 1e-6;

/// First-order autoregressive fit `x_{j+1} = A x_j` on demeaned matrix rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Fit {
    /// Largest eigenvalue modulus of `A`.
    pub lambda: f64,
    pub residual_rms: f64,
    /// Non-constant rows that entered the fit.
    pub rows_used: usize,
}

impl Ar1Fit {
    pub fn return_rate(&self) -> f64 {
        1.0 - self.lambda.min(1.0)
    }
}

/// Return rate `1 - min(λ, 1)` of the observable matrix.
///
/// Each row is demeaned, constant rows are dropped, and the column-to-column
/// transition is fitted by least squares. With a single remaining row this is
/// the scalar regression slope of `x_{j+1}` on `x_j`; with several rows the
/// operator is fitted with a small ridge term and `λ` is its spectral radius.
pub fn return_rate(m: &ObservableMatrix) -> Result<(f64, Ar1Fit), NullReason> {
    if m.rows() == 0 {
        return Err(NullReason::NoData);
    }
    if m.cols() < MIN_RETURN_RATE_COLUMNS {
        return Err(NullReason::TooShort);
    }
    let rows: Vec<Vec<f64>> = m
        .iter_rows()
        .filter(|r| r.iter().any(|&v| v != r[0]))
        .map(|r| {
            let mu = r.iter().sum::<f64>() / r.len() as f64;
            r.iter().map(|v| v - mu).collect()
        })
        .collect();
    let fit = match rows.len() {
        0 => return Err(NullReason::DegenerateMatrix),
        1 => scalar_fit(&rows[0])?,
        _ => operator_fit(&rows)?,
    };
    Ok((fit.return_rate(), fit))
}

fn scalar_fit(x: &[f64]) -> Result<Ar1Fit, NullReason> {
    let m = x.len() - 1;
    let sxx: f64 = x[..m].iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(NullReason::IllConditioned);
    }
    let sxy: f64 = x.windows(2).map(|p| p[0] * p[1]).sum();
    let slope = sxy / sxx;
    let rss: f64 = x.windows(2).map(|p| (p[1] - slope * p[0]).powi(2)).sum();
    Ok(Ar1Fit { lambda: slope.abs(), residual_rms: (rss / m as f64).sqrt(), rows_used: 1 })
}

fn operator_fit(rows: &[Vec<f64>]) -> Result<Ar1Fit, NullReason> {
    let d = rows.len();
    let n = rows[0].len();
    let m = n - 1;
    if d >= m {
        return Err(NullReason::IllConditioned);
    }
    let x = DMatrix::from_fn(d, m, |r, c| rows[r][c]);
    let y = DMatrix::from_fn(d, m, |r, c| rows[r][c + 1]);
    let scale = 1.0 / m as f64;
    let mean_var = rows.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>() / n as f64).sum::<f64>() / d as f64;

    let mut gram = (&x * x.transpose()) * scale;
    for i in 0..d {
        gram[(i, i)] += RIDGE_FACTOR * mean_var;
    }
    let cross = (&y * x.transpose()) * scale;
    // A = C G^-1, solved as G A^T = C^T since G is symmetric
    let chol = gram.cholesky().ok_or(NullReason::IllConditioned)?;
    let a = chol.solve(&cross.transpose()).transpose();
    if a.iter().any(|v| !v.is_finite()) {
        return Err(NullReason::IllConditioned);
    }
    let lambda = a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !lambda.is_finite() {
        return Err(NullReason::IllConditioned);
    }
    let resid = &y - &a * &x;
    let residual_rms = (resid.norm_squared() / (d * m) as f64).sqrt();
    Ok(Ar1Fit { lambda, residual_rms, rows_used: d })
}
