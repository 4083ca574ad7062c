//! Summary statistics, Pearson correlation and least-squares fits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::special::student_t_two_sided;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("empty input")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("zero variance: correlation undefined")]
    ZeroVariance,
    #[error("non-finite input value")]
    NonFinite,
    #[error("{0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

fn check_finite(values: &[f64]) -> Result<(), StatsError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

pub fn mean(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Linear-interpolation quantile of already sorted data (the "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Result<f64, StatsError> {
    if sorted.is_empty() {
        return Err(StatsError::Empty);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(StatsError::InvalidArgument(format!(
            "quantile {p} outside [0, 1]"
        )));
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Mean, median and quartiles.
pub fn distribution_stats(scores: &[f64]) -> Result<Distribution, StatsError> {
    if scores.is_empty() {
        return Err(StatsError::Empty);
    }
    check_finite(scores)?;
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Distribution {
        count: scores.len(),
        mean: mean(scores)?,
        median: quantile_sorted(&sorted, 0.5)?,
        q1: quantile_sorted(&sorted, 0.25)?,
        q3: quantile_sorted(&sorted, 0.75)?,
    })
}

struct Moments {
    sxx: f64,
    syy: f64,
    sxy: f64,
    mean_x: f64,
    mean_y: f64,
}

fn is_degenerate(values: &[f64], centered_ss: f64) -> bool {
    if values.iter().all(|&v| v == values[0]) {
        return true;
    }
    // Guards against rounding residue in the mean of near-identical values.
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    centered_ss <= values.len() as f64 * (16.0 * f64::EPSILON * scale).powi(2)
}

fn moments(x: &[f64], y: &[f64], min_len: usize) -> Result<Moments, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < min_len {
        return Err(StatsError::TooFewPoints {
            needed: min_len,
            got: x.len(),
        });
    }
    check_finite(x)?;
    check_finite(y)?;
    let mean_x = mean(x)?;
    let mean_y = mean(y)?;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    Ok(Moments {
        sxx,
        syy,
        sxy,
        mean_x,
        mean_y,
    })
}

/// Sample Pearson coefficient alone; defined from two points up.
pub fn pearson_rho(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    let m = moments(x, y, 2)?;
    if is_degenerate(x, m.sxx) || is_degenerate(y, m.syy) {
        return Err(StatsError::ZeroVariance);
    }
    Ok((m.sxy / (m.sxx * m.syy).sqrt()).clamp(-1.0, 1.0))
}

/// Sample Pearson coefficient with a two-sided Student-t p-value on `n - 2` degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    if x.len() == y.len() && x.len() < 3 {
        return Err(StatsError::TooFewPoints {
            needed: 3,
            got: x.len(),
        });
    }
    let rho = pearson_rho(x, y)?;
    Ok(Correlation {
        rho,
        p_value: correlation_p_value(rho, x.len()),
        n: x.len(),
    })
}

/// Two-sided p-value of `rho` over `n >= 3` samples.
pub fn correlation_p_value(rho: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    if rho.abs() >= 1.0 {
        return 0.0;
    }
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    student_t_two_sided(t, df)
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit, StatsError> {
    let m = moments(x, y, 2)?;
    if is_degenerate(x, m.sxx) {
        return Err(StatsError::ZeroVariance);
    }
    let slope = m.sxy / m.sxx;
    Ok(LinearFit {
        slope,
        intercept: m.mean_y - slope * m.mean_x,
    })
}
