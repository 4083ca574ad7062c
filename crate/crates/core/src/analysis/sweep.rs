//! Correlation heatmaps over a grid of (uniqueness, popularity) thresholds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::StatsError;
use super::{correlate_defined, Analysis};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub alpha: f64,
    pub beta: f64,
    pub rho_unique: Option<f64>,
    pub p_unique: Option<f64>,
    pub rho_mislead: Option<f64>,
    pub p_mislead: Option<f64>,
    pub rho_syn: Option<f64>,
    pub p_syn: Option<f64>,
    /// Scenes with a defined unique / misleading / synthesized mean.
    pub scenes_unique: usize,
    pub scenes_mislead: usize,
    pub scenes_syn: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepStatistic {
    Unique,
    Mislead,
    Syn,
}

impl SweepCell {
    pub fn rho(&self, stat: SweepStatistic) -> Option<f64> {
        match stat {
            SweepStatistic::Unique => self.rho_unique,
            SweepStatistic::Mislead => self.rho_mislead,
            SweepStatistic::Syn => self.rho_syn,
        }
    }
}

/// Thresholds `lo, lo + step, ..., <= hi`, each snapped to 12 decimals so that
/// e.g. `11 * 0.05` compares equal to the literal `0.55`.
pub fn threshold_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>, StatsError> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi < lo {
        return Err(StatsError::InvalidArgument(format!(
            "invalid threshold range {lo}:{hi} with step {step}"
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| {
            let v = lo + i as f64 * step;
            (v * 1e12).round() / 1e12
        })
        .collect())
}

fn cell(analysis: &Analysis, alpha: f64, beta: f64) -> SweepCell {
    let accuracy = analysis.accuracy();
    let means: Vec<_> = analysis
        .scenes()
        .iter()
        .map(|s| analysis.class_means(s.label, alpha, beta))
        .collect();
    let pairs = |f: &dyn Fn(&super::ClassMeans) -> Option<f64>| -> Vec<(Option<f64>, f64)> {
        means
            .iter()
            .zip(accuracy)
            .map(|(m, &acc)| (f(m), acc))
            .collect()
    };
    let unique = correlate_defined(&pairs(&|m| m.s_unique));
    let mislead = correlate_defined(&pairs(&|m| m.s_mislead));
    let syn = correlate_defined(&pairs(&|m| m.s_syn()));
    SweepCell {
        alpha,
        beta,
        rho_unique: unique.rho,
        p_unique: unique.p_value,
        rho_mislead: mislead.rho,
        p_mislead: mislead.p_value,
        rho_syn: syn.rho,
        p_syn: syn.p_value,
        scenes_unique: unique.n,
        scenes_mislead: mislead.n,
        scenes_syn: syn.n,
    }
}

/// One cell per `(alpha, beta)`, alpha-major. Cells are computed in parallel
/// and returned in grid order.
pub fn sweep(analysis: &Analysis, alphas: &[f64], betas: &[f64]) -> Vec<SweepCell> {
    let grid: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| betas.iter().map(move |&b| (a, b)))
        .collect();
    grid.par_iter()
        .map(|&(a, b)| cell(analysis, a, b))
        .collect()
}

/// First cell (grid order) with the largest defined rho, or the smallest when `maximize` is false.
pub fn best_cell(cells: &[SweepCell], stat: SweepStatistic, maximize: bool) -> Option<&SweepCell> {
    let mut best: Option<(&SweepCell, f64)> = None;
    for c in cells {
        let Some(r) = c.rho(stat) else { continue };
        let better = match best {
            None => true,
            Some((_, b)) => {
                if maximize {
                    r > b
                } else {
                    r < b
                }
            }
        };
        if better {
            best = Some((c, r));
        }
    }
    best.map(|(c, _)| c)
}
