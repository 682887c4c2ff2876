//! Posterior summaries from retained draws.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::samplers::{batch_means_mcse, ChainOutput};

/// Type-7 (linear interpolation) sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let m = sorted.len();
    assert!(m > 0, "quantile of empty sample");
    let h = (m - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(m - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(x: &[f64], prob: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    quantile_sorted(&s, prob)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefSummary {
    pub coefficient: String,
    pub mean: f64,
    pub variance: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub median: f64,
    pub mcse: f64,
}

impl CoefSummary {
    pub fn contains(&self, v: f64) -> bool {
        self.ci_lo <= v && v <= self.ci_hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorSummary {
    pub alpha: f64,
    pub rows: Vec<CoefSummary>,
}

impl PosteriorSummary {
    pub fn get(&self, name: &str) -> Option<&CoefSummary> {
        self.rows.iter().find(|r| r.coefficient == name)
    }
}

pub fn summarize_series(name: &str, x: &[f64], alpha: f64) -> Result<CoefSummary> {
    if x.len() < 100 {
        return Err(Error::InvalidParameter(format!(
            "summaries need at least 100 retained draws, got {}",
            x.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let m = x.len() as f64;
    let mean = x.iter().sum::<f64>() / m;
    let variance = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    Ok(CoefSummary {
        coefficient: name.to_string(),
        mean,
        variance,
        ci_lo: quantile_sorted(&s, alpha / 2.0),
        ci_hi: quantile_sorted(&s, 1.0 - alpha / 2.0),
        median: quantile_sorted(&s, 0.5),
        mcse: batch_means_mcse(x),
    })
}

/// Summaries of every β coefficient, then τ_ε and τ_s when sampled.
pub fn summarize(chain: &ChainOutput, alpha: f64) -> Result<PosteriorSummary> {
    let rows = chain
        .series()
        .iter()
        .map(|(n, s)| summarize_series(n, s, alpha))
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorSummary { alpha, rows })
}
