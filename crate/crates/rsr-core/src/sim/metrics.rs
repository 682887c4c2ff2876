//! Per-interval classifications and aggregate metrics.

use serde::Serialize;

use crate::analytics::summary::quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Agreement {
    /// Both intervals cover the truth, or neither does.
    Agree,
    /// Only the RHZ interval covers.
    RhzPlus,
    /// Only the NS interval covers.
    NsPlus,
}

pub fn covers(ci: (f64, f64), truth: f64) -> bool {
    ci.0 <= truth && truth <= ci.1
}

/// Interval excludes zero (power when the truth is non-zero, Type-S error
/// when it is zero).
pub fn excludes_zero(ci: (f64, f64)) -> bool {
    !covers(ci, 0.0)
}

pub fn agreement_classify(ci_rhz: (f64, f64), ci_ns: (f64, f64), truth: f64) -> Agreement {
    match (covers(ci_rhz, truth), covers(ci_ns, truth)) {
        (true, false) => Agreement::RhzPlus,
        (false, true) => Agreement::NsPlus,
        _ => Agreement::Agree,
    }
}

/// inner ⊆ outer.
pub fn nested(inner: (f64, f64), outer: (f64, f64)) -> bool {
    outer.0 <= inner.0 && inner.1 <= outer.1
}

pub fn percent(hits: usize, total: usize) -> f64 {
    if total == 0 {
        f64::NAN
    } else {
        100.0 * hits as f64 / total as f64
    }
}

/// (Agree, RHZ+, NS+) in percent.
pub fn agreement_triple(items: &[Agreement]) -> (f64, f64, f64) {
    let c = |a: Agreement| items.iter().filter(|&&x| x == a).count();
    (
        percent(c(Agreement::Agree), items.len()),
        percent(c(Agreement::RhzPlus), items.len()),
        percent(c(Agreement::NsPlus), items.len()),
    )
}

/// 10th and 90th percentiles of truth - estimate.
pub fn bias_percentiles(estimates: &[f64], truth: f64) -> (f64, f64) {
    if estimates.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let bias: Vec<f64> = estimates.iter().map(|e| truth - e).collect();
    (quantile(&bias, 0.1), quantile(&bias, 0.9))
}

/// Average squared error of the point estimates.
pub fn mean_squared_error(estimates: &[f64], truth: f64) -> f64 {
    if estimates.is_empty() {
        return f64::NAN;
    }
    estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / estimates.len() as f64
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = 0.5 * (i + j) as f64 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
