//! Batch-means Monte Carlo standard errors.

use serde::Serialize;

use super::ChainOutput;

/// Batch-means MCSE of the sample mean with ⌊√m⌋ batches of equal size.
/// Leading draws that do not fill a batch are dropped.
pub fn batch_means_mcse(x: &[f64]) -> f64 {
    batch_variance(x).map(|(s2, m)| (s2 / m as f64).sqrt()).unwrap_or(f64::NAN)
}

/// Asymptotic variance estimate and the number of draws it used.
fn batch_variance(x: &[f64]) -> Option<(f64, usize)> {
    let m = x.len();
    let a = (m as f64).sqrt().floor() as usize;
    if a < 2 {
        return None;
    }
    let b = m / a;
    let used = a * b;
    let x = &x[m - used..];
    let means: Vec<f64> = x.chunks(b).map(|c| c.iter().sum::<f64>() / b as f64).collect();
    let grand = means.iter().sum::<f64>() / a as f64;
    let ss: f64 = means.iter().map(|v| (v - grand).powi(2)).sum();
    Some((b as f64 * ss / (a as f64 - 1.0), used))
}

/// m · sample variance / batch-means variance.
pub fn effective_sample_size(x: &[f64]) -> f64 {
    let Some((s2, used)) = batch_variance(x) else {
        return f64::NAN;
    };
    let x = &x[x.len() - used..];
    let mean = x.iter().sum::<f64>() / used as f64;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (used as f64 - 1.0);
    if s2 == 0.0 {
        return if var == 0.0 { used as f64 } else { f64::INFINITY };
    }
    used as f64 * var / s2
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamDiagnostics {
    pub name: String,
    pub mean: f64,
    pub mcse: f64,
    pub ess: f64,
}

pub fn run_chain_diagnostics(out: &ChainOutput) -> Vec<ParamDiagnostics> {
    out.series()
        .into_iter()
        .map(|(name, s)| ParamDiagnostics {
            mean: s.iter().sum::<f64>() / s.len().max(1) as f64,
            mcse: batch_means_mcse(&s),
            ess: effective_sample_size(&s),
            name,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn constant_chain() {
        assert_eq!(batch_means_mcse(&[2.5; 400]), 0.0);
    }

    #[test]
    fn iid_normal() {
        let mut r = rng::from_seed(1);
        let x: Vec<f64> = (0..10_000).map(|_| r.sample(StandardNormal)).collect();
        let m = batch_means_mcse(&x);
        assert!((m / 0.01 - 1.0).abs() < 0.3, "{m}");
        let ess = effective_sample_size(&x);
        assert!(ess > 5_000.0 && ess < 20_000.0, "{ess}");
    }

    #[test]
    fn ar1_inflates_mcse() {
        let rho: f64 = 0.9;
        let mut r = rng::from_seed(2);
        let m = 100_000;
        let mut x = Vec::with_capacity(m);
        let mut v = 0.0;
        for _ in 0..m {
            let e: f64 = r.sample(StandardNormal);
            v = rho * v + (1.0 - rho * rho).sqrt() * e;
            x.push(v);
        }
        let iid = 1.0 / (m as f64).sqrt();
        let mc = batch_means_mcse(&x);
        let analytic = ((1.0 + rho) / (1.0 - rho) / m as f64).sqrt();
        assert!(mc > iid * 2.0);
        assert!((mc / analytic - 1.0).abs() < 0.3, "{mc} vs {analytic}");
    }
}
