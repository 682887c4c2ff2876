//! Overfitting a non-spatial model with synthetic covariates drawn from a
//! basis of C(X)^⊥, added one at a time in order of correlation with the
//! OLS residual.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analytics::oracles::ns_posterior_sigma_mean;
use crate::bases::{complement_basis, DesignMatrix, ProjectionPair};
use crate::error::{Error, Result};
use crate::model::PriorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OrderRule {
    /// By |corr(w, P⊥Y)|, largest first.
    #[default]
    AbsDecreasing,
    /// By signed correlation, largest first.
    Decreasing,
}

#[derive(Debug, Clone, Serialize)]
pub struct OverfitRow {
    /// Number of synthetic covariates in the model.
    pub k: usize,
    /// Basis column added at this step (None for k = 0).
    pub added: Option<usize>,
    pub correlation: Option<f64>,
    pub rss: f64,
    /// Posterior means of the original coefficients.
    pub means: Vec<f64>,
    /// Marginal posterior variances of the original coefficients.
    pub variances: Vec<f64>,
    pub sigma_mean: f64,
}

/// NS posterior under a flat β prior and Gamma(a_ε, b_ε) on τ_ε: β | Y is
/// multivariate t, Var = (TᵀT)⁻¹ (2/b_ε + RSS) / (2a_ε + n - p_T - 2).
fn ns_moments(t: &DesignMatrix, y: &DVector<f64>, priors: &PriorConfig, keep: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let n = t.n() as f64;
    let pt = t.p() as f64;
    let denom = 2.0 * priors.a_eps + n - pt - 2.0;
    if denom <= 0.0 {
        return Err(Error::MomentUndefined(format!("variance denominator {denom} is not positive")));
    }
    let b = t.ols(y)?;
    let resid = y - t.x() * &b;
    let rss = resid.norm_squared();
    let inv = t.xtx_inverse()?;
    let scale = (2.0 / priors.b_eps + rss) / denom;
    let vars = (0..keep).map(|j| inv[(j, j)] * scale).collect();
    Ok((b.iter().take(keep).copied().collect(), vars, rss))
}

/// Fits the NS model on [X, w_(1), …, w_(k)] for k = 0, 1, … while the
/// posterior variance and E[σ|Y] are both defined.
pub fn overfit_demo(d: &DesignMatrix, y: &DVector<f64>, priors: &PriorConfig, rule: OrderRule) -> Result<Vec<OverfitRow>> {
    if y.len() != d.n() {
        return Err(Error::DimensionMismatch(format!("response length {} vs {} rows", y.len(), d.n())));
    }
    let p = d.p();
    let basis = complement_basis(d)?.w;
    let e0 = &ProjectionPair::new(d).p_perp * y;
    let en = e0.norm();
    // columns of W are unit length and centred when X has an intercept
    let corr: Vec<f64> = basis
        .column_iter()
        .map(|w| if en > 0.0 { w.dot(&e0) / en } else { 0.0 })
        .collect();
    let mut order: Vec<usize> = (0..basis.ncols()).collect();
    let key = |j: usize| match rule {
        OrderRule::AbsDecreasing => corr[j].abs(),
        OrderRule::Decreasing => corr[j],
    };
    order.sort_by(|&a, &b| key(b).total_cmp(&key(a)));

    let mut rows = Vec::new();
    let mut cols: Vec<DVector<f64>> = d.x().column_iter().map(|c| c.into_owned()).collect();
    let mut names: Vec<String> = d.names().to_vec();
    for k in 0..=order.len() {
        if k > 0 {
            let j = order[k - 1];
            cols.push(basis.column(j).into_owned());
            names.push(format!("w{j}"));
        }
        let t = DesignMatrix::new(DMatrix::from_columns(&cols), d.with_intercept(), names.clone())?;
        let (means, variances, rss) = match ns_moments(&t, y, priors, p) {
            Ok(m) => m,
            Err(Error::MomentUndefined(_)) => break,
            Err(e) => return Err(e),
        };
        let sigma_mean = match ns_posterior_sigma_mean(&t, y, priors) {
            Ok(s) => s,
            Err(Error::MomentUndefined(_)) => break,
            Err(e) => return Err(e),
        };
        rows.push(OverfitRow {
            k,
            added: (k > 0).then(|| order[k - 1]),
            correlation: (k > 0).then(|| corr[order[k - 1]]),
            rss,
            means,
            variances,
            sigma_mean,
        });
    }
    Ok(rows)
}

/// Long-format CSV: k, coefficient, mean, variance, plus the step's RSS and E[σ|Y].
pub fn write_overfit_csv<W: Write>(rows: &[OverfitRow], names: &[String], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["k", "added", "correlation", "coefficient", "mean", "variance", "rss", "sigma_mean"])?;
    for r in rows {
        for (j, name) in names.iter().enumerate().take(r.means.len()) {
            wr.write_record([
                r.k.to_string(),
                r.added.map(|a| a.to_string()).unwrap_or_default(),
                r.correlation.map(|c| c.to_string()).unwrap_or_default(),
                name.clone(),
                r.means[j].to_string(),
                r.variances[j].to_string(),
                r.rss.to_string(),
                r.sigma_mean.to_string(),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}
