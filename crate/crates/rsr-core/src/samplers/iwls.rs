//! Poisson log-link maximum likelihood by iteratively reweighted least squares.

use nalgebra::{DMatrix, DVector};

use crate::bases::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct IwlsFit {
    pub beta_hat: DVector<f64>,
    /// Fisher information XᵀŴX at the estimate.
    pub u: DMatrix<f64>,
    /// U⁻¹, the estimated asymptotic covariance.
    pub covariance: DMatrix<f64>,
    /// Conditional variances exp(offset + xβ̂).
    pub h_diag: DVector<f64>,
    /// Final working weights (equal to `h_diag` under the log link).
    pub w_diag: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub deviance: f64,
}

pub const MAX_ITER: usize = 50;
pub const TOL: f64 = 1e-10;

fn deviance(y: &DVector<f64>, mu: &DVector<f64>) -> f64 {
    2.0 * y
        .iter()
        .zip(mu.iter())
        .map(|(&y, &m)| if y > 0.0 { y * (y / m).ln() - (y - m) } else { m })
        .sum::<f64>()
}

/// Fit log E[y] = offset + Xβ. Counts must be non-negative integers.
pub fn iwls_poisson(d: &DesignMatrix, y: &DVector<f64>, offset: &DVector<f64>) -> Result<IwlsFit> {
    let (n, p) = (d.n(), d.p());
    if y.len() != n || offset.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "n = {n}, {} counts, {} offsets",
            y.len(),
            offset.len()
        )));
    }
    if let Some(v) = y.iter().find(|v| !(**v >= 0.0 && v.fract() == 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(format!("counts must be non-negative integers, found {v}")));
    }
    if offset.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("offset must be finite".into()));
    }
    let x = d.x();
    let mut mu = y.map(|v| v + 0.1);
    let mut eta = mu.map(f64::ln);
    let mut dev_old = deviance(y, &mu);
    let mut beta = DVector::zeros(p);
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=MAX_ITER {
        iterations = it;
        let z = DVector::from_fn(n, |i, _| eta[i] - offset[i] + (y[i] - mu[i]) / mu[i]);
        let mut xw = x.clone();
        for i in 0..n {
            let s = mu[i];
            for j in 0..p {
                xw[(i, j)] *= s;
            }
        }
        let xtwx = x.transpose() * &xw;
        let chol = xtwx
            .cholesky()
            .ok_or_else(|| Error::IwlsDiverged(format!("singular weighted cross-product at iteration {it}")))?;
        beta = chol.solve(&(xw.transpose() * &z));
        if beta.iter().any(|b| !b.is_finite()) || beta.norm() > 1e3 {
            return Err(Error::IwlsDiverged(format!("|beta| = {:.3e} at iteration {it}", beta.norm())));
        }
        eta = x * &beta + offset;
        mu = eta.map(f64::exp);
        if mu.iter().any(|m| !m.is_finite() || *m <= 0.0) {
            return Err(Error::IwlsDiverged(format!("fitted means overflow at iteration {it}")));
        }
        let dev = deviance(y, &mu);
        if (dev - dev_old).abs() / (dev.abs() + 0.1) < TOL {
            converged = true;
            break;
        }
        dev_old = dev;
    }
    if !converged {
        return Err(Error::IwlsDiverged(format!("no convergence in {MAX_ITER} iterations")));
    }
    let mut xw = x.clone();
    for i in 0..n {
        for j in 0..p {
            xw[(i, j)] *= mu[i];
        }
    }
    let u = x.transpose() * &xw;
    let u = (&u + u.transpose()) * 0.5;
    let (_, covariance) = linalg::spd_inverse(&u).map_err(|_| Error::IwlsDiverged("information not positive definite".into()))?;
    let deviance = deviance(y, &mu);
    Ok(IwlsFit {
        beta_hat: beta,
        u,
        covariance,
        h_diag: mu.clone(),
        w_diag: mu,
        converged,
        iterations,
        deviance,
    })
}
