//! Covariates correlated with chosen Laplacian eigenvectors:
//! l = s_l √(n-1) V ρ + 1 l̄, where ρ_i is the correlation of l with V_i.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::LaplacianEigen;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TargetSet {
    /// The k eigenvectors with the smallest non-zero eigenvalues.
    LowestNonzero,
    /// Explicit column indices into the descending eigenvector matrix.
    Custom(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateRecipe {
    pub k: usize,
    pub target_set: TargetSet,
    pub s_l: f64,
    pub l_bar: f64,
}

impl CovariateRecipe {
    pub fn lowest(k: usize) -> Self {
        Self {
            k,
            target_set: TargetSet::LowestNonzero,
            s_l: 1.0,
            l_bar: 0.0,
        }
    }

    /// k = round(fraction · n).
    pub fn lowest_fraction(fraction: f64, n: usize) -> Self {
        Self::lowest((fraction * n as f64).round() as usize)
    }

    fn indices(&self, n: usize) -> Result<Vec<usize>> {
        match &self.target_set {
            TargetSet::LowestNonzero => {
                if self.k > n - 1 {
                    return Err(Error::InvalidParameter(format!("k = {} exceeds n - 1 = {}", self.k, n - 1)));
                }
                Ok((n - 1 - self.k..n - 1).collect())
            }
            TargetSet::Custom(ix) => {
                if ix.iter().any(|&i| i >= n - 1) {
                    return Err(Error::InvalidParameter("target index hits the kernel or is out of range".into()));
                }
                Ok(ix.clone())
            }
        }
    }
}

/// ρ with uniform(0,1) magnitudes and random signs on the target set, unit norm.
pub fn gen_covariate<R: Rng + ?Sized>(eig: &LaplacianEigen, recipe: &CovariateRecipe, rng: &mut R) -> Result<DVector<f64>> {
    if !eig.is_connected() {
        return Err(Error::DisconnectedGraph(eig.kernel_dim));
    }
    let n = eig.n();
    let ix = recipe.indices(n)?;
    let mut rho = DVector::zeros(n);
    for &i in &ix {
        let m: f64 = rng.random();
        let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
        rho[i] = s * m;
    }
    let norm = rho.norm();
    if norm > 0.0 {
        rho /= norm;
    }
    let scale = recipe.s_l * ((n - 1) as f64).sqrt();
    Ok(&eig.vectors * rho * scale + DVector::from_element(n, recipe.l_bar))
}

/// (s_l, l̄, ρ) with ρ_i = corr(l, V_i) and the kernel entry 0.
pub fn decompose(eig: &LaplacianEigen, l: &DVector<f64>) -> Result<(f64, f64, DVector<f64>)> {
    if !eig.is_connected() {
        return Err(Error::DisconnectedGraph(eig.kernel_dim));
    }
    let n = eig.n();
    if l.len() != n {
        return Err(Error::DimensionMismatch(format!("{} values for n = {n}", l.len())));
    }
    let mean = l.mean();
    let centred = l.add_scalar(-mean);
    let sd = (centred.norm_squared() / (n - 1) as f64).sqrt();
    let mut rho = DVector::zeros(n);
    if sd > 0.0 {
        for i in 0..n - 1 {
            rho[i] = centred.dot(&eig.vectors.column(i)) / (sd * ((n - 1) as f64).sqrt());
        }
    }
    Ok((sd, mean, rho))
}
