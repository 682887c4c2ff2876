//! MCMC engines and the IWLS fitter.

pub mod diagnostics;
pub mod gibbs;
pub mod iwls;
pub mod poisson;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use diagnostics::{batch_means_mcse, effective_sample_size, run_chain_diagnostics, ParamDiagnostics};
pub use gibbs::gibbs_gaussian;
pub use iwls::{iwls_poisson, IwlsFit};
pub use poisson::mh_poisson;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Initial scale of the spherical δ random walk (Poisson only).
    pub delta_step: f64,
    /// Robbins-Monro tuning of random-walk scales during burn-in.
    pub adapt_burn_in: bool,
    /// Keep δ draws in the output.
    pub store_delta: bool,
}

impl ChainConfig {
    /// Burn-in defaults to 10% of the iterations.
    pub fn new(iterations: usize, seed: u64) -> Self {
        Self {
            iterations,
            burn_in: iterations / 10,
            seed,
            delta_step: 0.1,
            adapt_burn_in: true,
            store_delta: false,
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidParameter(format!(
                "burn-in {} must be below the iteration count {}",
                self.burn_in, self.iterations
            )));
        }
        if !(self.delta_step > 0.0 && self.delta_step.is_finite()) {
            return Err(Error::InvalidParameter("delta_step must be positive".into()));
        }
        Ok(())
    }

    pub fn retained(&self) -> usize {
        self.iterations - self.burn_in
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct AcceptanceRates {
    pub beta: Option<f64>,
    pub delta: Option<f64>,
}

/// Retained draws. Rows are iterations.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub beta: DMatrix<f64>,
    pub beta_names: Vec<String>,
    pub delta: Option<DMatrix<f64>>,
    /// Empty for Poisson chains.
    pub tau_eps: Vec<f64>,
    /// Empty when the model has no spatial term.
    pub tau_s: Vec<f64>,
    pub acceptance: AcceptanceRates,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub warnings: Vec<String>,
}

impl ChainOutput {
    pub fn len(&self) -> usize {
        self.beta.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.nrows() == 0
    }

    /// Named scalar series: β columns, then τ_ε, τ_s when present.
    pub fn series(&self) -> Vec<(String, Vec<f64>)> {
        let mut out: Vec<(String, Vec<f64>)> = self
            .beta_names
            .iter()
            .enumerate()
            .map(|(j, n)| (n.clone(), self.beta.column(j).iter().copied().collect()))
            .collect();
        if !self.tau_eps.is_empty() {
            out.push(("tau_eps".into(), self.tau_eps.clone()));
        }
        if !self.tau_s.is_empty() {
            out.push(("tau_s".into(), self.tau_s.clone()));
        }
        out
    }
}
