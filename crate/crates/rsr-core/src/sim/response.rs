//! Response generation under the NS, RHZ and ICAR models.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bases::{complement_basis, DesignMatrix};
use crate::error::{Error, Result};
use crate::graph::{icar_from_normals, laplacian_eigen, AdjacencyGraph, LaplacianEigen};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GenKind {
    Ns,
    Rhz,
    Icar,
}

impl GenKind {
    pub const ALL: [GenKind; 3] = [GenKind::Ns, GenKind::Rhz, GenKind::Icar];

    pub fn label(&self) -> &'static str {
        match self {
            GenKind::Ns => "NS",
            GenKind::Rhz => "RHZ",
            GenKind::Icar => "ICAR",
        }
    }

    pub fn index(&self) -> u64 {
        match self {
            GenKind::Ns => 0,
            GenKind::Rhz => 1,
            GenKind::Icar => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponseFamily {
    Gaussian,
    Poisson,
}

/// Precomputed pieces for repeated draws with a fixed design.
#[derive(Debug, Clone)]
pub struct ResponseGenerator {
    pub kind: GenKind,
    pub family: ResponseFamily,
    eta0: DVector<f64>,
    tau_s: f64,
    eig: Option<LaplacianEigen>,
    /// n x q map from standard normals to the RHZ effect Lδ.
    rhz_map: Option<DMatrix<f64>>,
}

impl ResponseGenerator {
    /// `design` is the generating design (intercept included when present).
    pub fn new(
        kind: GenKind,
        graph: &AdjacencyGraph,
        design: &DesignMatrix,
        beta: &DVector<f64>,
        tau_s: f64,
        family: ResponseFamily,
    ) -> Result<Self> {
        if beta.len() != design.p() {
            return Err(Error::DimensionMismatch(format!("{} coefficients for p = {}", beta.len(), design.p())));
        }
        if graph.n() != design.n() {
            return Err(Error::DimensionMismatch("graph and design sizes differ".into()));
        }
        if !(tau_s > 0.0) {
            return Err(Error::InvalidParameter(format!("tau_s must be positive, got {tau_s}")));
        }
        let eta0 = design.x() * beta;
        let (eig, rhz_map) = match kind {
            GenKind::Ns => (None, None),
            GenKind::Icar => (Some(laplacian_eigen(graph)?), None),
            GenKind::Rhz => {
                // δ ~ N(0, (τ_s LᵀQL)⁻¹), drawn spectrally
                let l = complement_basis(design)?.w;
                let prec = l.transpose() * graph.laplacian() * &l;
                let (vals, vecs) = linalg::sym_eigen_desc(&prec)?;
                if vals.iter().any(|&v| v <= 1e-10 * vals[0]) {
                    return Err(Error::numerical("LᵀQL is singular; graph disconnected?"));
                }
                let scale = DVector::from_iterator(vals.len(), vals.iter().map(|v| 1.0 / (tau_s * v).sqrt()));
                (None, Some(l * vecs * DMatrix::from_diagonal(&scale)))
            }
        };
        Ok(Self {
            kind,
            family,
            eta0,
            tau_s,
            eig,
            rhz_map,
        })
    }

    /// Spatial effect ν (zero for NS).
    pub fn effect<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let n = self.eta0.len();
        match self.kind {
            GenKind::Ns => Ok(DVector::zeros(n)),
            GenKind::Icar => {
                let z: Vec<f64> = (0..n - 1).map(|_| rng.sample(StandardNormal)).collect();
                icar_from_normals(self.eig.as_ref().expect("icar eigen"), self.tau_s, &z)
            }
            GenKind::Rhz => {
                let m = self.rhz_map.as_ref().expect("rhz map");
                let z = DVector::from_fn(m.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
                Ok(m * z)
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let nu = self.effect(rng)?;
        let eta = &self.eta0 + nu;
        match self.family {
            ResponseFamily::Gaussian => Ok(eta.map(|e| e + rng.sample::<f64, _>(StandardNormal))),
            ResponseFamily::Poisson => {
                let mut y = DVector::zeros(eta.len());
                for i in 0..eta.len() {
                    let mu = eta[i].exp();
                    if !mu.is_finite() || mu > 1e12 {
                        return Err(Error::numerical(format!("Poisson mean {mu:e} out of range")));
                    }
                    y[i] = if mu == 0.0 {
                        0.0
                    } else {
                        Poisson::new(mu).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(rng)
                    };
                }
                Ok(y)
            }
        }
    }
}

/// One-shot response draw.
pub fn gen_response<R: Rng + ?Sized>(
    kind: GenKind,
    graph: &AdjacencyGraph,
    design: &DesignMatrix,
    beta: &DVector<f64>,
    tau_s: f64,
    family: ResponseFamily,
    rng: &mut R,
) -> Result<DVector<f64>> {
    ResponseGenerator::new(kind, graph, design, beta, tau_s, family)?.draw(rng)
}
