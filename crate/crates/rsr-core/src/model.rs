//! Model specifications of the form
//! Y = Xβ + Wδ + ε with δ | τ_s ∝ τ_s^{rank(F)/2} exp(-τ_s δᵀFδ / 2),
//! and the per-kind constructors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bases::{self, BasisKind, DesignMatrix, HhSize, SpatialBasis};
use crate::error::{Error, Result};
use crate::graph::{connected_components, AdjacencyGraph};
use crate::linalg;
use crate::samplers::iwls::{iwls_poisson, IwlsFit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BetaPrior {
    Flat,
    Normal { sd: f64 },
}

/// Gamma hyperparameters use shape `a` and SCALE `b`: density ∝ τ^{a-1} e^{-τ/b}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub a_eps: f64,
    pub b_eps: f64,
    pub a_s: f64,
    pub b_s: f64,
    pub beta_prior: BetaPrior,
}

impl PriorConfig {
    /// a = 0.01, b = 100 for both precisions; flat β prior.
    pub fn gaussian_default() -> Self {
        Self {
            a_eps: 0.01,
            b_eps: 100.0,
            a_s: 0.01,
            b_s: 100.0,
            beta_prior: BetaPrior::Flat,
        }
    }

    /// As the Gaussian default but with a Normal(0, 1000²) β prior.
    pub fn poisson_default() -> Self {
        Self {
            beta_prior: BetaPrior::Normal { sd: 1000.0 },
            ..Self::gaussian_default()
        }
    }

    /// Hyperparameters used for the SAT analysis (a_s = 0.5, b_s = 2000).
    pub fn sat() -> Self {
        Self {
            a_s: 0.5,
            b_s: 2000.0,
            ..Self::gaussian_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a_eps", self.a_eps),
            ("b_eps", self.b_eps),
            ("a_s", self.a_s),
            ("b_s", self.b_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if let BetaPrior::Normal { sd } = self.beta_prior {
            if !(sd > 0.0 && sd.is_finite()) {
                return Err(Error::InvalidParameter(format!("beta prior sd must be positive, got {sd}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Gaussian,
    /// `offset` is on the link scale (log expected counts).
    Poisson { offset: DVector<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    Ns,
    Icar,
    Rhz,
    Hh(HhSize),
    Custom,
}

impl ModelKind {
    pub fn label(&self) -> String {
        match self {
            ModelKind::Ns => "NS".into(),
            ModelKind::Icar => "ICAR".into(),
            ModelKind::Rhz => "RHZ".into(),
            ModelKind::Hh(HhSize::Fixed(q)) | ModelKind::Hh(HhSize::FixedAttractive(q)) => format!("HH{q}"),
            ModelKind::Hh(HhSize::Attractive) => "HH_attractive".into(),
            ModelKind::Hh(HhSize::Default) => "HH".into(),
            ModelKind::Custom => "Custom".into(),
        }
    }

    pub fn is_restricted(&self) -> bool {
        matches!(self, ModelKind::Rhz | ModelKind::Hh(_))
    }
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub design: DesignMatrix,
    pub w: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub family: Family,
    pub priors: PriorConfig,
    pub penalty_rank: usize,
    pub basis_kind: Option<BasisKind>,
    pub moran_eigenvalues: Option<DVector<f64>>,
    /// Restriction metric: Wᵀ diag(metric) X = 0 for restricted count models.
    pub metric: Option<DVector<f64>>,
    /// IWLS fit of the non-spatial Poisson model on the intercept-augmented design.
    pub iwls: Option<IwlsFit>,
    pub notes: Vec<String>,
}

impl ModelSpec {
    pub fn n(&self) -> usize {
        self.design.n()
    }
    pub fn p(&self) -> usize {
        self.design.p()
    }
    pub fn q(&self) -> usize {
        self.w.ncols()
    }
    pub fn is_gaussian(&self) -> bool {
        matches!(self.family, Family::Gaussian)
    }
}

/// Number of eigenvalues of a symmetric matrix above 1e-8 times the largest magnitude.
pub fn penalty_rank(f: &DMatrix<f64>) -> Result<usize> {
    if f.nrows() == 0 {
        return Ok(0);
    }
    let (vals, _) = linalg::sym_eigen_desc(f)?;
    let top = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if top == 0.0 {
        return Ok(0);
    }
    Ok(vals.iter().filter(|v| v.abs() > 1e-8 * top).count())
}

fn require_connected(g: &AdjacencyGraph) -> Result<()> {
    let c = connected_components(g).len();
    if c != 1 {
        return Err(Error::DisconnectedGraph(c));
    }
    Ok(())
}

fn rank_margin(priors: &PriorConfig, n: usize, p: usize, q: usize) -> f64 {
    priors.a_eps / 2.0 + (n as f64 - p as f64 - q as f64) / 2.0
}

fn check_rank_condition(priors: &PriorConfig, n: usize, p: usize, q: usize, rank: usize) -> Result<()> {
    if q == 0 || rank >= 2 {
        return Ok(());
    }
    let margin = rank_margin(priors, n, p, q);
    if rank == 1 && margin > 0.5 {
        return Ok(());
    }
    Err(Error::InvalidPenaltyRank { rank, margin })
}

fn assemble(
    kind: ModelKind,
    design: DesignMatrix,
    w: DMatrix<f64>,
    f: DMatrix<f64>,
    family: Family,
    priors: PriorConfig,
    basis: Option<&SpatialBasis>,
) -> Result<ModelSpec> {
    let penalty_rank = penalty_rank(&f)?;
    let mut notes = Vec::new();
    if kind == ModelKind::Icar && priors.beta_prior == BetaPrior::Flat {
        notes.push("posterior propriety assumed (improper ICAR prior with flat β prior)".to_string());
    }
    Ok(ModelSpec {
        kind,
        design,
        w,
        f,
        family,
        priors,
        penalty_rank,
        basis_kind: basis.map(|b| b.kind),
        moran_eigenvalues: basis.and_then(|b| b.moran_eigenvalues.clone()),
        metric: basis.and_then(|b| b.metric.clone()),
        iwls: None,
        notes,
    })
}

fn check_family(family: &Family, n: usize) -> Result<()> {
    if let Family::Poisson { offset } = family {
        if offset.len() != n {
            return Err(Error::DimensionMismatch(format!("offset has {} entries, n = {n}", offset.len())));
        }
    }
    Ok(())
}

/// Build a Gaussian model of any kind, or a Poisson NS/ICAR model.
///
/// ICAR uses the design as given and rejects an explicit intercept. Restricted
/// Poisson models depend on the counts through IWLS; use [`make_count_model`].
pub fn make_model(
    kind: ModelKind,
    graph: &AdjacencyGraph,
    design: DesignMatrix,
    priors: PriorConfig,
    family: Family,
) -> Result<ModelSpec> {
    priors.validate()?;
    let n = design.n();
    if graph.n() != n {
        return Err(Error::DimensionMismatch(format!("graph has {} vertices, design {} rows", graph.n(), n)));
    }
    check_family(&family, n)?;
    if !matches!(family, Family::Gaussian) && kind.is_restricted() {
        return Err(Error::InvalidParameter(
            "restricted Poisson models need the counts; use make_count_model".into(),
        ));
    }
    let p = design.p();
    match kind {
        ModelKind::Ns => assemble(kind, design, DMatrix::zeros(n, 0), DMatrix::zeros(0, 0), family, priors, None),
        ModelKind::Icar => {
            if design.with_intercept() {
                return Err(Error::ImplicitInterceptConflict);
            }
            require_connected(graph)?;
            let f = graph.laplacian();
            check_rank_condition(&priors, n, p, n, n - 1)?;
            assemble(kind, design, DMatrix::identity(n, n), f, family, priors, None)
        }
        ModelKind::Rhz | ModelKind::Hh(_) => {
            require_connected(graph)?;
            let basis = match kind {
                ModelKind::Rhz => bases::complement_basis(&design)?,
                ModelKind::Hh(size) => bases::hh_basis(graph, &design, size)?,
                _ => unreachable!(),
            };
            let f = basis.w.transpose() * graph.laplacian() * &basis.w;
            let f = (&f + f.transpose()) * 0.5;
            let q = basis.q();
            let spec = assemble(kind, design, basis.w.clone(), f, family, priors, Some(&basis))?;
            check_rank_condition(&spec.priors, n, p, q, spec.penalty_rank)?;
            Ok(spec)
        }
        ModelKind::Custom => Err(Error::InvalidParameter("use make_custom_model for custom bases".into())),
    }
}

/// Any (W, F) pair; validated by [`validate_conditions`] but not rejected.
pub fn make_custom_model(
    design: DesignMatrix,
    w: DMatrix<f64>,
    f: DMatrix<f64>,
    priors: PriorConfig,
    family: Family,
) -> Result<ModelSpec> {
    priors.validate()?;
    let n = design.n();
    check_family(&family, n)?;
    if w.nrows() != n || f.nrows() != w.ncols() || f.ncols() != w.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "W is {}x{}, F is {}x{}, n = {n}",
            w.nrows(),
            w.ncols(),
            f.nrows(),
            f.ncols()
        )));
    }
    assemble(ModelKind::Custom, design, w, f, family, priors, None)
}

/// Poisson model of any kind. Runs IWLS for the non-spatial fit on the
/// intercept-augmented design; restricted kinds use the IWLS-weighted bases.
pub fn make_count_model(
    kind: ModelKind,
    graph: &AdjacencyGraph,
    design: DesignMatrix,
    priors: PriorConfig,
    offset: DVector<f64>,
    counts: &DVector<f64>,
) -> Result<ModelSpec> {
    priors.validate()?;
    let n = design.n();
    if graph.n() != n || counts.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "graph {} vertices, design {} rows, {} counts",
            graph.n(),
            n,
            counts.len()
        )));
    }
    let family = Family::Poisson { offset: offset.clone() };
    check_family(&family, n)?;
    let full = design.with_intercept_added()?;
    let fit = iwls_poisson(&full, counts, &offset)?;
    let mut spec = match kind {
        ModelKind::Ns | ModelKind::Icar => make_model(kind, graph, design, priors, family)?,
        ModelKind::Rhz | ModelKind::Hh(_) => {
            require_connected(graph)?;
            let basis = match kind {
                ModelKind::Rhz => bases::count_rhz_basis(graph, &design, &fit.h_diag)?,
                ModelKind::Hh(size) => bases::count_hh_basis(graph, &design, &fit.w_diag, size)?,
                _ => unreachable!(),
            };
            let f = basis.penalty.clone().expect("count bases carry a penalty");
            let q = basis.q();
            let p = design.p();
            let spec = assemble(kind, design, basis.w.clone(), f, family, priors, Some(&basis))?;
            check_rank_condition(&spec.priors, n, p, q, spec.penalty_rank)?;
            spec
        }
        ModelKind::Custom => return Err(Error::InvalidParameter("custom count models are not supported".into())),
    };
    spec.iwls = Some(fit);
    Ok(spec)
}

/// One numerical condition check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub checks: Vec<ConditionCheck>,
    /// max |Wᵀ diag(metric) X| for restricted kinds.
    pub orthogonality: Option<f64>,
}

impl ConditionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Check conditions 1-5 on (X, W, F):
/// 1 F symmetric non-negative definite; 2 rank(F) ≥ 2, or rank 1 with
/// a_ε/2 + (n-p-q)/2 > 1/2; 3 rank(W) = q ≤ n-p; 4 rank(X) = p < n;
/// 5 F and WᵀW commute.
pub fn validate_conditions(spec: &ModelSpec) -> ConditionReport {
    let (n, p, q) = (spec.n(), spec.p(), spec.q());
    let f = &spec.f;
    let fscale = linalg::max_abs(f).max(1.0);
    let asym = linalg::max_abs(&(f - f.transpose()));
    let min_eig = if q == 0 {
        0.0
    } else {
        linalg::sym_eigen_desc(f).map(|(v, _)| v[q - 1]).unwrap_or(f64::NAN)
    };
    let c1 = asym <= 1e-10 * fscale && min_eig >= -1e-10 * fscale;

    let rank = spec.penalty_rank;
    let margin = rank_margin(&spec.priors, n, p, q);
    let c2 = q == 0 || rank >= 2 || (rank == 1 && margin > 0.5);

    let rank_w = linalg::rank(&spec.w, 1e-10);
    let c3 = rank_w == q && q + p <= n;

    let rank_x = linalg::rank(spec.design.x(), 1e-10);
    let c4 = rank_x == p && p < n;

    let wtw = spec.w.transpose() * &spec.w;
    let comm = linalg::max_abs(&(f * &wtw - &wtw * f));
    let cscale = (linalg::max_abs(f) * linalg::max_abs(&wtw)).max(1.0);
    let c5 = comm <= 1e-8 * cscale;

    let orthogonality = if spec.kind.is_restricted() {
        let x = match &spec.metric {
            Some(m) => DMatrix::from_diagonal(m) * spec.design.x(),
            None => spec.design.x().clone(),
        };
        Some(linalg::max_abs(&(spec.w.transpose() * x)))
    } else {
        None
    };

    ConditionReport {
        checks: vec![
            ConditionCheck {
                id: 1,
                name: "F symmetric non-negative definite",
                passed: c1,
                detail: format!("asymmetry {asym:.3e}, min eigenvalue {min_eig:.3e}"),
            },
            ConditionCheck {
                id: 2,
                name: "penalty rank",
                passed: c2,
                detail: if q == 0 {
                    "no spatial effect".to_string()
                } else {
                    format!("rank(F) = {rank}, a_eps/2 + (n-p-q)/2 = {margin}")
                },
            },
            ConditionCheck {
                id: 3,
                name: "rank(W) = q <= n - p",
                passed: c3,
                detail: format!("rank(W) = {rank_w}, q = {q}, n - p = {}", n as i64 - p as i64),
            },
            ConditionCheck {
                id: 4,
                name: "rank(X) = p < n",
                passed: c4,
                detail: format!("rank(X) = {rank_x}, p = {p}, n = {n}"),
            },
            ConditionCheck {
                id: 5,
                name: "F and WᵀW commute",
                passed: c5,
                detail: format!("commutator max {comm:.3e}"),
            },
        ],
        orthogonality,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn design(n: usize, k: usize, intercept: bool, seed: u64) -> DesignMatrix {
        let mut r = rng::from_seed(seed);
        let cov = DMatrix::from_fn(n, k, |_, _| r.sample(StandardNormal));
        DesignMatrix::from_covariates(&cov, intercept, &[]).unwrap()
    }

    #[test]
    fn table_rows() {
        let g = AdjacencyGraph::us48();
        let d = design(48, 2, true, 1);
        let ns = make_model(ModelKind::Ns, &g, d.clone(), PriorConfig::gaussian_default(), Family::Gaussian).unwrap();
        assert_eq!(ns.w.shape(), (48, 0));
        assert_eq!(ns.f.shape(), (0, 0));
        let rhz = make_model(ModelKind::Rhz, &g, d.clone(), PriorConfig::gaussian_default(), Family::Gaussian).unwrap();
        assert_eq!(rhz.w.shape(), (48, 45));
        let f = rhz.w.transpose() * g.laplacian() * &rhz.w;
        assert!((&rhz.f - f).amax() < 1e-12);
        assert!(validate_conditions(&rhz).all_passed());
        assert!(validate_conditions(&rhz).orthogonality.unwrap() < 1e-8);
        let hh = make_model(ModelKind::Hh(HhSize::Fixed(10)), &g, d.clone(), PriorConfig::gaussian_default(), Family::Gaussian).unwrap();
        assert!(validate_conditions(&hh).all_passed());
        assert!(matches!(
            make_model(ModelKind::Icar, &g, d.clone(), PriorConfig::gaussian_default(), Family::Gaussian),
            Err(Error::ImplicitInterceptConflict)
        ));
        let icar = make_model(ModelKind::Icar, &g, d.without_intercept().unwrap(), PriorConfig::gaussian_default(), Family::Gaussian).unwrap();
        assert_eq!(icar.penalty_rank, 47);
        assert_eq!(icar.w, DMatrix::identity(48, 48));
        assert!(!icar.notes.is_empty());
    }

    #[test]
    fn deterministic_construction() {
        let g = AdjacencyGraph::us48();
        let d = design(48, 2, true, 2);
        let a = make_model(ModelKind::Hh(HhSize::Default), &g, d.clone(), PriorConfig::gaussian_default(), Family::Gaussian).unwrap();
        let b = make_model(ModelKind::Hh(HhSize::Default), &g, d, PriorConfig::gaussian_default(), Family::Gaussian).unwrap();
        assert_eq!(a.w, b.w);
        assert_eq!(a.f, b.f);
    }

    #[test]
    fn nonsymmetric_penalty_fails_condition_one() {
        let d = design(6, 1, true, 3);
        let l = bases::complement_basis(&d).unwrap().w;
        let mut r = rng::from_seed(4);
        let f = DMatrix::from_fn(4, 4, |_, _| r.sample::<f64, _>(StandardNormal));
        let spec = make_custom_model(d, l, f, PriorConfig::gaussian_default(), Family::Gaussian).unwrap();
        let rep = validate_conditions(&spec);
        assert!(!rep.checks[0].passed);
    }

    #[test]
    fn rank_one_boundary() {
        // n = 3, p = 1, q = 2, rank(F) = 1: margin = a/2 + 0 = 0.005 ≤ 1/2
        let d = DesignMatrix::from_covariates(&DMatrix::zeros(3, 0), true, &[]).unwrap();
        let l = bases::complement_basis(&d).unwrap().w;
        let f = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let spec = make_custom_model(d.clone(), l.clone(), f.clone(), PriorConfig::gaussian_default(), Family::Gaussian).unwrap();
        assert_eq!(spec.penalty_rank, 1);
        assert!(!validate_conditions(&spec).checks[1].passed);
        // with q = 1 the margin is 0.505 > 0.5 and the rank-one penalty passes
        let w1 = l.columns(0, 1).into_owned();
        let f1 = DMatrix::from_element(1, 1, 2.0);
        let spec = make_custom_model(d, w1, f1, PriorConfig::gaussian_default(), Family::Gaussian).unwrap();
        assert!(validate_conditions(&spec).all_passed());
    }

    #[test]
    fn disconnected_graph_rejected() {
        let g = crate::graph::load_graph(&[(0, 1), (2, 3), (3, 4), (4, 5)], 6).unwrap();
        let d = design(6, 1, true, 5);
        assert!(matches!(
            make_model(ModelKind::Rhz, &g, d, PriorConfig::gaussian_default(), Family::Gaussian),
            Err(Error::DisconnectedGraph(2))
        ));
    }
}
