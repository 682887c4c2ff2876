//! Design matrices, projections and the spatial bases used by restricted
//! spatial regression.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AdjacencyGraph;
use crate::linalg;

/// n x p design. `with_intercept` marks a leading column of ones.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    x: DMatrix<f64>,
    with_intercept: bool,
    names: Vec<String>,
}

impl DesignMatrix {
    /// Validates full column rank and p < n.
    pub fn new(x: DMatrix<f64>, with_intercept: bool, names: Vec<String>) -> Result<Self> {
        let (n, p) = x.shape();
        if names.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "{} column names for {} columns",
                names.len(),
                p
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("design contains non-finite values".into()));
        }
        if with_intercept && (p == 0 || x.column(0).iter().any(|&v| v != 1.0)) {
            return Err(Error::InvalidParameter(
                "with_intercept set but the first column is not all ones".into(),
            ));
        }
        let rank = linalg::rank(&x, 1e-10);
        if rank < p || p >= n {
            return Err(Error::RankDeficientDesign { rank, p, n });
        }
        Ok(Self {
            x,
            with_intercept,
            names,
        })
    }

    /// Design from covariate columns, optionally prefixed by an intercept.
    pub fn from_covariates(cov: &DMatrix<f64>, intercept: bool, names: &[&str]) -> Result<Self> {
        let n = cov.nrows();
        let mut cols = Vec::new();
        let mut nm = Vec::new();
        if intercept {
            cols.push(DVector::from_element(n, 1.0));
            nm.push("(Intercept)".to_string());
        }
        for (j, c) in cov.column_iter().enumerate() {
            cols.push(c.into_owned());
            nm.push(names.get(j).map(|s| s.to_string()).unwrap_or_else(|| format!("x{}", j + 1)));
        }
        let x = if cols.is_empty() {
            DMatrix::zeros(n, 0)
        } else {
            DMatrix::from_columns(&cols)
        };
        Self::new(x, intercept, nm)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }
    pub fn n(&self) -> usize {
        self.x.nrows()
    }
    pub fn p(&self) -> usize {
        self.x.ncols()
    }
    pub fn with_intercept(&self) -> bool {
        self.with_intercept
    }
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Same covariates with the intercept column removed.
    pub fn without_intercept(&self) -> Result<Self> {
        if !self.with_intercept {
            return Ok(self.clone());
        }
        let x = self.x.columns(1, self.p() - 1).into_owned();
        Self::new(x, false, self.names[1..].to_vec())
    }

    /// Same covariates with an intercept column prepended (no-op if present).
    pub fn with_intercept_added(&self) -> Result<Self> {
        if self.with_intercept {
            return Ok(self.clone());
        }
        let n = self.n();
        let x = self.x.clone().insert_column(0, 1.0);
        let mut names = vec!["(Intercept)".to_string()];
        names.extend(self.names.iter().cloned());
        let _ = n;
        Self::new(x, true, names)
    }

    /// Orthonormal basis of C(X).
    pub fn column_basis(&self) -> DMatrix<f64> {
        linalg::orthonormal_columns(&self.x)
    }

    /// (XᵀX)⁻¹ and OLS coefficients for `y`.
    pub fn ols(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        let xtx = self.x.transpose() * &self.x;
        let chol = xtx
            .cholesky()
            .ok_or_else(|| Error::numerical("XᵀX not positive definite"))?;
        Ok(chol.solve(&(self.x.transpose() * y)))
    }

    pub fn xtx_inverse(&self) -> Result<DMatrix<f64>> {
        Ok(linalg::spd_inverse(&(self.x.transpose() * &self.x))?.1)
    }
}

/// P_X and its complement.
#[derive(Debug, Clone)]
pub struct ProjectionPair {
    pub p_x: DMatrix<f64>,
    pub p_perp: DMatrix<f64>,
}

impl ProjectionPair {
    pub fn new(d: &DesignMatrix) -> Self {
        let q = d.column_basis();
        let p_x = &q * q.transpose();
        let p_perp = DMatrix::identity(d.n(), d.n()) - &p_x;
        Self { p_x, p_perp }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisKind {
    RhzL,
    HhMoran(usize),
    CountRhz,
    CountHh(usize),
    Custom,
}

/// Spatial basis W (n x q).
///
/// Gaussian bases have orthonormal columns orthogonal to C(X). Count-data
/// bases are orthogonal to C(diag(m) X) where `metric = Some(m)`, and carry
/// their own penalty; the count RHZ basis is not orthonormal.
#[derive(Debug, Clone)]
pub struct SpatialBasis {
    pub w: DMatrix<f64>,
    pub kind: BasisKind,
    pub moran_eigenvalues: Option<DVector<f64>>,
    pub penalty: Option<DMatrix<f64>>,
    pub metric: Option<DVector<f64>>,
}

impl SpatialBasis {
    pub fn q(&self) -> usize {
        self.w.ncols()
    }

    /// max |Wᵀ diag(metric) X|.
    pub fn orthogonality_residual(&self, d: &DesignMatrix) -> f64 {
        let x = match &self.metric {
            Some(m) => DMatrix::from_diagonal(m) * d.x(),
            None => d.x().clone(),
        };
        linalg::max_abs(&(self.w.transpose() * x))
    }
}

/// Eigenvectors of P_perp with eigenvalue 1, i.e. an orthonormal basis of C(X)^⊥.
pub fn complement_basis(d: &DesignMatrix) -> Result<SpatialBasis> {
    let pp = ProjectionPair::new(d);
    let l = unit_eigenvectors(&pp.p_perp, d.n() - d.p(), d)?;
    Ok(SpatialBasis {
        w: l,
        kind: BasisKind::RhzL,
        moran_eigenvalues: None,
        penalty: None,
        metric: None,
    })
}

fn unit_eigenvectors(proj: &DMatrix<f64>, expect: usize, d: &DesignMatrix) -> Result<DMatrix<f64>> {
    let (vals, vecs) = linalg::sym_eigen_desc(proj)?;
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| (vals[i] - 1.0).abs() <= 1e-8).collect();
    if keep.len() != expect {
        return Err(Error::RankDeficientDesign {
            rank: d.n() - keep.len(),
            p: d.p(),
            n: d.n(),
        });
    }
    Ok(vecs.select_columns(&keep))
}

/// P_perp A P_perp.
pub fn moran_operator(g: &AdjacencyGraph, pp: &ProjectionPair) -> DMatrix<f64> {
    &pp.p_perp * g.adjacency() * &pp.p_perp
}

/// Spectrum of the Moran operator restricted to C(X)^⊥: returns the n-p
/// eigenvalues (descending) and eigenvectors as columns of an n x (n-p) matrix.
///
/// Working inside C(X)^⊥ keeps the p structural zero directions (which lie in
/// C(X)) out of the candidate set.
pub fn moran_spectrum(g: &AdjacencyGraph, d: &DesignMatrix) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let l = complement_basis(d)?.w;
    moran_spectrum_in(g, &l)
}

fn moran_spectrum_in(g: &AdjacencyGraph, l: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let small = l.transpose() * g.adjacency() * l;
    let (vals, u) = linalg::sym_eigen_desc(&small)?;
    let mut m = l * u;
    for j in 0..m.ncols() {
        let mut c = m.column(j).into_owned();
        linalg::fix_sign(&mut c);
        m.set_column(j, &c);
    }
    Ok((vals, m))
}

/// Number of eigenvalues above 1e-8 times the largest magnitude.
pub fn attractive_count(vals: &DVector<f64>) -> usize {
    let top = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    vals.iter().filter(|&&v| v > 1e-8 * top).count()
}

/// Size of an HH basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HhSize {
    /// Leading q eigenvectors; q ≤ n - p.
    Fixed(usize),
    /// Leading q eigenvectors, all of which must be attractive.
    FixedAttractive(usize),
    /// Every attractive eigenvector.
    Attractive,
    /// ceil(0.1 n).
    Default,
}

fn select_q(size: HhSize, n: usize, avail: usize, attractive: usize) -> Result<usize> {
    let (q, cap) = match size {
        HhSize::Fixed(q) => (q, avail),
        HhSize::FixedAttractive(q) => (q, attractive),
        HhSize::Attractive => (attractive, attractive),
        HhSize::Default => ((n as f64 * 0.1).ceil() as usize, avail),
    };
    if q > cap {
        return Err(Error::InsufficientBasis {
            requested: q,
            available: cap,
        });
    }
    Ok(q)
}

fn finish_moran_basis(
    vals: DVector<f64>,
    m: DMatrix<f64>,
    q: usize,
    against: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let top = m.columns(0, q).into_owned();
    let (w, kept) = linalg::gram_schmidt(&top, against, 1e-8);
    if kept.len() != q {
        return Err(Error::numerical("Moran eigenvectors collapsed during re-orthogonalisation"));
    }
    Ok((w, vals.rows(0, q).into_owned()))
}

/// Leading Moran-operator eigenvectors, re-orthogonalised against C(X).
pub fn hh_basis(g: &AdjacencyGraph, d: &DesignMatrix, size: HhSize) -> Result<SpatialBasis> {
    let (vals, m) = moran_spectrum(g, d)?;
    let q = select_q(size, d.n(), vals.len(), attractive_count(&vals))?;
    let (w, ev) = finish_moran_basis(vals, m, q, &d.column_basis())?;
    Ok(SpatialBasis {
        w,
        kind: BasisKind::HhMoran(q),
        moran_eigenvalues: Some(ev),
        penalty: None,
        metric: None,
    })
}

fn check_weights(h: &DVector<f64>, n: usize) -> Result<()> {
    if h.len() != n {
        return Err(Error::DimensionMismatch(format!("{} weights for n = {n}", h.len())));
    }
    if let Some(v) = h.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(format!("weights must be positive, found {v}")));
    }
    Ok(())
}

fn weighted_basis(d: &DesignMatrix, sqrt_h: &DVector<f64>) -> DMatrix<f64> {
    let hx = DMatrix::from_diagonal(sqrt_h) * d.x();
    linalg::orthonormal_columns(&hx)
}

/// I - H^{1/2} X (Xᵀ H X)⁻¹ Xᵀ H^{1/2}.
pub fn weighted_projection(d: &DesignMatrix, h_diag: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_weights(h_diag, d.n())?;
    let s = h_diag.map(f64::sqrt);
    let q = weighted_basis(d, &s);
    Ok(DMatrix::identity(d.n(), d.n()) - &q * q.transpose())
}

/// Count-data RHZ basis: W = H^{-1/2} L, F = Lᵀ H^{1/2} Q H^{1/2} L, with L the
/// unit eigenvectors of the weighted projection.
pub fn count_rhz_basis(
    g: &AdjacencyGraph,
    d: &DesignMatrix,
    h_diag: &DVector<f64>,
) -> Result<SpatialBasis> {
    let proj = weighted_projection(d, h_diag)?;
    let l = unit_eigenvectors(&proj, d.n() - d.p(), d)?;
    let s = h_diag.map(f64::sqrt);
    let hl = DMatrix::from_diagonal(&s) * &l;
    let f = hl.transpose() * g.laplacian() * &hl;
    let w = DMatrix::from_diagonal(&s.map(|v| 1.0 / v)) * &l;
    Ok(SpatialBasis {
        w,
        kind: BasisKind::CountRhz,
        moran_eigenvalues: None,
        penalty: Some((&f + f.transpose()) * 0.5),
        metric: Some(h_diag.clone()),
    })
}

/// Count-data HH basis from the Moran operator P_R A P_R with R the IWLS weights.
pub fn count_hh_basis(
    g: &AdjacencyGraph,
    d: &DesignMatrix,
    r_diag: &DVector<f64>,
    size: HhSize,
) -> Result<SpatialBasis> {
    let proj = weighted_projection(d, r_diag)?;
    let l = unit_eigenvectors(&proj, d.n() - d.p(), d)?;
    let (vals, m) = moran_spectrum_in(g, &l)?;
    let q = select_q(size, d.n(), vals.len(), attractive_count(&vals))?;
    let s = r_diag.map(f64::sqrt);
    let (w, ev) = finish_moran_basis(vals, m, q, &weighted_basis(d, &s))?;
    let f = w.transpose() * g.laplacian() * &w;
    Ok(SpatialBasis {
        w,
        kind: BasisKind::CountHh(q),
        moran_eigenvalues: Some(ev),
        penalty: Some((&f + f.transpose()) * 0.5),
        metric: Some(s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_design(n: usize, k: usize, seed: u64) -> DesignMatrix {
        let mut r = rng::from_seed(seed);
        let cov = DMatrix::from_fn(n, k, |_, _| r.sample(StandardNormal));
        DesignMatrix::from_covariates(&cov, true, &[]).unwrap()
    }

    #[test]
    fn rank_deficiency_detected() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!(matches!(
            DesignMatrix::new(x, true, vec!["a".into(), "b".into()]),
            Err(Error::RankDeficientDesign { rank: 1, .. })
        ));
    }

    #[test]
    fn complement_of_constants() {
        let d = DesignMatrix::from_covariates(&DMatrix::zeros(3, 0), true, &[]).unwrap();
        let b = complement_basis(&d).unwrap();
        assert_eq!(b.q(), 2);
        assert!(b.w.row_sum().amax() < 1e-12);
        assert!((b.w.transpose() * &b.w - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn complement_reproduces_projection() {
        let d = random_design(6, 1, 2);
        let b = complement_basis(&d).unwrap();
        let pp = ProjectionPair::new(&d);
        assert!((&b.w * b.w.transpose() - &pp.p_perp).amax() < 1e-10);
        assert!(b.orthogonality_residual(&d) < 1e-10);
        let pp2 = &pp.p_perp * &pp.p_perp;
        assert!((pp2 - &pp.p_perp).amax() < 1e-10);
        assert!((&pp.p_x + &pp.p_perp - DMatrix::identity(6, 6)).amax() < 1e-14);
    }

    #[test]
    fn moran_of_empty_graph_is_zero() {
        let g = crate::graph::load_graph(&[], 5).unwrap();
        let d = random_design(5, 1, 3);
        let m = moran_operator(&g, &ProjectionPair::new(&d));
        assert_eq!(m.amax(), 0.0);
    }

    #[test]
    fn moran_near_full_design_has_rank_at_most_one() {
        let g = AdjacencyGraph::path(5);
        let x = DMatrix::from_fn(5, 4, |i, j| if i == j { 1.0 } else { 0.0 });
        let names = (0..4).map(|i| format!("e{i}")).collect();
        let d = DesignMatrix::new(x, false, names).unwrap();
        let m = moran_operator(&g, &ProjectionPair::new(&d));
        assert!(linalg::rank(&m, 1e-10) <= 1);
    }

    #[test]
    fn moran_spectrum_spans_morans_i_range() {
        // extremes of zᵀAz / zᵀz over z ⊥ 1, found by projected power iteration
        let n = 9;
        let g = AdjacencyGraph::path(n);
        let d = DesignMatrix::from_covariates(&DMatrix::zeros(n, 0), true, &[]).unwrap();
        let (vals, _) = moran_spectrum(&g, &d).unwrap();
        let a = g.adjacency();
        let extreme = |shift: f64| {
            let mut z = DVector::from_fn(n, |i, _| (i as f64 * 0.37).sin() + 0.1);
            for _ in 0..20_000 {
                let m = z.mean();
                z.add_scalar_mut(-m);
                z = &a * &z + &z * shift;
                z /= z.norm();
            }
            let m = z.mean();
            z.add_scalar_mut(-m);
            z /= z.norm();
            (z.transpose() * &a * &z)[0]
        };
        let hi = extreme(3.0);
        let lo = {
            let neg = -&a;
            let mut z = DVector::from_fn(n, |i, _| (i as f64 * 0.71).cos());
            for _ in 0..20_000 {
                let m = z.mean();
                z.add_scalar_mut(-m);
                z = &neg * &z + &z * 3.0;
                z /= z.norm();
            }
            let m = z.mean();
            z.add_scalar_mut(-m);
            z /= z.norm();
            (z.transpose() * &a * &z)[0]
        };
        assert!((vals[0] - hi).abs() < 1e-6, "{} vs {hi}", vals[0]);
        assert!((vals[vals.len() - 1] - lo).abs() < 1e-6);
        // random centred vectors give Moran's I inside the range
        let scale = n as f64 / (2.0 * g.edge_count() as f64);
        let mut r = rng::from_seed(9);
        for _ in 0..200 {
            let mut z = DVector::from_fn(n, |_, _| r.sample::<f64, _>(StandardNormal));
            let m = z.mean();
            z.add_scalar_mut(-m);
            let i_stat = scale * (z.transpose() * &a * &z)[0] / z.norm_squared();
            assert!(i_stat <= scale * vals[0] + 1e-12);
            assert!(i_stat >= scale * vals[vals.len() - 1] - 1e-12);
        }
    }

    #[test]
    fn hh_basis_properties() {
        let g = AdjacencyGraph::us48();
        let d = random_design(48, 2, 4);
        let b = hh_basis(&g, &d, HhSize::Default).unwrap();
        assert_eq!(b.q(), 5);
        assert!(b.orthogonality_residual(&d) <= 1e-8);
        assert!((b.w.transpose() * &b.w - DMatrix::identity(5, 5)).amax() <= 1e-10);
        let ev = b.moran_eigenvalues.unwrap();
        assert!(ev.as_slice().windows(2).all(|w| w[0] >= w[1]));
        let empty = hh_basis(&g, &d, HhSize::Fixed(0)).unwrap();
        assert_eq!(empty.q(), 0);
        let full = hh_basis(&g, &d, HhSize::Fixed(45)).unwrap();
        assert_eq!(full.q(), 45);
        assert!(matches!(
            hh_basis(&g, &d, HhSize::Fixed(46)),
            Err(Error::InsufficientBasis { .. })
        ));
        let att = hh_basis(&g, &d, HhSize::Attractive).unwrap();
        assert!(matches!(
            hh_basis(&g, &d, HhSize::FixedAttractive(att.q() + 1)),
            Err(Error::InsufficientBasis { .. })
        ));
        // attractive count equals the number of positive eigenvalues of the
        // full n x n operator, recomputed independently
        let op = moran_operator(&g, &ProjectionPair::new(&d));
        let (vals, _) = linalg::sym_eigen_desc(&op).unwrap();
        assert_eq!(att.q(), attractive_count(&vals));
    }

    #[test]
    fn weighted_projection_properties() {
        let d = random_design(10, 2, 5);
        let ones = DVector::from_element(10, 1.0);
        let m1 = weighted_projection(&d, &ones).unwrap();
        assert!((&m1 - ProjectionPair::new(&d).p_perp).amax() < 1e-12);
        let h = DVector::from_fn(10, |i, _| 0.5 + i as f64);
        let m = weighted_projection(&d, &h).unwrap();
        assert!((&m * &m - &m).amax() < 1e-10);
        assert!((m.trace() - 7.0).abs() < 1e-10);
        let mut bad = h.clone();
        bad[3] = 0.0;
        assert!(matches!(weighted_projection(&d, &bad), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn count_bases_reduce_with_unit_weights() {
        let g = AdjacencyGraph::us48();
        let d = random_design(48, 1, 6);
        let ones = DVector::from_element(48, 1.0);
        let c = count_rhz_basis(&g, &d, &ones).unwrap();
        let l = complement_basis(&d).unwrap().w;
        // same column space and same penalty spectrum
        assert!((&c.w * c.w.transpose() - &l * l.transpose()).amax() < 1e-10);
        let f = c.penalty.unwrap();
        let f0 = l.transpose() * g.laplacian() * &l;
        let (a, _) = linalg::sym_eigen_desc(&f).unwrap();
        let (b, _) = linalg::sym_eigen_desc(&f0).unwrap();
        assert!((a - b).amax() < 1e-9);
    }

    #[test]
    fn count_bases_orthogonal_in_metric() {
        let g = AdjacencyGraph::us48();
        let d = random_design(48, 2, 7);
        let h = DVector::from_fn(48, |i, _| 1.0 + (i % 7) as f64);
        let c = count_rhz_basis(&g, &d, &h).unwrap();
        assert_eq!(c.q(), 45);
        assert!(c.orthogonality_residual(&d) < 1e-8);
        let hh = count_hh_basis(&g, &d, &h, HhSize::Fixed(10)).unwrap();
        assert_eq!(hh.q(), 10);
        assert!(hh.orthogonality_residual(&d) < 1e-8);
        assert!((hh.w.transpose() * &hh.w - DMatrix::identity(10, 10)).amax() < 1e-10);
    }
}
