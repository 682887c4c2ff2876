//! Dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Symmetric eigendecomposition with eigenvalues sorted descending.
///
/// Ties keep the solver's original order. Each eigenvector is flipped so that
/// its first component with magnitude above `1e-10 * max|v|` is positive.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            n,
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::numerical("eigendecomposition: non-finite entries"));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::numerical("symmetric eigensolver did not converge"))?;
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort: equal eigenvalues stay in solver order
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(i).into_owned();
        fix_sign(&mut col);
        vecs.set_column(k, &col);
    }
    Ok((vals, vecs))
}

/// Flip `v` so its first non-negligible component is positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    let scale = v.amax();
    if scale == 0.0 {
        return;
    }
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-10 * scale) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Numerical rank from singular values, relative tolerance `rtol`.
pub fn rank(m: &DMatrix<f64>, rtol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rtol * top).count()
}

/// Orthonormal basis of the column space of a full-column-rank matrix (thin QR).
pub fn orthonormal_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    m.clone().qr().q()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        0.0
    } else {
        m.amax()
    }
}

/// Modified Gram-Schmidt of `cols` against `against` (assumed orthonormal) and
/// then against each other. Columns whose remainder has norm below `drop_tol`
/// are skipped; returns the kept columns and their original indices.
pub fn gram_schmidt(
    cols: &DMatrix<f64>,
    against: &DMatrix<f64>,
    drop_tol: f64,
) -> (DMatrix<f64>, Vec<usize>) {
    let n = cols.nrows();
    let mut kept: Vec<DVector<f64>> = Vec::new();
    let mut idx = Vec::new();
    for j in 0..cols.ncols() {
        let mut v = cols.column(j).into_owned();
        // two passes for stability
        for _ in 0..2 {
            for a in against.column_iter() {
                let c = a.dot(&v);
                v.axpy(-c, &a, 1.0);
            }
            for k in &kept {
                let c = k.dot(&v);
                v.axpy(-c, k, 1.0);
            }
        }
        let norm = v.norm();
        if norm > drop_tol {
            v /= norm;
            kept.push(v);
            idx.push(j);
        }
    }
    let mut out = DMatrix::zeros(n, kept.len());
    for (j, v) in kept.iter().enumerate() {
        out.set_column(j, v);
    }
    (out, idx)
}

/// Log-determinant and inverse of a symmetric positive definite matrix.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>)> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numerical("Cholesky factorisation of a non-SPD matrix"))?;
    let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok((logdet, chol.inverse()))
}


/// Simultaneous diagonalisation of two symmetric matrices G and F that commute.
#[derive(Debug, Clone)]
pub struct JointDiag {
    /// Orthogonal q x q matrix with UᵀGU = diag(g), UᵀFU = diag(f).
    pub u: DMatrix<f64>,
    pub g: DVector<f64>,
    pub f: DVector<f64>,
}

/// Diagonalise G and F together via the eigenvectors of F + cG for an
/// irrational c. Returns `None` when the off-diagonal residue exceeds 1e-9
/// relative to the matrix scale (the matrices do not commute, or an accidental
/// eigenvalue coincidence mixed the directions).
pub fn joint_diagonalize(g: &DMatrix<f64>, f: &DMatrix<f64>) -> Option<JointDiag> {
    let q = g.nrows();
    if q == 0 {
        return Some(JointDiag {
            u: DMatrix::zeros(0, 0),
            g: DVector::zeros(0),
            f: DVector::zeros(0),
        });
    }
    const C: f64 = 0.618_033_988_749_894_8;
    let gs = max_abs(g).max(f64::MIN_POSITIVE);
    let fs = max_abs(f).max(f64::MIN_POSITIVE);
    // scale so both contribute comparably
    let m = f / fs + g * (C / gs);
    let (_, u) = sym_eigen_desc(&m).ok()?;
    let ug = u.transpose() * g * &u;
    let uf = u.transpose() * f * &u;
    let off = |a: &DMatrix<f64>| {
        let mut worst: f64 = 0.0;
        for i in 0..q {
            for j in 0..q {
                if i != j {
                    worst = worst.max(a[(i, j)].abs());
                }
            }
        }
        worst
    };
    if off(&ug) > 1e-9 * gs || off(&uf) > 1e-9 * fs {
        return None;
    }
    Some(JointDiag {
        g: ug.diagonal(),
        f: uf.diagonal(),
        u,
    })
}
