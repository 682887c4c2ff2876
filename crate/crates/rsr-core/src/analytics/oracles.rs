//! Closed-form and quadrature oracles for the Gaussian model with a flat β prior.
//!
//! After integrating out β and δ, the posterior of (τ_ε, τ_s) is
//! π ∝ τ_ε^{a_ε + (n-p-q)/2 - 1} τ_s^{a_s + rank(F)/2 - 1} |M|^{-1/2} |XᵀSX|^{-1/2}
//!     exp{-τ_ε (1/b_ε + R/2) - τ_s/b_s},
//! with r = τ_s/τ_ε, M = WᵀW + rF, S = I - W M⁻¹ Wᵀ and R the S-weighted
//! residual sum of squares. Given (τ_ε, τ_s), β is normal with mean
//! (XᵀSX)⁻¹XᵀSY and covariance (τ_ε XᵀSX)⁻¹. Integrals run over
//! (log τ_ε, log τ_s) with nested adaptive Gauss-Kronrod.

use nalgebra::{DMatrix, DVector};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::bases::{DesignMatrix, ProjectionPair};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{BetaPrior, ModelSpec, PriorConfig};
use crate::quadrature::{self, Rect, Tolerance};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// E(σ|Y) for the non-spatial model, σ = 1/τ_ε:
/// (1/b_ε + ‖P⊥Y‖²/2) / (a_ε - 1 + (n-p)/2).
pub fn ns_posterior_sigma_mean(d: &DesignMatrix, y: &DVector<f64>, priors: &PriorConfig) -> Result<f64> {
    let denom = priors.a_eps - 1.0 + 0.5 * (d.n() as f64 - d.p() as f64);
    if denom <= 0.0 {
        return Err(Error::MomentUndefined(format!(
            "a_eps - 1 + (n-p)/2 = {denom} is not positive"
        )));
    }
    let pp = ProjectionPair::new(d);
    let resid = &pp.p_perp * y;
    Ok((1.0 / priors.b_eps + 0.5 * resid.norm_squared()) / denom)
}

/// E[σ|Y, r] = (1/b_ε + ½ YᵀW(I - (I + rF)⁻¹)WᵀY) / (a_ε + (n-p)/2 - 1)
/// for an orthonormal basis W.
pub fn conditional_sigma_mean(spec: &ModelSpec, y: &DVector<f64>, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidParameter(format!("ratio must be non-negative, got {r}")));
    }
    let q = spec.q();
    let wtw = spec.w.transpose() * &spec.w;
    if linalg::max_abs(&(wtw - DMatrix::identity(q, q))) > 1e-8 {
        return Err(Error::InvalidParameter("conditional_sigma_mean needs orthonormal W".into()));
    }
    let pr = &spec.priors;
    let denom = pr.a_eps + 0.5 * (spec.n() as f64 - spec.p() as f64) - 1.0;
    if denom <= 0.0 {
        return Err(Error::MomentUndefined(format!("denominator {denom} is not positive")));
    }
    let wy = spec.w.transpose() * y;
    let quad = if q == 0 {
        0.0
    } else if r.is_infinite() {
        wy.norm_squared()
    } else {
        let m = DMatrix::identity(q, q) + &spec.f * r;
        let (_, inv) = linalg::spd_inverse(&m)?;
        let middle = DMatrix::identity(q, q) - inv;
        (wy.transpose() * middle * &wy)[0]
    };
    Ok((1.0 / pr.b_eps + 0.5 * quad) / denom)
}

// p x p helpers on row-major slices

fn chol_small(a: &[f64], p: usize, l: &mut [f64]) -> Option<f64> {
    l.iter_mut().for_each(|v| *v = 0.0);
    let mut logdet = 0.0;
    for i in 0..p {
        for j in 0..=i {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * p + i] = s.sqrt();
                logdet += 2.0 * l[i * p + i].ln();
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    Some(logdet)
}

fn chol_solve(l: &[f64], p: usize, b: &mut [f64]) {
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * p + k] * b[k];
        }
        b[i] = s / l[i * p + i];
    }
    for i in (0..p).rev() {
        let mut s = b[i];
        for k in i + 1..p {
            s -= l[k * p + i] * b[k];
        }
        b[i] = s / l[i * p + i];
    }
}

/// Conditional quantities at one (log τ_ε, log τ_s) point.
#[derive(Debug, Clone)]
pub struct KernelPoint {
    /// Unnormalised log density in (log τ_ε, log τ_s), Jacobian included.
    pub log_w: f64,
    /// Conditional mean of β minus the OLS estimate.
    pub m: Vec<f64>,
    /// (XᵀSX)⁻¹, row-major.
    pub v: Vec<f64>,
    pub log_det_xsx: f64,
    pub log_det_m: f64,
    pub rss: f64,
}

/// Precomputed β,δ-marginal posterior of the precisions.
#[derive(Debug, Clone)]
pub struct MarginalPosterior {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub rank_f: usize,
    pub priors: PriorConfig,
    pub ols: DVector<f64>,
    xtx: Vec<f64>,
    /// Xᵀ w̃_i for each joint eigen-direction, row-major q x p.
    c: Vec<f64>,
    /// w̃_iᵀ e₀ with e₀ the OLS residual.
    e: Vec<f64>,
    omega: Vec<f64>,
    zeta: Vec<f64>,
    xte0: Vec<f64>,
    e0e0: f64,
}

impl MarginalPosterior {
    pub fn new(spec: &ModelSpec, y: &DVector<f64>) -> Result<Self> {
        if !spec.is_gaussian() {
            return Err(Error::InvalidParameter("quadrature oracle needs a Gaussian model".into()));
        }
        if spec.priors.beta_prior != BetaPrior::Flat {
            return Err(Error::InvalidParameter("quadrature oracle assumes a flat β prior".into()));
        }
        if y.len() != spec.n() {
            return Err(Error::DimensionMismatch(format!("{} responses, n = {}", y.len(), spec.n())));
        }
        let (n, p, q) = (spec.n(), spec.p(), spec.q());
        let x = spec.design.x();
        let ols = spec.design.ols(y)?;
        let e0 = y - x * &ols;
        let wtw = spec.w.transpose() * &spec.w;
        let jd = linalg::joint_diagonalize(&wtw, &spec.f)
            .ok_or_else(|| Error::InvalidParameter("F and WᵀW do not commute".into()))?;
        if jd.g.iter().any(|&g| g <= 0.0) {
            return Err(Error::InvalidParameter("W does not have full column rank".into()));
        }
        let wu = &spec.w * &jd.u;
        let cm = x.transpose() * &wu; // p x q
        let mut c = vec![0.0; q * p];
        for i in 0..q {
            for k in 0..p {
                c[i * p + k] = cm[(k, i)];
            }
        }
        let e: Vec<f64> = (wu.transpose() * &e0).iter().copied().collect();
        let xtx_m = x.transpose() * x;
        let mut xtx = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..p {
                xtx[i * p + j] = xtx_m[(i, j)];
            }
        }
        Ok(Self {
            n,
            p,
            q,
            rank_f: spec.penalty_rank,
            priors: spec.priors,
            ols,
            xtx,
            c,
            e,
            omega: jd.g.iter().copied().collect(),
            zeta: jd.f.iter().copied().collect(),
            xte0: (x.transpose() * &e0).iter().copied().collect(),
            e0e0: e0.norm_squared(),
        })
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    /// Evaluate at u = log τ_ε, v = log τ_s (v ignored when q = 0).
    pub fn point(&self, u: f64, v: f64) -> Option<KernelPoint> {
        let (p, q) = (self.p, self.q);
        let r = if q == 0 { 0.0 } else { (v - u).exp() };
        let mut xsx = self.xtx.clone();
        let mut xsy = self.xte0.clone();
        let mut ysy = self.e0e0;
        let mut log_det_m = 0.0;
        for i in 0..q {
            let d = self.omega[i] + r * self.zeta[i];
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            log_det_m += d.ln();
            let ci = &self.c[i * p..(i + 1) * p];
            let ei = self.e[i];
            for a in 0..p {
                for b in 0..p {
                    xsx[a * p + b] -= ci[a] * ci[b] / d;
                }
                xsy[a] -= ci[a] * ei / d;
            }
            ysy -= ei * ei / d;
        }
        let mut l = vec![0.0; p * p];
        let log_det_xsx = chol_small(&xsx, p, &mut l)?;
        let mut m = xsy.clone();
        chol_solve(&l, p, &mut m);
        let rss = (ysy - xsy.iter().zip(&m).map(|(a, b)| a * b).sum::<f64>()).max(0.0);
        let mut v_inv = vec![0.0; p * p];
        for j in 0..p {
            let mut col = vec![0.0; p];
            col[j] = 1.0;
            chol_solve(&l, p, &mut col);
            for i in 0..p {
                v_inv[i * p + j] = col[i];
            }
        }
        let pr = &self.priors;
        let te = u.exp();
        let mut log_w = (pr.a_eps + 0.5 * (self.n as f64 - p as f64 - q as f64)) * u
            - 0.5 * log_det_m
            - 0.5 * log_det_xsx
            - te * (1.0 / pr.b_eps + 0.5 * rss);
        if q > 0 {
            log_w += (pr.a_s + 0.5 * self.rank_f as f64) * v - v.exp() / pr.b_s;
        }
        if !log_w.is_finite() {
            return None;
        }
        Some(KernelPoint {
            log_w,
            m,
            v: v_inv,
            log_det_xsx,
            log_det_m,
            rss,
        })
    }

    /// Integrate `dim` components; `fill` writes unweighted values and
    /// `extra_log` adds to the log weight (used for tail integrands).
    /// Returns (integrals scaled by exp(-log_scale), log_scale).
    pub fn integrate<F, G>(&self, dim: usize, rel: f64, scale_floor: &[f64], extra_log: G, fill: F) -> Result<(Vec<f64>, f64)>
    where
        F: Fn(&KernelPoint, f64, f64, &mut [f64]),
        G: Fn(&KernelPoint, f64, f64) -> f64,
    {
        const STEP: f64 = 0.5;
        const DROP: f64 = 40.0;
        const LIMIT: f64 = 2000.0;
        let total_log = |u: f64, v: f64| match self.point(u, v) {
            Some(k) => {
                let e = extra_log(&k, u, v);
                k.log_w + e
            }
            None => f64::NEG_INFINITY,
        };
        // search box in (u, v); sides grow while mass sits on them
        let (mut u0, mut u1, mut v0, mut v1) = (-60.0f64, 60.0f64, -60.0f64, 60.0f64);
        let (us, vs, grid, top, ulo, uhi, vlo, vhi) = loop {
            let axis = |lo: f64, hi: f64| -> Vec<f64> {
                let m = ((hi - lo) / STEP).round() as usize;
                (0..=m).map(|i| lo + STEP * i as f64).collect()
            };
            let us = axis(u0, u1);
            let vs = if self.q == 0 { vec![0.0] } else { axis(v0, v1) };
            let mut grid = vec![f64::NEG_INFINITY; us.len() * vs.len()];
            let mut top = f64::NEG_INFINITY;
            for (j, &v) in vs.iter().enumerate() {
                for (i, &u) in us.iter().enumerate() {
                    let l = total_log(u, v);
                    grid[j * us.len() + i] = l;
                    top = top.max(l);
                }
            }
            if !top.is_finite() {
                return Err(Error::numerical("quadrature: integrand vanishes on the search grid"));
            }
            let (mut ulo, mut uhi, mut vlo, mut vhi) = (usize::MAX, 0usize, usize::MAX, 0usize);
            for j in 0..vs.len() {
                for i in 0..us.len() {
                    if grid[j * us.len() + i] > top - DROP {
                        ulo = ulo.min(i);
                        uhi = uhi.max(i);
                        vlo = vlo.min(j);
                        vhi = vhi.max(j);
                    }
                }
            }
            let mut grown = false;
            let mut grow = |hit: bool, side: &mut f64, dir: f64| {
                if hit {
                    *side += dir * 100.0;
                    grown = true;
                }
            };
            grow(ulo == 0, &mut u0, -1.0);
            grow(uhi == us.len() - 1, &mut u1, 1.0);
            if self.q > 0 {
                grow(vlo == 0, &mut v0, -1.0);
                grow(vhi == vs.len() - 1, &mut v1, 1.0);
            }
            if !grown {
                break (us, vs, grid, top, ulo, uhi, vlo, vhi);
            }
            if u0 < -LIMIT || v0 < -LIMIT || u1 > LIMIT || v1 > LIMIT {
                return Err(Error::numerical("quadrature: posterior mass reaches the edge of the search range"));
            }
        };
        let rect = Rect {
            u: (us[ulo - 1], us[uhi + 1]),
            v: if self.q > 0 { (vs[vlo - 1], vs[vhi + 1]) } else { (0.0, 0.0) },
        };
        // Riemann sums of |component| for absolute tolerances
        let mut sums = vec![0.0; dim];
        let mut buf = vec![0.0; dim];
        for j in 0..vs.len() {
            for i in 0..us.len() {
                let l = grid[j * us.len() + i];
                if l > top - DROP {
                    let (u, v) = (us[i], vs[j]);
                    if let Some(k) = self.point(u, v) {
                        fill(&k, u, v, &mut buf);
                        let w = (l - top).exp();
                        for d in 0..dim {
                            sums[d] += w * buf[d].abs();
                        }
                    }
                }
            }
        }
        let cell = if self.q > 0 { STEP * STEP } else { STEP };
        let abs: Vec<f64> = (0..dim)
            .map(|d| rel * cell * sums[d].max(sums[0] * scale_floor[d]))
            .collect();
        let tol = Tolerance::new(rel, abs);
        let f = |u: f64, v: f64, out: &mut [f64]| match self.point(u, v) {
            Some(k) => {
                let w = (k.log_w + extra_log(&k, u, v) - top).exp();
                if w == 0.0 {
                    out.iter_mut().for_each(|o| *o = 0.0);
                    return;
                }
                fill(&k, u, v, out);
                out.iter_mut().for_each(|o| *o *= w);
            }
            None => out.iter_mut().for_each(|o| *o = 0.0),
        };
        let vals = if self.q == 0 {
            let nu = (((rect.u.1 - rect.u.0) / 0.5).ceil() as usize).max(1);
            quadrature::integrate(|u, out: &mut [f64]| f(u, 0.0, out), rect.u.0, rect.u.1, dim, nu, &tol, 20_000)?
        } else {
            quadrature::integrate_2d(f, rect, dim, 0.5, &tol)?
        };
        Ok((vals, top))
    }

    /// Log of the prior normalising constants and the 2π factors dropped in
    /// `point`, giving log ∫∫ p(Y, β, δ, τ) with the δ prior taken as
    /// (2π)^{-q/2} τ_s^{q/2} exp(-τ_s δᵀFδ/2).
    fn log_constant(&self) -> f64 {
        let pr = &self.priors;
        let mut c = -0.5 * (self.n as f64 - self.p as f64) * LN_2PI - ln_gamma(pr.a_eps) - pr.a_eps * pr.b_eps.ln();
        if self.q > 0 {
            c += -ln_gamma(pr.a_s) - pr.a_s * pr.b_s.ln();
        }
        c
    }
}

/// Posterior moments from quadrature.
#[derive(Debug, Clone)]
pub struct QuadMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// E[1/τ_ε | Y].
    pub sigma_mean: f64,
}

impl QuadMoments {
    pub fn variances(&self) -> DVector<f64> {
        self.cov.diagonal()
    }
}

pub const QUAD_REL_TOL: f64 = 1e-10;

fn rough_sd(mp: &MarginalPosterior, d: &ModelSpec, y: &DVector<f64>) -> Vec<f64> {
    let s = ns_posterior_sigma_mean(&d.design, y, &mp.priors).unwrap_or(1.0).abs().max(1e-300);
    (0..mp.p).map(|k| (mp.xtx_inv_diag(k) * s).sqrt()).collect()
}

impl MarginalPosterior {
    fn xtx_inv_diag(&self, k: usize) -> f64 {
        let p = self.p;
        let mut l = vec![0.0; p * p];
        if chol_small(&self.xtx, p, &mut l).is_none() {
            return 1.0;
        }
        let mut col = vec![0.0; p];
        col[k] = 1.0;
        chol_solve(&l, p, &mut col);
        col[k]
    }
}

/// E[β|Y], Var[β|Y] and E[1/τ_ε|Y] by quadrature.
pub fn quadrature_moments(spec: &ModelSpec, y: &DVector<f64>) -> Result<QuadMoments> {
    let mp = MarginalPosterior::new(spec, y)?;
    let p = mp.p;
    let npair = p * (p + 1) / 2;
    let dim = 2 + p + npair;
    let sd = rough_sd(&mp, spec, y);
    let mut floor = vec![0.0; dim];
    floor[0] = 1.0;
    for k in 0..p {
        floor[2 + k] = sd[k];
    }
    let mut idx = 2 + p;
    for a in 0..p {
        for b in a..p {
            floor[idx] = sd[a] * sd[b];
            idx += 1;
        }
    }
    let (vals, _) = mp.integrate(dim, QUAD_REL_TOL, &floor, |_, _, _| 0.0, |k, u, _v, out| {
        let s = (-u).exp();
        out[0] = 1.0;
        out[1] = s;
        for a in 0..p {
            out[2 + a] = k.m[a];
        }
        let mut idx = 2 + p;
        for a in 0..p {
            for b in a..p {
                out[idx] = k.m[a] * k.m[b] + k.v[a * p + b] * s;
                idx += 1;
            }
        }
    })?;
    let z = vals[0];
    let shift = DVector::from_fn(p, |a, _| vals[2 + a] / z);
    let mut cov = DMatrix::zeros(p, p);
    let mut idx = 2 + p;
    for a in 0..p {
        for b in a..p {
            let c = vals[idx] / z - shift[a] * shift[b];
            cov[(a, b)] = c;
            cov[(b, a)] = c;
            idx += 1;
        }
    }
    Ok(QuadMoments {
        mean: &mp.ols + shift,
        cov,
        sigma_mean: vals[1] / z,
    })
}

/// Marginal posterior densities of each β_k on the supplied grids.
pub fn quadrature_beta_density(spec: &ModelSpec, y: &DVector<f64>, grids: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mp = MarginalPosterior::new(spec, y)?;
    let p = mp.p;
    if grids.len() != p {
        return Err(Error::DimensionMismatch(format!("{} grids for {p} coefficients", grids.len())));
    }
    let sd = rough_sd(&mp, spec, y);
    let mut offsets = vec![1usize];
    for g in grids {
        offsets.push(offsets.last().unwrap() + g.len());
    }
    let dim = *offsets.last().unwrap();
    let mut floor = vec![1.0; dim];
    for k in 0..p {
        for i in offsets[k]..offsets[k + 1] {
            floor[i] = 1.0 / sd[k];
        }
    }
    let ols = mp.ols.clone();
    let (vals, _) = mp.integrate(dim, QUAD_REL_TOL, &floor, |_, _, _| 0.0, |kp, u, _v, out| {
        out[0] = 1.0;
        let s2 = (-u).exp();
        for k in 0..p {
            let var = kp.v[k * p + k] * s2;
            let sdk = var.sqrt();
            let mean = ols[k] + kp.m[k];
            for (i, b) in grids[k].iter().enumerate() {
                let z = (b - mean) / sdk;
                out[offsets[k] + i] = (-0.5 * z * z).exp() / (sdk * (2.0 * std::f64::consts::PI).sqrt());
            }
        }
    })?;
    Ok((0..p)
        .map(|k| (offsets[k]..offsets[k + 1]).map(|i| vals[i] / vals[0]).collect())
        .collect())
}

/// ln Φ(z), accurate far into the lower tail.
pub fn ln_norm_cdf(z: f64) -> f64 {
    if z > -30.0 {
        (0.5 * erfc(-z / std::f64::consts::SQRT_2)).ln()
    } else {
        let z2 = z * z;
        -0.5 * z2 - (-z).ln() - 0.5 * LN_2PI + (1.0 - 1.0 / z2 + 3.0 / (z2 * z2)).ln()
    }
}

/// Closed-form marginal posterior of β for the non-spatial model with a single
/// covariate: h(β|Y) = D_h⁻¹ [(Y - Xβ)ᵀ(Y - Xβ)/2 + 1/b_ε]^{-d}.
#[derive(Debug, Clone)]
pub struct ClosedFormNs {
    pub xtx: f64,
    /// OLS estimate XᵀY/XᵀX.
    pub b: f64,
    pub c: f64,
    /// a_ε + n/2.
    pub d: f64,
    /// log D_h = -d log(XᵀX/2) + ½ log π + lnΓ(d - ½) - lnΓ(d) + (½ - d) log c.
    pub log_dh: f64,
}

impl ClosedFormNs {
    pub fn new(x: &DVector<f64>, y: &DVector<f64>, priors: &PriorConfig) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch("x and y lengths differ".into()));
        }
        let n = y.len() as f64;
        let xtx = x.norm_squared();
        let xty = x.dot(y);
        let yty = y.norm_squared();
        if xtx <= 0.0 {
            return Err(Error::InvalidParameter("covariate is identically zero".into()));
        }
        let b = xty / xtx;
        // residual form avoids cancellation in YᵀY - (XᵀY)²/XᵀX
        let rss = (y - x * b).norm_squared().max(yty - xty * xty / xtx).min(yty);
        let c = (2.0 / xtx) * (0.5 * rss + 1.0 / priors.b_eps);
        let d = priors.a_eps + n / 2.0;
        if !(c > 0.0 && d > 0.5) {
            return Err(Error::InvalidParameter(format!("need c > 0 and d > 1/2, got c = {c}, d = {d}")));
        }
        let log_dh = -d * (xtx / 2.0).ln() + 0.5 * std::f64::consts::PI.ln() + ln_gamma(d - 0.5) - ln_gamma(d)
            + (0.5 - d) * c.ln();
        Ok(Self { xtx, b, c, d, log_dh })
    }

    pub fn ln_density(&self, beta: f64) -> f64 {
        let t = beta - self.b;
        -self.log_dh - self.d * ((self.xtx / 2.0).ln() + (t * t + self.c).ln())
    }

    pub fn density(&self, beta: f64) -> f64 {
        self.ln_density(beta).exp()
    }

    /// Posterior sd scale, sqrt(c / (2d - 1)).
    pub fn scale(&self) -> f64 {
        (self.c / (2.0 * self.d - 1.0)).sqrt()
    }

    /// CDF by one-dimensional quadrature.
    pub fn cdf(&self, beta: f64) -> Result<f64> {
        if beta <= self.b {
            quadrature::integrate_lower_tail(|x| self.density(x), beta, 1e-12, 0.0)
        } else {
            Ok(1.0 - quadrature::integrate_upper_tail(|x| self.density(x), beta, 1e-12, 0.0)?)
        }
    }

    /// Upper tail 1 - H(β), computed directly.
    pub fn upper_tail(&self, beta: f64) -> Result<f64> {
        quadrature::integrate_upper_tail(|x| self.density(x), beta, 1e-12, 0.0)
    }

    /// ∫ h over the real line.
    pub fn total_mass(&self) -> Result<f64> {
        let lo = quadrature::integrate_lower_tail(|x| self.density(x), self.b, 1e-12, 0.0)?;
        let hi = quadrature::integrate_upper_tail(|x| self.density(x), self.b, 1e-12, 0.0)?;
        Ok(lo + hi)
    }
}

/// Quantities for the tail comparison between an RSR posterior G and the
/// non-spatial closed form H (single covariate).
#[derive(Debug, Clone, serde::Serialize)]
pub struct TailReport {
    pub c_q: f64,
    pub log_d_g: f64,
    pub log_k: f64,
    pub premise_holds: bool,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub lower_ratio: f64,
    pub upper_ratio: f64,
    /// K / D_g*, the bound on the ratios when the premise holds.
    pub bound: f64,
}

/// min over r ≥ 0 of Π(ω_i + r ζ_i) / (1 + r^q), on a log grid refined by
/// golden-section search.
pub fn c_q(omega: &[f64], zeta: &[f64]) -> f64 {
    let q = omega.len() as f64;
    let lf = |r: f64| -> f64 {
        let num: f64 = omega.iter().zip(zeta).map(|(o, z)| (o + r * z).ln()).sum();
        let den = if r == 0.0 { 0.0 } else { (q * r.ln()).exp().ln_1p().max(q * r.ln()) };
        num - den
    };
    let mut best_r = 0.0;
    let mut best = lf(0.0);
    let grid: Vec<f64> = (0..=2400).map(|i| 10f64.powf(-12.0 + 0.01 * i as f64)).collect();
    for &r in &grid {
        let v = lf(r);
        if v < best {
            best = v;
            best_r = r;
        }
    }
    if best_r > 0.0 {
        let (mut a, mut b) = (best_r.ln() - 0.03, best_r.ln() + 0.03);
        let g = 0.618_033_988_749_894_8;
        for _ in 0..100 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if lf(c.exp()) < lf(d.exp()) {
                b = d;
            } else {
                a = c;
            }
        }
        best = best.min(lf((0.5 * (a + b)).exp()));
    }
    best.exp()
}

/// Tail report at OLS ± 10 non-spatial posterior sd.
pub fn tail_report(spec: &ModelSpec, y: &DVector<f64>) -> Result<TailReport> {
    if spec.p() != 1 {
        return Err(Error::InvalidParameter("tail report needs a single covariate".into()));
    }
    let mp = MarginalPosterior::new(spec, y)?;
    let x = spec.design.x().column(0).into_owned();
    let h = ClosedFormNs::new(&x, y, &spec.priors)?;
    let cq = c_q(&mp.omega, &mp.zeta);

    // D_g*: full normalising constant, with τ_s^{q/2} in the δ prior
    let extra = mp.log_constant();
    let (z, top) = mp.integrate(1, 1e-10, &[1.0], |_, _, _| 0.0, |_, _, _, out| out[0] = 1.0)?;
    let log_d_g = z[0].ln() + top + extra;

    let pr = &spec.priors;
    let n = mp.n as f64;
    let log_k = -0.5 * n * LN_2PI + ln_gamma(n / 2.0 + pr.a_eps) - ln_gamma(pr.a_eps) - pr.a_eps * pr.b_eps.ln()
        + h.log_dh
        - 0.5 * cq.ln();

    let sd_ns = (ns_posterior_sigma_mean(&spec.design, y, pr)? / h.xtx).sqrt();
    let beta_lo = h.b - 10.0 * sd_ns;
    let beta_hi = h.b + 10.0 * sd_ns;
    let ols = mp.ols[0];
    let (zn, ztop) = (z[0], top);
    let tail = |t: f64, upper: bool| -> Result<f64> {
        let (v, tt) = mp.integrate(
            1,
            1e-8,
            &[1.0],
            |k, u, _| {
                let s = (k.v[0] * (-u).exp()).sqrt();
                let zz = (t - ols - k.m[0]) / s;
                ln_norm_cdf(if upper { -zz } else { zz })
            },
            |_, _, _, out| out[0] = 1.0,
        )?;
        Ok((v[0] / zn) * (tt - ztop).exp())
    };
    let g_lo = tail(beta_lo, false)?;
    let g_hi = tail(beta_hi, true)?;
    let h_lo = h.cdf(beta_lo)?;
    let h_hi = h.upper_tail(beta_hi)?;
    Ok(TailReport {
        c_q: cq,
        log_d_g,
        log_k,
        premise_holds: log_d_g > log_k,
        beta_lo,
        beta_hi,
        lower_ratio: g_lo / h_lo,
        upper_ratio: g_hi / h_hi,
        bound: (log_k - log_d_g).exp(),
    })
}
