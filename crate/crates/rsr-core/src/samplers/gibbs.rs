//! Gibbs sampler for the Gaussian model.
//!
//! Full conditionals (gamma rate = 1/b + quadratic form / 2):
//! β | · ~ N((XᵀX)⁻¹Xᵀ(Y - Wδ), (τ_ε XᵀX)⁻¹) under the flat prior;
//! δ | · ~ N(P⁻¹ τ_ε Wᵀ(Y - Xβ), P⁻¹), P = τ_ε WᵀW + τ_s F;
//! τ_s | · ~ Gamma(a_s + rank(F)/2, rate 1/b_s + δᵀFδ/2);
//! τ_ε | · ~ Gamma(a_ε + n/2, rate 1/b_ε + ‖Y - Xβ - Wδ‖²/2).
//! Scan order: β, δ, τ_s, τ_ε.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::{AcceptanceRates, ChainConfig, ChainOutput};
use crate::error::{Error, Result};
use crate::linalg::{self, JointDiag};
use crate::model::{BetaPrior, Family, ModelSpec};
use crate::rng;

enum DeltaSolver {
    /// η = Uᵀδ has independent coordinates; `wu` = W U.
    Diagonal { jd: JointDiag, wu: DMatrix<f64> },
    Dense { wtw: DMatrix<f64> },
}

/// Conditional distributions of the Gaussian model, shared by the sampler and tests.
pub struct GaussianConditionals<'a> {
    spec: &'a ModelSpec,
    y: &'a DVector<f64>,
    xtx: DMatrix<f64>,
    xtx_chol: Cholesky<f64, Dyn>,
}

impl<'a> GaussianConditionals<'a> {
    pub fn new(spec: &'a ModelSpec, y: &'a DVector<f64>) -> Result<Self> {
        if !spec.is_gaussian() {
            return Err(Error::InvalidParameter("Gibbs sampler needs a Gaussian model".into()));
        }
        if y.len() != spec.n() {
            return Err(Error::DimensionMismatch(format!("{} responses, n = {}", y.len(), spec.n())));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("response contains non-finite values".into()));
        }
        let x = spec.design.x();
        let xtx = x.transpose() * x;
        let xtx_chol = xtx
            .clone()
            .cholesky()
            .ok_or_else(|| Error::numerical("XᵀX is not positive definite"))?;
        Ok(Self { spec, y, xtx, xtx_chol })
    }

    /// Mean and covariance of β given Wδ and τ_ε.
    pub fn beta(&self, wd: &DVector<f64>, tau_eps: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let x = self.spec.design.x();
        let xr = x.transpose() * (self.y - wd);
        match self.spec.priors.beta_prior {
            BetaPrior::Flat => Ok((self.xtx_chol.solve(&xr), self.xtx_chol.inverse() / tau_eps)),
            BetaPrior::Normal { sd } => {
                let p = self.spec.p();
                let prec = &self.xtx * tau_eps + DMatrix::identity(p, p) / (sd * sd);
                let (_, cov) = linalg::spd_inverse(&prec)?;
                Ok((&cov * xr * tau_eps, cov))
            }
        }
    }

    /// Mean and precision of δ given β, τ_ε, τ_s.
    pub fn delta(&self, beta: &DVector<f64>, tau_eps: f64, tau_s: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let w = &self.spec.w;
        let prec = w.transpose() * w * tau_eps + &self.spec.f * tau_s;
        let rhs = w.transpose() * (self.y - self.spec.design.x() * beta) * tau_eps;
        let chol = prec
            .clone()
            .cholesky()
            .ok_or_else(|| Error::numerical("δ precision not positive definite"))?;
        Ok((chol.solve(&rhs), prec))
    }

    /// Shape and rate of τ_ε.
    pub fn tau_eps(&self, beta: &DVector<f64>, wd: &DVector<f64>) -> (f64, f64) {
        let r = self.y - self.spec.design.x() * beta - wd;
        let pr = &self.spec.priors;
        (pr.a_eps + self.spec.n() as f64 / 2.0, 1.0 / pr.b_eps + 0.5 * r.norm_squared())
    }

    /// Shape and rate of τ_s.
    pub fn tau_s(&self, delta: &DVector<f64>) -> (f64, f64) {
        let pr = &self.spec.priors;
        let quad = (delta.transpose() * &self.spec.f * delta)[0];
        (pr.a_s + self.spec.penalty_rank as f64 / 2.0, 1.0 / pr.b_s + 0.5 * quad)
    }
}

fn gamma_draw<R: Rng>(shape: f64, rate: f64, rng: &mut R, it: usize, what: &str) -> Result<f64> {
    let g = Gamma::new(shape, 1.0 / rate).map_err(|_| Error::NumericalFailure {
        context: format!("{what} gamma(shape {shape}, rate {rate})"),
        iteration: Some(it),
    })?;
    let v = g.sample(rng);
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::NumericalFailure {
            context: format!("{what} draw {v}"),
            iteration: Some(it),
        });
    }
    Ok(v)
}

fn normals<R: Rng>(k: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(k, |_, _| rng.sample(StandardNormal))
}

pub fn gibbs_gaussian(spec: &ModelSpec, y: &DVector<f64>, cfg: &ChainConfig) -> Result<ChainOutput> {
    cfg.validate()?;
    let cond = GaussianConditionals::new(spec, y)?;
    let mut rng = rng::from_seed(cfg.seed);
    let (n, p, q) = (spec.n(), spec.p(), spec.q());
    let x = spec.design.x();
    let pr = spec.priors;
    debug_assert!(matches!(spec.family, Family::Gaussian));

    let solver = if q == 0 {
        None
    } else {
        let wtw = spec.w.transpose() * &spec.w;
        Some(match linalg::joint_diagonalize(&wtw, &spec.f) {
            Some(jd) => {
                let wu = &spec.w * &jd.u;
                DeltaSolver::Diagonal { jd, wu }
            }
            None => DeltaSolver::Dense { wtw },
        })
    };

    let xtx_l = cond.xtx_chol.l();
    let xt = x.transpose();
    let wt = spec.w.transpose();

    let mut beta = spec.design.ols(y)?;
    let mut wd = DVector::zeros(n);
    let mut delta = DVector::zeros(q);
    let mut eta = DVector::zeros(q);
    let resid0 = y - x * &beta;
    let mut tau_eps = ((n as f64 - p as f64).max(1.0) / resid0.norm_squared().max(1e-12)).min(1e12);
    let mut tau_s = 1.0;

    let m = cfg.retained();
    let mut out_beta = DMatrix::zeros(m, p);
    let mut out_delta = if cfg.store_delta { Some(DMatrix::zeros(m, q)) } else { None };
    let mut out_te = Vec::with_capacity(m);
    let mut out_ts = if q > 0 { Vec::with_capacity(m) } else { Vec::new() };

    let shape_eps = pr.a_eps + n as f64 / 2.0;
    let shape_s = pr.a_s + spec.penalty_rank as f64 / 2.0;

    for it in 0..cfg.iterations {
        // β
        let r = y - &wd;
        match pr.beta_prior {
            BetaPrior::Flat => {
                let mean = cond.xtx_chol.solve(&(&xt * &r));
                let z = normals(p, &mut rng);
                let dev = xtx_l
                    .transpose()
                    .solve_upper_triangular(&z)
                    .ok_or_else(|| Error::NumericalFailure { context: "β draw".into(), iteration: Some(it) })?;
                beta = mean + dev / tau_eps.sqrt();
            }
            BetaPrior::Normal { sd } => {
                let prec = &cond.xtx * tau_eps + DMatrix::identity(p, p) / (sd * sd);
                let chol = prec
                    .cholesky()
                    .ok_or_else(|| Error::NumericalFailure { context: "β precision".into(), iteration: Some(it) })?;
                let mean = chol.solve(&(&xt * &r * tau_eps));
                let z = normals(p, &mut rng);
                let dev = chol
                    .l()
                    .transpose()
                    .solve_upper_triangular(&z)
                    .ok_or_else(|| Error::NumericalFailure { context: "β draw".into(), iteration: Some(it) })?;
                beta = mean + dev;
            }
        }
        let xb = x * &beta;

        // δ and τ_s
        if let Some(solver) = &solver {
            let r = y - &xb;
            let quad = match solver {
                DeltaSolver::Diagonal { jd, wu } => {
                    let proj = wu.transpose() * &r;
                    let mut quad = 0.0;
                    for i in 0..q {
                        let prec = tau_eps * jd.g[i] + tau_s * jd.f[i];
                        if !(prec > 0.0 && prec.is_finite()) {
                            return Err(Error::NumericalFailure {
                                context: format!("δ precision {prec} in direction {i}"),
                                iteration: Some(it),
                            });
                        }
                        let z: f64 = rng.sample(StandardNormal);
                        eta[i] = tau_eps * proj[i] / prec + z / prec.sqrt();
                        quad += jd.f[i] * eta[i] * eta[i];
                    }
                    wd = wu * &eta;
                    if out_delta.is_some() {
                        delta = &jd.u * &eta;
                    }
                    quad
                }
                DeltaSolver::Dense { wtw } => {
                    let prec = wtw * tau_eps + &spec.f * tau_s;
                    let chol = prec.cholesky().ok_or_else(|| Error::NumericalFailure {
                        context: "δ precision not positive definite".into(),
                        iteration: Some(it),
                    })?;
                    let mean = chol.solve(&(&wt * &r * tau_eps));
                    let z = normals(q, &mut rng);
                    let dev = chol
                        .l()
                        .transpose()
                        .solve_upper_triangular(&z)
                        .ok_or_else(|| Error::NumericalFailure { context: "δ draw".into(), iteration: Some(it) })?;
                    delta = mean + dev;
                    wd = &spec.w * &delta;
                    (delta.transpose() * &spec.f * &delta)[0]
                }
            };
            tau_s = gamma_draw(shape_s, 1.0 / pr.b_s + 0.5 * quad, &mut rng, it, "τ_s")?;
        }

        // τ_ε
        let resid = y - &xb - &wd;
        tau_eps = gamma_draw(shape_eps, 1.0 / pr.b_eps + 0.5 * resid.norm_squared(), &mut rng, it, "τ_ε")?;

        if it >= cfg.burn_in {
            let k = it - cfg.burn_in;
            out_beta.set_row(k, &beta.transpose());
            out_te.push(tau_eps);
            if q > 0 {
                out_ts.push(tau_s);
            }
            if let Some(d) = out_delta.as_mut() {
                d.set_row(k, &delta.transpose());
            }
        }
    }

    Ok(ChainOutput {
        beta: out_beta,
        beta_names: spec.design.names().to_vec(),
        delta: out_delta,
        tau_eps: out_te,
        tau_s: out_ts,
        acceptance: AcceptanceRates::default(),
        seed: cfg.seed,
        iterations: cfg.iterations,
        burn_in: cfg.burn_in,
        warnings: spec.notes.clone(),
    })
}
