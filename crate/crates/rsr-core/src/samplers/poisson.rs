//! Metropolis-within-Gibbs sampler for the Poisson log-link model.
//!
//! β: multivariate normal random walk with covariance s_β² U⁻¹ (U the Fisher
//! information of the non-spatial fit); δ: spherical normal random walk with
//! scale s_δ; τ_s: exact gamma conditional. With `adapt_burn_in` both scales
//! follow a Robbins-Monro recursion during burn-in and are frozen afterwards.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::{iwls_poisson, AcceptanceRates, ChainConfig, ChainOutput};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{BetaPrior, Family, ModelSpec};
use crate::rng;

pub const DELTA_TARGET: f64 = 0.25;
pub const BETA_TARGET: f64 = 0.30;

enum Delta {
    None,
    /// W = I; penalty evaluated from the sparse nonzeros of F.
    Identity { f_nz: Vec<(usize, usize, f64)> },
    /// δ = Uη with UᵀFU = diag(f); spherical steps in η are spherical in δ.
    Rotated { u: DMatrix<f64>, f: DVector<f64>, wu: DMatrix<f64> },
}

fn loglik(y: &DVector<f64>, lin: &DVector<f64>) -> f64 {
    y.iter().zip(lin.iter()).map(|(&y, &l)| y * l - l.exp()).sum()
}

fn rm_gain(t: usize) -> f64 {
    1.0 / ((t + 1) as f64).powf(0.6)
}

/// Proposal covariance for β: the block of the intercept-augmented inverse
/// information matching the model's columns.
fn beta_proposal(spec: &ModelSpec, y: &DVector<f64>, offset: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let fit = match &spec.iwls {
        Some(f) => f.clone(),
        None => iwls_poisson(&spec.design.with_intercept_added()?, y, offset)?,
    };
    let p = spec.p();
    if spec.design.with_intercept() {
        Ok((fit.beta_hat.clone(), fit.covariance.clone()))
    } else {
        let cov = fit.covariance.view((1, 1), (p, p)).into_owned();
        Ok((fit.beta_hat.rows(1, p).into_owned(), cov))
    }
}

pub fn mh_poisson(spec: &ModelSpec, y: &DVector<f64>, cfg: &ChainConfig) -> Result<ChainOutput> {
    cfg.validate()?;
    let Family::Poisson { offset } = &spec.family else {
        return Err(Error::InvalidParameter("MH sampler needs a Poisson model".into()));
    };
    let (n, p, q) = (spec.n(), spec.p(), spec.q());
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("{} counts, n = {n}", y.len())));
    }
    let (beta0, prop_cov) = beta_proposal(spec, y, offset)?;
    let prop_l = prop_cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numerical("β proposal covariance not positive definite"))?
        .l();
    let x = spec.design.x();
    let pr = spec.priors;
    let beta_logprior = |b: &DVector<f64>| match pr.beta_prior {
        BetaPrior::Flat => 0.0,
        BetaPrior::Normal { sd } => -0.5 * b.norm_squared() / (sd * sd),
    };

    let delta_kind = if q == 0 {
        Delta::None
    } else if q == n && spec.w == DMatrix::identity(n, n) {
        let mut f_nz = Vec::new();
        for j in 0..q {
            for i in 0..q {
                let v = spec.f[(i, j)];
                if v != 0.0 {
                    f_nz.push((i, j, v));
                }
            }
        }
        Delta::Identity { f_nz }
    } else {
        let (f, u) = linalg::sym_eigen_desc(&spec.f)?;
        let wu = &spec.w * &u;
        Delta::Rotated { u, f, wu }
    };

    let mut rng = rng::from_seed(cfg.seed);
    let mut beta = beta0;
    let mut xb = x * &beta;
    // `state` holds δ (identity) or η (rotated)
    let mut state = DVector::zeros(q);
    let mut wd = DVector::zeros(n);
    let mut tau_s = 1.0;
    let penalty = |s: &DVector<f64>| -> f64 {
        match &delta_kind {
            Delta::None => 0.0,
            Delta::Identity { f_nz } => f_nz.iter().map(|&(i, j, v)| v * s[i] * s[j]).sum(),
            Delta::Rotated { f, .. } => s.iter().zip(f.iter()).map(|(e, fi)| fi * e * e).sum(),
        }
    };
    let mut pen = 0.0;
    let mut ll = loglik(y, &(&xb + &wd + offset));

    let mut s_beta: f64 = 1.0;
    let mut s_delta = cfg.delta_step;
    let shape_s = pr.a_s + spec.penalty_rank as f64 / 2.0;

    let m = cfg.retained();
    let mut out_beta = DMatrix::zeros(m, p);
    let mut out_delta = if cfg.store_delta { Some(DMatrix::zeros(m, q)) } else { None };
    let mut out_ts = if q > 0 { Vec::with_capacity(m) } else { Vec::new() };
    let (mut acc_b, mut acc_d) = (0usize, 0usize);

    let mut z_beta = DVector::zeros(p);
    let mut z_delta = DVector::zeros(q);
    for it in 0..cfg.iterations {
        let burning = it < cfg.burn_in;

        // β
        for v in z_beta.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let cand = &beta + &prop_l * &z_beta * s_beta;
        let xb_c = x * &cand;
        let lin_c = &xb_c + &wd + offset;
        let ll_c = loglik(y, &lin_c);
        let log_r = ll_c + beta_logprior(&cand) - ll - beta_logprior(&beta);
        let u: f64 = rng.random();
        let accept = log_r.is_finite() && u.ln() < log_r;
        if accept {
            beta = cand;
            xb = xb_c;
            ll = ll_c;
        }
        if burning {
            if cfg.adapt_burn_in {
                let a = if accept { 1.0 } else { 0.0 };
                s_beta *= (rm_gain(it) * (a - BETA_TARGET)).exp();
            }
        } else if accept {
            acc_b += 1;
        }

        // δ and τ_s
        if q > 0 {
            for v in z_delta.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let cand = &state + &z_delta * s_delta;
            let wd_c = match &delta_kind {
                Delta::Identity { .. } => cand.clone(),
                Delta::Rotated { wu, .. } => &wd + wu * &z_delta * s_delta,
                Delta::None => unreachable!(),
            };
            let pen_c = penalty(&cand);
            let lin_c = &xb + &wd_c + offset;
            let ll_c = loglik(y, &lin_c);
            let log_r = ll_c - 0.5 * tau_s * pen_c - ll + 0.5 * tau_s * pen;
            let u: f64 = rng.random();
            let accept = log_r.is_finite() && u.ln() < log_r;
            if accept {
                state = cand;
                wd = wd_c;
                pen = pen_c;
                ll = ll_c;
            }
            if burning {
                if cfg.adapt_burn_in {
                    let a = if accept { 1.0 } else { 0.0 };
                    s_delta *= (rm_gain(it) * (a - DELTA_TARGET)).exp();
                }
            } else if accept {
                acc_d += 1;
            }

            let rate = 1.0 / pr.b_s + 0.5 * pen;
            let g = Gamma::new(shape_s, 1.0 / rate).map_err(|_| Error::NumericalFailure {
                context: format!("τ_s gamma(shape {shape_s}, rate {rate})"),
                iteration: Some(it),
            })?;
            tau_s = g.sample(&mut rng);
            if !(tau_s > 0.0 && tau_s.is_finite()) {
                return Err(Error::NumericalFailure {
                    context: format!("τ_s draw {tau_s}"),
                    iteration: Some(it),
                });
            }
        }
        // periodic refresh against drift in the incremental Wδ
        if let Delta::Rotated { wu, .. } = &delta_kind {
            if it % 1000 == 999 {
                wd = wu * &state;
                ll = loglik(y, &(&xb + &wd + offset));
            }
        }
        if !ll.is_finite() {
            return Err(Error::NumericalFailure {
                context: "log-likelihood not finite".into(),
                iteration: Some(it),
            });
        }

        if !burning {
            let k = it - cfg.burn_in;
            out_beta.set_row(k, &beta.transpose());
            if q > 0 {
                out_ts.push(tau_s);
            }
            if let Some(d) = out_delta.as_mut() {
                let delta = match &delta_kind {
                    Delta::Rotated { u, .. } => u * &state,
                    _ => state.clone(),
                };
                d.set_row(k, &delta.transpose());
            }
        }
    }

    let acceptance = AcceptanceRates {
        beta: Some(acc_b as f64 / m as f64),
        delta: if q > 0 { Some(acc_d as f64 / m as f64) } else { None },
    };
    let mut warnings = spec.notes.clone();
    for (name, rate) in [("beta", acceptance.beta), ("delta", acceptance.delta)] {
        if let Some(r) = rate {
            if !(0.05..=0.7).contains(&r) {
                warnings.push(format!("{name} acceptance rate {r:.3} outside [0.05, 0.7]"));
            }
        }
    }
    Ok(ChainOutput {
        beta: out_beta,
        beta_names: spec.design.names().to_vec(),
        delta: out_delta,
        tau_eps: Vec::new(),
        tau_s: out_ts,
        acceptance,
        seed: cfg.seed,
        iterations: cfg.iterations,
        burn_in: cfg.burn_in,
        warnings,
    })
}
