//! Adaptive Gauss-Kronrod (7/15) quadrature for vector-valued integrands,
//! with nested use for two-dimensional integrals.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerance: component k converges when err_k ≤ max(abs[k], rel |I_k|).
#[derive(Debug, Clone)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: Vec<f64>,
}

impl Tolerance {
    pub fn new(rel: f64, abs: Vec<f64>) -> Self {
        Self { rel, abs }
    }

    fn allowed(&self, k: usize, value: f64) -> f64 {
        self.abs[k].max(self.rel * value.abs())
    }
}

struct Segment {
    a: f64,
    b: f64,
    est: Vec<f64>,
    err: Vec<f64>,
}

fn gk15<F: FnMut(f64, &mut [f64])>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    f(c, buf);
    for d in 0..dim {
        k[d] = WGK[7] * buf[d];
        g[d] = WG[3] * buf[d];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        for x in [c - dx, c + dx] {
            f(x, buf);
            for d in 0..dim {
                k[d] += WGK[j] * buf[d];
                if j % 2 == 1 {
                    g[d] += WG[j / 2] * buf[d];
                }
            }
        }
    }
    let est: Vec<f64> = k.iter().map(|v| v * h).collect();
    let err: Vec<f64> = k.iter().zip(&g).map(|(kv, gv)| ((kv - gv) * h).abs()).collect();
    Segment { a, b, est, err }
}

/// Globally adaptive integration of a `dim`-vector function over [a, b],
/// starting from `init` equal sub-intervals.
pub fn integrate<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    a: f64,
    b: f64,
    dim: usize,
    init: usize,
    tol: &Tolerance,
    max_segments: usize,
) -> Result<Vec<f64>> {
    assert_eq!(tol.abs.len(), dim);
    let mut buf = vec![0.0; dim];
    let init = init.max(1);
    let h = (b - a) / init as f64;
    let mut segs: Vec<Segment> = (0..init)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == init { b } else { a + h * (i + 1) as f64 };
            gk15(&mut f, lo, hi, dim, &mut buf)
        })
        .collect();
    loop {
        let mut total = vec![0.0; dim];
        let mut errs = vec![0.0; dim];
        for s in &segs {
            for d in 0..dim {
                total[d] += s.est[d];
                errs[d] += s.err[d];
            }
        }
        if total.iter().chain(errs.iter()).any(|v| !v.is_finite()) {
            return Err(Error::numerical("quadrature: non-finite integrand"));
        }
        let allowed: Vec<f64> = (0..dim).map(|d| tol.allowed(d, total[d])).collect();
        if (0..dim).all(|d| errs[d] <= allowed[d]) {
            return Ok(total);
        }
        if segs.len() >= max_segments {
            return Err(Error::numerical(format!(
                "quadrature did not converge within {max_segments} segments"
            )));
        }
        // split the segment with the largest error relative to the allowance
        let score = |s: &Segment| {
            (0..dim)
                .map(|d| s.err[d] / allowed[d].max(f64::MIN_POSITIVE))
                .fold(0.0f64, f64::max)
        };
        let (worst, _) = segs
            .iter()
            .enumerate()
            .map(|(i, s)| (i, score(s)))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let s = segs.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if !(mid > s.a && mid < s.b) {
            return Err(Error::numerical("quadrature: interval collapsed"));
        }
        segs.push(gk15(&mut f, s.a, mid, dim, &mut buf));
        segs.push(gk15(&mut f, mid, s.b, dim, &mut buf));
    }
}

/// Scalar convenience wrapper.
pub fn integrate_scalar<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, init: usize, rel: f64, abs: f64) -> Result<f64> {
    let tol = Tolerance::new(rel, vec![abs]);
    Ok(integrate(|x, out: &mut [f64]| out[0] = f(x), a, b, 1, init, &tol, 20_000)?[0])
}

/// ∫_{-∞}^{upper} f via x = upper - (1 - t)/t.
pub fn integrate_lower_tail<F: FnMut(f64) -> f64>(mut f: F, upper: f64, rel: f64, abs: f64) -> Result<f64> {
    integrate_scalar(
        |t| {
            if t <= 0.0 {
                return 0.0;
            }
            let x = upper - (1.0 - t) / t;
            f(x) / (t * t)
        },
        0.0,
        1.0,
        16,
        rel,
        abs,
    )
}

/// ∫_{lower}^{∞} f via x = lower + (1 - t)/t.
pub fn integrate_upper_tail<F: FnMut(f64) -> f64>(mut f: F, lower: f64, rel: f64, abs: f64) -> Result<f64> {
    integrate_lower_tail(|x| f(2.0 * lower - x), lower, rel, abs)
}

/// Rectangle for two-dimensional integration; the outer variable is `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub u: (f64, f64),
    pub v: (f64, f64),
}

/// Nested adaptive integration of a vector function over a rectangle.
/// `init_step` bounds the initial sub-interval width on both axes so that
/// narrow peaks are resolved from the start.
pub fn integrate_2d<F: Fn(f64, f64, &mut [f64])>(
    f: F,
    rect: Rect,
    dim: usize,
    init_step: f64,
    tol: &Tolerance,
) -> Result<Vec<f64>> {
    let splits = |(a, b): (f64, f64)| (((b - a) / init_step).ceil() as usize).max(1);
    let (nu, nv) = (splits(rect.u), splits(rect.v));
    let vwidth = rect.v.1 - rect.v.0;
    let inner_tol = Tolerance::new(tol.rel * 0.1, tol.abs.iter().map(|a| 0.1 * a / vwidth).collect());
    let mut failure: Option<Error> = None;
    let outer = integrate(
        |v, out: &mut [f64]| {
            if failure.is_some() {
                out.iter_mut().for_each(|o| *o = 0.0);
                return;
            }
            match integrate(|u, o: &mut [f64]| f(u, v, o), rect.u.0, rect.u.1, dim, nu, &inner_tol, 20_000) {
                Ok(vals) => out.copy_from_slice(&vals),
                Err(e) => {
                    failure = Some(e);
                    out.iter_mut().for_each(|o| *o = 0.0);
                }
            }
        },
        rect.v.0,
        rect.v.1,
        dim,
        nv,
        tol,
        20_000,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    outer
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let v = integrate_scalar(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, 1, 1e-14, 0.0).unwrap();
        assert!((v - (63.0 / 6.0 - 9.0)).abs() < 1e-13);
    }

    #[test]
    fn gaussian_tails() {
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        let lower = integrate_lower_tail(phi, 0.0, 1e-12, 0.0).unwrap();
        assert!((lower - 0.5).abs() < 1e-11);
        let upper = integrate_upper_tail(phi, 1.0, 1e-12, 0.0).unwrap();
        // 1 - Φ(1); statrs' erfc is only good to about 1e-10 here
        let expect = 0.158_655_253_931_457_05;
        assert!((upper - expect).abs() < 1e-11, "{upper} {expect}");
    }

    #[test]
    fn narrow_peak_resolved() {
        let v = integrate_scalar(|x| (-0.5 * ((x - 3.3) / 0.01).powi(2)).exp(), -50.0, 50.0, 100, 1e-12, 0.0).unwrap();
        assert!((v / (0.01 * (2.0 * PI).sqrt()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn two_dimensional_gaussian_moments() {
        let rect = Rect { u: (-12.0, 12.0), v: (-23.0, 25.0) };
        let tol = Tolerance::new(1e-11, vec![0.0, 1e-14, 1e-14]);
        let vals = integrate_2d(
            |u, v, out| {
                let w = (-0.5 * (u * u + (v - 1.0).powi(2) / 4.0)).exp();
                out[0] = w;
                out[1] = w * v;
                out[2] = w * u * v;
            },
            rect,
            3,
            1.0,
            &tol,
        )
        .unwrap();
        let z = 2.0 * PI * 2.0;
        assert!((vals[0] / z - 1.0).abs() < 1e-10, "{vals:?} {z}");
        assert!((vals[1] / vals[0] - 1.0).abs() < 1e-10);
        assert!((vals[2] / vals[0]).abs() < 1e-10);
    }
}
