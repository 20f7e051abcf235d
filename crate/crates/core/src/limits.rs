//! Closed-form limit objects at the critical scaling `alpha = beta sqrt(n)`:
//! the Gaussian covariance of `(Z, Z^2)`, the densities `eta` and `psi`,
//! the functional `f`, and the limiting total variation distance.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

/// A symmetric positive-definite 2x2 matrix with its inverse and determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovMatrix2 {
    pub matrix: [[f64; 2]; 2],
    pub inverse: [[f64; 2]; 2],
    pub det: f64,
}

impl CovMatrix2 {
    /// `x Sigma^{-1} x^T`.
    pub fn inverse_quadratic_form(&self, x: [f64; 2]) -> f64 {
        let m = &self.inverse;
        x[0] * x[0] * m[0][0] + 2.0 * x[0] * x[1] * m[0][1] + x[1] * x[1] * m[1][1]
    }

    /// `matrix * inverse`, which should be the identity.
    pub fn product(&self) -> [[f64; 2]; 2] {
        let (a, b) = (&self.matrix, &self.inverse);
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }
}

/// Limiting covariance of `(Z, Z^2)` for Poisson(k):
/// `[[k, 2k^2 + k], [2k^2 + k, 4k^3 + 6k^2 + k]]`, determinant `2k^3`.
pub fn sigma_matrix(k: u32) -> CovMatrix2 {
    let k = k as f64;
    let off = 2.0 * k * k + k;
    let matrix = [[k, off], [off, 4.0 * k.powi(3) + 6.0 * k * k + k]];
    let ik = 1.0 / k;
    let ik2 = ik * ik;
    let inv_off = -ik - ik2 / 2.0;
    let inverse = [[2.0 + 3.0 * ik + ik2 / 2.0, inv_off], [inv_off, ik2 / 2.0]];
    CovMatrix2 { matrix, inverse, det: 2.0 * k.powi(3) }
}

/// Centered bivariate Gaussian density with covariance [`sigma_matrix`].
pub fn eta_density(k: u32, x: [f64; 2]) -> f64 {
    let s = sigma_matrix(k);
    (-0.5 * s.inverse_quadratic_form(x)).exp() / (2.0 * PI * s.det.sqrt())
}

/// Centered Gaussian density with variance `2k^2`.
pub fn psi_density(k: u32, x: f64) -> f64 {
    let k = k as f64;
    (-x * x / (4.0 * k * k)).exp() / (2.0 * k * PI.sqrt())
}

/// `f(x) = |1 - exp(-k^2/(4 beta^2) - x/(2 beta))|`.
pub fn f_value(k: u32, beta: f64, x: f64) -> f64 {
    let k = k as f64;
    (-(-k * k / (4.0 * beta * beta) - x / (2.0 * beta)).exp_m1()).abs()
}

/// `f` frozen at `f(-a)` to the left of `-a`, so bounded and continuous.
pub fn f_a_value(k: u32, beta: f64, a: f64, x: f64) -> f64 {
    f_value(k, beta, x.max(-a))
}

/// Mean and variance of the Gaussian `N` in the limit `1/2 E|1 - e^{-N}|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLawParams {
    pub k: u32,
    pub beta: f64,
    pub mean: f64,
    pub variance: f64,
}

impl LimitLawParams {
    pub fn new(k: u32, beta: f64) -> Self {
        let kf = k as f64;
        let b2 = beta * beta;
        Self { k, beta, mean: kf * kf / (4.0 * b2), variance: kf * kf / (2.0 * b2) }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn density(&self, x: f64) -> f64 {
        normal_pdf(x, self.mean, self.std_dev())
    }

    /// `e^{-x}` times the density, with the exponents combined first.
    pub fn tilted_density(&self, x: f64) -> f64 {
        let sd = self.std_dev();
        let z = (x - self.mean) / sd;
        (-x - 0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
    }
}

pub fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}

/// Standard normal cdf via `erfc`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Half-width of the integration window, in standard deviations.
const WINDOW_SDS: f64 = 12.0;
pub const QUAD_TOL: f64 = 1e-10;

/// `1/2 E|1 - e^{-N}|` by adaptive quadrature, split at the kink `N = 0`.
pub fn limit_tv_quadrature(k: u32, beta: f64) -> f64 {
    let law = LimitLawParams::new(k, beta);
    let integrand = |x: f64| 0.5 * (law.tilted_density(x) - law.density(x)).abs();
    integrate_split(integrand, law.mean, law.std_dev(), 0.0)
}

/// `E[g(N)]` over `[-mean - 12 sd, mean + 12 sd]`, splitting at `kink` when
/// it is inside. The lower edge covers the `e^{-N}`-tilted law, which is
/// centered at `-mean`.
fn integrate_split<F: Fn(f64) -> f64>(g: F, mean: f64, sd: f64, kink: f64) -> f64 {
    let (lo, hi) = (-mean - WINDOW_SDS * sd, mean + WINDOW_SDS * sd);
    if lo < kink && kink < hi {
        quad::integrate(&g, lo, kink, QUAD_TOL / 2.0) + quad::integrate(&g, kink, hi, QUAD_TOL / 2.0)
    } else {
        quad::integrate(&g, lo, hi, QUAD_TOL)
    }
}

/// `E[e^{-N}]`, which is 1 because `mean = variance / 2`.
pub fn expected_exp_neg(k: u32, beta: f64) -> f64 {
    let law = LimitLawParams::new(k, beta);
    integrate_split(|x| law.tilted_density(x), law.mean, law.std_dev(), law.mean)
}

/// Closed form of [`limit_tv_quadrature`]: `2 Phi(k / (2 sqrt(2) beta)) - 1`.
///
/// With `mu = sigma^2 / 2`, `E[e^{-N}; N > 0] = Phi(-mu/sigma)`, which gives
/// `1/2 E|1 - e^{-N}| = Phi(mu/sigma) - Phi(-mu/sigma)`.
pub fn limit_tv_closed_form(k: u32, beta: f64) -> f64 {
    let ratio = k as f64 / (2.0 * std::f64::consts::SQRT_2 * beta);
    // 2 Phi(r) - 1 = erf(r / sqrt 2), written through erfc for small r
    1.0 - erfc(ratio / std::f64::consts::SQRT_2)
}

/// Limiting `d_TV` between the two models at `alpha = beta sqrt(n)`.
pub fn limit_tv(k: u32, beta: f64) -> f64 {
    limit_tv_closed_form(k, beta)
}

/// Adaptive Gauss-Kronrod (7/15) quadrature.
pub mod quad {
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
        0.104_790_010_322_250_18,
        0.140_653_259_715_525_92,
        0.169_004_726_639_267_9,
        0.190_350_578_064_785_4,
        0.204_432_940_075_298_9,
        0.209_482_141_084_727_83,
    ];
    // Gauss weights on XGK[1], XGK[3], XGK[5], XGK[7]
    const WG: [f64; 4] = [
        0.129_484_966_168_869_7,
        0.279_705_391_489_276_7,
        0.381_830_050_505_118_9,
        0.417_959_183_673_469_4,
    ];

    const MAX_INTERVALS: usize = 4000;

    fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c);
        let mut k = WGK[7] * fc;
        let mut g = WG[3] * fc;
        for i in 0..7 {
            let dx = h * XGK[i];
            let pair = f(c - dx) + f(c + dx);
            k += WGK[i] * pair;
            if i % 2 == 1 {
                g += WG[i / 2] * pair;
            }
        }
        (k * h, (k - g).abs() * h)
    }

    /// `int_a^b f` to absolute tolerance `tol`, bisecting the interval with
    /// the largest error estimate until the summed estimate drops below
    /// `tol` or the interval cap is hit.
    pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        // (a, b, value, err)
        let (v, e) = kronrod(f, a, b);
        let mut parts = vec![(a, b, v, e)];
        loop {
            let err: f64 = parts.iter().map(|p| p.3).sum();
            if err <= tol || parts.len() >= MAX_INTERVALS {
                break;
            }
            let worst = parts
                .iter()
                .enumerate()
                .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
                .map(|(i, _)| i)
                .expect("non-empty");
            let (lo, hi, _, _) = parts.swap_remove(worst);
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                // interval at f64 resolution; keep it and stop refining
                parts.push((lo, hi, kronrod(f, lo, hi).0, 0.0));
                continue;
            }
            let (lv, le) = kronrod(f, lo, mid);
            let (rv, re) = kronrod(f, mid, hi);
            parts.push((lo, mid, lv, le));
            parts.push((mid, hi, rv, re));
        }
        parts.sort_by(|x, y| x.0.total_cmp(&y.0));
        parts.iter().map(|p| p.2).sum()
    }
}
