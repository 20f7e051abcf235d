//! Domain types for k-out mappings and the exact log-probability formulas
//! shared by every other module.
//!
//! Vertices are `0..n` internally. Anything that crosses a text boundary
//! (CLI output, digraph files) uses `1..=n`.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Initial vertex weight of the attachment process.
///
/// `Infinite` is the uniform random mapping, kept as its own state because
/// every formula for it has a different shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Alpha {
    Finite(f64),
    Infinite,
}

impl Alpha {
    pub fn finite(self) -> Option<f64> {
        match self {
            Alpha::Finite(a) => Some(a),
            Alpha::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Alpha::Infinite)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Finite(a) => write!(f, "{a}"),
            Alpha::Infinite => f.write_str("inf"),
        }
    }
}

/// `(n, k, alpha)`: vertex count, out-degree and initial weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n: usize,
    k: usize,
    alpha: Alpha,
}

impl ModelParams {
    pub fn new(n: usize, k: usize, alpha: Alpha) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if let Alpha::Finite(a) = alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "alpha must be a positive real or inf, got {a}"
                )));
            }
        }
        if n.checked_mul(k).is_none_or(|kn| kn > u32::MAX as usize) {
            return Err(Error::InvalidParameter("kn does not fit in 32 bits".into()));
        }
        Ok(Self { n, k, alpha })
    }

    pub fn finite(n: usize, k: usize, alpha: f64) -> Result<Self> {
        Self::new(n, k, Alpha::Finite(alpha))
    }

    pub fn uniform(n: usize, k: usize) -> Result<Self> {
        Self::new(n, k, Alpha::Infinite)
    }

    /// Critical scaling `alpha = beta * sqrt(n)`.
    pub fn critical(n: usize, k: usize, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        Self::finite(n, k, beta * (n as f64).sqrt())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn kn(&self) -> usize {
        self.k * self.n
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    /// The same `(n, k)` under the uniform model.
    pub fn to_uniform(&self) -> Self {
        Self { alpha: Alpha::Infinite, ..*self }
    }

    pub fn require_finite(&self) -> Result<f64> {
        self.alpha.finite().ok_or(Error::InfiniteAlpha)
    }
}

/// A k-out mapping: entry `v * k + i` is the head of vertex `v`'s `i`-th
/// out-arc in chronological order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KOutDigraph {
    n: usize,
    k: usize,
    targets: Vec<u32>,
}

impl KOutDigraph {
    /// Builds from 0-based targets.
    pub fn new(params: &ModelParams, targets: Vec<u32>) -> Result<Self> {
        if targets.len() != params.kn() {
            return Err(Error::InvalidParameter(format!(
                "expected {} targets, got {}",
                params.kn(),
                targets.len()
            )));
        }
        if let Some(bad) = targets.iter().find(|&&t| t as usize >= params.n()) {
            return Err(Error::InvalidParameter(format!(
                "target {} out of range for n = {}",
                bad + 1,
                params.n()
            )));
        }
        Ok(Self { n: params.n(), k: params.k(), targets })
    }

    /// Builds from 1-based labels, as they appear in files.
    pub fn from_one_based(params: &ModelParams, labels: &[usize]) -> Result<Self> {
        let targets = labels
            .iter()
            .map(|&l| {
                if l == 0 || l > params.n() {
                    Err(Error::InvalidParameter(format!("label {l} outside 1..={}", params.n())))
                } else {
                    Ok((l - 1) as u32)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(params, targets)
    }

    pub(crate) fn from_raw(n: usize, k: usize, targets: Vec<u32>) -> Self {
        debug_assert_eq!(targets.len(), n * k);
        Self { n, k, targets }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// 0-based head of vertex `v`'s `i`-th arc.
    pub fn target(&self, v: usize, i: usize) -> usize {
        self.targets[v * self.k + i] as usize
    }

    pub fn targets(&self) -> &[u32] {
        &self.targets
    }

    pub fn in_degrees(&self) -> InDegreeSequence {
        let mut counts = vec![0u32; self.n];
        for &t in &self.targets {
            counts[t as usize] += 1;
        }
        InDegreeSequence { counts }
    }
}

/// Free-function form of [`KOutDigraph::in_degrees`].
pub fn in_degrees(g: &KOutDigraph) -> InDegreeSequence {
    g.in_degrees()
}

/// In-degree counts `d_1..d_n`; admissible for `(n, k)` when they sum to `kn`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InDegreeSequence {
    counts: Vec<u32>,
}

impl InDegreeSequence {
    pub fn new(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&d| d as u64).sum()
    }

    pub fn check_admissible(&self, params: &ModelParams) -> Result<()> {
        if self.counts.len() != params.n() {
            return Err(Error::Inadmissible(format!(
                "length {} != n = {}",
                self.counts.len(),
                params.n()
            )));
        }
        if self.total() != params.kn() as u64 {
            return Err(Error::Inadmissible(format!(
                "sum {} != kn = {}",
                self.total(),
                params.kn()
            )));
        }
        Ok(())
    }

    pub fn into_counts(self) -> Vec<u32> {
        self.counts
    }
}

/// Natural-log probability; `-inf` for impossible events.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogProb(f64);

impl LogProb {
    pub const IMPOSSIBLE: LogProb = LogProb(f64::NEG_INFINITY);
    pub const CERTAIN: LogProb = LogProb(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value > 0.0 {
            return Err(Error::Domain(format!("log-probability must be <= 0, got {value}")));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn prob(self) -> f64 {
        self.0.exp()
    }
}

/// Power sums `s_t = sum_j d_j^t`, `t = 1..=4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerSums {
    pub s1: u128,
    pub s2: u128,
    pub s3: u128,
    pub s4: u128,
}

impl PowerSums {
    /// `s_t` for `t` in `1..=4`.
    pub fn get(&self, t: u32) -> Option<u128> {
        match t {
            1 => Some(self.s1),
            2 => Some(self.s2),
            3 => Some(self.s3),
            4 => Some(self.s4),
            _ => None,
        }
    }
}

pub fn power_sums(d: &InDegreeSequence) -> PowerSums {
    power_sums_of(d.counts())
}

pub(crate) fn power_sums_of(counts: &[u32]) -> PowerSums {
    let mut ps = PowerSums { s1: 0, s2: 0, s3: 0, s4: 0 };
    for &c in counts {
        let c = c as u128;
        let c2 = c * c;
        ps.s1 += c;
        ps.s2 += c2;
        ps.s3 += c2 * c;
        ps.s4 += c2 * c2;
    }
    ps
}

// Below this length the rising factorial is a plain sum of logs.
const DIRECT_PRODUCT_MAX: u64 = 32;

// Stirling-series coefficients B_{2m} / (2m (2m - 1)) for m = 1..=4.
const STIRLING_COEFFS: [f64; 4] = [1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0];

/// `ln(a (a+1) ... (a+b-1))`; `b = 0` gives 0.
pub fn log_rising_factorial(a: f64, b: u64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("rising factorial needs a > 0, got {a}")));
    }
    Ok(log_rising_factorial_unchecked(a, b))
}

pub(crate) fn log_rising_factorial_unchecked(a: f64, b: u64) -> f64 {
    if b <= DIRECT_PRODUCT_MAX {
        return (0..b).map(|i| (a + i as f64).ln()).sum();
    }
    if a >= 16.0 {
        // ln G(a+b) - ln G(a) from the Stirling series, arranged so nothing of
        // size ln G(a) has to cancel.
        let b_f = b as f64;
        let z = a + b_f;
        let mut series = 0.0;
        let (mut pa, mut pz) = (1.0 / a, 1.0 / z);
        let (ia2, iz2) = (pa * pa, pz * pz);
        for c in STIRLING_COEFFS {
            series += c * (pz - pa);
            pa *= ia2;
            pz *= iz2;
        }
        (a - 0.5) * (b_f / a).ln_1p() + b_f * z.ln() - b_f + series
    } else {
        ln_gamma(a + b as f64) - ln_gamma(a)
    }
}

/// A log-space lower/upper pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    pub fn contains(&self, x: f64, slack: f64) -> bool {
        self.lower - slack <= x && x <= self.upper + slack
    }
}

/// Both log-space brackets of `ln a^<b>`: `rough` uses the cubic correction,
/// `sharp` the second-order expansion with a quartic error term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RisingFactorialBounds {
    pub rough: Bracket,
    pub sharp: Bracket,
}

/// Brackets for `ln a^<b>`, valid for integer `0 <= b < a + 1`.
pub fn rising_factorial_bounds(a: f64, b: u64) -> Result<RisingFactorialBounds> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("bounds need a > 0, got {a}")));
    }
    if b as f64 >= a + 1.0 {
        return Err(Error::Domain(format!("bounds need b < a + 1, got a = {a}, b = {b}")));
    }
    Ok(rising_factorial_bounds_unchecked(a, b))
}

/// The bracket expressions with no range check.
pub(crate) fn rising_factorial_bounds_unchecked(a: f64, b: u64) -> RisingFactorialBounds {
    let bf = b as f64;
    let base = bf * a.ln();
    let quad = bf * (bf - 1.0) / (2.0 * a);
    let rough_upper = base + quad;
    let rough_lower = rough_upper - bf.powi(3) / (6.0 * a * a);
    let sharp_lower = base + quad - bf * (bf - 1.0) * (2.0 * bf - 1.0) / (12.0 * a * a);
    let sharp_upper = sharp_lower + bf.powi(4) / (12.0 * a.powi(3));
    RisingFactorialBounds {
        rough: Bracket { lower: rough_lower, upper: rough_upper },
        sharp: Bracket { lower: sharp_lower, upper: sharp_upper },
    }
}

/// Log-probability of one labeled mapping with in-degrees `counts`.
pub(crate) fn log_pmf_counts(params: &ModelParams, counts: &[u32]) -> f64 {
    let kn = params.kn() as u64;
    match params.alpha() {
        Alpha::Finite(a) => {
            let num: f64 = counts
                .iter()
                .map(|&d| log_rising_factorial_unchecked(a, d as u64))
                .sum();
            num - log_rising_factorial_unchecked(a * params.n() as f64, kn)
        }
        Alpha::Infinite => -(kn as f64) * (params.n() as f64).ln(),
    }
}

/// Probability that the process produces exactly the mapping `g`.
pub fn log_pmf_digraph(params: &ModelParams, g: &KOutDigraph) -> Result<LogProb> {
    if g.n() != params.n() || g.k() != params.k() {
        return Err(Error::InvalidParameter(format!(
            "digraph is ({}, {}) but params are ({}, {})",
            g.n(),
            g.k(),
            params.n(),
            params.k()
        )));
    }
    let d = g.in_degrees();
    Ok(LogProb(log_pmf_counts(params, d.counts()).min(0.0)))
}

pub(crate) fn ln_multinomial(total: u64, counts: &[u32]) -> f64 {
    ln_factorial(total) - counts.iter().map(|&d| ln_factorial(d as u64)).sum::<f64>()
}

/// Probability of the in-degree sequence `d` (all mappings realizing it).
pub fn log_pmf_degree_sequence(params: &ModelParams, d: &InDegreeSequence) -> Result<LogProb> {
    d.check_admissible(params)?;
    let lp = ln_multinomial(params.kn() as u64, d.counts()) + log_pmf_counts(params, d.counts());
    Ok(LogProb(lp.min(0.0)))
}

/// `E[Z^2]` for one unconditioned in-degree: negative binomial with mean `k`
/// and shape `alpha`, or Poisson(k) when `alpha` is infinite.
pub fn second_moment_z(k: usize, alpha: Alpha) -> f64 {
    let k = k as f64;
    match alpha {
        Alpha::Finite(a) => k + k * k * (a + 1.0) / a,
        Alpha::Infinite => k * k + k,
    }
}

/// `(s2 - n E[Z^2]) / sqrt(n)`, the centered and scaled sum of squares.
pub fn centered_s(params: &ModelParams, s2: u64) -> Result<f64> {
    params.require_finite()?;
    Ok(center(params, s2))
}

/// [`centered_s`] with the Poisson centering `k^2 + k`, for the uniform model.
pub fn centered_s_poisson(params: &ModelParams, s2: u64) -> f64 {
    let n = params.n() as f64;
    (s2 as f64 - n * second_moment_z(params.k(), Alpha::Infinite)) / n.sqrt()
}

#[inline]
pub(crate) fn center(params: &ModelParams, s2: u64) -> f64 {
    let n = params.n() as f64;
    (s2 as f64 - n * second_moment_z(params.k(), params.alpha())) / n.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn in_degree_examples() {
        let p = ModelParams::finite(2, 1, 1.0).unwrap();
        let g = KOutDigraph::from_one_based(&p, &[1, 1]).unwrap();
        assert_eq!(g.in_degrees().counts(), &[2, 0]);

        let p = ModelParams::finite(3, 2, 1.0).unwrap();
        let g = KOutDigraph::from_one_based(&p, &[1, 2, 3, 1, 2, 3]).unwrap();
        assert_eq!(in_degrees(&g).counts(), &[2, 2, 2]);

        let p = ModelParams::uniform(1, 5).unwrap();
        let g = KOutDigraph::from_one_based(&p, &[1; 5]).unwrap();
        assert_eq!(g.in_degrees().counts(), &[5]);
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::finite(0, 1, 1.0).is_err());
        assert!(ModelParams::finite(1, 0, 1.0).is_err());
        assert!(ModelParams::finite(1, 1, 0.0).is_err());
        assert!(ModelParams::finite(1, 1, -2.0).is_err());
        assert!(ModelParams::finite(1, 1, f64::NAN).is_err());
        assert!(ModelParams::finite(1, 1, f64::INFINITY).is_err());
        assert!(ModelParams::critical(4, 1, 0.0).is_err());
        let p = ModelParams::critical(100, 2, 1.5).unwrap();
        assert_eq!(p.alpha(), Alpha::Finite(15.0));
    }

    #[test]
    fn digraph_rejects_bad_targets() {
        let p = ModelParams::uniform(2, 1).unwrap();
        assert!(KOutDigraph::from_one_based(&p, &[1, 3]).is_err());
        assert!(KOutDigraph::from_one_based(&p, &[0, 1]).is_err());
        assert!(KOutDigraph::from_one_based(&p, &[1]).is_err());
        assert!(KOutDigraph::new(&p, vec![0, 2]).is_err());
    }

    #[test]
    fn rising_factorial_examples() {
        assert!(close(log_rising_factorial(2.0, 3).unwrap(), 24f64.ln(), 1e-14));
        assert!(close(log_rising_factorial(1.0, 4).unwrap(), 24f64.ln(), 1e-14));
        assert!(close(log_rising_factorial(0.5, 2).unwrap(), 0.75f64.ln(), 1e-14));
        assert_eq!(log_rising_factorial(3.7, 0).unwrap(), 0.0);
        assert!(log_rising_factorial(0.0, 2).is_err());
        assert!(log_rising_factorial(-1.0, 2).is_err());
    }

    #[test]
    fn rising_factorial_paths_agree() {
        // direct sum vs both long-b paths, straddling the switch-over
        for &a in &[0.3, 1.0, 7.5, 16.0, 40.0, 1234.5, 1e6] {
            for b in [33u64, 50, 200, 1000] {
                let direct: f64 = (0..b).map(|i| (a + i as f64).ln()).sum();
                let got = log_rising_factorial(a, b).unwrap();
                assert!(
                    close(got, direct, 1e-12 * direct.abs().max(1.0)),
                    "a={a} b={b} got={got} direct={direct}"
                );
            }
        }
    }

    #[test]
    fn bounds_examples() {
        // (2, 3) sits on the boundary b = a + 1, so it is rejected...
        assert!(rising_factorial_bounds(2.0, 3).is_err());
        // ...but the bracket formula there still evaluates as expected.
        let b = rising_factorial_bounds_unchecked(2.0, 3);
        let upper = 8f64.ln() + 1.5;
        assert!(close(b.rough.upper, upper, 1e-14));
        assert!(close(b.rough.lower, upper - 27.0 / 24.0, 1e-14));
        assert!(b.rough.contains(24f64.ln(), 0.0));
        assert!(b.sharp.contains(24f64.ln(), 0.0));

        let b0 = rising_factorial_bounds(2.5, 0).unwrap();
        assert_eq!((b0.rough.lower, b0.rough.upper), (0.0, 0.0));
        assert_eq!((b0.sharp.lower, b0.sharp.upper), (0.0, 0.0));

        let a: f64 = 2.5;
        let b1 = rising_factorial_bounds(a, 1).unwrap();
        assert!(close(b1.rough.upper, a.ln(), 1e-15));
        assert!(close(b1.sharp.lower, a.ln(), 1e-15));
        assert!(close(b1.sharp.upper, a.ln() + 1.0 / (12.0 * a.powi(3)), 1e-15));
    }

    #[test]
    fn pmf_digraph_examples() {
        let p = ModelParams::finite(2, 1, 1.0).unwrap();
        let g20 = KOutDigraph::from_one_based(&p, &[1, 1]).unwrap();
        let g11 = KOutDigraph::from_one_based(&p, &[1, 2]).unwrap();
        assert!(close(log_pmf_digraph(&p, &g20).unwrap().value(), (1.0f64 / 3.0).ln(), 1e-14));
        assert!(close(log_pmf_digraph(&p, &g11).unwrap().value(), (1.0f64 / 6.0).ln(), 1e-14));

        let q = ModelParams::uniform(3, 2).unwrap();
        let g = KOutDigraph::from_one_based(&q, &[1, 1, 2, 3, 3, 3]).unwrap();
        assert!(close(log_pmf_digraph(&q, &g).unwrap().value(), -6.0 * 3f64.ln(), 1e-14));

        assert!(log_pmf_digraph(&q, &g20).is_err());
    }

    #[test]
    fn pmf_degree_sequence_examples() {
        let p = ModelParams::finite(2, 1, 1.0).unwrap();
        let lp = |c: Vec<u32>| log_pmf_degree_sequence(&p, &InDegreeSequence::new(c));
        assert!(close(lp(vec![1, 1]).unwrap().value(), (1.0f64 / 3.0).ln(), 1e-14));
        assert!(close(lp(vec![2, 0]).unwrap().value(), (1.0f64 / 3.0).ln(), 1e-14));
        assert!(lp(vec![1, 0]).is_err());
        assert!(lp(vec![1, 1, 0]).is_err());

        let u = ModelParams::uniform(2, 1).unwrap();
        let v = log_pmf_degree_sequence(&u, &InDegreeSequence::new(vec![1, 1])).unwrap();
        assert!(close(v.value(), 0.5f64.ln(), 1e-14));
    }

    #[test]
    fn finite_alpha_converges_to_uniform() {
        let g_targets = [1usize, 3, 3, 2, 3, 1];
        let mut prev = f64::INFINITY;
        let u = ModelParams::uniform(3, 2).unwrap();
        let gu = KOutDigraph::from_one_based(&u, &g_targets).unwrap();
        let lu = log_pmf_digraph(&u, &gu).unwrap().value();
        for a in [1e6, 1e8] {
            let p = ModelParams::finite(3, 2, a).unwrap();
            let g = KOutDigraph::from_one_based(&p, &g_targets).unwrap();
            let diff = (log_pmf_digraph(&p, &g).unwrap().value() - lu).abs();
            assert!(diff <= 1e-4 && diff < prev, "alpha={a} diff={diff}");
            prev = diff;
        }
    }

    #[test]
    fn power_sum_examples() {
        let ps = power_sums(&InDegreeSequence::new(vec![2, 0]));
        assert_eq!(ps.s2, 4);
        assert_eq!(power_sums(&InDegreeSequence::new(vec![1, 1])).s2, 2);
        let ps = power_sums(&InDegreeSequence::new(vec![3, 2, 1]));
        assert_eq!((ps.s1, ps.s2, ps.s3, ps.s4), (6, 14, 36, 98));
        assert_eq!(ps.get(3), Some(36));
        assert_eq!(ps.get(5), None);
    }

    #[test]
    fn centered_s_examples() {
        assert!(close(second_moment_z(2, Alpha::Finite(4.0)), 7.0, 1e-15));
        let p = ModelParams::finite(10, 2, 4.0).unwrap();
        assert!(close(centered_s(&p, 70).unwrap(), 0.0, 1e-15));
        let p = ModelParams::finite(4, 1, 1.0).unwrap();
        assert!(close(centered_s(&p, 10).unwrap(), -1.0, 1e-15));
        // alpha -> inf limit of E[Z^2] for k = 1
        assert!(close(second_moment_z(1, Alpha::Finite(1e12)), 2.0, 1e-11));
        assert_eq!(second_moment_z(1, Alpha::Infinite), 2.0);

        let u = ModelParams::uniform(4, 1).unwrap();
        assert_eq!(centered_s(&u, 8), Err(Error::InfiniteAlpha));
        assert!(close(centered_s_poisson(&u, 10), 1.0, 1e-15));
    }

    #[test]
    fn log_prob_rejects_positive() {
        assert!(LogProb::new(0.1).is_err());
        assert!(LogProb::new(f64::NAN).is_err());
        assert_eq!(LogProb::new(-1.0).unwrap().value(), -1.0);
        assert_eq!(LogProb::IMPOSSIBLE.prob(), 0.0);
    }
}
