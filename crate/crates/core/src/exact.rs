//! Exact finite-n laws: the in-degree sequence distribution, the law of the
//! sum of squared in-degrees, total variation distances and moments.
//!
//! Everything here is rational arithmetic. Sums over in-degree sequences run
//! over partitions of `kn` weighted by how many sequences realize them, so
//! `n = 12, k = 1` costs 77 terms instead of ~1.35M compositions.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::model::{log_rising_factorial_unchecked, Alpha, InDegreeSequence, ModelParams};

pub const DEFAULT_MAX_KN: u64 = 24;

/// Upper limit on `kn` for anything that enumerates in-degree sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_kn: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self { max_kn: DEFAULT_MAX_KN }
    }
}

impl Budget {
    pub fn new(max_kn: u64) -> Self {
        Self { max_kn }
    }

    pub fn check(&self, n: usize, k: usize) -> Result<()> {
        let kn = (n * k) as u64;
        if kn > self.max_kn {
            return Err(Error::BudgetExceeded { kn, budget: self.max_kn });
        }
        Ok(())
    }
}

/// Exact counterpart of [`Alpha`].
#[derive(Debug, Clone, PartialEq)]
pub enum ExactAlpha {
    Rational(BigRational),
    Infinite,
}

/// `(n, k, alpha)` with alpha as an exact rational.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactParams {
    n: usize,
    k: usize,
    alpha: ExactAlpha,
}

impl ExactParams {
    /// Takes alpha as exactly the binary64 value it holds.
    pub fn from_model(params: &ModelParams) -> Self {
        let alpha = match params.alpha() {
            Alpha::Finite(a) => {
                ExactAlpha::Rational(BigRational::from_float(a).expect("alpha is finite"))
            }
            Alpha::Infinite => ExactAlpha::Infinite,
        };
        Self { n: params.n(), k: params.k(), alpha }
    }

    /// `alpha = num / den`.
    pub fn with_rational(n: usize, k: usize, num: i64, den: i64) -> Result<Self> {
        if den == 0 || (num > 0) != (den > 0) || num == 0 {
            return Err(Error::InvalidParameter(format!("alpha = {num}/{den} is not positive")));
        }
        let alpha = BigRational::new(BigInt::from(num), BigInt::from(den));
        // validates n, k
        ModelParams::finite(n, k, alpha.to_f64().unwrap_or(1.0).max(f64::MIN_POSITIVE))?;
        Ok(Self { n, k, alpha: ExactAlpha::Rational(alpha) })
    }

    pub fn uniform(n: usize, k: usize) -> Result<Self> {
        ModelParams::uniform(n, k).map(|p| Self::from_model(&p))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn kn(&self) -> usize {
        self.n * self.k
    }

    pub fn alpha(&self) -> &ExactAlpha {
        &self.alpha
    }

    pub fn to_uniform(&self) -> Self {
        Self { alpha: ExactAlpha::Infinite, ..self.clone() }
    }

    fn alpha_ratio(&self) -> Option<&BigRational> {
        match &self.alpha {
            ExactAlpha::Rational(a) => Some(a),
            ExactAlpha::Infinite => None,
        }
    }
}

/// One class of in-degree sequences: the multiset of nonzero degrees and
/// the number of zero entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreePartition {
    /// Nonincreasing positive parts summing to `kn`.
    pub parts: Vec<u32>,
    pub zeros: usize,
    /// Number of ordered sequences in the class, `n! / prod(count of each value)!`.
    pub multiplicity: BigUint,
}

impl DegreePartition {
    pub fn sum_squares(&self) -> u64 {
        self.parts.iter().map(|&p| (p as u64).pow(2)).sum()
    }

    /// The nonincreasing representative sequence.
    pub fn representative(&self) -> Vec<u32> {
        let mut v = self.parts.clone();
        v.resize(self.parts.len() + self.zeros, 0);
        v
    }
}

/// Partitions of `kn` into at most `n` parts, in reverse lexicographic order.
#[derive(Debug, Clone)]
pub struct Partitions {
    n: usize,
    current: Option<Vec<u32>>,
    factorials: Vec<BigUint>,
}

impl Partitions {
    fn advance(parts: &mut Vec<u32>) -> bool {
        let mut rem = 0u32;
        while parts.last() == Some(&1) {
            parts.pop();
            rem += 1;
        }
        let Some(last) = parts.last_mut() else {
            return false;
        };
        *last -= 1;
        let cap = *last;
        rem += 1;
        while rem > 0 {
            let p = cap.min(rem);
            parts.push(p);
            rem -= p;
        }
        true
    }

    fn multiplicity(&self, parts: &[u32]) -> BigUint {
        let zeros = self.n - parts.len();
        let mut denom = self.factorials[zeros].clone();
        let mut run = 1;
        for w in parts.windows(2) {
            if w[0] == w[1] {
                run += 1;
            } else {
                denom *= &self.factorials[run];
                run = 1;
            }
        }
        if !parts.is_empty() {
            denom *= &self.factorials[run];
        }
        &self.factorials[self.n] / denom
    }
}

impl Iterator for Partitions {
    type Item = DegreePartition;

    fn next(&mut self) -> Option<DegreePartition> {
        loop {
            let parts = self.current.as_mut()?;
            let out = (parts.len() <= self.n).then(|| parts.clone());
            if !Self::advance(parts) {
                self.current = None;
            }
            if let Some(parts) = out {
                let multiplicity = self.multiplicity(&parts);
                let zeros = self.n - parts.len();
                return Some(DegreePartition { parts, zeros, multiplicity });
            }
        }
    }
}

/// Every partition of `kn` into at most `n` parts, exactly once.
pub fn enumerate_partitions(n: usize, k: usize, budget: Budget) -> Result<Partitions> {
    ModelParams::uniform(n, k)?;
    budget.check(n, k)?;
    Ok(Partitions {
        n,
        current: Some(vec![(n * k) as u32]),
        factorials: factorial_table(n),
    })
}

/// Number of partitions of `kn` into at most `n` parts: the term count of
/// every partition sum, reported before long runs.
pub fn partition_count(n: usize, k: usize) -> u128 {
    let total = n * k;
    // table[m] = partitions of m into parts of size <= j, for j = 1..=n
    let mut table = vec![0u128; total + 1];
    table[0] = 1;
    for part in 1..=n.min(total) {
        for m in part..=total {
            table[m] += table[m - part];
        }
    }
    table[total]
}

fn factorial_table(n: usize) -> Vec<BigUint> {
    let mut f = Vec::with_capacity(n + 1);
    f.push(BigUint::one());
    for i in 1..=n {
        let next = &f[i - 1] * BigUint::from(i);
        f.push(next);
    }
    f
}

fn ratio_from_uint(v: BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn int(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// `a (a+1) ... (a+b-1)` in rationals.
pub fn rising_factorial_exact(a: &BigRational, b: u64) -> BigRational {
    let mut acc = BigRational::one();
    let mut term = a.clone();
    for _ in 0..b {
        acc *= &term;
        term += BigRational::one();
    }
    acc
}

/// `kn! / prod d_j!`.
pub fn multinomial(total: u64, parts: &[u32]) -> BigUint {
    let fact = |m: u64| (1..=m).fold(BigUint::one(), |acc, i| acc * BigUint::from(i));
    let denom = parts.iter().fold(BigUint::one(), |acc, &p| acc * fact(p as u64));
    fact(total) / denom
}

/// Per-mapping probabilities for a fixed model, with the rising factorials
/// `alpha^<d>` cached for `d = 0..=kn`.
struct MappingLaw {
    kn: u64,
    rising: Option<Vec<BigRational>>,
    denom: BigRational,
}

impl MappingLaw {
    fn new(ep: &ExactParams) -> Self {
        let kn = ep.kn() as u64;
        match ep.alpha_ratio() {
            Some(a) => {
                let mut rising = Vec::with_capacity(kn as usize + 1);
                rising.push(BigRational::one());
                for d in 1..=kn {
                    let next = &rising[d as usize - 1] * (a + int(d - 1));
                    rising.push(next);
                }
                let a_n = a * int(ep.n() as u64);
                Self { kn, rising: Some(rising), denom: rising_factorial_exact(&a_n, kn) }
            }
            None => {
                let denom = int(ep.n() as u64).pow(kn as i32);
                Self { kn, rising: None, denom }
            }
        }
    }

    /// Probability of one labeled mapping whose nonzero in-degrees are `parts`.
    fn mapping_prob(&self, parts: &[u32]) -> BigRational {
        match &self.rising {
            Some(r) => {
                let num = parts.iter().fold(BigRational::one(), |acc, &p| acc * &r[p as usize]);
                num / &self.denom
            }
            None => self.denom.recip(),
        }
    }

    /// Probability of one ordered in-degree sequence.
    fn sequence_prob(&self, parts: &[u32]) -> BigRational {
        ratio_from_uint(multinomial(self.kn, parts)) * self.mapping_prob(parts)
    }
}

/// Exact probability of one in-degree sequence.
pub fn pmf_degree_sequence_exact(ep: &ExactParams, d: &InDegreeSequence) -> Result<BigRational> {
    if d.len() != ep.n() || d.total() != ep.kn() as u64 {
        return Err(Error::Inadmissible(format!(
            "need {} entries summing to {}",
            ep.n(),
            ep.kn()
        )));
    }
    let parts: Vec<u32> = d.counts().iter().copied().filter(|&c| c > 0).collect();
    Ok(MappingLaw::new(ep).sequence_prob(&parts))
}

/// `d_TV` between the attachment model and the uniform mapping, summed over
/// in-degree classes.
pub fn exact_tv_full(ep: &ExactParams, budget: Budget) -> Result<BigRational> {
    budget.check(ep.n(), ep.k())?;
    if ep.alpha_ratio().is_none() {
        return Ok(BigRational::zero());
    }
    let law = MappingLaw::new(ep);
    let uniform = MappingLaw::new(&ep.to_uniform()).denom.recip();
    let mut acc = BigRational::zero();
    for class in enumerate_partitions(ep.n(), ep.k(), budget)? {
        let diff = (law.mapping_prob(&class.parts) - &uniform).abs();
        let count = class.multiplicity * multinomial(law.kn, &class.parts);
        acc += ratio_from_uint(count) * diff;
    }
    Ok(acc / int(2))
}

/// Bound on how much the model-to-uniform TV can move when alpha is off by
/// at most `delta` (alpha itself irrational and only known as a float).
///
/// Each log mapping probability has `|d/dalpha| <= 2 kn / alpha`.
pub fn alpha_perturbation_bound(kn: u64, alpha: f64, delta: f64) -> f64 {
    let lo = (alpha - delta).max(f64::MIN_POSITIVE);
    0.5 * (2.0 * kn as f64 * delta / lo).exp_m1()
}

/// A finite law on integer values with exact probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    pub support: Vec<u64>,
    pub probs: Vec<BigRational>,
}

impl ExactDistribution {
    pub fn from_map(map: BTreeMap<u64, BigRational>) -> Self {
        let (support, probs) = map.into_iter().filter(|(_, p)| !p.is_zero()).unzip();
        Self { support, probs }
    }

    pub fn total(&self) -> BigRational {
        self.probs.iter().fold(BigRational::zero(), |acc, p| acc + p)
    }

    pub fn prob(&self, x: u64) -> BigRational {
        self.support
            .binary_search(&x)
            .map(|i| self.probs[i].clone())
            .unwrap_or_else(|_| BigRational::zero())
    }

    pub fn probs_f64(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn mean(&self) -> BigRational {
        self.support
            .iter()
            .zip(&self.probs)
            .fold(BigRational::zero(), |acc, (&x, p)| acc + int(x) * p)
    }
}

#[derive(Serialize, Deserialize)]
struct DistributionRepr {
    support: Vec<u64>,
    probs: Vec<String>,
}

impl Serialize for ExactDistribution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DistributionRepr {
            support: self.support.clone(),
            probs: self.probs.iter().map(fraction_string).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExactDistribution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = DistributionRepr::deserialize(d)?;
        if repr.support.len() != repr.probs.len() {
            return Err(serde::de::Error::custom("support and probs differ in length"));
        }
        let probs = repr
            .probs
            .iter()
            .map(|s| BigRational::from_str_radix(s, 10).map_err(serde::de::Error::custom))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { support: repr.support, probs })
    }
}

/// `"num/den"`, or just `"num"` for integers.
pub fn fraction_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Law of `X = sum_j d_j^2` under the model.
pub fn exact_x_distribution(ep: &ExactParams, budget: Budget) -> Result<ExactDistribution> {
    budget.check(ep.n(), ep.k())?;
    let law = MappingLaw::new(ep);
    let mut map: BTreeMap<u64, BigRational> = BTreeMap::new();
    for class in enumerate_partitions(ep.n(), ep.k(), budget)? {
        let p = law.sequence_prob(&class.parts) * ratio_from_uint(class.multiplicity.clone());
        *map.entry(class.sum_squares()).or_insert_with(BigRational::zero) += p;
    }
    Ok(ExactDistribution::from_map(map))
}

/// Half the L1 distance between two exact laws.
pub fn tv_between(a: &ExactDistribution, b: &ExactDistribution) -> BigRational {
    let mut diff: BTreeMap<u64, BigRational> = BTreeMap::new();
    for (x, p) in a.support.iter().zip(&a.probs) {
        *diff.entry(*x).or_insert_with(BigRational::zero) += p;
    }
    for (x, p) in b.support.iter().zip(&b.probs) {
        *diff.entry(*x).or_insert_with(BigRational::zero) -= p;
    }
    diff.values().fold(BigRational::zero(), |acc, d| acc + d.abs()) / int(2)
}

/// `d_TV(X(model), X(uniform))`.
pub fn exact_tv_x(ep: &ExactParams, budget: Budget) -> Result<BigRational> {
    let a = exact_x_distribution(ep, budget)?;
    let b = exact_x_distribution(&ep.to_uniform(), budget)?;
    Ok(tv_between(&a, &b))
}

/// Every ordered in-degree sequence with its exact probability, in
/// lexicographic order. Only sensible for tiny `(n, k)`.
pub fn degree_sequence_law(ep: &ExactParams, budget: Budget) -> Result<Vec<(InDegreeSequence, BigRational)>> {
    budget.check(ep.n(), ep.k())?;
    let law = MappingLaw::new(ep);
    let mut out = Vec::new();
    for class in enumerate_partitions(ep.n(), ep.k(), budget)? {
        let p = law.sequence_prob(&class.parts);
        let mut seq = class.representative();
        seq.sort_unstable();
        loop {
            out.push((InDegreeSequence::new(seq.clone()), p.clone()));
            if !next_permutation(&mut seq) {
                break;
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

fn next_permutation(v: &mut [u32]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v.iter().rposition(|&x| x > v[i]).expect("v[i+1] > v[i]");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Stirling numbers of the second kind `S(s, l)`.
pub fn stirling2(s: u32, l: u32) -> u64 {
    let s = s as usize;
    let l = l as usize;
    if l > s {
        return 0;
    }
    let mut row = vec![0u64; s + 1];
    row[0] = 1;
    for i in 1..=s {
        for j in (1..=i).rev() {
            row[j] = j as u64 * row[j] + row[j - 1];
        }
        row[0] = 0;
    }
    row[l]
}

/// Numeric types the closed-form moment formulas are evaluated in.
pub trait Scalar: Num + Clone + FromPrimitive {}
impl<T: Num + Clone + FromPrimitive> Scalar for T {}

fn lit<T: Scalar>(v: u64) -> T {
    T::from_u64(v).expect("small integer")
}

/// `E[(D_j)_l]`: `alpha^<l> (kn)_l / (alpha n)^<l>`, or `(kn)_l / n^l` when
/// `alpha` is `None` (uniform).
pub fn factorial_moment_of<T: Scalar>(n: u64, k: u64, alpha: Option<&T>, l: u32) -> T {
    mixed_factorial_moment_of(n, k, alpha, l, 0)
}

/// `E[(D_i)_l (D_j)_m]` for `i != j`.
pub fn mixed_factorial_moment_of<T: Scalar>(n: u64, k: u64, alpha: Option<&T>, l: u32, m: u32) -> T {
    let kn = n * k;
    let total = (l + m) as u64;
    if total > kn {
        return T::zero();
    }
    let mut acc = T::one();
    for i in 0..total {
        acc = acc * lit::<T>(kn - i);
    }
    match alpha {
        Some(a) => {
            let rising = |b: u32| {
                (0..b).fold(T::one(), |acc, i| acc * (a.clone() + lit::<T>(i as u64)))
            };
            let a_n = a.clone() * lit::<T>(n);
            let denom = (0..total).fold(T::one(), |acc, i| acc * (a_n.clone() + lit::<T>(i)));
            acc * rising(l) * rising(m) / denom
        }
        None => (0..total).fold(acc, |acc, _| acc / lit::<T>(n)),
    }
}

/// `E[D_j^s] = sum_l S(s, l) E[(D_j)_l]`.
pub fn moment_of<T: Scalar>(n: u64, k: u64, alpha: Option<&T>, s: u32) -> T {
    (1..=s).fold(T::zero(), |acc, l| {
        acc + lit::<T>(stirling2(s, l)) * factorial_moment_of(n, k, alpha, l)
    })
}

/// `E[(Z)_l] = alpha^<l> k^l / alpha^l`, or `k^l` for Poisson(k).
pub fn z_factorial_moment_of<T: Scalar>(k: u64, alpha: Option<&T>, l: u32) -> T {
    let kk = lit::<T>(k);
    (0..l).fold(T::one(), |acc, i| {
        let step = match alpha {
            Some(a) => (a.clone() + lit::<T>(i as u64)) * kk.clone() / a.clone(),
            None => kk.clone(),
        };
        acc * step
    })
}

pub fn z_moment_of<T: Scalar>(k: u64, alpha: Option<&T>, s: u32) -> T {
    (1..=s).fold(T::zero(), |acc, l| {
        acc + lit::<T>(stirling2(s, l)) * z_factorial_moment_of(k, alpha, l)
    })
}

/// `Var[sum_j D_j^2]` from the single and mixed factorial moments.
pub fn variance_sum_squares_of<T: Scalar>(n: u64, k: u64, alpha: Option<&T>) -> T {
    let second = moment_of(n, k, alpha, 2);
    let fourth = moment_of(n, k, alpha, 4);
    // D^2 = (D)_2 + (D)_1, so E[D_i^2 D_j^2] is four mixed factorial moments
    let mut cross = T::zero();
    for l in 1..=2 {
        for m in 1..=2 {
            cross = cross + mixed_factorial_moment_of(n, k, alpha, l, m);
        }
    }
    let nn = lit::<T>(n);
    let pairs = lit::<T>(n * (n - 1));
    nn.clone() * fourth + pairs * cross - nn.clone() * nn * second.clone() * second
}

fn exact_alpha_opt(ep: &ExactParams) -> Option<&BigRational> {
    ep.alpha_ratio()
}

/// Exact `E[(D_j)_l]`.
pub fn exact_moment_factorial(ep: &ExactParams, l: u32) -> BigRational {
    factorial_moment_of(ep.n() as u64, ep.k() as u64, exact_alpha_opt(ep), l)
}

/// Exact `E[D_j^s]`.
pub fn exact_moment(ep: &ExactParams, s: u32) -> BigRational {
    moment_of(ep.n() as u64, ep.k() as u64, exact_alpha_opt(ep), s)
}

/// Exact `E[(D_i)_l (D_j)_m]`, `i != j`.
pub fn exact_mixed_factorial(ep: &ExactParams, l: u32, m: u32) -> BigRational {
    mixed_factorial_moment_of(ep.n() as u64, ep.k() as u64, exact_alpha_opt(ep), l, m)
}

/// Float versions for alpha that is not a convenient rational (`beta sqrt n`).
pub fn factorial_moment(params: &ModelParams, l: u32) -> f64 {
    factorial_moment_of(params.n() as u64, params.k() as u64, params.alpha().finite().as_ref(), l)
}

pub fn moment(params: &ModelParams, s: u32) -> f64 {
    moment_of(params.n() as u64, params.k() as u64, params.alpha().finite().as_ref(), s)
}

pub fn mixed_factorial_moment(params: &ModelParams, l: u32, m: u32) -> f64 {
    mixed_factorial_moment_of(params.n() as u64, params.k() as u64, params.alpha().finite().as_ref(), l, m)
}

pub fn variance_sum_squares(params: &ModelParams) -> f64 {
    variance_sum_squares_of(params.n() as u64, params.k() as u64, params.alpha().finite().as_ref())
}

/// `ln P(Z_1 + ... + Z_n = kn)` for IID `Z` as in [`crate::samplers::ZSampler`].
pub fn log_prob_sum_z_equals_kn(params: &ModelParams) -> f64 {
    let kn = params.kn() as u64;
    let knf = kn as f64;
    let k = params.k() as f64;
    match params.alpha() {
        Alpha::Finite(a) => {
            let a_n = a * params.n() as f64;
            log_rising_factorial_unchecked(a_n, kn) - ln_factorial(kn) - a_n * (k / a).ln_1p()
                + knf * (k / (a + k)).ln()
        }
        // sum of n Poisson(k) is Poisson(kn)
        Alpha::Infinite => -knf + knf * knf.ln() - ln_factorial(kn),
    }
}

impl fmt::Display for ExactAlpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactAlpha::Rational(r) => f.write_str(&fraction_string(r)),
            ExactAlpha::Infinite => f.write_str("inf"),
        }
    }
}
