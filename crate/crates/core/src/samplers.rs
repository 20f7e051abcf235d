//! Generators for the attachment process and the uniform mapping.
//!
//! Three routes produce in-degree sequences with the same law, which is what
//! lets them check each other:
//!
//! * [`sample_fixed_order`]: vertex 1 throws its k arcs, then vertex 2, ...
//! * [`sample_random_order`]: each arc is thrown by a uniformly chosen
//!   vertex that still has arcs left.
//! * [`sample_degrees_direct`]: a single urn over the `kn` throws, no digraph.
//!
//! Head selection uses composition: with probability `alpha n / (alpha n + t)`
//! the head is a uniform vertex, otherwise it copies the head of a uniformly
//! chosen earlier arc. Together that is weight `alpha + indeg` per vertex.

use std::ops::Range;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Alpha, InDegreeSequence, KOutDigraph, ModelParams};
use crate::par::{run_chunked, Execution};
use crate::rng::{unit_f64, RngSeed};

/// How the head of the next arc is drawn in the attachment process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TargetRule {
    /// O(1) uniform-vertex / copy-an-earlier-arc mixture.
    #[default]
    Composition,
    /// Binary-indexed tree over the weights `alpha + indeg`.
    CumulativeWeight,
}

#[inline]
fn composition_target<R: RngCore>(rng: &mut R, inv_alpha: f64, alpha_n: f64, n: usize, placed: &[u32]) -> u32 {
    let t = placed.len();
    let x = unit_f64(rng.next_u64()) * (alpha_n + t as f64);
    if t == 0 || x < alpha_n {
        ((x * inv_alpha) as usize).min(n - 1) as u32
    } else {
        placed[((x - alpha_n) as usize).min(t - 1)]
    }
}

/// Fenwick tree of f64 weights.
struct WeightTree {
    tree: Vec<f64>,
    top_bit: usize,
}

impl WeightTree {
    fn uniform(n: usize, w: f64) -> Self {
        let mut tree = vec![0.0; n + 1];
        for i in 1..=n {
            tree[i] += w;
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i];
            }
        }
        let top_bit = if n == 0 { 0 } else { 1 << (usize::BITS - 1 - n.leading_zeros()) };
        Self { tree, top_bit }
    }

    fn add(&mut self, idx: usize, w: f64) {
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] += w;
            i += i & i.wrapping_neg();
        }
    }

    /// Smallest index whose prefix sum exceeds `x`.
    fn find(&self, mut x: f64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = self.top_bit;
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= x {
                pos = next;
                x -= self.tree[next];
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }
}

fn fixed_order_into<R: RngCore>(params: &ModelParams, alpha: f64, rule: TargetRule, rng: &mut R) -> Vec<u32> {
    let n = params.n();
    let kn = params.kn();
    let alpha_n = alpha * n as f64;
    let mut targets = Vec::with_capacity(kn);
    match rule {
        TargetRule::Composition => {
            for _ in 0..kn {
                let v = composition_target(rng, 1.0 / alpha, alpha_n, n, &targets);
                targets.push(v);
            }
        }
        TargetRule::CumulativeWeight => {
            let mut tree = WeightTree::uniform(n, alpha);
            for t in 0..kn {
                let x = unit_f64(rng.next_u64()) * (alpha_n + t as f64);
                let v = tree.find(x);
                tree.add(v, 1.0);
                targets.push(v as u32);
            }
        }
    }
    targets
}

/// Vertex 1 throws arcs 1..k, then vertex 2, and so on. Finite alpha only.
pub fn sample_fixed_order(params: &ModelParams, seed: &RngSeed) -> Result<KOutDigraph> {
    sample_fixed_order_with(params, TargetRule::Composition, &mut seed.rng())
}

pub fn sample_fixed_order_with<R: RngCore>(params: &ModelParams, rule: TargetRule, rng: &mut R) -> Result<KOutDigraph> {
    let alpha = params.require_finite()?;
    let targets = fixed_order_into(params, alpha, rule, rng);
    Ok(KOutDigraph::from_raw(params.n(), params.k(), targets))
}

/// Each arc is thrown by a vertex chosen uniformly among those with fewer
/// than `k` arcs so far. Finite alpha only.
pub fn sample_random_order(params: &ModelParams, seed: &RngSeed) -> Result<KOutDigraph> {
    sample_random_order_rng(params, &mut seed.rng())
}

pub fn sample_random_order_rng<R: RngCore>(params: &ModelParams, rng: &mut R) -> Result<KOutDigraph> {
    let alpha = params.require_finite()?;
    let (n, k, kn) = (params.n(), params.k(), params.kn());
    let alpha_n = alpha * n as f64;

    // unsaturated vertices, swap-removed once they reach out-degree k
    let mut pool: Vec<u32> = (0..n as u32).collect();
    let mut out_deg = vec![0u32; n];
    let mut placed = Vec::with_capacity(kn);
    let mut targets = vec![0u32; kn];
    while !pool.is_empty() {
        let slot = rng.random_range(0..pool.len());
        let v = pool[slot] as usize;
        let head = composition_target(rng, 1.0 / alpha, alpha_n, n, &placed);
        placed.push(head);
        targets[v * k + out_deg[v] as usize] = head;
        out_deg[v] += 1;
        if out_deg[v] as usize == k {
            pool.swap_remove(slot);
        }
    }
    Ok(KOutDigraph::from_raw(n, k, targets))
}

/// All `kn` heads IID uniform. Alpha is ignored.
pub fn sample_uniform(params: &ModelParams, seed: &RngSeed) -> KOutDigraph {
    sample_uniform_rng(params, &mut seed.rng())
}

pub fn sample_uniform_rng<R: RngCore>(params: &ModelParams, rng: &mut R) -> KOutDigraph {
    let n = params.n();
    let targets = (0..params.kn()).map(|_| rng.random_range(0..n as u32)).collect();
    KOutDigraph::from_raw(n, params.k(), targets)
}

/// In-degree sequence straight from the urn, without the digraph.
///
/// With infinite alpha this is the multinomial `(kn; 1/n, ..., 1/n)`.
pub fn sample_degrees_direct(params: &ModelParams, seed: &RngSeed) -> InDegreeSequence {
    let mut sampler = DegreeSampler::new(params);
    let counts = sampler.sample(&mut seed.rng()).to_vec();
    InDegreeSequence::new(counts)
}

/// Reusable buffers for drawing many in-degree sequences of one model.
#[derive(Debug, Clone)]
pub struct DegreeSampler {
    n: usize,
    kn: usize,
    alpha: Option<f64>,
    counts: Vec<u32>,
    placed: Vec<u32>,
}

impl DegreeSampler {
    pub fn new(params: &ModelParams) -> Self {
        let alpha = params.alpha().finite();
        Self {
            n: params.n(),
            kn: params.kn(),
            alpha,
            counts: vec![0; params.n()],
            placed: Vec::with_capacity(if alpha.is_some() { params.kn() } else { 0 }),
        }
    }

    /// Draws a fresh sequence and returns `sum_j d_j^2` along the way.
    pub fn sample_sum_squares<R: RngCore>(&mut self, rng: &mut R) -> u64 {
        self.counts.fill(0);
        let n = self.n;
        let mut x = 0u64;
        match self.alpha {
            Some(alpha) => {
                let alpha_n = alpha * n as f64;
                self.placed.clear();
                for _ in 0..self.kn {
                    let v = composition_target(rng, 1.0 / alpha, alpha_n, n, &self.placed);
                    self.placed.push(v);
                    let c = &mut self.counts[v as usize];
                    x += 2 * *c as u64 + 1;
                    *c += 1;
                }
            }
            None => {
                for _ in 0..self.kn {
                    let v = rng.random_range(0..n as u32) as usize;
                    let c = &mut self.counts[v];
                    x += 2 * *c as u64 + 1;
                    *c += 1;
                }
            }
        }
        x
    }

    /// Draws a fresh sequence; the slice is valid until the next call.
    pub fn sample<R: RngCore>(&mut self, rng: &mut R) -> &[u32] {
        self.sample_sum_squares(rng);
        &self.counts
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }
}

/// Which generator produced an in-degree sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegreeRoute {
    FixedOrder,
    RandomOrder,
    Direct,
    Uniform,
}

impl DegreeRoute {
    pub fn sample<R: RngCore>(self, params: &ModelParams, rng: &mut R) -> Result<InDegreeSequence> {
        Ok(match self {
            DegreeRoute::FixedOrder => {
                sample_fixed_order_with(params, TargetRule::Composition, rng)?.in_degrees()
            }
            DegreeRoute::RandomOrder => sample_random_order_rng(params, rng)?.in_degrees(),
            DegreeRoute::Direct => {
                InDegreeSequence::new(DegreeSampler::new(params).sample(rng).to_vec())
            }
            DegreeRoute::Uniform => sample_uniform_rng(params, rng).in_degrees(),
        })
    }
}

/// `count` replicates of one model; replicate `i` depends only on `(seed, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub params: ModelParams,
    pub count: u64,
    pub seed: RngSeed,
}

const BATCH_CHUNK: u64 = 4096;

impl SampleBatch {
    pub fn new(params: ModelParams, count: u64, seed: RngSeed) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("batch count must be positive".into()));
        }
        Ok(Self { params, count, seed })
    }

    pub fn replicate_seed(&self, i: u64) -> RngSeed {
        self.seed.replicate(i)
    }

    /// Folds `visit` over every replicate's in-degree counts.
    pub fn fold_degrees<T, V, R>(&self, route: DegreeRoute, exec: Execution, init: impl Fn() -> T + Sync, visit: V, reduce: R) -> Result<T>
    where
        T: Send,
        V: Fn(&mut T, &[u32]) + Sync,
        R: Fn(T, T) -> T,
    {
        if route != DegreeRoute::Uniform && route != DegreeRoute::Direct {
            self.params.require_finite()?;
        }
        let params = self.params;
        let job = |range: Range<u64>| {
            let mut acc = init();
            let mut direct = DegreeSampler::new(&params);
            for i in range {
                let mut rng = self.replicate_seed(i).rng();
                match route {
                    DegreeRoute::Direct => visit(&mut acc, direct.sample(&mut rng)),
                    other => {
                        let d = other.sample(&params, &mut rng).expect("alpha checked above");
                        visit(&mut acc, d.counts());
                    }
                }
            }
            acc
        };
        Ok(run_chunked(self.count, BATCH_CHUNK, exec, job, reduce).expect("count > 0"))
    }

    /// Folds over every replicate's `sum_j d_j^2` from the direct urn.
    pub fn fold_sum_squares<T, V, R>(&self, exec: Execution, init: impl Fn() -> T + Sync, visit: V, reduce: R) -> T
    where
        T: Send,
        V: Fn(&mut T, u64) + Sync,
        R: Fn(T, T) -> T,
    {
        let params = self.params;
        let job = |range: Range<u64>| {
            let mut acc = init();
            let mut sampler = DegreeSampler::new(&params);
            for i in range {
                let mut rng = self.replicate_seed(i).rng();
                visit(&mut acc, sampler.sample_sum_squares(&mut rng));
            }
            acc
        };
        run_chunked(self.count, BATCH_CHUNK, exec, job, reduce).expect("count > 0")
    }

    /// Materializes the digraphs of a route (fixed/random order or uniform).
    pub fn digraphs(&self, route: DegreeRoute, exec: Execution) -> Result<Vec<KOutDigraph>> {
        let params = self.params;
        if matches!(route, DegreeRoute::FixedOrder | DegreeRoute::RandomOrder) {
            params.require_finite()?;
        }
        let job = |range: Range<u64>| {
            range
                .map(|i| {
                    let mut rng = self.replicate_seed(i).rng();
                    match route {
                        DegreeRoute::FixedOrder => sample_fixed_order_with(&params, TargetRule::Composition, &mut rng),
                        DegreeRoute::RandomOrder => sample_random_order_rng(&params, &mut rng),
                        DegreeRoute::Uniform | DegreeRoute::Direct => Ok(sample_uniform_rng(&params, &mut rng)),
                    }
                    .expect("alpha checked above")
                })
                .collect::<Vec<_>>()
        };
        Ok(run_chunked(self.count, BATCH_CHUNK, exec, job, |mut a, b| {
            a.extend(b);
            a
        })
        .expect("count > 0"))
    }
}

/// How IID in-degree surrogates `Z` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ZMethod {
    /// Poisson with a Gamma(alpha, k/alpha) rate.
    #[default]
    GammaPoisson,
    /// Inversion against the tabulated cdf.
    Inversion,
}

/// Cdf table for inversion sampling of a pmf given by `p0` and the ratio
/// `p(d+1)/p(d)`.
#[derive(Debug, Clone)]
struct InversionTable {
    cdf: Vec<f64>,
    last_pmf: f64,
    alpha: Option<f64>,
    q: f64,
}

impl InversionTable {
    fn ratio(alpha: Option<f64>, q: f64, d: u64) -> f64 {
        match alpha {
            Some(a) => (a + d as f64) / (d as f64 + 1.0) * q,
            None => q / (d as f64 + 1.0),
        }
    }

    fn new(k: f64, alpha: Option<f64>) -> Self {
        let (p0, q) = match alpha {
            Some(a) => ((-a * (k / a).ln_1p()).exp(), k / (a + k)),
            None => ((-k).exp(), k),
        };
        let mut cdf = Vec::new();
        let (mut pmf, mut acc, mut d) = (p0, 0.0, 0u64);
        loop {
            acc += pmf;
            cdf.push(acc);
            // subnormal pmf can round to a fixed point, so stop well above it
            if d as f64 > k && (1.0 - acc < 1e-17 || pmf < 1e-300) {
                break;
            }
            pmf *= Self::ratio(alpha, q, d);
            d += 1;
        }
        let last_pmf = pmf;
        Self { cdf, last_pmf, alpha, q }
    }

    #[inline]
    fn sample(&self, u: f64) -> u64 {
        let idx = self.cdf.partition_point(|&c| c <= u);
        if idx < self.cdf.len() {
            return idx as u64;
        }
        // walk the tail past the table
        let mut d = (self.cdf.len() - 1) as u64;
        let mut acc = *self.cdf.last().expect("non-empty");
        let mut pmf = self.last_pmf;
        while acc <= u {
            pmf *= Self::ratio(self.alpha, self.q, d);
            d += 1;
            if pmf < 1e-300 {
                break;
            }
            acc += pmf;
        }
        d
    }
}

/// IID draws of `Z`: negative binomial with mean `k` and shape `alpha`,
/// `P(Z = d) = alpha^<d>/d! (alpha/(alpha+k))^alpha (k/(alpha+k))^d`,
/// or Poisson(k) when alpha is infinite.
#[derive(Debug, Clone)]
pub struct ZSampler {
    kind: ZKind,
}

#[derive(Debug, Clone)]
enum ZKind {
    GammaPoisson { gamma: Gamma<f64> },
    Poisson(Poisson<f64>),
    Table(InversionTable),
}

impl ZSampler {
    pub fn new(params: &ModelParams, method: ZMethod) -> Self {
        let k = params.k() as f64;
        let kind = match (method, params.alpha()) {
            (ZMethod::Inversion, alpha) => ZKind::Table(InversionTable::new(k, alpha.finite())),
            (ZMethod::GammaPoisson, Alpha::Finite(a)) => ZKind::GammaPoisson {
                gamma: Gamma::new(a, k / a).expect("alpha validated positive"),
            },
            (ZMethod::GammaPoisson, Alpha::Infinite) => {
                ZKind::Poisson(Poisson::new(k).expect("k >= 1"))
            }
        };
        Self { kind }
    }

    #[inline]
    pub fn sample<R: RngCore>(&self, rng: &mut R) -> u64 {
        match &self.kind {
            ZKind::GammaPoisson { gamma } => {
                let rate = gamma.sample(rng);
                if rate > 0.0 {
                    Poisson::new(rate).map(|p| p.sample(rng) as u64).unwrap_or(0)
                } else {
                    0
                }
            }
            ZKind::Poisson(p) => p.sample(rng) as u64,
            ZKind::Table(t) => t.sample(unit_f64(rng.next_u64())),
        }
    }
}

/// Iterator of `(Z, Z^2)` pairs.
pub struct ZPairs {
    sampler: ZSampler,
    rng: crate::rng::SimRng,
    remaining: u64,
}

impl Iterator for ZPairs {
    type Item = (u64, u64);

    fn next(&mut self) -> Option<(u64, u64)> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let z = self.sampler.sample(&mut self.rng);
        Some((z, z * z))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = self.remaining as usize;
        (r, Some(r))
    }
}

pub fn sample_iid_z_pairs(params: &ModelParams, count: u64, seed: &RngSeed) -> ZPairs {
    sample_iid_z_pairs_with(params, count, seed, ZMethod::GammaPoisson)
}

pub fn sample_iid_z_pairs_with(params: &ModelParams, count: u64, seed: &RngSeed, method: ZMethod) -> ZPairs {
    ZPairs { sampler: ZSampler::new(params, method), rng: seed.rng(), remaining: count }
}
