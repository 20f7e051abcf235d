//! Independent oracles for tiny cases.
//!
//! `brute_force` walks every one of the `n^{kn}` mappings and multiplies the
//! sequential attachment probabilities `(alpha + indeg) / (alpha n + t)`
//! directly, without any closed form. `pgf` obtains the conditioned
//! negative-binomial law from power-series coefficients of its generating
//! function.

#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Every mapping `arc -> head` with its probability, arcs in throw order.
pub struct MappingLaw {
    pub n: usize,
    pub k: usize,
    pub mappings: Vec<(Vec<u32>, BigRational)>,
}

/// `alpha = None` is the uniform mapping.
pub fn brute_force(n: usize, k: usize, alpha: Option<&BigRational>) -> MappingLaw {
    let kn = n * k;
    let total = (n as u64).pow(kn as u32);
    let mut mappings = Vec::with_capacity(total as usize);
    let mut heads = vec![0u32; kn];
    for code in 0..total {
        let mut c = code;
        for h in heads.iter_mut() {
            *h = (c % n as u64) as u32;
            c /= n as u64;
        }
        let mut indeg = vec![0u64; n];
        let mut p = BigRational::one();
        for (t, &h) in heads.iter().enumerate() {
            p *= match alpha {
                Some(a) => (a + int(indeg[h as usize])) / (a * int(n as u64) + int(t as u64)),
                None => rat(1, n as i64),
            };
            indeg[h as usize] += 1;
        }
        mappings.push((heads.clone(), p));
    }
    MappingLaw { n, k, mappings }
}

impl MappingLaw {
    pub fn degree_law(&self) -> BTreeMap<Vec<u32>, BigRational> {
        let mut out = BTreeMap::new();
        for (heads, p) in &self.mappings {
            let mut d = vec![0u32; self.n];
            for &h in heads {
                d[h as usize] += 1;
            }
            *out.entry(d).or_insert_with(BigRational::zero) += p;
        }
        out
    }

    pub fn x_law(&self) -> BTreeMap<u64, BigRational> {
        let mut out = BTreeMap::new();
        for (d, p) in self.degree_law() {
            let x = d.iter().map(|&c| (c as u64).pow(2)).sum();
            *out.entry(x).or_insert_with(BigRational::zero) += p;
        }
        out
    }
}

/// Half the L1 distance between the two laws over all mappings.
pub fn tv_mappings(a: &MappingLaw, b: &MappingLaw) -> BigRational {
    let sum = a
        .mappings
        .iter()
        .zip(&b.mappings)
        .map(|((ha, pa), (hb, pb))| {
            assert_eq!(ha, hb);
            (pa - pb).abs()
        })
        .fold(BigRational::zero(), |acc, x| acc + x);
    sum / int(2)
}

pub fn tv_maps<K: Ord + Clone>(a: &BTreeMap<K, BigRational>, b: &BTreeMap<K, BigRational>) -> BigRational {
    let mut keys: Vec<&K> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    let zero = BigRational::zero();
    keys.into_iter()
        .map(|key| (a.get(key).unwrap_or(&zero) - b.get(key).unwrap_or(&zero)).abs())
        .fold(BigRational::zero(), |acc, x| acc + x)
        / int(2)
}

pub mod pgf {
    use super::*;

    /// Taylor coefficients `c_0..=c_len` of `(1 - q x)^{-alpha}` from the
    /// differential equation `(1 - q x) g' = alpha q g`.
    pub fn nb_series(alpha: &BigRational, q: &BigRational, len: usize) -> Vec<BigRational> {
        let mut c = vec![BigRational::one()];
        for d in 0..len {
            let next = &c[d] * q * (alpha + int(d as u64)) / int(d as u64 + 1);
            c.push(next);
        }
        c
    }

    /// Product of power series truncated after degree `len`.
    pub fn mul(a: &[BigRational], b: &[BigRational], len: usize) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); len + 1];
        for (i, x) in a.iter().enumerate().take(len + 1) {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate().take(len + 1 - i) {
                out[i + j] += x * y;
            }
        }
        out
    }

    /// `P(Z_1 = d_1, ..., Z_n = d_n | sum Z = kn)` for IID negative binomial
    /// `Z` with pgf `(alpha/(alpha+k))^alpha (1 - k x/(alpha+k))^{-alpha}`.
    /// The prefactor and `q^{kn}` cancel in the ratio, so the law is
    /// `prod c_{d_j} / [x^{kn}] g(x)^n` with `g = (1 - q x)^{-alpha}`.
    pub fn conditioned_nb(alpha: &BigRational, k: usize, d: &[u32]) -> BigRational {
        let n = d.len();
        let kn = n * k;
        let q = int(k as u64) / (alpha + int(k as u64));
        let g = nb_series(alpha, &q, kn);
        let mut power = vec![BigRational::one()];
        for _ in 0..n {
            power = mul(&power, &g, kn);
        }
        let numer = d.iter().fold(BigRational::one(), |acc, &x| acc * &g[x as usize]);
        numer / &power[kn]
    }

    /// Same conditioning for Poisson(k): a multinomial with equal cells.
    pub fn conditioned_poisson(k: usize, d: &[u32]) -> BigRational {
        let n = d.len();
        let kn = n * k;
        let exp_series: Vec<BigRational> = {
            let mut c = vec![BigRational::one()];
            for j in 0..kn {
                let next = &c[j] / int(j as u64 + 1);
                c.push(next);
            }
            c
        };
        let mut power = vec![BigRational::one()];
        for _ in 0..n {
            power = mul(&power, &exp_series, kn);
        }
        let numer = d.iter().fold(BigRational::one(), |acc, &x| acc * &exp_series[x as usize]);
        numer / &power[kn]
    }
}

/// All ordered sequences of `n` nonnegative integers summing to `total`.
pub fn compositions(n: usize, total: u32) -> Vec<Vec<u32>> {
    fn go(prefix: &mut Vec<u32>, n: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == n {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for v in 0..=left {
            prefix.push(v);
            go(prefix, n, left - v, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), n, total, &mut out);
    out
}
