//! Monte Carlo estimators and statistical checks: total variation at the
//! critical scaling, lattice LCLT errors, concentration of power sums, the
//! distinguishing event, and chi-square goodness of fit.

use std::collections::{BTreeMap, HashMap};

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::exact::{self, ExactDistribution};
use crate::limits::{eta_density, f_value, normal_pdf, psi_density, sigma_matrix};
use crate::model::{center, power_sums_of, Alpha, ModelParams};
use crate::par::{run_chunked, Execution};
use crate::rng::RngSeed;
use crate::samplers::{DegreeRoute, SampleBatch, ZMethod, ZSampler};

pub const MIN_TV_SAMPLES: u64 = 10_000;
pub const MIN_LCLT_SAMPLES: u64 = 100_000;
pub const BOOTSTRAP_REPLICATES: u64 = 200;

const MODEL_LABEL: u64 = 1;
const UNIFORM_LABEL: u64 = 2;
const BOOTSTRAP_LABEL: u64 = 3;
const Z_CHUNK: u64 = 1024;

/// A Monte Carlo estimate with its sampling error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub method: String,
    /// Upper bound on the estimator's bias; 0 when unbiased.
    pub bias_bound: f64,
}

impl EstimateWithError {
    /// Half-width of the interval `3 std_error + bias_bound`.
    pub fn budget(&self) -> f64 {
        3.0 * self.std_error + self.bias_bound
    }
}

/// Integer counts keyed by an ordered value. Merging is exact, so the
/// result does not depend on how replicates were split across workers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram<K: Ord> {
    pub counts: BTreeMap<K, u64>,
    pub total: u64,
}

impl<K: Ord> Default for Histogram<K> {
    fn default() -> Self {
        Self { counts: BTreeMap::new(), total: 0 }
    }
}

impl<K: Ord + Clone> Histogram<K> {
    pub fn add(&mut self, key: K) {
        *self.counts.entry(key).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn merge(mut self, other: Self) -> Self {
        for (k, c) in other.counts {
            *self.counts.entry(k).or_insert(0) += c;
        }
        self.total += other.total;
        self
    }

    pub fn count(&self, key: &K) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn freq(&self, key: &K) -> f64 {
        self.count(key) as f64 / self.total as f64
    }
}

/// Counts of a statistic on the lattice `origin + i * spacing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeHistogram {
    pub origin: f64,
    pub spacing: f64,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl LatticeHistogram {
    pub fn point(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    /// Lattice of `S^0 = (X - n E[Z^2]) / sqrt(n)` built from raw `X` counts.
    /// `X` has the parity of `kn`, so consecutive points are `2/sqrt(n)` apart.
    pub fn of_centered_sum_squares(params: &ModelParams, hist: &Histogram<u64>) -> Self {
        let parity = params.kn() as u64 % 2;
        let (lo, hi) = match (hist.counts.keys().next(), hist.counts.keys().next_back()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => (parity, parity),
        };
        let first = lo - ((lo + 2 - parity) % 2);
        let len = ((hi - first) / 2 + 1) as usize;
        let mut counts = vec![0u64; len];
        for (&x, &c) in &hist.counts {
            counts[((x - first) / 2) as usize] += c;
        }
        Self {
            origin: center(params, first),
            spacing: 2.0 / (params.n() as f64).sqrt(),
            counts,
            total: hist.total,
        }
    }
}

/// Histogram of `X = sum_j d_j^2` over `m` direct-urn replicates. The uniform
/// model is used when `alpha` is infinite.
pub fn sum_squares_histogram(params: &ModelParams, m: u64, seed: RngSeed, exec: Execution) -> Result<Histogram<u64>> {
    let batch = SampleBatch::new(*params, m, seed)?;
    Ok(batch.fold_sum_squares(exec, Histogram::default, |h, x| h.add(x), Histogram::merge))
}

fn tv_of_histograms(a: &Histogram<u64>, b: &Histogram<u64>) -> f64 {
    let keys: std::collections::BTreeSet<u64> = a.counts.keys().chain(b.counts.keys()).copied().collect();
    0.5 * keys.iter().map(|x| (a.freq(x) - b.freq(x)).abs()).sum::<f64>()
}

/// Multinomial resample of a histogram with the same total.
fn resample(hist: &Histogram<u64>, rng: &mut crate::rng::SimRng) -> Histogram<u64> {
    let mut out = Histogram::default();
    let mut remaining = hist.total;
    let mut mass_left = hist.total;
    for (&x, &c) in &hist.counts {
        if remaining == 0 {
            break;
        }
        let draw = if c >= mass_left {
            remaining
        } else {
            let p = (c as f64 / mass_left as f64).clamp(0.0, 1.0);
            Binomial::new(remaining, p).map(|b| b.sample(rng)).unwrap_or(0)
        };
        mass_left -= c;
        remaining -= draw;
        if draw > 0 {
            out.counts.insert(x, draw);
        }
    }
    out.total = hist.total;
    out
}

fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Plug-in estimate of `d_TV(X(model), X(uniform))` from `m` samples per
/// model, with a bootstrap standard error and a bias bound.
pub fn estimate_tv_x_plugin(p_alpha: &ModelParams, m: u64, seed: RngSeed, exec: Execution) -> Result<EstimateWithError> {
    if m < MIN_TV_SAMPLES {
        return Err(Error::InsufficientSamples(format!("plug-in TV needs m >= {MIN_TV_SAMPLES}, got {m}")));
    }
    let a = sum_squares_histogram(p_alpha, m, seed.child(MODEL_LABEL), exec)?;
    let u = sum_squares_histogram(&p_alpha.to_uniform(), m, seed.child(UNIFORM_LABEL), exec)?;
    Ok(plugin_from_histograms(&a, &u, seed, "plugin-tv-x"))
}

/// Plug-in TV between two sampled histograms.
pub fn plugin_from_histograms(a: &Histogram<u64>, u: &Histogram<u64>, seed: RngSeed, method: &str) -> EstimateWithError {
    let estimate = tv_of_histograms(a, u);
    let boot = seed.child(BOOTSTRAP_LABEL);
    let reps: Vec<f64> = (0..BOOTSTRAP_REPLICATES)
        .map(|b| {
            let mut rng = boot.replicate(b).rng();
            let ra = resample(a, &mut rng);
            let ru = resample(u, &mut rng);
            tv_of_histograms(&ra, &ru)
        })
        .collect();
    let (_, std_error) = mean_and_sd(&reps);
    let noise = |h: &Histogram<u64>| {
        let m = h.total as f64;
        h.counts
            .values()
            .map(|&c| {
                let p = c as f64 / m;
                (p * (1.0 - p) / m).sqrt()
            })
            .sum::<f64>()
    };
    EstimateWithError {
        estimate,
        std_error,
        n_samples: a.total + u.total,
        method: method.into(),
        bias_bound: 0.5 * (noise(a) + noise(u)),
    }
}

/// Left clamp on `S^0` before evaluating `f`, far outside realized samples.
pub fn f_clamp(k: u32, beta: f64) -> f64 {
    let k = k as f64;
    -20.0 * beta * (k * k / (4.0 * beta * beta) + 30.0)
}

/// TV estimate as the mean of `f(S^0) / 2` under the attachment model, with
/// `beta = alpha / sqrt(n)`.
pub fn estimate_tv_via_f(p: &ModelParams, m: u64, seed: RngSeed, exec: Execution) -> Result<EstimateWithError> {
    let alpha = p.require_finite()?;
    if m < 2 {
        return Err(Error::InsufficientSamples("need at least two samples".into()));
    }
    let beta = alpha / (p.n() as f64).sqrt();
    let k = p.k() as u32;
    let clamp = f_clamp(k, beta);
    let params = *p;
    let (sum, sum_sq) = SampleBatch::new(params, m, seed.child(MODEL_LABEL))?.fold_sum_squares(
        exec,
        || (0.0f64, 0.0f64),
        |acc, x| {
            let v = 0.5 * f_value(k, beta, center(&params, x).max(clamp));
            acc.0 += v;
            acc.1 += v * v;
        },
        |a, b| (a.0 + b.0, a.1 + b.1),
    );
    let mf = m as f64;
    let mean = sum / mf;
    let var = ((sum_sq - mf * mean * mean) / (mf - 1.0)).max(0.0);
    Ok(EstimateWithError {
        estimate: mean,
        std_error: (var / mf).sqrt(),
        n_samples: m,
        method: "mean-half-f; truncation set dropped".into(),
        bias_bound: 0.0,
    })
}

/// Result of a lattice LCLT comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcltReport {
    pub sup_error: f64,
    /// Lattice point where the sup is attained.
    pub argmax: Vec<f64>,
    pub points: u64,
    pub n_samples: u64,
    /// Empirical mass over the whole sampled support.
    pub mass: f64,
    /// Samples off the predicted lattice.
    pub parity_violations: u64,
    /// Sup error of the first-coordinate marginal against Normal(0, k),
    /// two-dimensional check only.
    pub marginal_sup_error: Option<f64>,
}

/// `sup |(sqrt(n)/2) p_hat(x) - psi(x)|` over lattice points of `S^0` in
/// `[-window, window]`.
pub fn lclt_scalar_sup_error(p: &ModelParams, m: u64, window: f64, seed: RngSeed, exec: Execution) -> Result<LcltReport> {
    p.require_finite()?;
    if m < MIN_LCLT_SAMPLES {
        return Err(Error::InsufficientSamples(format!("LCLT needs m >= {MIN_LCLT_SAMPLES}, got {m}")));
    }
    let hist = sum_squares_histogram(p, m, seed, exec)?;
    let lattice = LatticeHistogram::of_centered_sum_squares(p, &hist);
    scalar_report(p, &lattice, window)
}

/// [`lclt_scalar_sup_error`] on a histogram that is already built.
pub fn scalar_report(p: &ModelParams, lattice: &LatticeHistogram, window: f64) -> Result<LcltReport> {
    let k = p.k() as u32;
    let n = p.n() as f64;
    let sigma = 2f64.sqrt() * k as f64;
    let total = lattice.total as f64;
    let scale = n.sqrt() / 2.0;
    // lattice index range covering [-window, window]
    let lo = ((-window - lattice.origin) / lattice.spacing).ceil() as i64;
    let hi = ((window - lattice.origin) / lattice.spacing).floor() as i64;
    let (mut sup, mut argmax, mut points) = (0.0f64, 0.0, 0u64);
    for i in lo..=hi {
        let x = lattice.origin + i as f64 * lattice.spacing;
        let c = usize::try_from(i).ok().and_then(|i| lattice.counts.get(i)).copied().unwrap_or(0);
        if c == 0 && x.abs() <= sigma {
            return Err(Error::InsufficientSamples(format!("empty lattice bin at x = {x:.4} inside one sd")));
        }
        let err = (scale * c as f64 / total - psi_density(k, x)).abs();
        if err > sup {
            sup = err;
            argmax = x;
        }
        points += 1;
    }
    Ok(LcltReport {
        sup_error: sup,
        argmax: vec![argmax],
        points,
        n_samples: lattice.total,
        mass: lattice.counts.iter().sum::<u64>() as f64 / total,
        parity_violations: 0,
        marginal_sup_error: None,
    })
}

/// Histogram of the unconditioned pair `(sum Z_j, sum Z_j^2)` over `m`
/// replicates of `n` IID draws.
pub fn z_pair_histogram(p: &ModelParams, m: u64, method: ZMethod, seed: RngSeed, exec: Execution) -> Histogram<(u64, u64)> {
    let n = p.n();
    let sampler = ZSampler::new(p, method);
    let job = |range: std::ops::Range<u64>| {
        let mut local: HashMap<(u64, u64), u64> = HashMap::new();
        for i in range {
            let mut rng = seed.replicate(i).rng();
            let (mut a, mut b) = (0u64, 0u64);
            for _ in 0..n {
                let z = sampler.sample(&mut rng);
                a += z;
                b += z * z;
            }
            *local.entry((a, b)).or_insert(0) += 1;
        }
        let total = local.values().sum();
        Histogram { counts: local.into_iter().collect(), total }
    };
    run_chunked(m, Z_CHUNK, exec, job, Histogram::merge).unwrap_or_default()
}

/// `sup |(n/2) p_hat(x) - eta(x)|` over the box `|x_i| <= window sqrt(Sigma_ii)`
/// for `S^0 = ((sum Z - nk), (sum Z^2 - n E[Z^2])) / sqrt(n)` built from IID
/// unconditioned draws.
pub fn lclt_2d_sup_error(p: &ModelParams, m: u64, window: f64, method: ZMethod, seed: RngSeed, exec: Execution) -> Result<LcltReport> {
    p.require_finite()?;
    if m < MIN_LCLT_SAMPLES {
        return Err(Error::InsufficientSamples(format!("LCLT needs m >= {MIN_LCLT_SAMPLES}, got {m}")));
    }
    let hist = z_pair_histogram(p, m, method, seed, exec);
    pair_report(p, &hist, window)
}

/// [`lclt_2d_sup_error`] on a histogram that is already built.
pub fn pair_report(p: &ModelParams, hist: &Histogram<(u64, u64)>, window: f64) -> Result<LcltReport> {
    let k = p.k() as u32;
    let n = p.n() as f64;
    let rn = n.sqrt();
    let total = hist.total as f64;
    let cov = sigma_matrix(k);
    let mu1 = n * k as f64;
    let mu2 = n * crate::model::second_moment_z(p.k(), p.alpha());

    let parity_violations: u64 = hist.counts.iter().filter(|((a, b), _)| (a + b) % 2 == 1).map(|(_, c)| c).sum();

    let half1 = window * cov.matrix[0][0].sqrt() * rn;
    let half2 = window * cov.matrix[1][1].sqrt() * rn;
    let a_lo = (mu1 - half1).ceil().max(0.0) as u64;
    let a_hi = (mu1 + half1).floor() as u64;
    let b_lo = (mu2 - half2).ceil().max(0.0) as u64;
    let b_hi = (mu2 + half2).floor() as u64;

    let (mut sup, mut argmax, mut points) = (0.0f64, [0.0, 0.0], 0u64);
    for a in a_lo..=a_hi {
        let x1 = (a as f64 - mu1) / rn;
        let start = b_lo + ((b_lo + a) % 2);
        for b in (start..=b_hi).step_by(2) {
            let x = [x1, (b as f64 - mu2) / rn];
            let c = hist.count(&(a, b));
            if c == 0 && cov.inverse_quadratic_form(x) <= 1.0 {
                return Err(Error::InsufficientSamples(format!(
                    "empty lattice cell at ({:.4}, {:.4}) inside one sd",
                    x[0], x[1]
                )));
            }
            let err = (n / 2.0 * c as f64 / total - eta_density(k, x)).abs();
            if err > sup {
                sup = err;
                argmax = x;
            }
            points += 1;
        }
    }

    let mut marginal: BTreeMap<u64, u64> = BTreeMap::new();
    for (&(a, _), &c) in &hist.counts {
        *marginal.entry(a).or_insert(0) += c;
    }
    let sd1 = (k as f64).sqrt();
    let marginal_sup = (a_lo..=a_hi)
        .map(|a| {
            let x1 = (a as f64 - mu1) / rn;
            let c = marginal.get(&a).copied().unwrap_or(0);
            (rn * c as f64 / total - normal_pdf(x1, 0.0, sd1)).abs()
        })
        .fold(0.0, f64::max);

    Ok(LcltReport {
        sup_error: sup,
        argmax: argmax.to_vec(),
        points,
        n_samples: hist.total,
        mass: hist.counts.values().sum::<u64>() as f64 / total,
        parity_violations,
        marginal_sup_error: Some(marginal_sup),
    })
}

/// Fraction of `m` samples with `|sum_j D_j^s - mu_s n| < omega sqrt(n)`,
/// `mu_s = E[D_j^s]` from the exact moment formulas.
pub fn concentration_check(p: &ModelParams, s: u32, omega: f64, m: u64, seed: RngSeed, exec: Execution) -> Result<f64> {
    if !(1..=4).contains(&s) {
        return Err(Error::InvalidParameter(format!("power s must be in 1..=4, got {s}")));
    }
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter("omega must be positive".into()));
    }
    let n = p.n() as f64;
    let center = exact::moment(p, s) * n;
    let radius = omega * n.sqrt();
    let hits = SampleBatch::new(*p, m, seed)?.fold_degrees(
        DegreeRoute::Direct,
        exec,
        || 0u64,
        |acc, d| {
            let sum = power_sums_of(d).get(s).expect("s in 1..=4") as f64;
            if (sum - center).abs() < radius {
                *acc += 1;
            }
        },
        |a, b| a + b,
    )?;
    Ok(hits as f64 / m as f64)
}

/// Outcome of the distinguishing-event experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinguishingReport {
    pub alpha: f64,
    pub omega: f64,
    /// Event center `mu_{2,alpha} n`.
    pub center: f64,
    /// Event radius `sqrt(omega n)`.
    pub radius: f64,
    /// `|mu_{2,alpha} - mu_{2,inf}| n`.
    pub gap: f64,
    pub p_alpha: f64,
    pub p_unif: f64,
    pub n_samples: u64,
}

impl DistinguishingReport {
    /// `p_alpha - p_unif`, a lower bound on the total variation distance.
    pub fn tv_lower_bound(&self) -> f64 {
        self.p_alpha - self.p_unif
    }
}

/// Probabilities of `|X - mu_{2,alpha} n| < sqrt(omega n)` under both models
/// with `alpha = n^sigma` and `omega = sqrt(n) / alpha`, `sigma < 1/2`.
pub fn distinguishing_event_check(n: usize, k: usize, beta_exponent: f64, m: u64, seed: RngSeed, exec: Execution) -> Result<DistinguishingReport> {
    if !(beta_exponent < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "exponent {beta_exponent} >= 1/2: the event no longer separates the models"
        )));
    }
    let alpha = (n as f64).powf(beta_exponent);
    let params = ModelParams::finite(n, k, alpha)?;
    event_probabilities(&params, (n as f64).sqrt() / alpha, m, seed, exec)
}

/// The distinguishing event for any finite `alpha` and radius parameter `omega`.
pub fn event_probabilities(p: &ModelParams, omega: f64, m: u64, seed: RngSeed, exec: Execution) -> Result<DistinguishingReport> {
    let alpha = p.require_finite()?;
    let n = p.n() as f64;
    let center = exact::moment(p, 2) * n;
    let radius = (omega * n).sqrt();
    let gap = (center - exact::moment(&p.to_uniform(), 2) * n).abs();
    let hit = |params: &ModelParams, s: RngSeed| -> Result<f64> {
        let hits = SampleBatch::new(*params, m, s)?.fold_sum_squares(
            exec,
            || 0u64,
            |acc, x| {
                if (x as f64 - center).abs() < radius {
                    *acc += 1;
                }
            },
            |a, b| a + b,
        );
        Ok(hits as f64 / m as f64)
    };
    Ok(DistinguishingReport {
        alpha,
        omega,
        center,
        radius,
        gap,
        p_alpha: hit(p, seed.child(MODEL_LABEL))?,
        p_unif: hit(&p.to_uniform(), seed.child(UNIFORM_LABEL))?,
        n_samples: m,
    })
}

/// Pearson chi-square test result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
    /// Cells after pooling.
    pub cells: u64,
}

pub const MIN_EXPECTED: f64 = 5.0;

/// Greedy pooling of cells in increasing order of `weight` until each group
/// reaches `MIN_EXPECTED`; a short last group joins its predecessor.
fn pool_groups(weights: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let (mut current, mut mass) = (Vec::new(), 0.0);
    for i in order {
        current.push(i);
        mass += weights[i];
        if mass >= MIN_EXPECTED {
            groups.push(std::mem::take(&mut current));
            mass = 0.0;
        }
    }
    if !current.is_empty() {
        match groups.last_mut() {
            Some(last) => last.extend(current),
            None => groups.push(current),
        }
    }
    groups
}

fn chi_square_p(statistic: f64, dof: u64) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    if !statistic.is_finite() {
        return 0.0;
    }
    ChiSquared::new(dof as f64).map(|d| d.sf(statistic)).unwrap_or(f64::NAN)
}

/// Goodness of fit of `observed` counts against probabilities `expected`.
/// Cells are pooled so every group expects at least five counts.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<ChiSquare> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(Error::Pooling("observed and expected cells differ".into()));
    }
    if expected.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::Pooling("negative or NaN expected mass".into()));
    }
    let total: u64 = observed.iter().sum();
    let mass: f64 = expected.iter().sum();
    let expected_counts: Vec<f64> = expected.iter().map(|p| p / mass * total as f64).collect();
    if total as f64 * mass.min(1.0) < MIN_EXPECTED {
        return Err(Error::Pooling(format!("{total} observations cannot fill one cell of {MIN_EXPECTED}")));
    }
    // observations where nothing is expected reject outright
    if observed.iter().zip(&expected_counts).any(|(&o, &e)| o > 0 && e == 0.0) {
        return Ok(ChiSquare { statistic: f64::INFINITY, dof: 1, p_value: 0.0, cells: observed.len() as u64 });
    }
    let groups = pool_groups(&expected_counts);
    let statistic = groups
        .iter()
        .map(|g| {
            let o: f64 = g.iter().map(|&i| observed[i] as f64).sum();
            let e: f64 = g.iter().map(|&i| expected_counts[i]).sum();
            (o - e).powi(2) / e
        })
        .sum::<f64>();
    let dof = groups.len() as u64 - 1;
    Ok(ChiSquare { statistic, dof, p_value: chi_square_p(statistic, dof), cells: groups.len() as u64 })
}

/// [`chi_square_gof`] of a histogram against an exact law on the same keys.
pub fn chi_square_vs_exact(observed: &Histogram<u64>, expected: &ExactDistribution) -> Result<ChiSquare> {
    let probs = expected.probs_f64();
    chi_square_vs_law(observed, expected.support.iter().copied().zip(probs))
}

/// [`chi_square_gof`] of a histogram against `(key, probability)` pairs.
/// Observed keys missing from the law count as impossible cells.
pub fn chi_square_vs_law<K: Ord + Clone>(observed: &Histogram<K>, law: impl IntoIterator<Item = (K, f64)>) -> Result<ChiSquare> {
    let mut cells: BTreeMap<K, f64> = law.into_iter().collect();
    for key in observed.counts.keys() {
        cells.entry(key.clone()).or_insert(0.0);
    }
    let (obs, exp): (Vec<u64>, Vec<f64>) = cells.iter().map(|(key, &p)| (observed.count(key), p)).unzip();
    chi_square_gof(&obs, &exp)
}

/// Histogram of whole in-degree sequences drawn by `route`.
pub fn degree_sequence_histogram(p: &ModelParams, route: DegreeRoute, m: u64, seed: RngSeed, exec: Execution) -> Result<Histogram<Vec<u32>>> {
    SampleBatch::new(*p, m, seed)?.fold_degrees(route, exec, Histogram::default, |h, d| h.add(d.to_vec()), Histogram::merge)
}

/// Two-sample chi-square homogeneity test on aligned cells.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> Result<ChiSquare> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Pooling("samples have different cells".into()));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Pooling("empty sample".into()));
    }
    let frac_a = na / (na + nb);
    // pool on the smaller expected count of each cell
    let weights: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x + y) as f64 * frac_a.min(1.0 - frac_a))
        .collect();
    let groups = pool_groups(&weights);
    let mut statistic = 0.0;
    for g in &groups {
        let oa: f64 = g.iter().map(|&i| a[i] as f64).sum();
        let ob: f64 = g.iter().map(|&i| b[i] as f64).sum();
        let (ea, eb) = ((oa + ob) * frac_a, (oa + ob) * (1.0 - frac_a));
        if ea > 0.0 {
            statistic += (oa - ea).powi(2) / ea;
        }
        if eb > 0.0 {
            statistic += (ob - eb).powi(2) / eb;
        }
    }
    let dof = groups.len() as u64 - 1;
    Ok(ChiSquare { statistic, dof, p_value: chi_square_p(statistic, dof), cells: groups.len() as u64 })
}

/// Aligns two histograms on the union of their keys.
pub fn aligned_counts<K: Ord + Clone>(a: &Histogram<K>, b: &Histogram<K>) -> (Vec<u64>, Vec<u64>) {
    let keys: std::collections::BTreeSet<&K> = a.counts.keys().chain(b.counts.keys()).collect();
    keys.into_iter().map(|x| (a.count(x), b.count(x))).unzip()
}

/// JSON record emitted for each estimator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub op: String,
    pub params: ModelParams,
    pub seed: RngSeed,
    pub estimate: f64,
    pub std_error: f64,
    pub bias_bound: f64,
    pub runtime_ms: u128,
}

impl EstimateRecord {
    pub fn new(op: &str, params: ModelParams, seed: RngSeed, est: &EstimateWithError, runtime_ms: u128) -> Self {
        Self {
            op: op.into(),
            params,
            seed,
            estimate: est.estimate,
            std_error: est.std_error,
            bias_bound: est.bias_bound,
            runtime_ms,
        }
    }
}

/// Whether `alpha` denotes the uniform model.
pub fn is_uniform(p: &ModelParams) -> bool {
    matches!(p.alpha(), Alpha::Infinite)
}
