//! One function per subcommand. Each returns the text to emit; anything that
//! varies between runs (timings, cost notes) goes to stderr.

use std::time::Instant;

use kout_core::exact::{
    self, alpha_perturbation_bound, exact_moment, exact_moment_factorial, exact_tv_full, exact_tv_x,
    fraction_string, partition_count, Budget, ExactParams, DEFAULT_MAX_KN,
};
use kout_core::limits::{limit_tv, limit_tv_quadrature, LimitLawParams};
use kout_core::samplers::{DegreeRoute, SampleBatch, ZMethod};
use kout_core::stats::{
    estimate_tv_via_f, estimate_tv_x_plugin, event_probabilities, lclt_2d_sup_error, lclt_scalar_sup_error,
    EstimateWithError,
};
use kout_core::{Alpha, ModelParams, RngSeed};
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::config::{AlphaSpec, Format, ResolvedAlpha, Route, Settings};
use crate::error::{invalid, CliError, CliResult};
use crate::output::{render, Row, VERSION};

/// Text to write plus an optional failed check, reported after writing.
pub struct Outcome {
    pub text: String,
    pub failed_check: Option<String>,
}

impl Outcome {
    fn rows(rows: &[Row], s: &Settings, failed_check: Option<String>) -> Self {
        Self { text: render(rows, s.format), failed_check }
    }
}

fn params(n: usize, k: usize, alpha: &ResolvedAlpha) -> CliResult<ModelParams> {
    Ok(ModelParams::new(n, k, alpha.alpha)?)
}

fn alpha_cols(row: &mut Row, a: &ResolvedAlpha) {
    row.push("alpha_spec", a.spec.clone());
    match a.alpha {
        Alpha::Finite(v) => row.num("alpha", v),
        Alpha::Infinite => row.push("alpha", "inf"),
    };
}

fn note(msg: impl AsRef<str>) {
    eprintln!("kout: {}", msg.as_ref());
}

pub fn sample(s: &Settings) -> CliResult<Outcome> {
    let n = s.single_n(2)?;
    let k = s.k.unwrap_or(1);
    let alpha = s.resolve_alpha(&s.single_alpha(AlphaSpec::Literal(1.0))?, n)?;
    let p = params(n, k, &alpha)?;
    let count = s.samples.unwrap_or(1);
    let route = match (s.route.unwrap_or(Route::Fixed), p.alpha()) {
        (_, Alpha::Infinite) | (Route::Uniform, _) => DegreeRoute::Uniform,
        (Route::Fixed, _) => DegreeRoute::FixedOrder,
        (Route::Random, _) => DegreeRoute::RandomOrder,
    };
    let graphs = SampleBatch::new(p, count, RngSeed::new(s.seed))?.digraphs(route, s.execution())?;
    let text = match s.format {
        Format::Csv => {
            let mut out = format!(
                "# kout sample n={n} k={k} alpha={} route={route:?} samples={count} seed={} config_hash={} version={VERSION}\n",
                p.alpha(),
                s.seed,
                s.config_hash()
            );
            for (j, g) in graphs.iter().enumerate() {
                if count > 1 {
                    out.push_str(&format!("# digraph {}\n", j + 1));
                }
                for v in 0..n {
                    for i in 0..k {
                        out.push_str(&format!("{} {} {}\n", v + 1, i + 1, g.target(v, i) + 1));
                    }
                }
            }
            out
        }
        Format::Json => {
            let digraphs: Vec<Vec<u32>> = graphs.iter().map(|g| g.targets().iter().map(|t| t + 1).collect()).collect();
            let alpha_value = match p.alpha() {
                Alpha::Finite(a) => json!(a),
                Alpha::Infinite => json!("inf"),
            };
            let doc = json!({
                "n": n, "k": k, "alpha": alpha_value, "route": format!("{route:?}"), "samples": count,
                "seed": s.seed, "config_hash": s.config_hash(), "version": VERSION, "digraphs": digraphs,
            });
            format!("{doc}\n")
        }
    };
    Ok(Outcome { text, failed_check: None })
}

fn exact_params(n: usize, k: usize, a: &ResolvedAlpha) -> CliResult<ExactParams> {
    Ok(match (a.alpha, a.rational) {
        (Alpha::Infinite, _) => ExactParams::uniform(n, k)?,
        (_, Some((p, q))) => ExactParams::with_rational(n, k, p, q)?,
        (Alpha::Finite(_), None) => ExactParams::from_model(&ModelParams::new(n, k, a.alpha)?),
    })
}

pub fn exact_tv(s: &Settings) -> CliResult<Outcome> {
    let ns = s.ns.clone().unwrap_or_else(|| vec![2]);
    let k = s.k.unwrap_or(1);
    let specs = s.alphas.clone().unwrap_or_else(|| vec![AlphaSpec::Literal(1.0)]);
    let budget = Budget::new(s.budget.unwrap_or(DEFAULT_MAX_KN));
    for &n in &ns {
        budget.check(n, k)?;
        note(format!("exact-tv n={n} k={k}: {} in-degree classes per alpha", partition_count(n, k)));
    }
    let mut rows = Vec::new();
    let mut failed = None;
    for &n in &ns {
        let mut prev: Option<num_rational::BigRational> = None;
        for spec in &specs {
            let a = s.resolve_alpha(spec, n)?;
            let ep = exact_params(n, k, &a)?;
            let full = exact_tv_full(&ep, budget)?;
            let x = exact_tv_x(&ep, budget)?;
            let rounding = match a.alpha {
                Alpha::Finite(v) if a.is_rounded() => alpha_perturbation_bound((n * k) as u64, v, v * f64::EPSILON),
                _ => 0.0,
            };
            if let Some(p) = &prev {
                if s.check && full >= *p && failed.is_none() {
                    failed = Some(format!("tv_full not decreasing at n={n}, alpha={}", a.spec));
                }
            }
            let mut row = Row::new();
            row.push("n", n).push("k", k);
            alpha_cols(&mut row, &a);
            row.push("tv_full", fraction_string(&full))
                .push("tv_x", fraction_string(&x))
                .opt_num("tv_full_f64", full.to_f64())
                .opt_num("tv_x_f64", x.to_f64())
                .num("alpha_rounding_bound", rounding)
                .stamp(s);
            rows.push(row);
            prev = Some(full);
        }
    }
    Ok(Outcome::rows(&rows, s, failed))
}

fn est_cols(row: &mut Row, prefix: &str, e: Option<&EstimateWithError>) {
    row.opt_num(prefix, e.map(|e| e.estimate))
        .opt_num(&format!("{prefix}_se"), e.map(|e| e.std_error))
        .opt_num(&format!("{prefix}_bias_bound"), e.map(|e| e.bias_bound));
}

pub fn threshold(s: &Settings) -> CliResult<Outcome> {
    let ns = s.ns.clone().unwrap_or_else(|| vec![1_000, 10_000, 40_000]);
    let k = s.k.unwrap_or(1);
    let specs = s.alphas.clone().unwrap_or_else(|| vec![AlphaSpec::BetaSqrtN(None)]);
    let m = s.samples.unwrap_or(10_000);
    let exec = s.execution();
    let root = RngSeed::new(s.seed);
    let mut rows = Vec::new();
    let mut failed = None;
    let tol = s.tolerance.unwrap_or(0.05);
    for (si, spec) in specs.iter().enumerate() {
        for (ni, &n) in ns.iter().enumerate() {
            let start = Instant::now();
            let a = s.resolve_alpha(spec, n)?;
            let p = params(n, k, &a)?;
            let point = root.child(((si as u64) << 32) | ni as u64);
            let via_f = match a.alpha {
                Alpha::Finite(_) => Some(estimate_tv_via_f(&p, m, point.child(1), exec)?),
                Alpha::Infinite => None,
            };
            let plugin = estimate_tv_x_plugin(&p, m, point.child(2), exec)?;
            let limit = a.beta.map(|b| limit_tv(k as u32, b));
            let event = match a.alpha {
                Alpha::Finite(v) if v < (n as f64).sqrt() => {
                    Some(event_probabilities(&p, (n as f64).sqrt() / v, m, point.child(3), exec)?)
                }
                _ => None,
            };
            let mut row = Row::new();
            row.push("n", n).push("k", k);
            alpha_cols(&mut row, &a);
            row.push("samples", m);
            est_cols(&mut row, "tv_f", via_f.as_ref());
            est_cols(&mut row, "tv_plugin", Some(&plugin));
            row.opt_num("limit_tv", limit)
                .opt_num("event_p_alpha", event.as_ref().map(|e| e.p_alpha))
                .opt_num("event_p_unif", event.as_ref().map(|e| e.p_unif))
                .opt_num("event_gap", event.as_ref().map(|e| e.tv_lower_bound()));
            if s.check {
                let pass = match (limit, &via_f) {
                    (Some(l), Some(f)) => (f.estimate - l).abs() <= tol,
                    _ => true,
                };
                row.push("pass", pass);
                if !pass && failed.is_none() {
                    failed = Some(format!("n={n}: tv_f differs from the limit by more than {tol}"));
                }
            }
            row.stamp(s);
            rows.push(row);
            note(format!("threshold n={n} alpha={}: {} ms", a.spec, start.elapsed().as_millis()));
        }
    }
    Ok(Outcome::rows(&rows, s, failed))
}

pub fn lclt(s: &Settings) -> CliResult<Outcome> {
    let dim = s.dim.unwrap_or(1);
    let (n_default, m_default, window_default, tol_default) =
        if dim == 1 { (10_000, 1_000_000, 8.0, 0.03) } else { (2_500, 10_000_000, 4.0, 0.02) };
    let n = s.single_n(n_default)?;
    let k = s.k.unwrap_or(1);
    let a = s.resolve_alpha(&s.single_alpha(AlphaSpec::BetaSqrtN(None))?, n)?;
    let p = params(n, k, &a)?;
    let m = s.samples.unwrap_or(m_default);
    let window = s.window.unwrap_or(window_default);
    let tol = s.tolerance.unwrap_or(tol_default);
    let start = Instant::now();
    let seed = RngSeed::new(s.seed);
    let report = if dim == 1 {
        lclt_scalar_sup_error(&p, m, window, seed, s.execution())?
    } else {
        lclt_2d_sup_error(&p, m, window, ZMethod::Inversion, seed, s.execution())?
    };
    note(format!("lclt dim={dim} n={n}: {} ms", start.elapsed().as_millis()));
    let pass = report.sup_error <= tol && report.parity_violations == 0;
    let mut row = Row::new();
    row.push("n", n).push("k", k);
    alpha_cols(&mut row, &a);
    row.push("dim", dim)
        .num("window", window)
        .push("samples", m)
        .num("sup_error", report.sup_error)
        .push("argmax", Value::String(report.argmax.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")))
        .push("points", report.points)
        .push("parity_violations", report.parity_violations)
        .opt_num("marginal_sup_error", report.marginal_sup_error)
        .num("mass", report.mass)
        .num("tolerance", tol)
        .push("pass", pass)
        .stamp(s);
    let failed = (s.check && !pass).then(|| format!("sup error {} above tolerance {tol}", report.sup_error));
    Ok(Outcome::rows(&[row], s, failed))
}

pub fn moments(s: &Settings) -> CliResult<Outcome> {
    let n = s.single_n(100)?;
    let k = s.k.unwrap_or(1);
    let a = s.resolve_alpha(&s.single_alpha(AlphaSpec::Literal(1.0))?, n)?;
    let p = params(n, k, &a)?;
    let order = s.order.unwrap_or(4);
    if order == 0 || order > 20 {
        return Err(invalid("--order must be between 1 and 20"));
    }
    let exact_ep = (a.rational.is_some() || a.alpha.is_infinite()).then(|| exact_params(n, k, &a)).transpose()?;
    let mut rows = Vec::new();
    for l in 1..=order {
        let mut row = Row::new();
        row.push("n", n).push("k", k);
        alpha_cols(&mut row, &a);
        row.push("l", l);
        match &exact_ep {
            Some(ep) => {
                row.push("factorial_moment", fraction_string(&exact_moment_factorial(ep, l)))
                    .push("moment", fraction_string(&exact_moment(ep, l)));
            }
            None => {
                row.push("factorial_moment", Value::Null).push("moment", Value::Null);
            }
        }
        row.num("factorial_moment_f64", exact::factorial_moment(&p, l))
            .num("moment_f64", exact::moment(&p, l))
            .stamp(s);
        rows.push(row);
    }
    Ok(Outcome::rows(&rows, s, None))
}

pub fn limit(s: &Settings) -> CliResult<Outcome> {
    let k = s.k.unwrap_or(1);
    let beta = s.beta.unwrap_or(1.0);
    let k32 = u32::try_from(k).map_err(|_| invalid("--k too large"))?;
    let closed = limit_tv(k32, beta);
    let quad = limit_tv_quadrature(k32, beta);
    let law = LimitLawParams::new(k32, beta);
    let tol = s.tolerance.unwrap_or(1e-8);
    let mut row = Row::new();
    row.push("k", k)
        .num("beta", beta)
        .num("limit_tv", closed)
        .num("limit_tv_quadrature", quad)
        .num("normal_mean", law.mean)
        .num("normal_variance", law.variance);
    let pass = (closed - quad).abs() <= tol;
    if s.check {
        row.push("pass", pass);
    }
    row.stamp(s);
    let failed = (s.check && !pass).then(|| format!("closed form and quadrature differ by {}", (closed - quad).abs()));
    Ok(Outcome::rows(&[row], s, failed))
}

pub fn run(s: &Settings) -> CliResult<Outcome> {
    match s.command {
        "sample" => sample(s),
        "exact-tv" => exact_tv(s),
        "threshold" => threshold(s),
        "lclt" => lclt(s),
        "moments" => moments(s),
        "limit" => limit(s),
        other => Err(CliError::Validation(format!("unknown command {other}"))),
    }
}
