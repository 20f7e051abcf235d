//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fail.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::time::Duration;

use clap::Parser;
use common::{brute_force, compositions, pgf, rat, tv_mappings, tv_maps};
use kout_core::exact::{
    self, degree_sequence_law, exact_tv_full, exact_tv_x, fraction_string, pmf_degree_sequence_exact, Budget,
    ExactParams,
};
use kout_core::limits::{limit_tv, limit_tv_closed_form, limit_tv_quadrature};
use kout_core::samplers::{DegreeRoute, SampleBatch, ZMethod};
use kout_core::stats::{
    aligned_counts, chi_square_two_sample, chi_square_vs_law, degree_sequence_histogram, distinguishing_event_check,
    estimate_tv_via_f, estimate_tv_x_plugin, lclt_2d_sup_error, lclt_scalar_sup_error,
};
use kout_core::{log_rising_factorial, rising_factorial_bounds, Execution, InDegreeSequence, ModelParams, RngSeed};
use kout_verify::{run_criterion, Verdict};
use num_traits::ToPrimitive;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const EXEC: Execution = Execution::Auto;
const P_MIN: f64 = 1e-3;
const LOG_SLACK: f64 = 1e-12;

fn exact_tiny_case() -> Verdict {
    let one = rat(1, 1);
    let oracle_full = tv_mappings(&brute_force(2, 1, Some(&one)), &brute_force(2, 1, None));
    let oracle_x = tv_maps(&brute_force(2, 1, Some(&one)).x_law(), &brute_force(2, 1, None).x_law());
    let ep = ExactParams::with_rational(2, 1, 1, 1).unwrap();
    let full = exact_tv_full(&ep, Budget::default()).unwrap();
    let x = exact_tv_x(&ep, Budget::default()).unwrap();
    let sixth = rat(1, 6);
    let pass = full == sixth && x == sixth && oracle_full == sixth && oracle_x == sixth;
    Verdict::new(
        pass,
        format!(
            "tv_full={} tv_x={} brute-force full={} x={}",
            fraction_string(&full),
            fraction_string(&x),
            fraction_string(&oracle_full),
            fraction_string(&oracle_x)
        ),
    )
}

fn conditioned_negative_binomial() -> Verdict {
    let ep = ExactParams::with_rational(3, 2, 3, 2).unwrap();
    let alpha = rat(3, 2);
    let seqs = compositions(3, 6);
    let mismatches: Vec<Vec<u32>> = seqs
        .iter()
        .filter(|d| {
            pmf_degree_sequence_exact(&ep, &InDegreeSequence::new(d.to_vec())).unwrap() != pgf::conditioned_nb(&alpha, 2, d)
        })
        .cloned()
        .collect();
    Verdict::new(mismatches.is_empty(), format!("{} sequences, exact mismatches {:?}", seqs.len(), mismatches))
}

fn sampler_equivalence() -> Verdict {
    let p = ModelParams::finite(3, 2, 2.0).unwrap();
    let law: Vec<(Vec<u32>, f64)> = degree_sequence_law(&ExactParams::from_model(&p), Budget::default())
        .unwrap()
        .into_iter()
        .map(|(d, pr)| (d.into_counts(), pr.to_f64().unwrap()))
        .collect();
    let routes = [DegreeRoute::FixedOrder, DegreeRoute::RandomOrder, DegreeRoute::Direct];
    let seed = RngSeed::new(3);
    let mut hists = Vec::new();
    let mut ps = Vec::new();
    for (i, route) in routes.into_iter().enumerate() {
        let h = degree_sequence_histogram(&p, route, 1_000_000, seed.child(i as u64), EXEC).unwrap();
        ps.push((format!("{route:?}"), chi_square_vs_law(&h, law.clone()).unwrap().p_value));
        hists.push(h);
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let (a, b) = aligned_counts(&hists[i], &hists[j]);
        ps.push((format!("{:?}~{:?}", routes[i], routes[j]), chi_square_two_sample(&a, &b).unwrap().p_value));
    }
    let pass = ps.iter().all(|(_, p)| *p > P_MIN);
    let detail: Vec<String> = ps.iter().map(|(name, p)| format!("{name} p={p:.4}")).collect();
    Verdict::new(pass, detail.join(", "))
}

fn moments() -> Verdict {
    let p = ModelParams::finite(100, 2, 5.0).unwrap();
    let m = 100_000u64;
    let sums = SampleBatch::new(p, m, RngSeed::new(4))
        .unwrap()
        .fold_degrees(
            DegreeRoute::Direct,
            EXEC,
            || [[0.0f64; 2]; 4],
            |acc, d| {
                let (a, b) = (d[0] as f64, d[1] as f64);
                for (slot, v) in acc.iter_mut().zip([a, a * a, a * (a - 1.0), a * b]) {
                    slot[0] += v;
                    slot[1] += v * v;
                }
            },
            |mut x, y| {
                for (s, t) in x.iter_mut().zip(y) {
                    s[0] += t[0];
                    s[1] += t[1];
                }
                x
            },
        )
        .unwrap();
    let names = ["E[D]", "E[D^2]", "E[(D)_2]", "E[D_i D_j]"];
    let want = [
        exact::moment(&p, 1),
        exact::moment(&p, 2),
        exact::factorial_moment(&p, 2),
        exact::mixed_factorial_moment(&p, 1, 1),
    ];
    let mf = m as f64;
    let mut pass = true;
    let mut detail = Vec::new();
    for ((s, w), name) in sums.iter().zip(want).zip(names) {
        let mean = s[0] / mf;
        let se = ((s[1] / mf - mean * mean) / (mf - 1.0)).sqrt();
        let z = (mean - w) / se;
        pass &= z.abs() <= 4.0;
        detail.push(format!("{name} mc={mean:.5} exact={w:.5} z={z:+.2}"));
    }
    Verdict::new(pass, detail.join(", "))
}

fn rising_factorial_brackets() -> Verdict {
    let mut rng = StdRng::seed_from_u64(5);
    let (lo, hi) = (1e-3f64.ln(), 1e6f64.ln());
    let mut failures = 0;
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let a = rng.random_range(lo..hi).exp();
        let b = (rng.random::<f64>() * (a + 1.0)).floor() as u64;
        let b = if b as f64 >= a + 1.0 { b - 1 } else { b };
        let exact = log_rising_factorial(a, b).unwrap();
        let br = rising_factorial_bounds(a, b).unwrap();
        for bracket in [br.rough, br.sharp] {
            worst = worst.max(bracket.lower - exact).max(exact - bracket.upper);
            if !bracket.contains(exact, LOG_SLACK) {
                failures += 1;
            }
        }
    }
    Verdict::new(failures == 0, format!("10000 pairs, {failures} violations, worst excursion {worst:.3e}"))
}

fn limit_constant() -> Verdict {
    let quad = limit_tv_quadrature(1, 1.0);
    let closed = limit_tv_closed_form(1, 1.0);
    let pass = (quad - 0.27633).abs() <= 1e-4 && (closed - quad).abs() <= 1e-8;
    Verdict::new(pass, format!("quadrature={quad:.10} closed form={closed:.10} diff={:.2e}", (closed - quad).abs()))
}

fn critical_window_estimates() -> Verdict {
    let target = limit_tv(1, 1.0);
    let p = ModelParams::critical(40_000, 1, 1.0).unwrap();
    let seed = RngSeed::new(7);
    let f = estimate_tv_via_f(&p, 100_000, seed.child(1), EXEC).unwrap();
    let plug = estimate_tv_x_plugin(&p, 1_000_000, seed.child(2), EXEC).unwrap();
    let gap = (f.estimate - plug.estimate).abs();
    let combined = f.budget() + plug.budget();
    let pass = (f.estimate - target).abs() <= 0.02 && (plug.estimate - target).abs() <= 0.03 && gap <= combined;
    Verdict::new(
        pass,
        format!(
            "limit={target:.5}; via_f={:.5} (se {:.5}, budget {:.5}, tol 0.02); plugin={:.5} (se {:.5}, bias bound {:.5}, budget {:.5}, tol 0.03); |diff|={gap:.5} vs combined budget {combined:.5}",
            f.estimate, f.std_error, f.budget(), plug.estimate, plug.std_error, plug.bias_bound, plug.budget()
        ),
    )
}

fn subcritical_separation() -> Verdict {
    let r = distinguishing_event_check(10_000, 1, 0.25, 10_000, RngSeed::new(8), EXEC).unwrap();
    let pass = r.p_alpha >= 0.95 && r.p_unif <= 0.05;
    Verdict::new(
        pass,
        format!(
            "alpha={:.3} center={:.2} radius={:.2} gap={:.2} p_alpha={:.4} (need >= 0.95) p_unif={:.4} (need <= 0.05)",
            r.alpha, r.center, r.radius, r.gap, r.p_alpha, r.p_unif
        ),
    )
}

fn supercritical_direction() -> Verdict {
    let grid: Vec<i64> = (0..=10).map(|e| 1i64 << e).collect();
    let values: Vec<f64> = grid
        .iter()
        .map(|&a| {
            let ep = ExactParams::with_rational(4, 1, a, 1).unwrap();
            exact_tv_full(&ep, Budget::default()).unwrap().to_f64().unwrap()
        })
        .collect();
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let last = *values.last().unwrap();
    Verdict::new(
        decreasing && last < 1e-3,
        format!("strictly decreasing={decreasing}, tv(alpha=1)={:.5}, tv(alpha=1024)={last:.3e}", values[0]),
    )
}

fn local_limits() -> Verdict {
    let scalar = lclt_scalar_sup_error(&ModelParams::critical(10_000, 1, 1.0).unwrap(), 1_000_000, 8.0, RngSeed::new(10).child(1), EXEC)
        .unwrap();
    let pair = lclt_2d_sup_error(
        &ModelParams::critical(2_500, 1, 1.0).unwrap(),
        10_000_000,
        4.0,
        ZMethod::Inversion,
        RngSeed::new(10).child(2),
        EXEC,
    )
    .unwrap();
    let pass = scalar.sup_error <= 0.03 && pair.sup_error <= 0.02 && pair.parity_violations == 0;
    Verdict::new(
        pass,
        format!(
            "scalar sup={:.4} at {:?} over {} points (tol 0.03); pair sup={:.4} at {:?} over {} cells (tol 0.02), parity violations {}",
            scalar.sup_error, scalar.argmax, scalar.points, pair.sup_error, pair.argmax, pair.points, pair.parity_violations
        ),
    )
}

fn run_cli(args: &[&str], out: &Path) -> Vec<u8> {
    let mut argv = vec!["kout"];
    argv.extend_from_slice(args);
    argv.extend_from_slice(&["--out", out.to_str().unwrap()]);
    let code = kout_cli::run(&kout_cli::Cli::parse_from(argv));
    assert_eq!(code, 0, "{args:?}");
    std::fs::read(out).unwrap()
}

fn determinism() -> Verdict {
    let seed = RngSeed::new(11);
    let p = ModelParams::critical(2_000, 1, 1.0).unwrap();
    let small = ModelParams::critical(100, 1, 1.0).unwrap();
    let library = |exec: Execution| -> String {
        let parts = [
            serde_json::to_string(&estimate_tv_via_f(&p, 20_000, seed, exec).unwrap()),
            serde_json::to_string(&estimate_tv_x_plugin(&p, 20_000, seed, exec).unwrap()),
            serde_json::to_string(&lclt_scalar_sup_error(&p, 100_000, 8.0, seed, exec).unwrap()),
            serde_json::to_string(&lclt_2d_sup_error(&small, 100_000, 3.0, ZMethod::Inversion, seed, exec).unwrap()),
            serde_json::to_string(&distinguishing_event_check(2_000, 1, 0.25, 10_000, seed, exec).unwrap()),
        ];
        parts.map(Result::unwrap).join("\n")
    };
    let serial = library(Execution::Serial);
    let lib_ok = serial == library(Execution::Parallel { threads: 8 }) && serial == library(Execution::Serial);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.out");
    let runs: [&[&str]; 3] = [
        &["threshold", "--n", "500,2000", "--alpha", "beta*sqrt(n),n^0.25", "--samples", "10000", "--seed", "11"],
        &["lclt", "--n", "2000", "--samples", "100000", "--seed", "11"],
        &["sample", "--n", "30", "--k", "2", "--alpha", "0.7", "--samples", "50", "--seed", "11"],
    ];
    let mut cli_ok = true;
    for args in runs {
        let base = run_cli(&[args, &["--threads", "1"]].concat(), &out);
        cli_ok &= base == run_cli(&[args, &["--threads", "8"]].concat(), &out);
        cli_ok &= base == run_cli(&[args, &["--threads", "1"]].concat(), &out);
    }
    Verdict::new(
        lib_ok && cli_ok,
        format!("estimator records serial==parallel(8)==rerun: {lib_ok}; cli outputs byte-identical across reruns and --threads 1/8: {cli_ok}"),
    )
}

type Check = fn() -> Verdict;

/// Criterion ids may be passed as arguments to run a subset.
fn main() {
    let criteria: [(u32, u64, Check); 11] = [
        (1, 1, exact_tiny_case),
        (2, 1, conditioned_negative_binomial),
        (3, 120, sampler_equivalence),
        (4, 60, moments),
        (5, 1, rising_factorial_brackets),
        (6, 1, limit_constant),
        (7, 15 * 60, critical_window_estimates),
        (8, 5 * 60, subcritical_separation),
        (9, 10, supercritical_direction),
        (10, 20 * 60, local_limits),
        (11, 5 * 60, determinism),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let results: Vec<bool> = criteria
        .into_iter()
        .filter(|(id, _, _)| only.is_empty() || only.contains(id))
        .map(|(id, limit, check)| run_criterion(id, Duration::from_secs(limit), check))
        .collect();
    let failed = results.iter().filter(|&&ok| !ok).count();
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
