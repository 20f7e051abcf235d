//! Runner for the acceptance checks in `tests/acceptance.rs`.

use std::panic::{catch_unwind, UnwindSafe};
use std::time::{Duration, Instant};

/// Outcome of one criterion before the runtime limit is applied.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// Runs one criterion, prints its PASS/FAIL line and returns whether it passed.
/// A panic or an overrun of `limit` counts as a failure.
pub fn run_criterion(id: u32, limit: Duration, check: impl FnOnce() -> Verdict + UnwindSafe) -> bool {
    let start = Instant::now();
    let verdict = catch_unwind(check).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Verdict::new(false, format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = verdict.pass && in_time;
    let timing = format!("{:.2}s of {}s", elapsed.as_secs_f64(), limit.as_secs());
    let overrun = if in_time { "" } else { " runtime limit exceeded;" };
    println!("criterion {id}: {} {} [{timing}]{overrun}", if pass { "PASS" } else { "FAIL" }, verdict.detail);
    pass
}
