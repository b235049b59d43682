//! Runner for the workspace acceptance checks.
//!
//! Each criterion is a plain function returning a [`Verdict`]. The runner
//! times it, turns panics into failures, enforces an optional time budget
//! and prints one line per criterion.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub budget: Option<Duration>,
    pub check: fn() -> Verdict,
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic".to_string()
    }
}

/// Runs one criterion and prints its line.
pub fn run(c: &Criterion) -> bool {
    let start = Instant::now();
    let outcome = panic::catch_unwind(AssertUnwindSafe(c.check));
    let elapsed = start.elapsed();
    let mut verdict = match outcome {
        Ok(v) => v,
        Err(payload) => Verdict::new(false, format!("panicked: {}", panic_message(payload))),
    };
    if let Some(budget) = c.budget {
        if elapsed > budget {
            verdict.pass = false;
            verdict
                .detail
                .push_str(&format!("; over the {:.0}s budget", budget.as_secs_f64()));
        }
    }
    println!(
        "criterion {} {} {}: {} [{:.2}s]",
        c.id,
        if verdict.pass { "PASS" } else { "FAIL" },
        c.name,
        verdict.detail,
        elapsed.as_secs_f64()
    );
    verdict.pass
}

/// Runs every criterion, even after a failure. True when all pass.
pub fn run_all(criteria: &[Criterion]) -> bool {
    let results: Vec<bool> = criteria.iter().map(run).collect();
    let passed = results.iter().filter(|&&p| p).count();
    println!("{passed}/{} criteria passed", criteria.len());
    passed == criteria.len()
}
