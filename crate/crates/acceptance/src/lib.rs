//! Runner for the acceptance suite: named checks, each reported as one
//! PASS or FAIL line. Panics inside a check count as failures.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

pub type Verdict = Result<String, String>;

/// A proptest runner with a fixed seed, so every run checks the same cases.
pub fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

#[derive(Default)]
pub struct Suite {
    failed: Vec<&'static str>,
    total: usize,
}

impl Suite {
    pub fn check(&mut self, name: &'static str, f: impl FnOnce() -> Verdict) {
        self.total += 1;
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let ms = started.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("PASS  {name}  ({detail}; {ms} ms)"),
            Err(why) => {
                println!("FAIL  {name}  ({why})");
                self.failed.push(name);
            }
        }
    }

    /// Prints the summary; true when everything passed.
    pub fn finish(self) -> bool {
        println!("{}/{} criteria passed", self.total - self.failed.len(), self.total);
        self.failed.is_empty()
    }
}

/// Turns a failed condition into a verdict error.
#[macro_export]
macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}
