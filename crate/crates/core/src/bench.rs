//! Query-throughput harness: warm-up passes, measured passes, Student-t intervals.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub const DEFAULT_WARMUP_RUNS: usize = 3;
pub const DEFAULT_MEASURED_RUNS: usize = 3;
pub const DEFAULT_BENCH_K: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub threads: usize,
    pub warmup_runs: usize,
    pub measured_runs: usize,
    pub k: usize,
    /// Encoder condition, e.g. `pre-encoded` or `onnx`.
    pub encoder: String,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            threads: default_threads(),
            warmup_runs: DEFAULT_WARMUP_RUNS,
            measured_runs: DEFAULT_MEASURED_RUNS,
            k: DEFAULT_BENCH_K,
            encoder: "pre-encoded".into(),
        }
    }
}

impl BenchConfig {
    fn validate(&self) -> Result<()> {
        if self.threads == 0 || self.measured_runs == 0 || self.k == 0 {
            return Err(Error::InvalidArgument(
                "threads, measured runs and k must all be at least 1".into(),
            ));
        }
        Ok(())
    }
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Something that answers one query at a time and may be shared across threads.
pub trait BenchEngine: Sync {
    type Query: Sync;

    /// Runs one query, returning the number of hits.
    fn run(&self, query: &Self::Query, k: usize) -> Result<usize>;

    /// Called once before every pass, warm-up or measured.
    fn begin_pass(&self) {}
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThroughputReport {
    pub condition: String,
    pub threads: usize,
    pub queries: usize,
    pub k: usize,
    pub mean_qps: f64,
    /// Absent when fewer than two runs were measured.
    pub ci95_halfwidth: Option<f64>,
    pub per_run_qps: Vec<f64>,
}

impl ThroughputReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Aligned text table, one row per report.
pub fn format_table(reports: &[ThroughputReport]) -> String {
    let mut s = format!(
        "{:<16} {:>7} {:>8} {:>12} {:>10}\n",
        "condition", "threads", "queries", "qps", "ci95"
    );
    for r in reports {
        let ci = r.ci95_halfwidth.map_or("-".to_owned(), |c| format!("±{c:.1}"));
        let _ = writeln!(
            s,
            "{:<16} {:>7} {:>8} {:>12.1} {:>10}",
            r.condition, r.threads, r.queries, r.mean_qps, ci
        );
    }
    s
}

/// Half-width of the two-sided 95% Student-t interval for the mean.
pub fn ci95(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "confidence interval needs at least 2 samples, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let t = StudentsT::new(0.0, 1.0, nf - 1.0)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    Ok(t * var.sqrt() / nf.sqrt())
}

/// One full pass over `queries`, statically partitioned round-robin across threads.
fn timed_pass<E: BenchEngine>(engine: &E, queries: &[(String, E::Query)], config: &BenchConfig) -> Result<Duration> {
    let threads = config.threads.min(queries.len()).max(1);
    engine.begin_pass();
    let start = Instant::now();
    let outcome: Result<()> = std::thread::scope(|scope| {
        let workers: Vec<_> = (0..threads)
            .map(|t| {
                scope.spawn(move || -> Result<()> {
                    for (qid, q) in queries.iter().skip(t).step_by(threads) {
                        engine.run(q, config.k).map_err(|e| Error::QueryFailed {
                            query: qid.clone(),
                            message: e.to_string(),
                        })?;
                    }
                    Ok(())
                })
            })
            .collect();
        workers
            .into_iter()
            .map(|w| w.join().expect("bench worker panicked"))
            .collect()
    });
    outcome?;
    Ok(start.elapsed())
}

pub fn run_benchmark<E: BenchEngine>(
    engine: &E,
    queries: &[(String, E::Query)],
    config: &BenchConfig,
) -> Result<ThroughputReport> {
    config.validate()?;
    if queries.is_empty() {
        return Err(Error::InvalidArgument("no queries to benchmark".into()));
    }
    for pass in 0..config.warmup_runs {
        let d = timed_pass(engine, queries, config)?;
        log::debug!("warm-up {} took {d:?}", pass + 1);
    }
    let mut per_run_qps = Vec::with_capacity(config.measured_runs);
    for _ in 0..config.measured_runs {
        let d = timed_pass(engine, queries, config)?;
        per_run_qps.push(queries.len() as f64 / d.as_secs_f64().max(f64::MIN_POSITIVE));
    }
    let mean_qps = per_run_qps.iter().sum::<f64>() / per_run_qps.len() as f64;
    Ok(ThroughputReport {
        condition: config.encoder.clone(),
        threads: config.threads,
        queries: queries.len(),
        k: config.k,
        mean_qps,
        ci95_halfwidth: ci95(&per_run_qps).ok(),
        per_run_qps,
    })
}

/// Engine that sleeps a fixed time per query, for calibrating the harness.
#[derive(Debug, Clone)]
pub struct StubEngine {
    pub delay: Duration,
}

impl BenchEngine for StubEngine {
    type Query = ();

    fn run(&self, _: &(), _k: usize) -> Result<usize> {
        std::thread::sleep(self.delay);
        Ok(0)
    }
}

/// Engine that only counts passes and calls.
#[derive(Debug, Default)]
pub struct CountingEngine {
    passes: AtomicUsize,
    calls: AtomicUsize,
}

impl CountingEngine {
    pub fn passes(&self) -> usize {
        self.passes.load(Ordering::SeqCst)
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl BenchEngine for CountingEngine {
    type Query = ();

    fn run(&self, _: &(), _k: usize) -> Result<usize> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(0)
    }

    fn begin_pass(&self) {
        self.passes.fetch_add(1, Ordering::SeqCst);
    }
}
