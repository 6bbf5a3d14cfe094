//! Multi-trial benchmark runner and its CSV/JSON output.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{ProblemKind, ProblemSpec};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::metrics::{relative_error, ssim, SsimParams};
use crate::rng::seeded;
use crate::samplers::SketchSpec;
use crate::solvers::{MatrixEquation, Method, Solver, StopReason, StopRule};

/// Output sentinel for budgets exceeded.
pub const SENTINEL: &str = "-";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchConfig {
    pub problems: Vec<ProblemSpec>,
    pub methods: Vec<Method>,
    /// Overrides each method's default sketch when set.
    #[serde(default)]
    pub sketch: Option<SketchSpec>,
    pub tau1: usize,
    pub tau2: usize,
    /// One trial per seed; the seed drives the sketch draws.
    pub seeds: Vec<u64>,
    pub stop: StopRule,
    /// Worker cap; `None` uses rayon's default.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Keep the full `(iter, RE)` trace on every record.
    #[serde(default)]
    pub keep_trace: bool,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.problems.is_empty() || self.methods.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidArgument(
                "benchmark needs problems, methods and seeds".into(),
            ));
        }
        if self.tau1 == 0 || self.tau2 == 0 {
            return Err(Error::InvalidArgument(
                "block sizes must be positive".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidArgument("threads must be at least 1".into()));
        }
        self.stop.validate()?;
        for p in &self.problems {
            p.validate()?;
        }
        Ok(())
    }
}

/// One seeded solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub method: Method,
    pub sketch: String,
    pub problem: String,
    pub seed: u64,
    pub iters: usize,
    pub wall_seconds: f64,
    pub final_re: f64,
    pub converged: bool,
    pub stop_reason: StopReason,
    #[serde(default)]
    pub trace: Vec<(usize, f64)>,
    pub ssim: Option<f64>,
}

impl ExperimentRecord {
    /// The record with wall time zeroed, for comparisons across reruns.
    pub fn without_timing(&self) -> Self {
        ExperimentRecord {
            wall_seconds: 0.0,
            ..self.clone()
        }
    }
}

/// Runs `method` on `eq` from zero with sketch draws seeded by `seed`.
pub fn run_trial(
    eq: &MatrixEquation,
    problem: &str,
    method: Method,
    sketch: &SketchSpec,
    stop: &StopRule,
    seed: u64,
    image: bool,
) -> Result<ExperimentRecord> {
    let solver = Solver::new(eq, method, sketch)?;
    let mut rng = seeded(seed);
    let start = Instant::now();
    let report = solver.run(Mat::zeros(eq.m(), eq.n()), stop, &mut rng)?;
    let wall_seconds = start.elapsed().as_secs_f64();
    let xs = eq.x_star();
    let final_re = match xs {
        Some(xs) if xs.norm_squared() > 0.0 => relative_error(&report.x, xs)?,
        _ => report.final_error,
    };
    let ssim = match (image, xs) {
        (true, Some(xs)) => Some(ssim(&report.x, xs, SsimParams::default())?),
        _ => None,
    };
    Ok(ExperimentRecord {
        method,
        sketch: sketch.id().into(),
        problem: problem.into(),
        seed,
        iters: report.iters,
        wall_seconds,
        final_re,
        converged: report.converged,
        stop_reason: report.stop_reason,
        trace: report.error_trace,
        ssim,
    })
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs every problem × method × seed. Records come back ordered by problem,
/// then method, then seed, whatever the thread count.
pub fn run_benchmark(config: &BenchConfig) -> Result<Vec<ExperimentRecord>> {
    config.validate()?;
    let problems: Vec<(String, MatrixEquation, bool)> = config
        .problems
        .iter()
        .map(|p| {
            Ok((
                p.summary(),
                p.build()?,
                matches!(p.kind, ProblemKind::Phantom { .. }),
            ))
        })
        .collect::<Result<_>>()?;
    let mut jobs = Vec::new();
    for (pi, (_, eq, _)) in problems.iter().enumerate() {
        for &method in &config.methods {
            let sketch = config
                .sketch
                .clone()
                .unwrap_or_else(|| method.default_sketch(eq.p(), eq.q(), config.tau1, config.tau2));
            // Fail fast on a bad pairing before any trial runs.
            Solver::new(eq, method, &sketch)?;
            for &seed in &config.seeds {
                jobs.push((pi, method, sketch.clone(), seed));
            }
        }
    }
    let records = with_pool(config.threads, || {
        jobs.par_iter()
            .map(|(pi, method, sketch, seed)| {
                let (name, eq, image) = &problems[*pi];
                let mut rec = run_trial(eq, name, *method, sketch, &config.stop, *seed, *image)?;
                if !config.keep_trace {
                    rec.trace.clear();
                }
                Ok(rec)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(records)
}

/// Per method × problem aggregate. Means are `None` (printed as `-`) when
/// any trial ran out of iterations or time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchSummary {
    pub method: Method,
    pub problem: String,
    pub trials: usize,
    pub converged_fraction: f64,
    pub mean_iters: Option<f64>,
    pub iters_stderr: Option<f64>,
    pub mean_wall_seconds: Option<f64>,
    pub mean_final_re: f64,
}

impl BenchSummary {
    pub fn iters_cell(&self) -> String {
        self.mean_iters
            .map_or(SENTINEL.into(), |v| format!("{v:.1}"))
    }

    pub fn wall_cell(&self) -> String {
        self.mean_wall_seconds
            .map_or(SENTINEL.into(), |v| format!("{v:.4}"))
    }
}

pub fn summarize(records: &[ExperimentRecord]) -> Vec<BenchSummary> {
    let mut keys: Vec<(Method, String)> = Vec::new();
    for r in records {
        let key = (r.method, r.problem.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(method, problem)| {
            let rs: Vec<&ExperimentRecord> = records
                .iter()
                .filter(|r| r.method == method && r.problem == problem)
                .collect();
            let n = rs.len() as f64;
            let all = rs.iter().all(|r| r.converged);
            let mean_iters = rs.iter().map(|r| r.iters as f64).sum::<f64>() / n;
            let var = if rs.len() > 1 {
                rs.iter()
                    .map(|r| (r.iters as f64 - mean_iters).powi(2))
                    .sum::<f64>()
                    / (n - 1.0)
            } else {
                0.0
            };
            BenchSummary {
                method,
                problem,
                trials: rs.len(),
                converged_fraction: rs.iter().filter(|r| r.converged).count() as f64 / n,
                mean_iters: all.then_some(mean_iters),
                iters_stderr: all.then_some((var / n).sqrt()),
                mean_wall_seconds: all.then(|| rs.iter().map(|r| r.wall_seconds).sum::<f64>() / n),
                mean_final_re: rs.iter().map(|r| r.final_re).sum::<f64>() / n,
            }
        })
        .collect()
}

#[derive(Serialize)]
struct CsvRow<'a> {
    method: &'a str,
    problem: &'a str,
    seed: u64,
    iters: usize,
    wall_seconds: f64,
    final_re: f64,
    converged: bool,
    ssim: Option<f64>,
}

/// CSV with columns `method, problem, seed, iters, wall_seconds, final_re, converged, ssim`.
pub fn write_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(CsvRow {
            method: r.method.as_str(),
            problem: &r.problem,
            seed: r.seed,
            iters: r.iters,
            wall_seconds: r.wall_seconds,
            final_re: r.final_re,
            converged: r.converged,
            ssim: r.ssim,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Summary CSV with `-` in place of means for budget-exceeded cells.
pub fn write_summary_csv<W: Write>(summaries: &[BenchSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method",
        "problem",
        "trials",
        "converged_fraction",
        "mean_iters",
        "mean_wall_seconds",
        "mean_final_re",
    ])?;
    for s in summaries {
        w.write_record([
            s.method.as_str().to_string(),
            s.problem.clone(),
            s.trials.to_string(),
            s.converged_fraction.to_string(),
            s.iters_cell(),
            s.wall_cell(),
            s.mean_final_re.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, records)?;
    Ok(())
}

/// Two-column `iter,re` trace for plotting.
pub fn write_trace_csv<W: Write>(trace: &[(usize, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iter", "re"])?;
    for (k, e) in trace {
        w.write_record([k.to_string(), e.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Image reconstruction: standard normal `A`, `B` and the test image as `X*`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReconConfig {
    pub size: usize,
    pub p: usize,
    pub q: usize,
    pub methods: Vec<Method>,
    pub tau1: usize,
    pub tau2: usize,
    /// Seeds for the problem instance; each run also uses it for sketches.
    pub seeds: Vec<u64>,
    pub stop: StopRule,
    #[serde(default)]
    pub threads: Option<usize>,
}

/// Runs the reconstruction for each seed and method. Each seed generates a
/// fresh `A`, `B` pair; every method on that seed sees the same equation.
pub fn run_reconstruction(config: &ReconConfig) -> Result<Vec<ExperimentRecord>> {
    if config.methods.is_empty() || config.seeds.is_empty() {
        return Err(Error::InvalidArgument(
            "reconstruction needs methods and seeds".into(),
        ));
    }
    let bench = BenchConfig {
        problems: config
            .seeds
            .iter()
            .map(|&s| {
                ProblemSpec::new(
                    ProblemKind::Phantom {
                        size: config.size,
                        p: config.p,
                        q: config.q,
                    },
                    s,
                )
            })
            .collect(),
        methods: config.methods.clone(),
        sketch: None,
        tau1: config.tau1,
        tau2: config.tau2,
        seeds: vec![0],
        stop: config.stop.clone(),
        threads: config.threads,
        keep_trace: false,
    };
    bench.validate()?;
    let problems: Vec<MatrixEquation> = bench
        .problems
        .iter()
        .map(ProblemSpec::build)
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, Method)> = (0..problems.len())
        .flat_map(|i| config.methods.iter().map(move |&m| (i, m)))
        .collect();
    let name = bench.problems[0].summary();
    with_pool(config.threads, || {
        jobs.par_iter()
            .map(|&(i, method)| {
                let eq = &problems[i];
                let sketch = method.default_sketch(eq.p(), eq.q(), config.tau1, config.tau2);
                let mut rec = run_trial(
                    eq,
                    &name,
                    method,
                    &sketch,
                    &config.stop,
                    config.seeds[i],
                    true,
                )?;
                rec.trace.clear();
                Ok(rec)
            })
            .collect::<Result<Vec<_>>>()
    })?
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(threads: Option<usize>) -> BenchConfig {
        BenchConfig {
            problems: vec![ProblemSpec::new(
                ProblemKind::TypeI {
                    p: 8,
                    m: 4,
                    r1: 4,
                    n: 4,
                    q: 8,
                    r2: 4,
                },
                1,
            )],
            methods: vec![Method::Grk, Method::Grbk, Method::RkA],
            sketch: None,
            tau1: 2,
            tau2: 2,
            seeds: vec![3, 1, 2],
            stop: StopRule::default(),
            threads,
            keep_trace: true,
        }
    }

    #[test]
    fn identity_grbk_is_one_step() {
        let cfg = BenchConfig {
            methods: vec![Method::Grbk],
            sketch: Some(SketchSpec::IdentityPair),
            seeds: vec![0],
            ..small_config(None)
        };
        let recs = run_benchmark(&cfg).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].iters, 1);
        assert!(recs[0].final_re < 1e-12);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let a = run_benchmark(&small_config(Some(1))).unwrap();
        let b = run_benchmark(&small_config(Some(4))).unwrap();
        let strip = |v: &[ExperimentRecord]| {
            v.iter()
                .map(ExperimentRecord::without_timing)
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
        let order: Vec<(Method, u64)> = a.iter().map(|r| (r.method, r.seed)).collect();
        assert_eq!(
            order[..3],
            [(Method::Grk, 3), (Method::Grk, 1), (Method::Grk, 2)]
        );
        assert!(a
            .iter()
            .all(|r| r.trace.windows(2).all(|w| w[0].0 < w[1].0)));
    }

    #[test]
    fn sentinel_on_budget() {
        let mut cfg = small_config(None);
        cfg.methods = vec![Method::Grk];
        cfg.stop.max_iters = 3;
        let recs = run_benchmark(&cfg).unwrap();
        let s = summarize(&recs);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].iters_cell(), SENTINEL);
        assert_eq!(s[0].wall_cell(), SENTINEL);
        let mut buf = Vec::new();
        write_summary_csv(&s, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains(",-,-,"));
    }

    #[test]
    fn csv_columns() {
        let recs = run_benchmark(&BenchConfig {
            seeds: vec![0],
            ..small_config(None)
        })
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "method,problem,seed,iters,wall_seconds,final_re,converged,ssim"
        );
        assert_eq!(lines.count(), 3);
        let mut buf = Vec::new();
        write_json(&recs, &mut buf).unwrap();
        let back: Vec<ExperimentRecord> = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(run_benchmark(&BenchConfig {
            seeds: vec![],
            ..small_config(None)
        })
        .is_err());
        assert!(run_benchmark(&BenchConfig {
            threads: Some(0),
            ..small_config(None)
        })
        .is_err());
        let bad = BenchConfig {
            methods: vec![Method::RkA],
            sketch: Some(SketchSpec::CoordinatePair),
            ..small_config(None)
        };
        assert!(matches!(
            run_benchmark(&bad),
            Err(Error::Incompatible { .. })
        ));
    }

    #[test]
    fn reconstruction_reports_ssim() {
        let cfg = ReconConfig {
            size: 8,
            p: 16,
            q: 16,
            methods: vec![Method::GaussRkA, Method::Rcd],
            tau1: 2,
            tau2: 2,
            seeds: vec![1, 2],
            stop: StopRule {
                max_iters: 3000,
                ..StopRule::default()
            },
            threads: None,
        };
        let recs = run_reconstruction(&cfg).unwrap();
        assert_eq!(recs.len(), 4);
        assert!(recs.iter().all(|r| r.ssim.unwrap() > 0.99), "{recs:?}");
    }
}
