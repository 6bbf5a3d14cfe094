//! `mxsketch`: generate problems, run solvers, certify rates, benchmark and
//! verify from the command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 flag errors, 3 a failed
//! verification criterion.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::builder::PossibleValuesParser;
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mxsketch::bench::{
    run_benchmark, run_reconstruction, summarize, write_csv, write_json, write_summary_csv,
    write_trace_csv, BenchConfig, ReconConfig,
};
use mxsketch::datagen::{ProblemKind, ProblemSpec};
use mxsketch::linalg::SpdMat;
use mxsketch::mtx::{load_matrix_market, write_matrix_market, ReadOptions};
use mxsketch::rng::seeded;
use mxsketch::samplers::SketchSpec;
use mxsketch::solvers::{solve, MatrixEquation, Method, StopCriterion, StopRule};
use mxsketch::theory::{implied_weight, rate_report, MIN_MC_TRIALS};
use mxsketch::verify::{run_criterion, VerifyOptions, DEFAULT_SEED};

fn method_ids() -> Vec<&'static str> {
    Method::ALL.iter().map(|m| m.as_str()).collect()
}

fn ids_help() -> String {
    format!(
        "Method ids: {}\nSketch ids: {} (discrete lists via --sketch-config)",
        method_ids().join(", "),
        SketchSpec::IDS.join(", ")
    )
}

fn method_parser() -> PossibleValuesParser {
    PossibleValuesParser::new(method_ids())
}

fn sketch_parser() -> PossibleValuesParser {
    PossibleValuesParser::new(SketchSpec::IDS)
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` must be positive and finite"))
    }
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("`{s}` must be a positive integer")),
    }
}

#[derive(Parser)]
#[command(
    name = "mxsketch",
    version,
    about = "Sketch-and-project solvers for the matrix equation AXB = C"
)]
#[command(after_help = ids_help())]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a problem and write A, B, C, X* as Matrix Market files plus problem.json.
    #[command(after_help = ids_help())]
    Gen(GenArgs),
    /// Run one method on one problem and write its report.
    #[command(after_help = ids_help())]
    Solve(SolveArgs),
    /// Compute the convergence rate and its bounds for a sketch distribution.
    #[command(after_help = ids_help())]
    Rate(RateArgs),
    /// Run several methods over seeded trials and write one record per run.
    #[command(after_help = ids_help())]
    Bench(BenchArgs),
    /// Reconstruct the test image from AXB = C and report SSIM per run.
    #[command(after_help = ids_help())]
    Recon(ReconArgs),
    /// Run the acceptance suite at fixed seeds; exits 3 on any failure.
    #[command(after_help = ids_help())]
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Criterion {
    /// Squared relative error against the known solution.
    Re,
    /// Squared relative residual.
    Residual,
}

/// Exactly one problem source.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct ProblemSource {
    /// Type I low-rank problem.
    #[arg(long, num_args = 6, value_names = ["P", "M", "R1", "N", "Q", "R2"])]
    type1: Option<Vec<usize>>,
    /// Type II standard normal problem.
    #[arg(long, num_args = 4, value_names = ["P", "M", "N", "Q"])]
    type2: Option<Vec<usize>>,
    /// Test image of side SIZE with standard normal A (P×SIZE) and B (SIZE×Q).
    #[arg(long, num_args = 3, value_names = ["SIZE", "P", "Q"])]
    phantom: Option<Vec<usize>>,
    /// Matrix Market file for A; requires --b. X* is all ones.
    #[arg(long, value_name = "FILE", requires = "b")]
    a: Option<PathBuf>,
    /// Problem JSON as written by `gen`.
    #[arg(long, value_name = "FILE")]
    problem: Option<PathBuf>,
}

#[derive(Args)]
struct ProblemArgs {
    #[command(flatten)]
    source: ProblemSource,
    /// Matrix Market file for B.
    #[arg(long, value_name = "FILE", requires = "a")]
    b: Option<PathBuf>,
    /// Use the transpose of the --b file.
    #[arg(long, requires = "a")]
    transpose_b: bool,
    /// Seed for problem generation; defaults to --seed.
    #[arg(long)]
    problem_seed: Option<u64>,
}

impl ProblemArgs {
    fn spec(&self, seed: u64) -> anyhow::Result<ProblemSpec> {
        let seed = self.problem_seed.unwrap_or(seed);
        let s = &self.source;
        let kind = if let Some(v) = &s.type1 {
            ProblemKind::TypeI {
                p: v[0],
                m: v[1],
                r1: v[2],
                n: v[3],
                q: v[4],
                r2: v[5],
            }
        } else if let Some(v) = &s.type2 {
            ProblemKind::TypeII {
                p: v[0],
                m: v[1],
                n: v[2],
                q: v[3],
            }
        } else if let Some(v) = &s.phantom {
            ProblemKind::Phantom {
                size: v[0],
                p: v[1],
                q: v[2],
            }
        } else if let Some(a) = &s.a {
            ProblemKind::External {
                path_a: a.clone(),
                path_b: self.b.clone().expect("clap enforces --b"),
                transpose_b: self.transpose_b,
            }
        } else {
            let path = s.problem.as_ref().expect("clap enforces one source");
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut spec: ProblemSpec = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            // Relative matrix paths are taken relative to the JSON file.
            if let ProblemKind::External { path_a, path_b, .. } = &mut spec.kind {
                let base = path.parent().unwrap_or(Path::new("."));
                for p in [path_a, path_b] {
                    if p.is_relative() {
                        *p = base.join(&*p);
                    }
                }
            }
            if self.problem_seed.is_some() {
                spec.seed = seed;
            }
            return Ok(spec);
        };
        Ok(ProblemSpec::new(kind, seed))
    }
}

#[derive(Args)]
struct SeedArg {
    /// Master seed.
    #[arg(long, env = "MXSKETCH_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl OutputArgs {
    fn writer(&self) -> anyhow::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

#[derive(Args)]
struct SketchArgs {
    /// Sketch distribution; defaults to the method's own.
    #[arg(long, value_parser = sketch_parser())]
    sketch: Option<String>,
    /// JSON sketch spec, e.g. a complete discrete list.
    #[arg(long, value_name = "FILE", conflicts_with = "sketch")]
    sketch_config: Option<PathBuf>,
    /// Row and column block size for block sketches.
    #[arg(long, value_parser = positive_usize)]
    tau: Option<usize>,
    /// Row block size (overrides --tau).
    #[arg(long, value_parser = positive_usize)]
    tau1: Option<usize>,
    /// Column block size (overrides --tau).
    #[arg(long, value_parser = positive_usize)]
    tau2: Option<usize>,
}

const DEFAULT_TAU: usize = 10;

impl SketchArgs {
    fn taus(&self) -> (usize, usize) {
        let t = self.tau.unwrap_or(DEFAULT_TAU);
        (self.tau1.unwrap_or(t), self.tau2.unwrap_or(t))
    }

    /// The sketch for a `p × q` problem. Default block sizes are clamped to
    /// the problem, explicit ones are not.
    fn resolve(&self, method: Option<Method>, p: usize, q: usize) -> anyhow::Result<SketchSpec> {
        let (t1, t2) = self.taus();
        let t1 = if self.tau1.is_none() && self.tau.is_none() {
            t1.min(p)
        } else {
            t1
        };
        let t2 = if self.tau2.is_none() && self.tau.is_none() {
            t2.min(q)
        } else {
            t2
        };
        if let Some(path) = &self.sketch_config {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            return serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()));
        }
        Ok(match (&self.sketch, method) {
            (Some(id), _) => SketchSpec::from_id(id, p, q, t1, t2)?,
            (None, Some(m)) => m.default_sketch(p, q, t1, t2),
            (None, None) => bail!("--sketch or --sketch-config is required"),
        })
    }
}

#[derive(Args)]
struct StopArgs {
    /// Iteration cap.
    #[arg(long, default_value_t = 100_000, value_parser = positive_usize)]
    max_iters: usize,
    /// Stop once the error statistic falls below this.
    #[arg(long, default_value_t = 1e-6, value_parser = positive_f64)]
    tol: f64,
    /// Error statistic for the stopping test.
    #[arg(long, value_enum, default_value_t = Criterion::Re)]
    criterion: Criterion,
    /// Evaluate the error every STRIDE iterations.
    #[arg(long, default_value_t = 1, value_parser = positive_usize)]
    stride: usize,
    /// Wall-clock budget per run in seconds.
    #[arg(long, default_value_t = 120.0, value_parser = positive_f64)]
    time_limit: f64,
}

impl StopArgs {
    fn rule(&self) -> StopRule {
        StopRule {
            max_iters: self.max_iters,
            tol: self.tol,
            criterion: match self.criterion {
                Criterion::Re => StopCriterion::RelErrorSq,
                Criterion::Residual => StopCriterion::RelResidual,
            },
            stride: self.stride,
            time_limit: Some(self.time_limit),
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    seed: SeedArg,
    /// Directory for the generated files (created if missing).
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Iteration variant.
    #[arg(long, value_parser = method_parser())]
    method: String,
    #[command(flatten)]
    sketch: SketchArgs,
    #[command(flatten)]
    stop: StopArgs,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    output: OutputArgs,
    /// Also write the `iter,re` trace as CSV.
    #[arg(long, value_name = "FILE")]
    trace_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Weight {
    /// The weight the sketch's method implies (A for diag, AᵀA for col-of-a, else I).
    Implied,
    Identity,
}

#[derive(Args)]
struct RateArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    sketch: SketchArgs,
    /// Monte Carlo trials for Gaussian sketches.
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Weight matrix G of the geometry.
    #[arg(long, value_enum, default_value_t = Weight::Implied)]
    weight: Weight,
    /// Include the expected projector matrix in JSON output.
    #[arg(long)]
    include_e: bool,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Methods to compare, comma separated.
    #[arg(long, alias = "method", value_delimiter = ',', value_parser = method_parser(),
          default_value = "grbk,rk-a,rcd,grk")]
    methods: Vec<String>,
    #[command(flatten)]
    sketch: SketchArgs,
    #[command(flatten)]
    stop: StopArgs,
    /// Trials per method; trial t uses sketch seed `seed + t`.
    #[arg(long, default_value_t = 10, value_parser = positive_usize)]
    trials: usize,
    /// Worker thread cap.
    #[arg(long, value_parser = positive_usize)]
    threads: Option<usize>,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    output: OutputArgs,
    /// Also write per-method means (with `-` for budget-exceeded cells).
    #[arg(long, value_name = "FILE")]
    summary_out: Option<PathBuf>,
}

#[derive(Args)]
struct ReconArgs {
    /// Image side length.
    #[arg(long, default_value_t = 30)]
    size: usize,
    /// Rows of A.
    #[arg(long, default_value_t = 40)]
    p: usize,
    /// Columns of B.
    #[arg(long, default_value_t = 60)]
    q: usize,
    /// Methods to compare, comma separated.
    #[arg(long, alias = "method", value_delimiter = ',', value_parser = method_parser(),
          default_value = "gauss-rk-a,rcd")]
    methods: Vec<String>,
    /// Iteration budget.
    #[arg(long, default_value_t = 5000, value_parser = positive_usize)]
    max_iters: usize,
    /// Early-stop tolerance on the squared relative error; none by default.
    #[arg(long, value_parser = positive_f64)]
    tol: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TAU, value_parser = positive_usize)]
    tau1: usize,
    #[arg(long, default_value_t = DEFAULT_TAU, value_parser = positive_usize)]
    tau2: usize,
    /// Independent instances; instance t uses seed `seed + t`.
    #[arg(long, default_value_t = 10, value_parser = positive_usize)]
    trials: usize,
    #[arg(long, value_parser = positive_usize)]
    threads: Option<usize>,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite seed. Not read from MXSKETCH_SEED: the suite runs at fixed seeds.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Skip the desk-scale benchmark and the reconstruction demo.
    #[arg(long)]
    skip_slow: bool,
    /// Run only these criteria, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u8).range(1..=12))]
    only: Vec<u8>,
    #[arg(long, value_parser = positive_usize)]
    threads: Option<usize>,
    /// Directory holding ash219, ash958, divorce and Worldcities `.mtx`
    /// files; when set their size, rank and density are checked too.
    #[arg(long, env = "MXSKETCH_MTX_DIR", value_name = "DIR")]
    mtx_dir: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

/// Reports a flag problem found after parsing and exits with status 2.
fn flag_error(msg: impl std::fmt::Display) -> ! {
    Cli::command().error(ErrorKind::ValueValidation, msg).exit()
}

fn parse_methods(ids: &[String]) -> Vec<Method> {
    let mut out: Vec<Method> = Vec::new();
    for id in ids {
        let m: Method = id.parse().unwrap_or_else(|e| flag_error(e));
        if !out.contains(&m) {
            out.push(m);
        }
    }
    out
}

/// Catches method/sketch mismatches before any work is done.
fn check_pairing(methods: &[Method], sketch: &SketchArgs) {
    let Some(id) = &sketch.sketch else { return };
    let (t1, t2) = sketch.taus();
    let spec = SketchSpec::from_id(id, 1, 1, t1, t2).unwrap_or_else(|e| flag_error(e));
    for m in methods {
        if let Err(e) = m.check_compatible(&spec) {
            flag_error(e);
        }
    }
}

fn build(problem: &ProblemArgs, seed: u64) -> anyhow::Result<(ProblemSpec, MatrixEquation)> {
    let spec = problem.spec(seed)?;
    let eq = spec
        .build()
        .with_context(|| format!("building problem {}", spec.summary()))?;
    Ok((spec, eq))
}

fn cmd_gen(args: &GenArgs) -> anyhow::Result<()> {
    let (spec, eq) = build(&args.problem, args.seed.seed)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_matrix_market(&args.out.join("A.mtx"), eq.a())?;
    write_matrix_market(&args.out.join("B.mtx"), eq.b())?;
    write_matrix_market(&args.out.join("C.mtx"), eq.c())?;
    if let Some(xs) = eq.x_star() {
        write_matrix_market(&args.out.join("Xstar.mtx"), xs)?;
    }
    // External problems point at the copies just written, so the directory
    // is self-contained (B.mtx already holds any transpose).
    let spec = match spec.kind {
        ProblemKind::External { .. } => ProblemSpec::new(
            ProblemKind::External {
                path_a: "A.mtx".into(),
                path_b: "B.mtx".into(),
                transpose_b: false,
            },
            spec.seed,
        ),
        _ => spec,
    };
    let json = serde_json::to_string_pretty(&spec)?;
    fs::write(args.out.join("problem.json"), json + "\n")?;
    eprintln!(
        "{}: A {}x{}, B {}x{} written to {}",
        spec.summary(),
        eq.p(),
        eq.m(),
        eq.n(),
        eq.q(),
        args.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct SolveRow<'a> {
    method: &'a str,
    sketch: &'a str,
    problem: &'a str,
    seed: u64,
    iters: usize,
    converged: bool,
    final_error: f64,
    wall_seconds: f64,
}

fn cmd_solve(args: &SolveArgs) -> anyhow::Result<()> {
    let method: Method = args.method.parse().unwrap_or_else(|e| flag_error(e));
    check_pairing(&[method], &args.sketch);
    let seed = args.seed.seed;
    let (spec, eq) = build(&args.problem, seed)?;
    let sketch = args.sketch.resolve(Some(method), eq.p(), eq.q())?;
    let report = solve(&eq, method, &sketch, &args.stop.rule(), &mut seeded(seed))?;
    let mut out = args.output.writer()?;
    match args.output.format.unwrap_or(Format::Json) {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.serialize(SolveRow {
                method: method.as_str(),
                sketch: &report.sketch,
                problem: &spec.summary(),
                seed,
                iters: report.iters,
                converged: report.converged,
                final_error: report.final_error,
                wall_seconds: report.wall_time,
            })?;
            w.flush()?;
        }
    }
    out.flush()?;
    if let Some(path) = &args.trace_out {
        write_trace_csv(&report.error_trace, File::create(path)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RateRow<'a> {
    sketch: &'a str,
    rho_exact: f64,
    rho_stderr: f64,
    rho_sigma: f64,
    lower_bound: f64,
    closed_form_bound: Option<f64>,
    d_mean: f64,
    exact: bool,
}

fn cmd_rate(args: &RateArgs) -> anyhow::Result<()> {
    if args.sketch.sketch.is_none() && args.sketch.sketch_config.is_none() {
        flag_error("rate needs --sketch or --sketch-config");
    }
    if args.trials < MIN_MC_TRIALS {
        flag_error(format!("--trials must be at least {MIN_MC_TRIALS}"));
    }
    let seed = args.seed.seed;
    let (_, eq) = build(&args.problem, seed)?;
    let spec = args.sketch.resolve(None, eq.p(), eq.q())?;
    let g = match args.weight {
        Weight::Implied => implied_weight(&spec, eq.a())?,
        Weight::Identity => SpdMat::identity(eq.m()),
    };
    let report = rate_report(
        &spec,
        eq.a(),
        eq.b(),
        &g,
        args.trials,
        args.include_e,
        &mut seeded(seed),
    )?;
    let mut out = args.output.writer()?;
    match args.output.format.unwrap_or(Format::Json) {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.serialize(RateRow {
                sketch: &report.sketch,
                rho_exact: report.rho_exact,
                rho_stderr: report.rho_stderr,
                rho_sigma: report.rho_sigma,
                lower_bound: report.lower_bound,
                closed_form_bound: report.closed_form_bound,
                d_mean: report.d_stats.mean,
                exact: report.exact,
            })?;
            w.flush()?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> anyhow::Result<()> {
    let methods = parse_methods(&args.methods);
    check_pairing(&methods, &args.sketch);
    let seed = args.seed.seed;
    let (spec, eq) = build(&args.problem, seed)?;
    let sketch = if args.sketch.sketch.is_some() || args.sketch.sketch_config.is_some() {
        Some(args.sketch.resolve(None, eq.p(), eq.q())?)
    } else {
        None
    };
    let (t1, t2) = args.sketch.taus();
    let config = BenchConfig {
        problems: vec![spec],
        methods,
        sketch,
        tau1: t1,
        tau2: t2,
        seeds: (0..args.trials as u64)
            .map(|t| seed.wrapping_add(t))
            .collect(),
        stop: args.stop.rule(),
        threads: args.threads,
        keep_trace: false,
    };
    let records = run_benchmark(&config)?;
    let mut out = args.output.writer()?;
    match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => write_csv(&records, &mut out)?,
        Format::Json => {
            write_json(&records, &mut out)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    let summaries = summarize(&records);
    for s in &summaries {
        eprintln!(
            "{:<11} {:<24} IT {:>10}  CPU {:>10}  converged {:.0}%",
            s.method.as_str(),
            s.problem,
            s.iters_cell(),
            s.wall_cell(),
            100.0 * s.converged_fraction
        );
    }
    if let Some(path) = &args.summary_out {
        write_summary_csv(&summaries, File::create(path)?)?;
    }
    Ok(())
}

fn cmd_recon(args: &ReconArgs) -> anyhow::Result<()> {
    let methods = parse_methods(&args.methods);
    if args.size < 4 {
        flag_error("--size must be at least 4");
    }
    let seed = args.seed.seed;
    let config = ReconConfig {
        size: args.size,
        p: args.p,
        q: args.q,
        methods: methods.clone(),
        tau1: args.tau1,
        tau2: args.tau2,
        seeds: (0..args.trials as u64)
            .map(|t| seed.wrapping_add(t))
            .collect(),
        stop: StopRule {
            max_iters: args.max_iters,
            tol: args.tol.unwrap_or(f64::MIN_POSITIVE),
            criterion: StopCriterion::RelErrorSq,
            stride: 1,
            time_limit: None,
        },
        threads: args.threads,
    };
    let records = run_reconstruction(&config)?;
    let mut out = args.output.writer()?;
    match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => write_csv(&records, &mut out)?,
        Format::Json => {
            write_json(&records, &mut out)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    for m in methods {
        let ssims: Vec<f64> = records
            .iter()
            .filter(|r| r.method == m)
            .filter_map(|r| r.ssim)
            .collect();
        let res: Vec<f64> = records
            .iter()
            .filter(|r| r.method == m)
            .map(|r| r.final_re)
            .collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
        eprintln!(
            "{:<11} mean SSIM {:.6}  min SSIM {:.6}  mean RE {:.3e}",
            m.as_str(),
            mean(&ssims),
            ssims.iter().copied().fold(f64::INFINITY, f64::min),
            mean(&res)
        );
    }
    Ok(())
}

/// Reference sizes, ranks and densities (percent, with printed decimals)
/// of the real test matrices.
const REAL_MATRICES: [(&str, usize, usize, usize, f64, i32); 4] = [
    ("ash219", 219, 85, 85, 2.3529, 4),
    ("ash958", 958, 292, 292, 0.68493, 5),
    ("divorce", 50, 9, 9, 50.0, 0),
    ("Worldcities", 315, 100, 100, 53.625, 3),
];

#[derive(Serialize)]
struct MatrixCheck {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn find_mtx(dir: &Path, name: &str) -> Option<PathBuf> {
    let want = format!("{}.mtx", name.to_ascii_lowercase());
    fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .find(|p| {
            p.file_name()
                .is_some_and(|f| f.to_string_lossy().to_ascii_lowercase() == want)
        })
}

fn check_real_matrices(dir: &Path) -> Vec<MatrixCheck> {
    REAL_MATRICES
        .iter()
        .map(|&(name, rows, cols, rank, density, decimals)| {
            let Some(path) = find_mtx(dir, name) else {
                return MatrixCheck {
                    name,
                    passed: false,
                    detail: format!("{name}.mtx not found in {}", dir.display()),
                };
            };
            match load_matrix_market(&path, ReadOptions { allow_pattern: true }) {
                Err(e) => MatrixCheck {
                    name,
                    passed: false,
                    detail: e.to_string(),
                },
                Ok((_, s)) => {
                    let pct = 100.0 * s.density;
                    let half_ulp = 0.5 * 10f64.powi(-decimals) + 1e-12;
                    let passed = (s.rows, s.cols) == (rows, cols)
                        && s.rank == Some(rank)
                        && (pct - density).abs() <= half_ulp;
                    MatrixCheck {
                        name,
                        passed,
                        detail: format!(
                            "{}x{} rank {} density {:.5}% (expected {rows}x{cols} rank {rank} density {density}%)",
                            s.rows,
                            s.cols,
                            s.rank.map_or("-".into(), |r| r.to_string()),
                            pct
                        ),
                    }
                }
            }
        })
        .collect()
}

fn cmd_verify(args: &VerifyArgs) -> anyhow::Result<bool> {
    let opts = VerifyOptions {
        seed: args.seed,
        skip_slow: args.skip_slow,
        threads: args.threads,
    };
    let ids: Vec<u8> = if args.only.is_empty() {
        (1..=12).collect()
    } else {
        args.only.clone()
    };
    let ids: Vec<u8> = ids
        .into_iter()
        .filter(|id| !(opts.skip_slow && matches!(id, 10 | 11)))
        .collect();
    let json = args.output.format == Some(Format::Json);
    let mut out = args.output.writer()?;
    let mut outcomes = Vec::new();
    for id in ids {
        let o = run_criterion(id, &opts);
        if !json {
            writeln!(out, "{}", o.line())?;
            out.flush()?;
        }
        outcomes.push(o);
    }
    let matrices = args
        .mtx_dir
        .as_deref()
        .map(check_real_matrices)
        .unwrap_or_default();
    if !json {
        for m in &matrices {
            writeln!(
                out,
                "[{}] {}: {}",
                if m.passed { "PASS" } else { "FAIL" },
                m.name,
                m.detail
            )?;
        }
    } else {
        #[derive(Serialize)]
        struct Report<'a> {
            criteria: &'a [mxsketch::verify::CriterionOutcome],
            matrices: &'a [MatrixCheck],
        }
        serde_json::to_writer_pretty(
            &mut out,
            &Report {
                criteria: &outcomes,
                matrices: &matrices,
            },
        )?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(outcomes.iter().all(|o| o.passed) && matrices.iter().all(|m| m.passed))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let result = match &cli.cmd {
        Command::Gen(a) => cmd_gen(a).map(|_| true),
        Command::Solve(a) => cmd_solve(a).map(|_| true),
        Command::Rate(a) => cmd_rate(a).map(|_| true),
        Command::Bench(a) => cmd_bench(a).map(|_| true),
        Command::Recon(a) => cmd_recon(a).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
