//! Command-line interface: argument definitions and subcommand handlers.
//!
//! Handlers return JSON values; the binary prints them and maps errors to exit
//! codes (1 for usage, 2 for data errors).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Rational64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::cover::{exponents, solve_cover_full_support, FractionalCover};
use crate::estimate::{
    check_degree_regime, choose_p, estimate_from, median_estimate, run_fixed, run_plan, Estimate, RatePlan,
};
use crate::hypergraph::{parse_pattern, parse_stream, write_stream, DataGraph, EdgeStreamUpdate, PatternGraph};
use crate::instances::{gen_planted, gen_random_bounded, gen_reduction, Promise};
use crate::oracle::{exact_count, exact_count_labeled};
use crate::pattern::analyze;
use crate::sketch::{derive_seed, SketchConfig, SketchState};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } | CliError::Data(_) => 2,
        }
    }
}

fn data<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Data(format!("{context}: {e}"))
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Parser)]
#[command(name = "hypercount", version, about = "Streaming subgraph and hypergraph copy counting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the number of pattern copies in a stream.
    Count(CountArgs),
    /// Count pattern copies exactly.
    Oracle(OracleArgs),
    /// Generate a stream with known ground truth.
    Gen(GenArgs),
    /// Print cover numbers and space bounds for a pattern.
    Bounds(BoundsArgs),
    /// Measure space and accuracy across sampling levels.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[arg(long)]
    pub pattern: PathBuf,
    #[arg(long)]
    pub stream: PathBuf,
    /// Target relative error in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of geometric levels (default: one per doubling of the edge count).
    #[arg(long)]
    pub levels: Option<u32>,
    /// Independent repetitions combined by the median (odd).
    #[arg(long, default_value_t = 1)]
    pub reps: u32,
    /// Oversample constant for rate selection with a known count.
    #[arg(long, default_value_t = 100.0)]
    pub constant: f64,
    /// Known (or guessed) copy count; selects a single sampling rate.
    #[arg(long)]
    pub known_t: Option<f64>,
    /// Human-readable output instead of JSON.
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub pattern: PathBuf,
    #[arg(long)]
    pub stream: PathBuf,
    /// Vertex labels, one `vertex label` pair per line; labels are pattern
    /// vertex indices or names declared in the pattern.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Planted,
    Reduction,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PromiseArg {
    Yes,
    No,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    /// Pattern file (planted and reduction).
    #[arg(long)]
    pub pattern: Option<PathBuf>,
    /// Stream output path; ground truth goes to `<out>.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Planted copies.
    #[arg(long, default_value_t = 100)]
    pub copies: u64,
    /// Planted padding edges.
    #[arg(long, default_value_t = 0)]
    pub pad: u64,
    /// Reduction string length, or vertex count for random graphs.
    #[arg(long, default_value_t = 200)]
    pub n: u64,
    /// Reduction target count.
    #[arg(long, default_value_t = 20)]
    pub t: u64,
    /// Reduction gap as a fraction, e.g. `1/2`.
    #[arg(long, default_value = "1/2")]
    pub epsilon: String,
    #[arg(long, value_enum, default_value_t = PromiseArg::Yes)]
    pub promise: PromiseArg,
    /// Random graph edge count.
    #[arg(long, default_value_t = 100)]
    pub m: u64,
    /// Random graph degree bound.
    #[arg(long, default_value_t = 3)]
    pub d: u64,
    /// Random graph edge arity.
    #[arg(long, default_value_t = 2)]
    pub arity: usize,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub pattern: PathBuf,
    #[arg(long, default_value_t = 1_000_000.0)]
    pub m: f64,
    #[arg(long, default_value_t = 10_000.0)]
    pub t: f64,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub pattern: PathBuf,
    /// Benchmark this stream instead of a planted instance.
    #[arg(long)]
    pub stream: Option<PathBuf>,
    /// Planted copies.
    #[arg(long, default_value_t = 1000)]
    pub copies: u64,
    /// Planted padding edges.
    #[arg(long, default_value_t = 0)]
    pub pad: u64,
    /// Levels `p = 2^0 .. 2^-(levels-1)`.
    #[arg(long, default_value_t = 11)]
    pub levels: u32,
    /// Seeds per level.
    #[arg(long, default_value_t = 50)]
    pub reps: u32,
    /// First seed; seeds are `seed .. seed + reps`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Also write rows as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Record wall time per row (output is then not reproducible).
    #[arg(long)]
    pub timing: bool,
}

/// What a subcommand produced.
#[derive(Debug)]
pub enum Output {
    Json(Value),
    Text(String),
}

pub fn run(cli: Cli) -> Result<Output, CliError> {
    match cli.command {
        Command::Count(a) => cmd_count(&a),
        Command::Oracle(a) => cmd_oracle(&a).map(Output::Json),
        Command::Gen(a) => cmd_gen(&a).map(Output::Json),
        Command::Bounds(a) => cmd_bounds(&a),
        Command::Bench(a) => {
            let report = cmd_bench(&a)?;
            Ok(match a.json {
                Some(_) => Output::Text(String::new()),
                None => Output::Json(report),
            })
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn load_pattern(path: &Path) -> Result<PatternGraph, CliError> {
    parse_pattern(&read(path)?).map_err(data(&path.display().to_string()))
}

fn load_stream(path: &Path) -> Result<Vec<EdgeStreamUpdate>, CliError> {
    parse_stream(&read(path)?).map_err(data(&path.display().to_string()))
}

fn check_epsilon(epsilon: f64) -> Result<(), CliError> {
    if epsilon > 0.0 && epsilon <= 1.0 {
        Ok(())
    } else {
        Err(usage(format!("--epsilon must lie in (0, 1], got {epsilon}")))
    }
}

fn sampling_cover(h: &PatternGraph) -> Result<FractionalCover, CliError> {
    solve_cover_full_support(h).map_err(data("cover"))
}

fn estimate_json(e: &Estimate) -> Value {
    json!({
        "estimate": e.value,
        "p_used": e.p_used,
        "copies_found": e.copies_found,
        "retained": e.retained,
        "level": e.level,
        "exact": e.exact,
    })
}

pub fn cmd_count(a: &CountArgs) -> Result<Output, CliError> {
    check_epsilon(a.epsilon)?;
    if a.reps % 2 == 0 {
        return Err(usage("--reps must be odd"));
    }
    if !(a.constant > 0.0 && a.constant.is_finite()) {
        return Err(usage("--constant must be positive"));
    }
    if a.levels == Some(0) {
        return Err(usage("--levels must be positive"));
    }
    let h = load_pattern(&a.pattern)?;
    let stream = load_stream(&a.stream)?;
    let graph = DataGraph::from_stream(&stream).map_err(data("stream"))?;
    let cover = sampling_cover(&h)?;

    let estimate = match a.known_t {
        Some(t) if !(t >= 1.0) => return Err(usage("--known-t must be at least 1")),
        Some(t) => {
            let rate = choose_p(graph.m() as u64, t, a.epsilon, cover.value, a.constant);
            let runs = (0..a.reps as u64)
                .map(|r| {
                    let seed = if a.reps == 1 { a.seed } else { derive_seed(a.seed, r) };
                    run_fixed(&stream, &h, &cover, rate, seed)
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(data("estimate"))?;
            median_estimate(&runs).map_err(data("estimate"))?
        }
        None => {
            let mut plan = RatePlan::geometric(graph.m() as u64, a.epsilon, a.levels, a.reps)
                .map_err(|e| usage(e.to_string()))?;
            plan.oversample = a.constant;
            run_plan(&stream, &h, &cover, &plan, a.seed).map_err(data("estimate"))?
        }
    };
    if cover.has_full_support() {
        check_degree_regime(graph.max_degree(), a.epsilon, cover.value, a.known_t.unwrap_or(estimate.value));
    }
    if a.pretty {
        let mut s = String::new();
        let _ = writeln!(s, "estimate      {:.3}", estimate.value);
        let _ = writeln!(s, "p_used        {}", estimate.p_used);
        let _ = writeln!(s, "level         {}", estimate.level);
        let _ = writeln!(s, "copies_found  {}", estimate.copies_found);
        let _ = writeln!(s, "retained      {}", estimate.retained);
        let _ = writeln!(s, "exact         {}", estimate.exact);
        return Ok(Output::Text(s));
    }
    Ok(Output::Json(estimate_json(&estimate)))
}

fn load_labels(path: &Path, h: &PatternGraph) -> Result<HashMap<u64, usize>, CliError> {
    let text = read(path)?;
    let mut labels = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| CliError::Data(format!("{}:{}: {msg}", path.display(), i + 1));
        let mut parts = line.split_whitespace();
        let (Some(v), Some(l), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad("expected `vertex label`"));
        };
        let v: u64 = v.parse().map_err(|_| bad("vertex must be an unsigned integer"))?;
        let label = match l.parse::<usize>() {
            Ok(idx) => idx,
            Err(_) => h.vertex_with_label(l).ok_or_else(|| bad("unknown pattern label"))?,
        };
        labels.insert(v, label);
    }
    Ok(labels)
}

pub fn cmd_oracle(a: &OracleArgs) -> Result<Value, CliError> {
    let h = load_pattern(&a.pattern)?;
    let graph = DataGraph::from_stream(&load_stream(&a.stream)?).map_err(data("stream"))?;
    match &a.labels {
        Some(path) => {
            let labels = load_labels(path, &h)?;
            let count = exact_count_labeled(&graph, &h, &labels).map_err(data("oracle"))?;
            Ok(json!({ "labeled_copies": count }))
        }
        None => {
            let count = exact_count(&graph, &h).map_err(data("oracle"))?;
            Ok(serde_json::to_value(count).expect("plain struct"))
        }
    }
}

fn parse_fraction(s: &str) -> Result<Rational64, CliError> {
    let bad = || usage(format!("cannot parse fraction {s:?}"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?),
        None => (s.trim().parse().map_err(|_| bad())?, 1i64),
    };
    if d == 0 {
        return Err(bad());
    }
    Ok(Rational64::new(n, d))
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn cmd_gen(a: &GenArgs) -> Result<Value, CliError> {
    let need_pattern = || {
        a.pattern
            .as_deref()
            .ok_or_else(|| usage("--pattern is required for this kind"))
            .and_then(load_pattern)
    };
    let (stream, truth) = match a.kind {
        GenKind::Planted => {
            let h = need_pattern()?;
            let inst = gen_planted(&h, a.copies, a.pad, a.seed).map_err(data("gen"))?;
            let truth = json!({
                "kind": "planted",
                "seed": a.seed,
                "copies": a.copies,
                "pad": a.pad,
                "true_count": inst.true_count,
                "n": inst.n,
                "m": inst.m,
                "max_degree": inst.max_degree,
            });
            (inst.stream, truth)
        }
        GenKind::Reduction => {
            let h = need_pattern()?;
            let epsilon = parse_fraction(&a.epsilon)?;
            let promise = match a.promise {
                PromiseArg::Yes => Promise::Yes,
                PromiseArg::No => Promise::No,
            };
            let inst = gen_reduction(&h, a.n, a.t, epsilon, promise, a.seed).map_err(data("gen"))?;
            let truth = json!({
                "kind": "reduction",
                "seed": a.seed,
                "n": a.n,
                "t": a.t,
                "epsilon": epsilon.to_string(),
                "promise": inst.promise,
                "t_prime": inst.t_prime,
                "blocks": inst.blocks,
                "window": inst.window,
                "true_count": inst.zero_index_count(),
                "m": inst.stream.len(),
                "expected": {
                    "components": inst.expected.components,
                    "mean": inst.expected.mean(),
                    "variance": inst.expected.variance(),
                },
            });
            (inst.stream, truth)
        }
        GenKind::Random => {
            let stream = gen_random_bounded(a.n, a.m, a.d, a.arity, a.seed).map_err(data("gen"))?;
            let graph = DataGraph::from_stream(&stream).expect("insert-only");
            let truth = json!({
                "kind": "random",
                "seed": a.seed,
                "n": a.n,
                "m": a.m,
                "d": a.d,
                "arity": a.arity,
                "max_degree": graph.max_degree(),
            });
            (stream, truth)
        }
    };
    write(&a.out, &write_stream(&stream))?;
    write(&sidecar_path(&a.out), &format!("{}\n", serde_json::to_string_pretty(&truth).expect("json")))?;
    Ok(truth)
}

pub fn cmd_bounds(a: &BoundsArgs) -> Result<Output, CliError> {
    check_epsilon(a.epsilon)?;
    if !(a.m > 0.0 && a.t >= 1.0) {
        return Err(usage("--m must be positive and --t at least 1"));
    }
    let h = load_pattern(&a.pattern)?;
    let report = exponents(&h).map_err(data("bounds"))?;
    let upper = report.upper_bound(a.m, a.t);
    let (lower_promise, lower_counting) = report.lower_bounds(a.m, a.t, a.epsilon);
    let (e2, e1) = report.lower_exponents();
    if a.pretty {
        let mut s = String::new();
        let _ = writeln!(s, "tau  = {}", report.tau);
        let _ = writeln!(s, "mu1  = {}", report.mu1);
        let _ = writeln!(s, "mu2  = {}", report.mu2);
        let _ = writeln!(s, "upper: m / T^({})                 = {upper:.6e}", report.upper_exponent());
        let _ = writeln!(s, "lower: m / (eps T)^({e2})          = {lower_promise:.6e}");
        let _ = writeln!(s, "lower: m / (eps^2 T)^({e1})        = {lower_counting:.6e}");
        return Ok(Output::Text(s));
    }
    Ok(Output::Json(json!({
        "tau": report.tau.to_string(),
        "mu1": report.mu1.to_string(),
        "mu2": report.mu2.to_string(),
        "tight": report.is_tight(),
        "upper_exponent": report.upper_exponent().to_string(),
        "lower_exponent_eps_t": e2.to_string(),
        "lower_exponent_eps2_t": e1.to_string(),
        "m": a.m,
        "t": a.t,
        "epsilon": a.epsilon,
        "upper_bound": upper,
        "lower_bound_eps_t": lower_promise,
        "lower_bound_eps2_t": lower_counting,
        "lower_bound": lower_promise.max(lower_counting),
    })))
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub level: u32,
    pub p: f64,
    pub retained_mean: f64,
    pub copies_found_mean: f64,
    pub estimate_mean: f64,
    pub estimate_stddev: f64,
    /// Quantiles of `|estimate - T| / T`; absent when `T = 0`.
    pub rel_err_q50: Option<f64>,
    pub rel_err_q90: Option<f64>,
    pub rel_err_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub pattern: String,
    pub tau: String,
    pub true_count: u64,
    pub m: u64,
    pub seed_start: u64,
    pub seed_end: u64,
    pub reps: u32,
    pub source: String,
    pub rows: Vec<BenchRow>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

pub fn cmd_bench(a: &BenchArgs) -> Result<Value, CliError> {
    if a.reps == 0 {
        return Err(usage("--reps must be positive"));
    }
    if a.levels == 0 || a.levels > 63 {
        return Err(usage("--levels must lie in 1..=63"));
    }
    let h = load_pattern(&a.pattern)?;
    let (stream, true_count, source) = match &a.stream {
        Some(path) => {
            let stream = load_stream(path)?;
            let graph = DataGraph::from_stream(&stream).map_err(data("stream"))?;
            let t = exact_count(&graph, &h).map_err(data("oracle"))?.copies;
            (stream, t, path.display().to_string())
        }
        None => {
            let inst = gen_planted(&h, a.copies, a.pad, a.seed).map_err(data("gen"))?;
            (inst.stream, inst.true_count, format!("planted copies={} pad={}", a.copies, a.pad))
        }
    };
    let m = DataGraph::from_stream(&stream).map_err(data("stream"))?.m() as u64;
    let cover = sampling_cover(&h)?;
    let analysis = analyze(&h).map_err(data("pattern"))?;
    let t = true_count as f64;

    let rows = (0..a.levels)
        .into_par_iter()
        .map(|level| {
            let p = 0.5f64.powi(level as i32);
            let started = Instant::now();
            let runs = (a.seed..a.seed + a.reps as u64)
                .into_par_iter()
                .map(|seed| -> Result<Estimate, CliError> {
                    let config = SketchConfig::new(h.clone(), &cover, p, seed).map_err(data("sketch"))?;
                    let mut state = SketchState::new(config);
                    state.extend(&stream);
                    estimate_from(&state, &analysis).map_err(data("estimate"))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let wall_ms = started.elapsed().as_secs_f64() * 1e3;
            let n = runs.len() as f64;
            let values: Vec<f64> = runs.iter().map(|e| e.value).collect();
            let mean = values.iter().sum::<f64>() / n;
            let var = if runs.len() > 1 {
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let mut errs: Option<Vec<f64>> =
                (true_count > 0).then(|| values.iter().map(|v| (v - t).abs() / t).collect());
            if let Some(e) = errs.as_mut() {
                e.sort_by(f64::total_cmp);
            }
            Ok(BenchRow {
                level,
                p,
                retained_mean: runs.iter().map(|e| e.retained as f64).sum::<f64>() / n,
                copies_found_mean: runs.iter().map(|e| e.copies_found as f64).sum::<f64>() / n,
                estimate_mean: mean,
                estimate_stddev: var.sqrt(),
                rel_err_q50: errs.as_deref().map(|e| quantile(e, 0.5)),
                rel_err_q90: errs.as_deref().map(|e| quantile(e, 0.9)),
                rel_err_max: errs.as_deref().map(|e| e[e.len() - 1]),
                wall_ms: a.timing.then_some(wall_ms),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let report = BenchReport {
        pattern: h.to_text(),
        tau: cover.value.to_string(),
        true_count,
        m,
        seed_start: a.seed,
        seed_end: a.seed + a.reps as u64 - 1,
        reps: a.reps,
        source,
        rows,
    };
    let value = serde_json::to_value(&report).expect("plain struct");
    if let Some(path) = &a.csv {
        write(path, &bench_csv(&report))?;
    }
    if let Some(path) = &a.json {
        write(path, &format!("{}\n", serde_json::to_string_pretty(&value).expect("json")))?;
    }
    Ok(value)
}

fn bench_csv(report: &BenchReport) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut s = String::from(
        "level,p,retained_mean,copies_found_mean,estimate_mean,estimate_stddev,rel_err_q50,rel_err_q90,rel_err_max,wall_ms\n",
    );
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.level,
            r.p,
            r.retained_mean,
            r.copies_found_mean,
            r.estimate_mean,
            r.estimate_stddev,
            opt(r.rel_err_q50),
            opt(r.rel_err_q90),
            opt(r.rel_err_max),
            opt(r.wall_ms),
        );
    }
    s
}
