//! Command-line front end and the covering-array notation parser.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error,
//! 3 internal invariant violation.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{
    compare_runs, filter_suites, read_runs_csv, run_benchmark, write_runs_csv, write_stats_csv, write_summary_csv,
    write_trace_csv, BenchmarkResult, Timing, DEFAULT_REPETITIONS,
};
use crate::engine::{generate, EngineConfig, RunReport, Strategy};
use crate::error::{Error, Result};
use crate::model::{CAConfig, TestCase, TestSuite, MAX_PARAMETERS};
use crate::num::Real;
use crate::operators::ScheduleParams;
use crate::verify::verify_suite;

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNVERIFIED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok {
    Word,
    Int(u64),
    Open,
    Close,
    Sep,
    Caret,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok, &str)>> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        let single = match c {
            '(' => Some(Tok::Open),
            ')' => Some(Tok::Close),
            ',' | ';' => Some(Tok::Sep),
            '^' => Some(Tok::Caret),
            _ => None,
        };
        if let Some(tok) = single {
            chars.next();
            out.push((pos, tok, &text[pos..pos + 1]));
        } else if c.is_whitespace() {
            chars.next();
        } else if c.is_ascii_digit() || c.is_ascii_alphabetic() {
            let digits = c.is_ascii_digit();
            let mut end = pos;
            while let Some(&(i, d)) = chars.peek() {
                if (digits && d.is_ascii_digit()) || (!digits && d.is_ascii_alphabetic()) {
                    end = i + d.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            let word = &text[pos..end];
            let tok = if digits {
                Tok::Int(word.parse().map_err(|_| parse_err(pos, format!("number '{word}' is too large")))?)
            } else {
                Tok::Word
            };
            out.push((pos, tok, word));
        } else {
            return Err(parse_err(pos, format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

fn parse_err(position: usize, message: impl Into<String>) -> Error {
    Error::Parse { position, message: message.into() }
}

/// Parses `CA(t,v^k)` or `MCA(t,v1^k1 v2^k2 ...)`.
///
/// A leading size field (`N;` or a number) is accepted and ignored, an
/// exponent may be omitted for a single parameter, and whitespace is free.
/// Errors carry the character offset of the offending token.
pub fn parse_ca_notation(text: &str) -> Result<CAConfig> {
    let toks = tokenize(text)?;
    let end = text.len();
    let mut i = 0;
    let at = |i: usize| toks.get(i).map_or(end, |t| t.0);

    match toks.first() {
        Some((_, Tok::Word, w)) if w.eq_ignore_ascii_case("CA") || w.eq_ignore_ascii_case("MCA") => i += 1,
        _ => return Err(parse_err(at(0), "expected 'CA' or 'MCA'")),
    }
    if !matches!(toks.get(i), Some((_, Tok::Open, _))) {
        return Err(parse_err(at(i), "expected '('"));
    }
    i += 1;

    // optional size field
    let size_field = matches!(toks.get(i), Some((_, Tok::Word, w)) if w.eq_ignore_ascii_case("N"))
        || matches!((toks.get(i), toks.get(i + 1), toks.get(i + 2), toks.get(i + 3)),
            (Some((_, Tok::Int(_), _)), Some((_, Tok::Sep, _)), Some((_, Tok::Int(_), _)), Some((_, Tok::Sep, _))));
    if size_field {
        i += 1;
        if !matches!(toks.get(i), Some((_, Tok::Sep, _))) {
            return Err(parse_err(at(i), "expected ',' or ';' after the size field"));
        }
        i += 1;
    }

    let t_pos = at(i);
    let t = match toks.get(i) {
        Some((_, Tok::Int(t), _)) => *t,
        _ => return Err(parse_err(t_pos, "expected the strength t")),
    };
    i += 1;
    if !matches!(toks.get(i), Some((_, Tok::Sep, _))) {
        return Err(parse_err(at(i), "expected ',' after the strength"));
    }
    i += 1;

    let mut cardinalities: Vec<u32> = Vec::new();
    loop {
        let v_pos = at(i);
        let v = match toks.get(i) {
            Some((_, Tok::Int(v), _)) => *v,
            Some((_, Tok::Close, _)) if !cardinalities.is_empty() => break,
            _ => return Err(parse_err(v_pos, "expected a cardinality")),
        };
        i += 1;
        if v < 2 {
            return Err(parse_err(v_pos, format!("cardinality {v} is below 2")));
        }
        let v = u32::try_from(v).map_err(|_| parse_err(v_pos, format!("cardinality {v} is too large")))?;
        let mut count = 1;
        if matches!(toks.get(i), Some((_, Tok::Caret, _))) {
            i += 1;
            count = match toks.get(i) {
                Some((_, Tok::Int(e), _)) if *e >= 1 => *e,
                _ => return Err(parse_err(at(i), "expected a positive exponent after '^'")),
            };
            i += 1;
        }
        if cardinalities.len() as u64 + count > MAX_PARAMETERS as u64 {
            return Err(parse_err(v_pos, format!("more than {MAX_PARAMETERS} parameters")));
        }
        cardinalities.extend(std::iter::repeat_n(v, count as usize));
    }
    i += 1;
    if let Some((pos, _, w)) = toks.get(i) {
        return Err(parse_err(*pos, format!("unexpected '{w}' after ')'")));
    }

    let k = cardinalities.len() as u64;
    if t < 2 {
        return Err(parse_err(t_pos, format!("strength {t} is below 2")));
    }
    if t > k {
        return Err(parse_err(t_pos, format!("strength {t} exceeds parameter count {k}")));
    }
    CAConfig::new(t as usize, cardinalities).map_err(|e| parse_err(0, e.to_string()))
}

#[derive(Debug, Parser)]
#[command(name = "cagen", version, about = "Covering array generation with sine-cosine search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a covering array and write it as CSV.
    Generate(GenerateArgs),
    /// Check a suite CSV for full t-way coverage.
    Verify(VerifyArgs),
    /// Run the built-in benchmark configurations.
    Bench(BenchArgs),
    /// Rank-sum comparison with Holm correction over a per-run CSV.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
struct EngineArgs {
    #[arg(long, default_value_t = 40)]
    pop: usize,
    #[arg(long, default_value_t = 100)]
    iters: u32,
    #[arg(long, default_value_t = 3.0)]
    magnitude: f64,
    #[arg(long, default_value_t = 0.8)]
    gamma: f64,
    #[arg(long, default_value_t = 1.5)]
    beta: f64,
    /// Zero the Q-table before every row.
    #[arg(long)]
    reset_qtable: bool,
    /// Keep searching after a row reaches the best possible fitness.
    #[arg(long)]
    no_early_exit: bool,
    /// Compute positions in single precision.
    #[arg(long)]
    f32: bool,
}

impl EngineArgs {
    fn build<F: Real>(&self, seed: u64, trace: bool) -> Result<EngineConfig<F>> {
        let sched = ScheduleParams::new(F::lit(self.magnitude), self.iters, F::lit(self.beta))?;
        let mut cfg = EngineConfig::new(self.pop, sched, F::lit(self.gamma), seed)?;
        cfg.qtable_reset_per_round = self.reset_qtable;
        cfg.early_exit = !self.no_early_exit;
        cfg.record_trace = trace;
        cfg.record_qtable = trace;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// e.g. "CA(2,3^4)" or "MCA(2,5^1 3^8 2^2)"
    notation: String,
    #[arg(long, default_value = "qlsca")]
    strategy: Strategy,
    /// Seed for the first run; drawn from entropy and printed if absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Independent runs (seeds seed, seed+1, ...); the smallest suite wins.
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Convergence trace CSV of the winning run.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    suite: PathBuf,
    notation: String,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Glob over names like "CA(2,3^13)" or ids like "pair-3k/*".
    #[arg(long, default_value = "*")]
    suite_filter: String,
    #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
    reps: usize,
    #[arg(long, env = "CAGEN_PARALLEL")]
    parallel: Option<usize>,
    #[arg(long, default_value_t = 0)]
    base_seed: u64,
    #[arg(long, default_value = "bench-out")]
    out_dir: PathBuf,
    /// Restrict to one strategy.
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Also write a convergence trace per run.
    #[arg(long)]
    trace: bool,
    /// Leave wall times out of the CSVs so reruns compare byte for byte.
    #[arg(long)]
    no_timing: bool,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Debug, Args)]
struct StatsArgs {
    runs: PathBuf,
    #[arg(long, default_value = "qlsca")]
    control: String,
    /// Significance level; repeat for several.
    #[arg(long = "alpha", default_values_t = [0.05, 0.10])]
    alphas: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Stats(a) => cmd_stats(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Verification(_) => EXIT_INTERNAL,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Header `p0,...,p{k-1}` then one line per row.
pub fn write_suite_csv<W: Write>(out: W, suite: &TestSuite) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((0..suite.config.parameters()).map(|i| format!("p{i}")))?;
    for row in &suite.rows {
        w.write_record(row.values().iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`write_suite_csv`]; the header is skipped.
pub fn read_suite_csv<R: io::Read>(input: R, config: &CAConfig) -> Result<TestSuite> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input);
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let values = rec
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                cell.parse::<u32>().map_err(|_| {
                    parse_err(col, format!("row {}: '{cell}' is not a non-negative integer", line + 1))
                })
            })
            .collect::<Result<Vec<u32>>>()?;
        rows.push(TestCase(values));
    }
    Ok(TestSuite::with_rows(config.clone(), rows))
}

fn cmd_generate(a: GenerateArgs) -> Result<i32> {
    let config = parse_ca_notation(&a.notation)?;
    if a.runs == 0 {
        return Err(Error::Config("--runs must be at least 1".into()));
    }
    let seed = match a.seed {
        Some(s) => s,
        None => {
            let s = rand::random::<u64>();
            println!("seed: {s} (drawn from entropy)");
            s
        }
    };
    let trace = a.trace.is_some();
    let mut best: Option<RunReport> = None;
    for i in 0..a.runs {
        let run_seed = seed.wrapping_add(i as u64);
        let report = if a.engine.f32 {
            generate(&config, &a.engine.build::<f32>(run_seed, trace)?, a.strategy)?
        } else {
            generate(&config, &a.engine.build::<f64>(run_seed, trace)?, a.strategy)?
        };
        if best.as_ref().is_none_or(|b| report.size < b.size) {
            best = Some(report);
        }
    }
    let best = best.expect("at least one run");
    let check = verify_suite(&best.suite);
    println!("{config} {}: size {} (seed {}, {} rounds)", a.strategy, best.size, best.seed, best.rounds);
    if let Some(path) = &a.out {
        write_suite_csv(create(path)?, &best.suite)?;
    } else {
        write_suite_csv(io::stdout().lock(), &best.suite)?;
    }
    if let Some(path) = &a.trace {
        write_trace_csv(create(path)?, &best)?;
    }
    if check.is_valid() {
        println!("verification: complete");
        Ok(EXIT_OK)
    } else {
        Err(Error::Verification(format!("generated suite misses {} tuples", check.missing.len())))
    }
}

fn cmd_verify(a: VerifyArgs) -> Result<i32> {
    let config = parse_ca_notation(&a.notation)?;
    let suite = read_suite_csv(File::open(&a.suite)?, &config)?;
    let report = verify_suite(&suite);
    let total = config.total_tuples()?;
    println!("{config}: {} rows", suite.len());
    for v in &report.violations {
        println!("row {}: {}", v.row + 1, v.reason);
    }
    println!("covered: {} of {total}", report.redundancy.len());
    println!("missing: {}", report.missing.len());
    for tuple in report.missing.iter().take(10) {
        println!("  {tuple}");
    }
    if report.missing.len() > 10 {
        println!("  ...");
    }
    println!("complete: {}", if report.complete { "yes" } else { "no" });
    Ok(if report.is_valid() { EXIT_OK } else { EXIT_UNVERIFIED })
}

fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

fn cmd_bench(a: BenchArgs) -> Result<i32> {
    let specs = filter_suites(&a.suite_filter)?;
    if specs.is_empty() {
        return Err(Error::Config(format!("no benchmark matches '{}'", a.suite_filter)));
    }
    let parallel = a.parallel.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let timing = if a.no_timing { Timing::Omit } else { Timing::Include };
    fs::create_dir_all(&a.out_dir)?;

    let mut results: Vec<BenchmarkResult> = Vec::new();
    for mut spec in specs {
        spec.repetitions = a.reps;
        spec.base_seed = a.base_seed;
        if let Some(s) = a.strategy {
            spec.strategies = [s].into();
        }
        eprintln!("{}: {} x {} runs", spec.id(), spec.strategies.len(), spec.repetitions);
        let result = if a.engine.f32 {
            run_benchmark(&spec, &a.engine.build::<f32>(0, a.trace)?, parallel)?
        } else {
            run_benchmark(&spec, &a.engine.build::<f64>(0, a.trace)?, parallel)?
        };
        for sr in &result.strategies {
            let reference = spec.reference(sr.strategy.label());
            println!(
                "{:<36} {:<6} best {:>5} mean {:>9.2}{}",
                spec.id(),
                sr.strategy,
                sr.best_size,
                sr.mean_size,
                reference.map_or(String::new(), |r| format!("   published {} / {:.2}", r.best, r.mean)),
            );
            if a.trace {
                for (i, report) in sr.runs.iter().enumerate() {
                    let name = format!("{}-{}-{i}.csv", file_stem(&spec.id()), sr.strategy);
                    write_trace_csv(create(&a.out_dir.join("traces").join(name))?, report)?;
                }
            }
        }
        results.push(result);
    }
    write_runs_csv(create(&a.out_dir.join("runs.csv"))?, &results, timing)?;
    write_summary_csv(create(&a.out_dir.join("summary.csv"))?, &results, timing)?;
    println!("wrote {}", a.out_dir.display());
    Ok(EXIT_OK)
}

fn cmd_stats(a: StatsArgs) -> Result<i32> {
    let records = read_runs_csv(File::open(&a.runs)?)?;
    let comparisons = compare_runs(&records, &a.control, &a.alphas)?;
    match &a.out {
        Some(path) => write_stats_csv(create(path)?, &comparisons, &a.alphas)?,
        None => write_stats_csv(io::stdout().lock(), &comparisons, &a.alphas)?,
    }
    Ok(EXIT_OK)
}
