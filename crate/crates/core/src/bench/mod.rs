//! Repeated seeded runs over the published benchmark configurations.
//!
//! Every run of a spec gets seed `base_seed + run_index`, and results are
//! ordered by run index, so output is independent of the thread count.

pub mod stats;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cli::parse_ca_notation;
use crate::engine::{generate, EngineConfig, RunReport, Strategy};
use crate::error::{config_err, Error, Result};
use crate::model::CAConfig;
use crate::num::Real;
use crate::operators::OperatorKind;
use crate::qlearn::snapshot_columns;
use crate::verify::verify_suite;

pub use stats::{bonferroni_holm, wilcoxon_rank_sum, HolmDecision, RankSumTest};

const REFERENCE_CSV: &str = include_str!("reference.csv");

pub const DEFAULT_REPETITIONS: usize = 30;

/// A published best/mean pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub best: u64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    pub name: String,
    /// Sweep the configuration belongs to, e.g. `pair-3k`; `custom` for ad hoc specs.
    pub family: String,
    pub config: CAConfig,
    pub repetitions: usize,
    pub strategies: BTreeSet<Strategy>,
    pub base_seed: u64,
    /// Published values keyed by strategy label (`QLSCA`, `DPSO`, ...).
    pub reference_values: BTreeMap<String, Reference>,
    /// Provenance remarks on corrected or inconsistent published values.
    pub notes: Vec<String>,
}

impl BenchmarkSpec {
    /// Both strategies, 30 repetitions, base seed 0, no references.
    pub fn new(config: CAConfig) -> Self {
        Self {
            name: config.notation(),
            family: "custom".into(),
            config,
            repetitions: DEFAULT_REPETITIONS,
            strategies: Strategy::ALL.into_iter().collect(),
            base_seed: 0,
            reference_values: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_repetitions(mut self, repetitions: usize) -> Self {
        self.repetitions = repetitions;
        self
    }

    pub fn with_strategies(mut self, strategies: impl IntoIterator<Item = Strategy>) -> Self {
        self.strategies = strategies.into_iter().collect();
        self
    }

    pub fn with_base_seed(mut self, base_seed: u64) -> Self {
        self.base_seed = base_seed;
        self
    }

    /// `pair-3k/CA(2,3^7)`; unique across the built-in set.
    pub fn id(&self) -> String {
        format!("{}/{}", self.family, self.name)
    }

    pub fn reference(&self, label: &str) -> Option<Reference> {
        self.reference_values.get(label).copied()
    }

    pub fn seed_for(&self, run_index: usize) -> u64 {
        self.base_seed.wrapping_add(run_index as u64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return config_err("repetitions must be at least 1");
        }
        if self.strategies.is_empty() {
            return config_err("no strategy selected");
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct ReferenceRow {
    family: String,
    suite: String,
    strategy: String,
    best: u64,
    mean: f64,
    note: String,
}

/// Every configuration from the published size tables, grouped by sweep,
/// with the published best/mean values attached. Missing entries are absent.
///
/// Families: `headline` (six mixed and uniform arrays), `pair-3k`,
/// `triple-3k` and `quad-3k` (`CA(t,3^k)` over k), `pair-v7`, `triple-v7`
/// and `quad-v7` (`CA(t,v^7)` over v), and `v10` (`CA(t,v^10)`).
pub fn builtin_suites() -> Vec<BenchmarkSpec> {
    let mut specs: Vec<BenchmarkSpec> = Vec::new();
    let mut reader = csv::Reader::from_reader(REFERENCE_CSV.as_bytes());
    for row in reader.deserialize::<ReferenceRow>() {
        let row = row.expect("embedded reference table is well formed");
        let known = specs.last().is_some_and(|s| s.family == row.family && s.name == row.suite);
        if !known {
            let config = parse_ca_notation(&row.suite).expect("embedded suite names parse");
            specs.push(BenchmarkSpec { name: row.suite.clone(), family: row.family.clone(), ..BenchmarkSpec::new(config) });
        }
        let spec = specs.last_mut().expect("pushed above");
        if !row.note.is_empty() {
            spec.notes.push(format!("{}: {}", row.strategy, row.note));
        }
        spec.reference_values.insert(row.strategy, Reference { best: row.best, mean: row.mean });
    }
    specs
}

/// First built-in spec whose name is `name`, after normalising whitespace.
pub fn find_suite(name: &str) -> Option<BenchmarkSpec> {
    let wanted = parse_ca_notation(name).ok()?;
    builtin_suites().into_iter().find(|s| s.config == wanted)
}

/// Built-in specs whose name or id matches the glob `pattern`.
pub fn filter_suites(pattern: &str) -> Result<Vec<BenchmarkSpec>> {
    let pat = glob::Pattern::new(pattern).map_err(|e| Error::Parse { position: e.pos, message: e.msg.to_string() })?;
    Ok(builtin_suites().into_iter().filter(|s| pat.matches(&s.name) || pat.matches(&s.id())).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyResult {
    pub strategy: Strategy,
    /// Ordered by run index.
    pub runs: Vec<RunReport>,
    pub best_size: usize,
    pub mean_size: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std_dev: f64,
    pub mean_wall_millis: f64,
    pub total_size: u64,
}

impl StrategyResult {
    fn from_runs(strategy: Strategy, runs: Vec<RunReport>) -> Self {
        let n = runs.len() as f64;
        let total_size: u64 = runs.iter().map(|r| r.size as u64).sum();
        let mean_size = total_size as f64 / n;
        let std_dev = if runs.len() > 1 {
            (runs.iter().map(|r| (r.size as f64 - mean_size).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            strategy,
            best_size: runs.iter().map(|r| r.size).min().unwrap_or(0),
            mean_size,
            std_dev,
            mean_wall_millis: runs.iter().map(|r| r.wall_millis as f64).sum::<f64>() / n,
            total_size,
            runs,
        }
    }

    pub fn sizes(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.size as f64).collect()
    }

    /// Operator applications summed over every run.
    pub fn operator_totals(&self) -> crate::engine::OperatorCounts {
        let mut total = crate::engine::OperatorCounts::default();
        for r in &self.runs {
            total.add(&r.operator_counts);
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkResult {
    pub spec: BenchmarkSpec,
    /// One entry per requested strategy, in [`Strategy`] order.
    pub strategies: Vec<StrategyResult>,
}

impl BenchmarkResult {
    pub fn get(&self, strategy: Strategy) -> Option<&StrategyResult> {
        self.strategies.iter().find(|s| s.strategy == strategy)
    }
}

/// Runs `spec.repetitions` seeded generations per strategy on at most
/// `parallelism` threads and verifies every suite.
pub fn run_benchmark<F: Real>(spec: &BenchmarkSpec, engine: &EngineConfig<F>, parallelism: usize) -> Result<BenchmarkResult> {
    spec.validate()?;
    engine.validate()?;
    let jobs: Vec<(Strategy, usize)> =
        spec.strategies.iter().flat_map(|&s| (0..spec.repetitions).map(move |i| (s, i))).collect();
    let run = |&(strategy, i): &(Strategy, usize)| -> Result<RunReport> {
        let ecfg = engine.clone().with_seed(spec.seed_for(i));
        let report = generate(&spec.config, &ecfg, strategy)?;
        let check = verify_suite(&report.suite);
        if !check.is_valid() {
            return Err(Error::Verification(format!(
                "{} {strategy} run {i} (seed {}): {} tuples missing, {} malformed rows",
                spec.name,
                ecfg.seed,
                check.missing.len(),
                check.violations.len()
            )));
        }
        Ok(report)
    };
    let reports: Vec<RunReport> = if parallelism <= 1 {
        jobs.iter().map(run).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run).collect::<Result<_>>())?
    };

    let mut reports = reports.into_iter();
    let strategies = spec
        .strategies
        .iter()
        .map(|&s| StrategyResult::from_runs(s, reports.by_ref().take(spec.repetitions).collect()))
        .collect();
    Ok(BenchmarkResult { spec: spec.clone(), strategies })
}

/// Whether wall times are written to CSV. Timings differ between otherwise
/// identical runs, so byte-for-byte comparisons need them left out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Timing {
    #[default]
    Include,
    Omit,
}

/// One line of the per-run CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub benchmark: String,
    pub run_index: usize,
    pub strategy: String,
    pub seed: u64,
    pub size: usize,
    pub wall_millis: Option<u64>,
    pub rounds: u32,
    pub fallback_count: u32,
    pub op_sine: u64,
    pub op_cosine: u64,
    pub op_levy: u64,
    pub op_crossover: u64,
}

impl RunRecord {
    pub fn new(benchmark: &str, run_index: usize, report: &RunReport, timing: Timing) -> Self {
        let ops = &report.operator_counts;
        Self {
            benchmark: benchmark.to_string(),
            run_index,
            strategy: report.strategy.name().to_string(),
            seed: report.seed,
            size: report.size,
            wall_millis: (timing == Timing::Include).then_some(report.wall_millis),
            rounds: report.rounds,
            fallback_count: report.fallback_count,
            op_sine: ops.get(OperatorKind::Sine),
            op_cosine: ops.get(OperatorKind::Cosine),
            op_levy: ops.get(OperatorKind::LevyFlight),
            op_crossover: ops.get(OperatorKind::Crossover),
        }
    }
}

pub fn write_runs_csv<W: io::Write>(out: W, results: &[BenchmarkResult], timing: Timing) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for result in results {
        for sr in &result.strategies {
            for (i, report) in sr.runs.iter().enumerate() {
                w.serialize(RunRecord::new(&result.spec.id(), i, report, timing))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_runs_csv<R: io::Read>(input: R) -> Result<Vec<RunRecord>> {
    csv::Reader::from_reader(input).deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRecord {
    pub benchmark: String,
    pub strategy: String,
    pub best: usize,
    pub mean: f64,
    pub std: f64,
    pub mean_wall_millis: Option<f64>,
    pub reference_best: Option<u64>,
    pub reference_mean: Option<f64>,
    /// Measured best is no larger than the published best.
    pub reference_met: Option<bool>,
}

pub fn summary_records(results: &[BenchmarkResult], timing: Timing) -> Vec<SummaryRecord> {
    results
        .iter()
        .flat_map(|result| {
            result.strategies.iter().map(move |sr| {
                let reference = result.spec.reference(sr.strategy.label());
                SummaryRecord {
                    benchmark: result.spec.id(),
                    strategy: sr.strategy.name().to_string(),
                    best: sr.best_size,
                    mean: sr.mean_size,
                    std: sr.std_dev,
                    mean_wall_millis: (timing == Timing::Include).then_some(sr.mean_wall_millis),
                    reference_best: reference.map(|r| r.best),
                    reference_mean: reference.map(|r| r.mean),
                    reference_met: reference.map(|r| sr.best_size as u64 <= r.best),
                }
            })
        })
        .collect()
}

pub fn write_summary_csv<W: io::Write>(out: W, results: &[BenchmarkResult], timing: Timing) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in summary_records(results, timing) {
        w.serialize(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Convergence trace of one run; Q-table columns follow when recorded.
pub fn write_trace_csv<W: io::Write>(out: W, report: &RunReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let with_q = report.convergence.iter().any(|p| p.qtable.is_some());
    let mut header = vec!["round".to_string(), "iteration".into(), "best_fitness".into()];
    if with_q {
        header.extend(snapshot_columns());
    }
    w.write_record(&header)?;
    for p in &report.convergence {
        let mut rec = vec![p.round.to_string(), p.iteration.to_string(), p.best_fitness.to_string()];
        if with_q {
            match &p.qtable {
                Some(q) => rec.extend(q.iter().map(|v| v.to_string())),
                None => rec.extend(std::iter::repeat_n(String::new(), 16)),
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One control-versus-other comparison inside a stats report.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub benchmark: String,
    pub strategy: String,
    pub control_mean: f64,
    pub other_mean: f64,
    pub test: RankSumTest,
    /// `(alpha, decision)` for each requested level.
    pub decisions: Vec<(f64, HolmDecision)>,
}

/// Compares the control's sizes against every other strategy on each
/// benchmark, then applies Holm across the whole family of comparisons.
pub fn compare_runs(records: &[RunRecord], control: &str, alphas: &[f64]) -> Result<Vec<Comparison>> {
    let mut groups: BTreeMap<(&str, String), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry((&r.benchmark, r.strategy.to_ascii_lowercase())).or_default().push(r.size as f64);
    }
    let control = control.to_ascii_lowercase();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut out = Vec::new();
    for ((bench, strategy), sizes) in &groups {
        if *strategy == control {
            continue;
        }
        let Some(base) = groups.get(&(*bench, control.clone())) else {
            continue;
        };
        out.push(Comparison {
            benchmark: bench.to_string(),
            strategy: strategy.clone(),
            control_mean: mean(base),
            other_mean: mean(sizes),
            test: wilcoxon_rank_sum(base, sizes)?,
            decisions: Vec::new(),
        });
    }
    if out.is_empty() {
        return config_err(format!("no benchmark has runs for both '{control}' and another strategy"));
    }
    let labelled: Vec<(String, f64)> =
        out.iter().enumerate().map(|(i, c)| (i.to_string(), c.test.p_value)).collect();
    for &alpha in alphas {
        for d in bonferroni_holm(&labelled, alpha)? {
            let i: usize = d.label.parse().expect("labels are indices");
            out[i].decisions.push((alpha, d));
        }
    }
    Ok(out)
}

/// Renders comparisons as CSV with a threshold/reject column pair per alpha.
pub fn write_stats_csv<W: io::Write>(out: W, comparisons: &[Comparison], alphas: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> =
        ["benchmark", "strategy", "control_mean", "other_mean", "statistic", "p_value"].map(String::from).into();
    for a in alphas {
        header.push(format!("holm_threshold_{a}"));
        header.push(format!("reject_{a}"));
    }
    w.write_record(&header)?;
    for c in comparisons {
        let mut rec = vec![
            c.benchmark.clone(),
            c.strategy.clone(),
            c.control_mean.to_string(),
            c.other_mean.to_string(),
            c.test.statistic.to_string(),
            c.test.p_value.to_string(),
        ];
        let by_alpha: HashMap<u64, &HolmDecision> = c.decisions.iter().map(|(a, d)| (a.to_bits(), d)).collect();
        for a in alphas {
            let d = by_alpha[&a.to_bits()];
            rec.push(d.threshold.to_string());
            rec.push(d.reject.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_counts() {
        let specs = builtin_suites();
        let per_family = |f: &str| specs.iter().filter(|s| s.family == f).count();
        let families = ["headline", "pair-3k", "triple-3k", "quad-3k", "pair-v7", "triple-v7", "quad-v7", "v10"];
        assert_eq!(families.map(per_family), [6, 10, 9, 8, 6, 6, 6, 9]);
        assert_eq!(specs.len(), 60);
        let ids: BTreeSet<String> = specs.iter().map(|s| s.id()).collect();
        assert_eq!(ids.len(), 60);
    }

    #[test]
    fn builtin_lookups() {
        let s = find_suite("CA(2,10^5)").unwrap();
        assert_eq!(s.reference("QLSCA"), Some(Reference { best: 117, mean: 118.45 }));
        assert_eq!(s.reference("DPSO"), None);
        let s = find_suite("CA(4, 3^12)").unwrap();
        assert_eq!(s.reference("QLSCA"), Some(Reference { best: 233, mean: 236.77 }));
        assert_eq!(s.reference("APSO"), None);
    }

    #[test]
    fn impossible_published_bests_are_corrected() {
        let k8 = find_suite("CA(2,3^8)").unwrap();
        let k9 = find_suite("CA(2,3^9)").unwrap();
        assert_eq!(k8.reference("SCA").unwrap().best, 15);
        assert_eq!(k9.reference("QLSCA").unwrap().best, 15);
        assert_eq!(k8.notes.len(), 1);
    }

    #[test]
    fn reference_bests_respect_lower_bound() {
        for s in builtin_suites() {
            let lb = crate::verify::size_lower_bound(&s.config);
            for (label, r) in &s.reference_values {
                assert!(r.best >= lb, "{} {label}: {} < {lb}", s.id(), r.best);
                let noted = s.notes.iter().any(|n| n.starts_with(label.as_str()));
                assert!(noted || r.mean >= r.best as f64, "{} {label}", s.id());
            }
        }
    }

    #[test]
    fn filters() {
        assert_eq!(filter_suites("pair-3k/*").unwrap().len(), 10);
        assert_eq!(filter_suites("CA(2,3^7)").unwrap().len(), 2);
        assert_eq!(filter_suites("MCA*").unwrap().len(), 3);
        assert!(filter_suites("[").is_err());
    }

    fn small_spec(reps: usize) -> BenchmarkSpec {
        BenchmarkSpec::new(CAConfig::new(2, vec![3, 2, 2, 2]).unwrap()).with_repetitions(reps).with_base_seed(40)
    }

    #[test]
    fn single_repetition_mean_is_best() {
        let r = run_benchmark(&small_spec(1), &EngineConfig::<f64>::default(), 1).unwrap();
        for sr in &r.strategies {
            assert_eq!(sr.mean_size, sr.best_size as f64);
            assert_eq!(sr.std_dev, 0.0);
        }
    }

    #[test]
    fn aggregation_is_exact() {
        let r = run_benchmark(&small_spec(7), &EngineConfig::<f64>::default(), 2).unwrap();
        for sr in &r.strategies {
            assert_eq!(sr.runs.len(), 7);
            assert_eq!(sr.total_size, sr.runs.iter().map(|x| x.size as u64).sum::<u64>());
            assert!((sr.mean_size * 7.0 - sr.total_size as f64).abs() < 1e-9);
            assert_eq!(sr.runs[3].seed, 43);
        }
    }

    #[test]
    fn parallelism_does_not_change_results() {
        let spec = small_spec(6);
        let engine = EngineConfig::<f64>::default();
        let a = run_benchmark(&spec, &engine, 1).unwrap();
        let b = run_benchmark(&spec, &engine, 4).unwrap();
        let mut ca = Vec::new();
        let mut cb = Vec::new();
        write_runs_csv(&mut ca, &[a], Timing::Omit).unwrap();
        write_runs_csv(&mut cb, &[b], Timing::Omit).unwrap();
        assert_eq!(ca, cb);
    }

    #[test]
    fn runs_csv_round_trip() {
        let r = run_benchmark(&small_spec(2), &EngineConfig::<f64>::default(), 1).unwrap();
        let mut buf = Vec::new();
        write_runs_csv(&mut buf, std::slice::from_ref(&r), Timing::Omit).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "benchmark,run_index,strategy,seed,size,wall_millis,rounds,fallback_count,op_sine,op_cosine,op_levy,op_crossover\n"
        ));
        let back = read_runs_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 4);
        assert_eq!(back[0].wall_millis, None);
        assert_eq!(back[0].size, r.strategies[0].runs[0].size);
    }

    #[test]
    fn summary_flags_reference() {
        let mut spec = small_spec(2).with_strategies([Strategy::Qlsca]);
        spec.reference_values.insert("QLSCA".into(), Reference { best: 7, mean: 7.0 });
        let r = run_benchmark(&spec, &EngineConfig::<f64>::default(), 1).unwrap();
        let recs = summary_records(&[r], Timing::Include);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].reference_best, Some(7));
        assert_eq!(recs[0].reference_met, Some(recs[0].best <= 7));
    }

    #[test]
    fn trace_csv_columns() {
        let engine = EngineConfig::<f64> { record_qtable: true, ..Default::default() };
        let report = generate(&CAConfig::new(2, vec![3, 2, 2, 2]).unwrap(), &engine, Strategy::Qlsca).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &report).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("round,iteration,best_fitness,q_si_si"));
        assert_eq!(text.lines().count(), report.convergence.len() + 1);
    }

    #[test]
    fn zero_repetitions_rejected() {
        assert!(run_benchmark(&small_spec(0), &EngineConfig::<f64>::default(), 1).is_err());
    }

    fn record(bench: &str, strategy: &str, size: usize) -> RunRecord {
        RunRecord {
            benchmark: bench.into(),
            run_index: 0,
            strategy: strategy.into(),
            seed: 0,
            size,
            wall_millis: None,
            rounds: 0,
            fallback_count: 0,
            op_sine: 0,
            op_cosine: 0,
            op_levy: 0,
            op_crossover: 0,
        }
    }

    #[test]
    fn comparisons_and_holm() {
        let mut recs = Vec::new();
        for i in 0..12 {
            recs.push(record("a", "qlsca", 10 + i % 2));
            recs.push(record("a", "sca", 14 + i % 3));
            recs.push(record("b", "qlsca", 20 + i % 4));
            recs.push(record("b", "sca", 20 + (i + 1) % 4));
        }
        let cmp = compare_runs(&recs, "QLSCA", &[0.05, 0.10]).unwrap();
        assert_eq!(cmp.len(), 2);
        assert_eq!(cmp[0].benchmark, "a");
        assert!(cmp[0].test.p_value < 1e-3 && cmp[0].test.statistic < 0.0);
        assert!(cmp[0].decisions.iter().all(|(_, d)| d.reject));
        assert!(cmp[1].decisions.iter().all(|(_, d)| !d.reject));
        let mut buf = Vec::new();
        write_stats_csv(&mut buf, &cmp, &[0.05, 0.10]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().next().unwrap().ends_with("holm_threshold_0.1,reject_0.1"));
        assert!(compare_runs(&recs, "dpso", &[0.05]).is_err());
    }
}
