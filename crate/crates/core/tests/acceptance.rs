//! Acceptance criteria 1 to 10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::time::{Duration, Instant};

use cagen::bench::{
    bonferroni_holm, run_benchmark, wilcoxon_rank_sum, write_runs_csv, BenchmarkSpec, StrategyResult, Timing,
};
use cagen::operators::{clamp_absorbing, crossover_update, mantegna_sigma_u};
use cagen::{
    build_store, generate, verify_suite, CAConfig, EngineConfigF64, OperatorKind, QTable, ScheduleParams, Strategy,
    TestCase,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn thirty(config: CAConfig, strategies: &[Strategy]) -> Vec<StrategyResult> {
    let spec = BenchmarkSpec::new(config).with_strategies(strategies.iter().copied());
    run_benchmark(&spec, &EngineConfigF64::default(), threads()).expect("benchmark runs").strategies
}

fn correctness_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = Vec::new();
    for i in 0..200u64 {
        let k = rng.random_range(2..=8usize);
        let t = rng.random_range(2..=k.min(3));
        let v: Vec<u32> = (0..k).map(|_| rng.random_range(2..=5)).collect();
        let cfg = CAConfig::new(t, v).unwrap();
        let strategy = if i % 2 == 0 { Strategy::Qlsca } else { Strategy::Sca };
        let report = generate(&cfg, &EngineConfigF64::default().with_seed(i), strategy).unwrap();
        let check = verify_suite(&report.suite);
        if !check.is_valid() {
            failures.push(format!("{cfg} {strategy} seed {i}: {} missing", check.missing.len()));
        }
    }
    Outcome { pass: failures.is_empty(), detail: format!("200 configs, {} incomplete {failures:?}", failures.len()) }
}

fn small_ca() -> Outcome {
    let r = &thirty(CAConfig::uniform(2, 3, 4).unwrap(), &[Strategy::Qlsca])[0];
    Outcome {
        pass: r.best_size == 9 && r.mean_size <= 9.6,
        detail: format!("CA(2,3^4) QLSCA best {} (need 9), mean {:.2} (need <= 9.6)", r.best_size, r.mean_size),
    }
}

fn pairwise_mixed() -> Outcome {
    let r = &thirty(CAConfig::new(2, vec![3, 2, 2, 2]).unwrap(), &[Strategy::Qlsca])[0];
    Outcome {
        pass: r.best_size <= 7,
        detail: format!("MCA(2,3^1 2^3) QLSCA best {} (need <= 7), mean {:.2}", r.best_size, r.mean_size),
    }
}

fn medium_ca() -> Outcome {
    let r = &thirty(CAConfig::uniform(2, 3, 13).unwrap(), &[Strategy::Qlsca])[0];
    let seventeen = if r.best_size <= 17 { ", published 17 reached" } else { ", published 17 not reached" };
    Outcome {
        pass: r.best_size <= 19 && r.mean_size <= 21.0,
        detail: format!(
            "CA(2,3^13) QLSCA best {} (need <= 19), mean {:.2} (need <= 21){seventeen}",
            r.best_size, r.mean_size
        ),
    }
}

fn dominance() -> Outcome {
    let configs = [
        CAConfig::uniform(2, 3, 13).unwrap(),
        CAConfig::new(2, vec![5, 3, 3, 3, 3, 3, 3, 3, 3, 2, 2]).unwrap(),
        CAConfig::uniform(3, 4, 6).unwrap(),
    ];
    let mut wins = 0;
    let mut significant = 0;
    let mut parts = Vec::new();
    for cfg in configs {
        let rs = thirty(cfg.clone(), &[Strategy::Sca, Strategy::Qlsca]);
        let (sca, ql) = (&rs[0], &rs[1]);
        let test = wilcoxon_rank_sum(&ql.sizes(), &sca.sizes()).unwrap();
        wins += usize::from(ql.mean_size <= sca.mean_size);
        significant += usize::from(test.p_value < 0.10);
        parts.push(format!("{cfg} QLSCA {:.2} vs SCA {:.2} p={:.4}", ql.mean_size, sca.mean_size, test.p_value));
    }
    Outcome {
        pass: wins >= 2 && significant >= 1,
        detail: format!("{wins}/3 mean wins, {significant} with p < 0.10; {}", parts.join("; ")),
    }
}

fn q_example() -> Outcome {
    let mut q = QTable::<f64>::new(0.10, OperatorKind::Sine).unwrap();
    q.set_entry(OperatorKind::Sine, OperatorKind::Cosine, 1.22);
    q.set_entry(OperatorKind::Cosine, OperatorKind::Sine, 0.0);
    q.set_entry(OperatorKind::Cosine, OperatorKind::Cosine, -1.11);
    q.set_entry(OperatorKind::Cosine, OperatorKind::LevyFlight, 1.00);
    q.set_entry(OperatorKind::Cosine, OperatorKind::Crossover, -1.00);
    let got = q.update(OperatorKind::Sine, OperatorKind::Cosine, -1.0, 0.70);
    let want = 1.22 + 0.70 * (-1.00 + 0.10 * 1.00 - 1.22);
    Outcome {
        pass: (got - want).abs() <= 1e-12 && format!("{got:.2}") == "-0.26",
        detail: format!("updated entry {got:.12} (expected {want:.12}, prints {got:.2})"),
    }
}

fn sigma_u() -> Outcome {
    let direct = mantegna_sigma_u(1.5);
    let sched = ScheduleParams::<f64>::default().sigma_u();
    Outcome {
        pass: (direct - 0.6966).abs() <= 1e-3 && (sched - direct).abs() <= 1e-12,
        detail: format!("sigma_u(1.5) = {direct:.6} (expected 0.6966 within 1e-3)"),
    }
}

fn determinism() -> Outcome {
    let csv = |parallelism: usize| {
        let specs = [
            BenchmarkSpec::new(CAConfig::uniform(2, 3, 4).unwrap()).with_base_seed(7),
            BenchmarkSpec::new(CAConfig::new(3, vec![4, 3, 3, 2, 2]).unwrap()).with_repetitions(12).with_base_seed(99),
        ];
        let results: Vec<_> = specs
            .iter()
            .map(|s| run_benchmark(s, &EngineConfigF64::default(), parallelism).unwrap())
            .collect();
        let mut buf = Vec::new();
        write_runs_csv(&mut buf, &results, Timing::Omit).unwrap();
        buf
    };
    let (a, b, c) = (csv(1), csv(8), csv(8));
    Outcome {
        pass: a == b && b == c,
        detail: format!("{} byte per-run CSV, parallelism 1 vs 8 identical: {}, rerun identical: {}", a.len(), a == b, b == c),
    }
}

fn properties() -> Outcome {
    const CASES: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut broken: Vec<&str> = Vec::new();
    let mut fail = |name: &'static str| {
        if !broken.contains(&name) {
            broken.push(name);
        }
    };

    for _ in 0..CASES {
        // coverage conservation
        let k = rng.random_range(2..=6usize);
        let t = rng.random_range(2..=k.min(3));
        let cfg = CAConfig::new(t, (0..k).map(|_| rng.random_range(2..=4)).collect()).unwrap();
        let mut store = build_store(&cfg).unwrap();
        let initial = store.remaining();
        let mut removed = 0;
        while !store.is_empty() {
            let row = cfg.random_row(&mut rng);
            let before = store.remaining();
            let n = store.remove_covered(&row).unwrap();
            if store.remaining() != before - n {
                fail("conservation");
            }
            removed += n;
        }
        if removed != initial {
            fail("conservation");
        }

        // clamp range
        let v = rng.random_range(2..=64u32);
        let x: f64 = rng.random_range(-1e6..1e6);
        if clamp_absorbing(x, v).unwrap() >= v {
            fail("clamp");
        }

        // radius linearity
        let big_t = rng.random_range(1..=1000u32);
        let m: f64 = rng.random_range(0.01..10.0);
        let s = ScheduleParams::new(m, big_t, 1.5).unwrap();
        let i = rng.random_range(0..=big_t);
        if (s.radius(i) - m * (1.0 - i as f64 / big_t as f64)).abs() > 1e-12 * m.max(1.0) {
            fail("radius");
        }

        // Q-entry bound
        let mut q = QTable::<f64>::new(0.8, OperatorKind::Sine).unwrap();
        for _ in 0..50 {
            let s = OperatorKind::from_index(rng.random_range(0..4)).unwrap();
            let a = OperatorKind::from_index(rng.random_range(0..4)).unwrap();
            let r = if rng.random::<bool>() { 1.0 } else { -1.0 };
            q.update(s, a, r, rng.random::<f64>());
        }
        if q.snapshot().iter().any(|e| !(-5.0..=5.0).contains(e)) {
            fail("q-bound");
        }

        // crossover provenance
        let xi = cfg.random_row(&mut rng);
        let xj = cfg.random_row(&mut rng);
        let child: TestCase = crossover_update(&xi, &xj, &mut rng);
        let cut = (0..=k).find(|&c| child.values()[..c] == xj.values()[..c] && child.values()[c..] == xi.values()[c..]);
        if cut.is_none() {
            fail("crossover");
        }
    }

    // argmax tie uniformity: pooled χ² over a fresh row, 3 df, 0.001 level
    let q = QTable::<f64>::new(0.8, OperatorKind::Sine).unwrap();
    let mut counts = [0usize; 4];
    for _ in 0..CASES {
        counts[q.best_action(OperatorKind::Sine, &mut rng).index()] += 1;
    }
    let e = CASES as f64 / 4.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    if chi2 >= 16.27 {
        fail("argmax-ties");
    }

    Outcome {
        pass: broken.is_empty(),
        detail: format!("{CASES} cases each; tie chi2 {chi2:.2}; violated: {broken:?}"),
    }
}

fn statistics() -> Outcome {
    let mut worst = 0.0f64;
    let mut fixtures = 0;
    for line in include_str!("fixtures/ranksum.csv").lines().filter(|l| !l.starts_with('#')).skip(1) {
        let f: Vec<&str> = line.split(';').collect();
        let parse = |s: &str| s.split_whitespace().map(|x| x.parse::<f64>().unwrap()).collect::<Vec<_>>();
        let got = wilcoxon_rank_sum(&parse(f[0]), &parse(f[1])).unwrap();
        worst = worst.max((got.p_value - f[3].parse::<f64>().unwrap()).abs());
        fixtures += 1;
    }
    let mut holm_ok = 0;
    for line in include_str!("fixtures/holm.csv").lines().filter(|l| !l.starts_with('#')).skip(1) {
        let f: Vec<&str> = line.split(';').collect();
        let ps: Vec<(String, f64)> =
            f[1].split_whitespace().enumerate().map(|(i, p)| (i.to_string(), p.parse().unwrap())).collect();
        let want: Vec<bool> = f[2].split_whitespace().map(|x| x == "1").collect();
        let mut got = vec![false; ps.len()];
        for d in bonferroni_holm(&ps, f[0].parse().unwrap()).unwrap() {
            got[d.label.parse::<usize>().unwrap()] = d.reject;
        }
        holm_ok += usize::from(got == want);
    }
    let hand = bonferroni_holm(&[("a".into(), 0.01), ("b".into(), 0.04)], 0.05).unwrap();
    let hand_ok = hand.iter().map(|d| d.threshold).collect::<Vec<_>>() == [0.025, 0.05] && hand.iter().all(|d| d.reject);
    Outcome {
        pass: fixtures == 20 && worst < 1e-6 && holm_ok == 20 && hand_ok,
        detail: format!(
            "rank-sum {fixtures} fixtures, max |dp| {worst:.2e}; Holm {holm_ok}/20 fixtures; hand example {}",
            if hand_ok { "exact" } else { "wrong" }
        ),
    }
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(u32, &str, Check, Duration); 10] = [
        (1, "correctness oracle", correctness_oracle, Duration::from_secs(600)),
        (2, "small CA reproduction", small_ca, Duration::from_secs(60)),
        (3, "pairwise mixed-level", pairwise_mixed, Duration::from_secs(60)),
        (4, "medium CA", medium_ca, Duration::from_secs(900)),
        (5, "QLSCA vs SCA dominance", dominance, Duration::from_secs(2700)),
        (6, "Q-learning worked example", q_example, Duration::from_secs(1)),
        (7, "sigma_u numeric check", sigma_u, Duration::from_secs(1)),
        (8, "determinism", determinism, Duration::from_secs(300)),
        (9, "property suite", properties, Duration::from_secs(600)),
        (10, "statistics validation", statistics, Duration::from_secs(60)),
    ];
    let mut failed = Vec::new();
    for (n, name, check, budget) in criteria {
        let started = Instant::now();
        let outcome = check();
        let elapsed = started.elapsed();
        let in_time = elapsed <= budget;
        let pass = outcome.pass && in_time;
        println!(
            "criterion {n:>2} {}: {name}: {} [{:.1}s of {}s]{}",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { " over budget" },
        );
        if !pass {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
