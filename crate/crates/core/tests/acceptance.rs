//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails the
//! test run if any criterion fails.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use model_search::catalog::{build_pool, ModelCatalog, ModelRecord, Pool, PoolId, PoolSpec, TaskCatalog, TaskGroup, TaskRecord};
use model_search::metrics::{
    absolute_regret, build_report, correlation_limit_demo, load_budget_curves, load_min_budgets, log_odds_delta,
    relative_delta, save_budget_curves, save_min_budgets, BudgetCurve, MinBudgetRow, RegretReport, RegretRow, Report,
};
use model_search::proxy::{knn_eval, linear_eval, score_pool, KnnConfig, LinearEvalConfig, ProxyConfig};
use model_search::store::{AccuracyTable, EmbeddingMatrix, ProxyCache, ProxyKind, ProxyScoreTable};
use model_search::strategy::{load_selections, save_selections, Ranking, Selection, Strategy, StrategyInputs};
use model_search::synth::{generate, load_ground_truth, save_ground_truth, SynthConfig, SynthData};

const KNN_INSTANCES: usize = 200;
const KNN_TIME_LIMIT: Duration = Duration::from_secs(10);
const PROBE_MIN_ACCURACY: f64 = 0.95;
const METRIC_CONFIGS: usize = 1000;
const ANTISYMMETRY_TOL: f64 = 1e-12;
const AGNOSTIC_MIN_REL_REGRET: f64 = 0.2;
const MIN_BUDGET_INSTANCES: usize = 50;
const ROUND_TRIP_INSTANCES: usize = 100;
const SUITE_TIME_LIMIT: Duration = Duration::from_secs(300);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(failures: Vec<String>, ok_detail: String) -> Verdict {
    if failures.is_empty() {
        Verdict {
            pass: true,
            detail: ok_detail,
        }
    } else {
        Verdict {
            pass: false,
            detail: format!("{} failure(s); first: {}", failures.len(), failures[0]),
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// 1. kNN against brute force

fn brute_force_knn(train: &EmbeddingMatrix, val: &EmbeddingMatrix, k: usize) -> usize {
    let mut correct = 0;
    for i in 0..val.n() {
        let q = val.row(i);
        let mut all: Vec<(f64, usize)> = (0..train.n())
            .map(|j| {
                let d: f64 = q.iter().zip(train.row(j)).map(|(a, b)| (f64::from(*a) - f64::from(*b)).powi(2)).sum();
                (d, j)
            })
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let picked = &all[..k];
        let mut counts: HashMap<u32, usize> = HashMap::new();
        for &(_, j) in picked {
            *counts.entry(train.labels()[j]).or_default() += 1;
        }
        let top = *counts.values().max().unwrap();
        let winner = picked
            .iter()
            .map(|&(_, j)| train.labels()[j])
            .find(|l| counts[l] == top)
            .unwrap();
        if winner == val.labels()[i] {
            correct += 1;
        }
    }
    correct
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize, classes: u32) -> EmbeddingMatrix {
    let labels = (0..n).map(|_| rng.random_range(0..classes)).collect();
    // small integers make distance ties common
    let features = (0..n * d).map(|_| rng.random_range(-2i32..=2) as f32).collect();
    EmbeddingMatrix::new(classes, d, labels, features).unwrap()
}

fn knn_oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let mut r = rng(1);
    let mut failures = Vec::new();
    for case in 0..KNN_INSTANCES {
        let d = r.random_range(1..=8);
        let classes = r.random_range(1..=4);
        let n_train = r.random_range(1..=50);
        let n_val = r.random_range(1..=50);
        let k = r.random_range(1..=n_train.min(5));
        let train = random_matrix(&mut r, n_train, d, classes);
        let val = random_matrix(&mut r, n_val, d, classes);
        let got = knn_eval(&train, &val, &KnnConfig { k }).unwrap();
        let want = brute_force_knn(&train, &val, k) as f64 / n_val as f64;
        if got != want {
            failures.push(format!("case {case}: knn_eval {got} vs brute force {want}"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > KNN_TIME_LIMIT {
        failures.push(format!("took {elapsed:?}"));
    }
    verdict(failures, format!("{KNN_INSTANCES} instances exact, {elapsed:.2?}"))
}

// ---------------------------------------------------------------------------
// 2. Linear probe on separable blobs

fn two_blobs(rng: &mut ChaCha8Rng, n: usize) -> EmbeddingMatrix {
    let d = 4;
    let mut labels = Vec::with_capacity(n);
    let mut features = Vec::with_capacity(n * d);
    for i in 0..n {
        let label = (i % 2) as u32;
        // the two classes are at least 1.0 apart along the first axis
        let lead: f32 = rng.random_range(0.5..3.0);
        features.push(if label == 0 { -lead } else { lead });
        features.extend((1..d).map(|_| rng.random_range(-1.0f32..1.0)));
        labels.push(label);
    }
    EmbeddingMatrix::new(2, d, labels, features).unwrap()
}

fn linear_probe_sanity() -> Verdict {
    let mut r = rng(2);
    let train = two_blobs(&mut r, 400);
    let val = two_blobs(&mut r, 200);
    let cfg = LinearEvalConfig::default();
    let pool = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| linear_eval(&train, &val, &cfg).unwrap())
    };
    let first = linear_eval(&train, &val, &cfg).unwrap();
    let second = linear_eval(&train, &val, &cfg).unwrap();
    let one = pool(1);
    let eight = pool(8);
    let mut failures = Vec::new();
    if first < PROBE_MIN_ACCURACY {
        failures.push(format!("accuracy {first} < {PROBE_MIN_ACCURACY}"));
    }
    if first.to_bits() != second.to_bits() || one.to_bits() != eight.to_bits() || one.to_bits() != first.to_bits() {
        failures.push(format!("not reproducible: {first} {second} jobs1={one} jobs8={eight}"));
    }
    verdict(failures, format!("val accuracy {first:.6}, identical across runs and 1/8 threads"))
}

// ---------------------------------------------------------------------------
// 3. Metric identities

fn metric_identities() -> Verdict {
    let mut r = rng(3);
    let mut failures = Vec::new();
    for case in 0..METRIC_CONFIGS {
        let n = r.random_range(1..=10);
        let ids: Vec<String> = (0..n).map(|i| format!("m{i}")).collect();
        let grid = r.random_bool(0.5);
        let table = AccuracyTable::with_aggregates(ids.iter().map(|m| {
            let acc = if grid { f64::from(r.random_range(0..=4u32)) / 4.0 } else { r.random::<f64>() };
            (m.as_str(), "t", acc)
        }))
        .unwrap();
        let pool = Pool::from_members(PoolId::All, ids.clone());
        let mut order = ids.clone();
        order.shuffle(&mut r);
        let mut previous = f64::INFINITY;
        for b in 1..=n {
            let regret = absolute_regret(&pool, &order[..b], "t", &table).unwrap();
            if regret < 0.0 {
                failures.push(format!("case {case}: negative regret {regret}"));
            }
            if regret > previous {
                failures.push(format!("case {case}: regret rose from {previous} to {regret} at B={b}"));
            }
            previous = regret;
        }
        if previous != 0.0 {
            failures.push(format!("case {case}: full-budget regret {previous}"));
        }

        let a: f64 = r.random_range(0.0..1.0);
        let b: f64 = if r.random_bool(0.1) { a } else { r.random_range(0.0..1.0) };
        let sum = relative_delta(a, b).unwrap() + relative_delta(b, a).unwrap();
        if sum.abs() > ANTISYMMETRY_TOL {
            failures.push(format!("case {case}: antisymmetry off by {sum:e} at ({a}, {b})"));
        }
        if a > 0.0 && b > 0.0 {
            let rel = relative_delta(a, b).unwrap();
            let lo = log_odds_delta(a, b).unwrap();
            let sign = |v: f64| if v > 0.0 { 1 } else if v < 0.0 { -1 } else { 0 };
            if sign(rel) != sign(lo) || sign(rel) != sign(a - b) {
                failures.push(format!("case {case}: signs differ at ({a}, {b}): {rel} {lo}"));
            }
        }
    }
    verdict(failures, format!("{METRIC_CONFIGS} configurations"))
}

// ---------------------------------------------------------------------------
// 4 + 5. Synthetic expert suite

struct ExpertSuite {
    data: SynthData,
    report: Report,
    elapsed: Duration,
}

fn expert_suite() -> ExpertSuite {
    let start = Instant::now();
    let cfg = SynthConfig {
        n_models: 12,
        n_tasks: 6,
        n_experts: 2,
        seed: 7,
        accuracy_noise_sd: 0.0,
        ..Default::default()
    };
    let data = generate(&cfg).unwrap();
    let pool = build_pool(&data.catalog, &PoolSpec::builtin(PoolId::All)).unwrap();
    let cache = ProxyCache::in_memory();
    let probe = ProxyConfig::Linear(LinearEvalConfig::default());
    let mut scores = ProxyScoreTable::new();
    for task in data.task_ids() {
        let s = score_pool(&pool, &task, &probe, &data.catalog, &data.embeddings, &cache).unwrap();
        scores.merge(&s.scores).unwrap();
    }
    let task_ids = data.task_ids();
    let inputs = StrategyInputs {
        catalog: &data.catalog,
        proxy_scores: &scores,
        accuracy: &data.accuracy,
        task_ids: &task_ids,
    };
    let strategies = [
        Strategy::TaskAgnostic,
        Strategy::TaskAware(ProxyKind::Linear),
        Strategy::Hybrid(ProxyKind::Linear),
    ];
    let report = build_report(&inputs, &[pool], data.tasks.tasks(), &strategies, &[1, 2]).unwrap();
    ExpertSuite {
        data,
        report,
        elapsed: start.elapsed(),
    }
}

fn row<'a>(report: &'a Report, task: &str, strategy: Strategy, budget: usize) -> &'a RegretRow {
    report.regret.find(&PoolId::All, task, strategy, budget).expect("row present")
}

fn expert_scenario(suite: &ExpertSuite) -> Verdict {
    let mut failures = Vec::new();
    let mut worst_agnostic = f64::INFINITY;
    for (expert, task) in &suite.data.experts {
        let agnostic = row(&suite.report, task, Strategy::TaskAgnostic, 1);
        worst_agnostic = worst_agnostic.min(agnostic.rel_regret);
        if agnostic.rel_regret < AGNOSTIC_MIN_REL_REGRET {
            failures.push(format!("{task}: agnostic relative regret {} below {AGNOSTIC_MIN_REL_REGRET}", agnostic.rel_regret));
        }
        let linear = row(&suite.report, task, Strategy::TaskAware(ProxyKind::Linear), 1);
        if linear.rel_regret != 0.0 {
            failures.push(format!("{task}: linear relative regret {} (expert {expert})", linear.rel_regret));
        }
    }
    for task in suite.data.task_ids() {
        let hybrid = row(&suite.report, &task, Strategy::Hybrid(ProxyKind::Linear), 2);
        if hybrid.abs_regret != 0.0 {
            failures.push(format!("{task}: hybrid-linear B=2 regret {}", hybrid.abs_regret));
        }
    }
    if suite.data.experts.len() != 2 {
        failures.push(format!("expected 2 experts, found {}", suite.data.experts.len()));
    }
    verdict(
        failures,
        format!(
            "agnostic B=1 relative regret on expert tasks >= {worst_agnostic:.3}, linear 0, hybrid-linear B=2 zero on all 6 tasks ({:.1?})",
            suite.elapsed
        ),
    )
}

fn curve(report: &Report, strategy: Strategy) -> &BudgetCurve {
    report.curves.iter().find(|c| c.strategy == strategy).expect("curve present")
}

fn budget_curve_dominance(suite: &ExpertSuite) -> Verdict {
    let mut failures = Vec::new();
    let agnostic = curve(&suite.report, Strategy::TaskAgnostic);
    let linear = curve(&suite.report, Strategy::TaskAware(ProxyKind::Linear));
    let hybrid = curve(&suite.report, Strategy::Hybrid(ProxyKind::Linear));
    let pool_size = suite.data.catalog.len();
    for c in [agnostic, linear, hybrid] {
        if c.fractions.len() != pool_size {
            failures.push(format!("{} curve has {} points", c.strategy, c.fractions.len()));
        }
        if c.fractions.windows(2).any(|w| w[1] < w[0]) {
            failures.push(format!("{} curve decreases", c.strategy));
        }
        if c.fractions.last() != Some(&1.0) {
            failures.push(format!("{} curve ends at {:?}", c.strategy, c.fractions.last()));
        }
    }
    for b in 1..=pool_size {
        let (h, a, l) = (hybrid.at(b).unwrap(), agnostic.at(b).unwrap(), linear.at(b).unwrap());
        if h < a.max(l) {
            failures.push(format!("B={b}: hybrid {h} < max(agnostic {a}, linear {l})"));
        }
    }
    let show = |c: &BudgetCurve| c.fractions[..3].iter().map(|f| format!("{f:.2}")).collect::<Vec<_>>().join("/");
    verdict(
        failures,
        format!(
            "B=1..3 agnostic {} linear {} hybrid {}",
            show(agnostic),
            show(linear),
            show(hybrid)
        ),
    )
}

// ---------------------------------------------------------------------------
// 6. Minimal budgets against a prefix scan

fn random_catalog(r: &mut ChaCha8Rng, n: usize) -> ModelCatalog {
    let models = (0..n)
        .map(|i| ModelRecord {
            model_id: format!("model_{i:02}"),
            display_name: format!("Model {i}"),
            embedding_dim: [128u32, 512, 2048][r.random_range(0..3)],
            param_count: r.random_range(1_000..100_000_000),
            imagenet_accuracy: r.random_bool(0.6).then(|| f64::from(r.random_range(500..900u32)) / 1000.0),
            upstream_dataset_name: "upstream".into(),
            upstream_dataset_size: r.random_bool(0.7).then(|| r.random_range(1_000..10_000u64)),
            tags: if r.random_bool(0.3) { ["expert".to_string()].into() } else { Default::default() },
        })
        .collect();
    ModelCatalog::new(models).unwrap()
}

fn random_task(i: usize, r: &mut ChaCha8Rng) -> TaskRecord {
    TaskRecord {
        task_id: format!("task_{i}"),
        group: TaskGroup::ALL[r.random_range(0..3)],
        n_train: 800,
        n_val: 200,
        n_test: r.random_range(500..20_000),
        n_classes: r.random_range(2..100),
    }
}

fn prefix_scan(ranking: &[String], task: &str, table: &AccuracyTable) -> usize {
    let values: Vec<f64> = ranking.iter().map(|m| table.aggregate(m, task).unwrap()).collect();
    let best = values.iter().copied().fold(f64::MIN, f64::max);
    (1..=values.len())
        .find(|&b| values[..b].iter().copied().fold(f64::MIN, f64::max) == best)
        .unwrap()
}

fn min_budget_table(dir: &Path) -> Verdict {
    let mut r = rng(6);
    let mut failures = Vec::new();
    for case in 0..MIN_BUDGET_INSTANCES {
        let n = r.random_range(1..=12);
        let catalog = random_catalog(&mut r, n);
        let tasks: Vec<TaskRecord> = (0..r.random_range(1..=4)).map(|i| random_task(i, &mut r)).collect();
        let task_ids: Vec<String> = tasks.iter().map(|t| t.task_id.clone()).collect();
        let mut accuracy = AccuracyTable::new();
        let mut scores = ProxyScoreTable::new();
        for m in catalog.iter() {
            for t in &task_ids {
                for run in 0..3 {
                    accuracy.insert_run(&m.model_id, t, run, f64::from(r.random_range(0..=8u32)) / 8.0).unwrap();
                }
                for kind in [ProxyKind::Linear, ProxyKind::Knn] {
                    scores.insert(&m.model_id, t, kind, f64::from(r.random_range(0..=5u32)) / 5.0, "x").unwrap();
                }
            }
        }
        let pool = build_pool(&catalog, &PoolSpec::builtin(PoolId::All)).unwrap();
        let inputs = StrategyInputs {
            catalog: &catalog,
            proxy_scores: &scores,
            accuracy: &accuracy,
            task_ids: &task_ids,
        };
        let report = build_report(&inputs, std::slice::from_ref(&pool), &tasks, &Strategy::ALL, &[1]).unwrap();
        let path = dir.join(format!("min_budget_{case}.csv"));
        save_min_budgets(&path, &report.min_budgets).unwrap();
        for row in load_min_budgets(&path).unwrap() {
            let ranking = model_search::strategy::rank(row.strategy, &inputs, &pool, &row.task_id).unwrap();
            let want = prefix_scan(&ranking.ordered_models, &row.task_id, &accuracy);
            if row.min_budget != want {
                failures.push(format!(
                    "case {case}: {} on {} emitted {} vs scan {want}",
                    row.strategy, row.task_id, row.min_budget
                ));
            }
        }
    }
    verdict(failures, format!("{MIN_BUDGET_INSTANCES} instances, all strategies"))
}

// ---------------------------------------------------------------------------
// 7. Correlation-limitation demo

fn correlation_demo(dir: &Path) -> Verdict {
    let demo = correlation_limit_demo().unwrap();
    let mut failures = Vec::new();
    for row in &demo.identical.rows {
        if row.abs_regret != 0.0 || row.rel_regret != 0.0 {
            failures.push(format!("{} regret {}", row.strategy, row.abs_regret));
        }
    }
    if demo.identical.rows.len() != Strategy::ALL.len() {
        failures.push(format!("{} strategies evaluated", demo.identical.rows.len()));
    }
    if demo.identical.pearson.is_some() {
        failures.push(format!("pearson reported {:?}", demo.identical.pearson));
    }
    let path = dir.join("demo.csv");
    demo.save_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    if !text.lines().filter(|l| l.starts_with("identical,")).all(|l| l.ends_with(",undefined")) {
        failures.push("written pearson column is not `undefined`".into());
    }
    verdict(failures, format!("{} strategies at regret 0, pearson undefined", demo.identical.rows.len()))
}

// ---------------------------------------------------------------------------
// 8. Format round trips

fn resave<T>(path: &Path, save: impl Fn(&Path, &T), load: impl Fn(&Path) -> T) -> Option<String> {
    let first = std::fs::read(path).unwrap();
    let again = path.with_extension("again");
    save(&again, &load(path));
    let second = std::fs::read(&again).unwrap();
    (first != second).then(|| format!("{} changed on re-save", path.display()))
}

fn random_instance_round_trip(case: usize, r: &mut ChaCha8Rng, dir: &Path) -> Vec<String> {
    let dir = dir.join(format!("case_{case}"));
    std::fs::create_dir_all(&dir).unwrap();
    let mut failures = Vec::new();
    let mut check = |f: Option<String>| failures.extend(f);

    // EMB1 with arbitrary floats, including negative zero and subnormals
    let n = r.random_range(1..20);
    let d = r.random_range(1..10);
    let classes = r.random_range(1..5);
    let features = (0..n * d)
        .map(|i| match i % 7 {
            0 => -0.0,
            1 => f32::from_bits(r.random_range(1..0x007f_ffff)),
            _ => r.random_range(-1e6f32..1e6),
        })
        .collect();
    let m = EmbeddingMatrix::new(classes, d, (0..n).map(|_| r.random_range(0..classes)).collect(), features).unwrap();
    let emb = dir.join("x.emb");
    model_search::store::save_embeddings(&m, &emb).unwrap();
    check(resave(&emb, |p, m| model_search::store::save_embeddings(m, p).unwrap(), |p| {
        model_search::store::load_embeddings(p).unwrap()
    }));

    let n_models = r.random_range(1..8);
    let catalog = random_catalog(r, n_models);
    let p = dir.join("models.csv");
    catalog.save_csv(&p).unwrap();
    check(resave(&p, |p, c: &ModelCatalog| c.save_csv(p).unwrap(), |p| ModelCatalog::load_csv(p).unwrap()));

    let tasks = TaskCatalog::new((0..r.random_range(1..5)).map(|i| random_task(i, r)).collect()).unwrap();
    let p = dir.join("tasks.csv");
    tasks.save_csv(&p).unwrap();
    check(resave(&p, |p, t: &TaskCatalog| t.save_csv(p).unwrap(), |p| TaskCatalog::load_csv(p).unwrap()));

    let mut accuracy = AccuracyTable::new();
    let mut scores = ProxyScoreTable::new();
    for m in catalog.iter() {
        for t in tasks.iter() {
            for run in 0..r.random_range(1..4) {
                accuracy.insert_run(&m.model_id, &t.task_id, run, r.random::<f64>()).unwrap();
            }
            scores
                .insert(&m.model_id, &t.task_id, ProxyKind::Knn, r.random::<f64>(), "0123456789abcdef")
                .unwrap();
        }
    }
    let p = dir.join("accuracy.csv");
    accuracy.save_csv(&p).unwrap();
    check(resave(&p, |p, a: &AccuracyTable| a.save_csv(p).unwrap(), |p| AccuracyTable::load_csv(p).unwrap()));
    let p = dir.join("proxy.csv");
    scores.save_csv(&p).unwrap();
    check(resave(&p, |p, s: &ProxyScoreTable| s.save_csv(p).unwrap(), |p| ProxyScoreTable::load_csv(p).unwrap()));

    let regret = RegretReport {
        rows: (0..r.random_range(1..6))
            .map(|i| {
                let oracle = if r.random_bool(0.2) { 1.0 } else { r.random::<f64>() };
                let achieved = oracle * r.random::<f64>();
                let task = random_task(i, r);
                RegretRow::new(PoolId::Expert, &task, Strategy::ALL[i % 6], i + 1, oracle, achieved).unwrap()
            })
            .collect(),
    };
    let p = dir.join("regret.csv");
    regret.save_csv(&p).unwrap();
    check(resave(&p, |p, x: &RegretReport| x.save_csv(p).unwrap(), |p| RegretReport::load_csv(p).unwrap()));

    let curves: Vec<BudgetCurve> = Strategy::ALL[..r.random_range(1..6)]
        .iter()
        .map(|&s| BudgetCurve {
            pool_id: PoolId::Custom("mine".into()),
            strategy: s,
            fractions: (0..r.random_range(1..6)).map(|_| r.random::<f64>()).collect(),
        })
        .collect();
    let p = dir.join("curve.csv");
    save_budget_curves(&p, &curves).unwrap();
    check(resave(&p, |p, c: &Vec<BudgetCurve>| save_budget_curves(p, c).unwrap(), |p| load_budget_curves(p).unwrap()));

    let mins: Vec<MinBudgetRow> = (0..r.random_range(1..6))
        .map(|i| MinBudgetRow {
            task_id: format!("task_{i}"),
            pool_id: PoolId::BUILTIN[i % 5].clone(),
            strategy: Strategy::ALL[i % 6],
            min_budget: r.random_range(1..50),
        })
        .collect();
    let p = dir.join("min.csv");
    save_min_budgets(&p, &mins).unwrap();
    check(resave(&p, |p, m: &Vec<MinBudgetRow>| save_min_budgets(p, m).unwrap(), |p| load_min_budgets(p).unwrap()));

    let ids: Vec<String> = catalog.iter().map(|m| m.model_id.clone()).collect();
    let selections: Vec<Selection> = Strategy::ALL
        .iter()
        .map(|&s| {
            let ranking = Ranking {
                strategy: s,
                pool_id: PoolId::All,
                task_id: r.random_bool(0.5).then(|| "task_0".to_string()),
                ordered_models: ids.clone(),
            };
            model_search::strategy::select_top(&ranking, r.random_range(1..=ids.len())).unwrap()
        })
        .collect();
    let p = dir.join("selection.csv");
    save_selections(&p, &selections).unwrap();
    check(resave(&p, |p, s: &Vec<Selection>| save_selections(p, s).unwrap(), |p| load_selections(p).unwrap()));

    let truth: Vec<_> = model_search::synth::generate(&SynthConfig {
        n_models: 2,
        n_tasks: 2,
        n_experts: 1,
        n_train: 8,
        n_val: 4,
        seed: r.random(),
        ..Default::default()
    })
    .unwrap()
    .ground_truth;
    let p = dir.join("truth.csv");
    save_ground_truth(&p, &truth).unwrap();
    check(resave(&p, |p, t: &Vec<_>| save_ground_truth(p, t).unwrap(), |p| load_ground_truth(p).unwrap()));

    failures
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let key = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(key, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn format_round_trips(dir: &Path, suite: &ExpertSuite) -> Verdict {
    let mut r = rng(8);
    let mut failures = Vec::new();
    for case in 0..ROUND_TRIP_INSTANCES {
        failures.extend(random_instance_round_trip(case, &mut r, &dir.join("random")));
    }
    let cfg = SynthConfig {
        seed: 7,
        ..Default::default()
    };
    let (a, b) = (dir.join("synth_a"), dir.join("synth_b"));
    generate(&cfg).unwrap().write_to(&a).unwrap();
    generate(&cfg).unwrap().write_to(&b).unwrap();
    let (ta, tb) = (read_tree(&a), read_tree(&b));
    if ta != tb {
        failures.push("synthetic trees differ between runs".into());
    }
    let c = dir.join("synth_c");
    suite.data.write_to(&c).unwrap();
    if read_tree(&c) != ta {
        failures.push("suite data differs from a fresh generation".into());
    }
    verdict(
        failures,
        format!("{ROUND_TRIP_INSTANCES} random instances x 10 formats, {} synthetic files identical", ta.len()),
    )
}

fn main() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut results: Vec<(u8, &str, Verdict)> = Vec::new();

    results.push((1, "kNN oracle equivalence", knn_oracle_equivalence()));
    results.push((2, "linear-probe sanity", linear_probe_sanity()));
    results.push((3, "metric identity suite", metric_identities()));
    let suite = expert_suite();
    results.push((4, "expert-scenario reproduction", expert_scenario(&suite)));
    results.push((5, "budget-curve dominance", budget_curve_dominance(&suite)));
    results.push((6, "min-budget table generation", min_budget_table(dir.path())));
    results.push((7, "correlation-limitation demo", correlation_demo(dir.path())));
    let mut round_trips = format_round_trips(dir.path(), &suite);
    let elapsed = start.elapsed();
    if elapsed > SUITE_TIME_LIMIT {
        round_trips.pass = false;
        round_trips.detail = format!("suite took {elapsed:.1?}, limit {SUITE_TIME_LIMIT:?}; {}", round_trips.detail);
    } else {
        round_trips.detail = format!("{}; whole suite {elapsed:.1?}", round_trips.detail);
    }
    results.push((8, "format round-trips", round_trips));

    for (id, name, v) in &results {
        println!("{} {id} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    let failed: Vec<u8> = results.iter().filter(|(_, _, v)| !v.pass).map(|(id, _, _)| *id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
