use std::path::{Path, PathBuf};

use model_search::catalog::{build_pool, ModelCatalog, Pool, PoolId, PoolSpec, TaskCatalog, TaskRecord};
use model_search::metrics::{build_report, correlation_limit_demo, save_budget_curves, save_min_budgets};
use model_search::proxy::{score_pool, KnnConfig, LinearEvalConfig, ProxyConfig};
use model_search::store::{AccuracyTable, EmbeddingDir, ProxyCache, ProxyKind, ProxyScoreTable};
use model_search::strategy::{rank, save_selections, select_top, Strategy, StrategyInputs};
use model_search::synth::{generate, SynthConfig};
use model_search::table::fmt6_opt;
use model_search::{Error, Result};

use crate::chart::render_chart;
use crate::{Cli, Command, ProxyArgs, RankArgs, ReportArgs, SynthArgs};

const MODELS_FILE: &str = "models.csv";
const TASKS_FILE: &str = "tasks.csv";
const ACCURACY_FILE: &str = "accuracy.csv";
const PROXY_FILE: &str = "proxy_scores.csv";

struct Context {
    data_dir: PathBuf,
    out: PathBuf,
    seed: u64,
}

pub(crate) fn run(cli: Cli) -> Result<()> {
    let ctx = Context {
        out: cli.out.clone().unwrap_or_else(|| cli.data_dir.clone()),
        data_dir: cli.data_dir,
        seed: cli.seed,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} worker threads: {e}", cli.jobs)))?;
    pool.install(|| match cli.command {
        Command::Synth(args) => cmd_synth(&ctx, args),
        Command::Proxy(args) => cmd_proxy(&ctx, args),
        Command::Rank(args) => cmd_rank(&ctx, args),
        Command::Report(args) => cmd_report(&ctx, args),
        Command::DemoCorrelation => cmd_demo(&ctx),
    })
}

fn cmd_synth(ctx: &Context, args: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        n_models: args.models,
        n_tasks: args.tasks,
        n_classes: args.classes,
        n_train: args.train,
        n_val: args.val,
        dims: args.dims,
        n_experts: args.experts,
        quality_range: (args.quality_lo, args.quality_hi),
        expert_quality_bonus: args.expert_bonus,
        accuracy_noise_sd: args.noise,
        runs: args.runs,
        seed: ctx.seed,
        ..Default::default()
    };
    let data = generate(&cfg)?;
    data.write_to(&ctx.out)?;
    println!(
        "wrote {} models x {} tasks ({} experts) to {}",
        data.catalog.len(),
        data.tasks.len(),
        data.experts.len(),
        ctx.out.display()
    );
    Ok(())
}

fn load_catalogs(ctx: &Context) -> Result<(ModelCatalog, TaskCatalog)> {
    Ok((
        ModelCatalog::load_csv(&ctx.data_dir.join(MODELS_FILE))?,
        TaskCatalog::load_csv(&ctx.data_dir.join(TASKS_FILE))?,
    ))
}

fn pick_tasks(tasks: &TaskCatalog, wanted: &[String]) -> Result<Vec<TaskRecord>> {
    if wanted.is_empty() {
        return Ok(tasks.tasks().to_vec());
    }
    wanted.iter().map(|t| tasks.get(t).cloned()).collect()
}

fn resolve_pool(catalog: &ModelCatalog, name: &str) -> Result<Pool> {
    match name.parse::<PoolId>()? {
        PoolId::Custom(other) => Err(Error::Config(format!(
            "unknown pool `{other}`; expected one of {}",
            PoolId::BUILTIN.iter().map(PoolId::as_str).collect::<Vec<_>>().join(", ")
        ))),
        id => build_pool(catalog, &PoolSpec::builtin(id)),
    }
}

fn parse_strategies(names: &[String]) -> Result<Vec<Strategy>> {
    let strategies: Vec<Strategy> = names
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse())
        .collect::<Result<_>>()?;
    if strategies.is_empty() {
        return Err(Error::Config("no strategies requested".into()));
    }
    Ok(strategies)
}

fn cmd_proxy(ctx: &Context, args: ProxyArgs) -> Result<()> {
    let kind: ProxyKind = args.kind.parse()?;
    let config = match kind {
        ProxyKind::Knn => ProxyConfig::Knn(KnnConfig { k: args.k }),
        ProxyKind::Linear => ProxyConfig::Linear(LinearEvalConfig {
            learning_rates: args.lrs,
            steps: args.steps,
            batch_size: args.batch,
            repeats: args.repeats,
            seed: ctx.seed,
        }),
    };
    config.validate()?;
    let (catalog, tasks) = load_catalogs(ctx)?;
    let pool = resolve_pool(&catalog, &args.pool)?;
    let embeddings = EmbeddingDir::new(ctx.data_dir.join("embeddings"));
    let cache = ProxyCache::open(ctx.out.join(PROXY_FILE))?;
    let (mut computed, mut reused) = (0, 0);
    for task in pick_tasks(&tasks, &args.tasks)? {
        let scores = score_pool(&pool, &task.task_id, &config, &catalog, &embeddings, &cache)?;
        computed += scores.computed;
        reused += scores.reused;
    }
    cache.persist()?;
    println!("{kind} scores: {computed} computed, {reused} reused (digest {})", config.digest());
    Ok(())
}

fn load_scores(dir: &Path) -> Result<ProxyScoreTable> {
    let path = dir.join(PROXY_FILE);
    if path.exists() {
        ProxyScoreTable::load_csv(&path)
    } else {
        Ok(ProxyScoreTable::new())
    }
}

fn load_accuracy(dir: &Path) -> Result<AccuracyTable> {
    let path = dir.join(ACCURACY_FILE);
    if path.exists() {
        AccuracyTable::load_csv(&path)
    } else {
        Ok(AccuracyTable::new())
    }
}

fn cmd_rank(ctx: &Context, args: RankArgs) -> Result<()> {
    let strategies = parse_strategies(&args.strategies)?;
    let (catalog, tasks) = load_catalogs(ctx)?;
    let pool = resolve_pool(&catalog, &args.pool)?;
    let tasks = pick_tasks(&tasks, &args.tasks)?;
    let scores = load_scores(&ctx.data_dir)?;
    let accuracy = load_accuracy(&ctx.data_dir)?;
    let task_ids: Vec<String> = tasks.iter().map(|t| t.task_id.clone()).collect();
    let inputs = StrategyInputs {
        catalog: &catalog,
        proxy_scores: &scores,
        accuracy: &accuracy,
        task_ids: &task_ids,
    };
    let mut selections = Vec::new();
    for &strategy in &strategies {
        for task in &task_ids {
            let ranking = rank(strategy, &inputs, &pool, task)?;
            for &b in &args.budgets {
                selections.push(select_top(&ranking, b)?);
            }
        }
    }
    let path = ctx.out.join("selections.csv");
    save_selections(&path, &selections)?;
    println!("wrote {} selections to {}", selections.len(), path.display());
    Ok(())
}

fn cmd_report(ctx: &Context, args: ReportArgs) -> Result<()> {
    let strategies = parse_strategies(&args.strategies)?;
    let (catalog, tasks) = load_catalogs(ctx)?;
    let pools: Vec<Pool> = args
        .pools
        .iter()
        .map(|p| resolve_pool(&catalog, p))
        .collect::<Result<_>>()?;
    let tasks = pick_tasks(&tasks, &args.tasks)?;
    let scores = load_scores(&ctx.data_dir)?;
    let accuracy = AccuracyTable::load_csv(&ctx.data_dir.join(ACCURACY_FILE))?;
    let task_ids: Vec<String> = tasks.iter().map(|t| t.task_id.clone()).collect();
    let inputs = StrategyInputs {
        catalog: &catalog,
        proxy_scores: &scores,
        accuracy: &accuracy,
        task_ids: &task_ids,
    };
    let report = build_report(&inputs, &pools, &tasks, &strategies, &args.budgets)?;
    report.regret.save_csv(&ctx.out.join("regret.csv"))?;
    save_budget_curves(&ctx.out.join("budget_curve.csv"), &report.curves)?;
    save_min_budgets(&ctx.out.join("min_budget.csv"), &report.min_budgets)?;

    let charts = ctx.out.join("charts");
    std::fs::create_dir_all(&charts).map_err(|e| Error::Io {
        path: charts.clone(),
        source: e,
    })?;
    let mut n_charts = 0;
    for pool in &pools {
        for &strategy in &strategies {
            let svg = render_chart(&report.regret, &pool.pool_id, strategy, &tasks);
            let path = charts.join(format!("{}_{}.svg", pool.pool_id, strategy));
            std::fs::write(&path, svg).map_err(|e| Error::Io { path, source: e })?;
            n_charts += 1;
        }
    }
    println!(
        "wrote {} regret rows, {} budget curves, {} minimal budgets and {n_charts} charts to {}",
        report.regret.rows.len(),
        report.curves.len(),
        report.min_budgets.len(),
        ctx.out.display()
    );
    Ok(())
}

fn cmd_demo(ctx: &Context) -> Result<()> {
    let demo = correlation_limit_demo()?;
    let path = ctx.out.join("demo_correlation.csv");
    demo.save_csv(&path)?;
    for scenario in [&demo.identical, &demo.outlier] {
        let worst = scenario.rows.iter().map(|r| r.abs_regret).fold(0.0, f64::max);
        println!(
            "{}: max regret at B=1 over {} strategies {:.6}, pearson {}",
            scenario.name,
            scenario.rows.len(),
            worst,
            fmt6_opt(scenario.pearson)
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}
