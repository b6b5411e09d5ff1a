use std::path::{Path, PathBuf};

use clap::Args;
use gcnboost_core::graph::Node;
use gcnboost_core::pipeline::{AblationReport, BoostContext, Strategy, StrategyRun, StrategyTag};
use gcnboost_core::synth::generate_synthetic;
use gcnboost_core::{Dataset, ExtendedKG};
use serde::Serialize;

use crate::binary::{encode_matrix, encode_model};
use crate::config::{parse_spec, RunConfig};
use crate::dataset_dir::{label_id, read_dataset, write_dataset};
use crate::error::{CliError, Result};
use crate::fsutil::{read, write_atomic, write_csv};
use crate::parallel::{map_indexed, thread_count};
use crate::report::{category_results, write_histograms, CategoryResult, ReportFile, HISTOGRAMS};

#[derive(Debug, Clone, Default, Args)]
pub struct GenerateArgs {
    /// Generator spec file (TOML); defaults to the `easy` preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Start from a named preset: easy, correlated or longtail.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Run configuration file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `TAG[:cat1,cat2]`, e.g. `Sall` or `S2:School,Author`.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long = "refresh-every", value_name = "K")]
    pub refresh_every: Option<usize>,
    /// `CATEGORY:MIN_DEGREE`.
    #[arg(long)]
    pub filter: Option<String>,
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<Dataset> {
    let mut text = match &args.config {
        Some(p) => String::from_utf8(read(p)?).map_err(|_| CliError::Config(format!("{}: not UTF-8", p.display())))?,
        None => String::new(),
    };
    if let Some(preset) = &args.preset {
        text = format!("preset = {preset:?}\n{text}");
    }
    let (spec, file_seed) = parse_spec(&text)?;
    let seed = args.seed.or(file_seed).unwrap_or(0);
    let ds = generate_synthetic(&spec, seed)?;
    write_dataset(&ds, &args.out)?;
    Ok(ds)
}

pub fn resolve(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = &args.dataset {
        cfg.dataset = Some(d.clone());
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    if let Some(s) = &args.strategy {
        cfg.strategy = Some(s.clone());
    }
    if let Some(seed) = args.seed {
        cfg.pipeline.seed = seed;
    }
    if let Some(k) = args.refresh_every {
        cfg.set("refresh.every", &k.to_string())?;
    }
    if let Some(f) = &args.filter {
        cfg.set("filter", f)?;
    }
    cfg.pipeline.validate()?;
    Ok(cfg)
}

fn required<'a>(value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| CliError::Config(format!("`{key}` is required (flag --{key} or config key)")))
}

/// `TAG` or `TAG:cat1,cat2`.
pub fn parse_strategy(text: &str, ds: &Dataset) -> Result<Strategy> {
    let (tag, cats) = match text.split_once(':') {
        Some((t, c)) => (t, Some(c)),
        None => (text, None),
    };
    let tag: StrategyTag = tag.trim().parse()?;
    let n = ds.num_categories();
    match (tag, cats) {
        (StrategyTag::S0, None) => Ok(Strategy::random(n)),
        (StrategyTag::SAll, None) => Ok(Strategy::all(n)),
        (_, Some(cats)) => {
            let ids = cats
                .split(',')
                .map(|c| ds.category_id(c.trim()).map_err(|e| CliError::Config(format!("strategy: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            Ok(Strategy::from_tag(tag, &ids, n)?)
        }
        (t, None) => Err(CliError::Config(format!("strategy {t} needs a category list, e.g. {t}:Type"))),
    }
}

fn node_name(graph: &ExtendedKG, node: &Node) -> String {
    match node {
        Node::Artwork(a) => a.key.clone(),
        Node::Label(l) => label_id(&graph.categories()[l.category.0], &l.value),
    }
}

fn file_stem(text: &str) -> String {
    text.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

/// Initial feature rows of a run plus a `row,node_id` sidecar.
fn write_embedding(dir: &Path, stem: &str, run: &StrategyRun) -> Result<()> {
    let bin = dir.join(format!("{stem}.bin"));
    write_atomic(&bin, &encode_matrix(&run.features, &bin)?)?;
    let ids = run.graph.nodes().map(|n| [n.id().0.to_string(), node_name(&run.graph, n)]);
    write_csv(&dir.join(format!("{stem}.ids.csv")), &["row", "node_id"], ids)
}

/// Run the configured strategy grid and write the report, the degree
/// histograms of the `Sall` graph and one embedding dump per strategy.
pub fn cmd_ablate(args: &RunArgs) -> Result<ReportFile> {
    let cfg = resolve(args)?;
    let out = required(&cfg.out, "out")?;
    let ds = read_dataset(required(&cfg.dataset, "dataset")?)?;
    let ctx = BoostContext::prepare(&ds, &cfg.pipeline)?;
    let grid = ctx.strategy_grid()?;
    let emb_dir = out.join("embeddings");
    let runs = map_indexed(grid.len(), thread_count()?, |i| {
        let run = ctx.run_strategy(&grid[i])?;
        let stem = format!("{i:02}_{}", file_stem(&grid[i].describe(&ds.categories)));
        write_embedding(&emb_dir, &stem, &run)?;
        let graph = (grid[i].tag() == StrategyTag::SAll).then(|| run.graph.clone());
        Ok((run.metrics, graph))
    })?;
    let sall = runs.iter().rev().find_map(|(_, g)| g.as_ref()).expect("the grid ends with Sall");
    write_histograms(&out.join(HISTOGRAMS), sall)?;
    let metrics = runs.into_iter().map(|(m, _)| m).collect();
    let report = ReportFile::from_report(&AblationReport::assemble(&ctx, &grid, metrics));
    report.write(out)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskSummary {
    #[serde(flatten)]
    pub result: CategoryResult,
    pub iterations: usize,
    pub stopped_at: usize,
    pub best_iteration: Option<usize>,
    pub best_val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSummary {
    pub strategy: String,
    pub categories: String,
    pub seed: u64,
    pub fingerprint: String,
    pub tasks: Vec<TaskSummary>,
    pub warnings: Vec<String>,
}

/// Train one strategy and write a checkpoint and a loss history per
/// category, plus `metrics.json`.
pub fn cmd_train(args: &RunArgs) -> Result<TrainSummary> {
    let cfg = resolve(args)?;
    let out = required(&cfg.out, "out")?;
    let ds = read_dataset(required(&cfg.dataset, "dataset")?)?;
    let strategy_text = cfg
        .strategy
        .as_deref()
        .ok_or_else(|| CliError::Config("`strategy` is required (flag --strategy or config key)".into()))?;
    let strategy = parse_strategy(strategy_text, &ds)?;
    let ctx = BoostContext::prepare(&ds, &cfg.pipeline)?;
    let run = ctx.run_strategy(&strategy)?;

    let results = category_results(&run.metrics, &ds.categories);
    let mut tasks = Vec::new();
    for (task, result) in run.tasks.iter().zip(results) {
        let stem = file_stem(ds.category_name(task.category));
        let ckpt = out.join("checkpoints").join(format!("{stem}.gbmd"));
        write_atomic(&ckpt, &encode_model(&task.model, &ckpt)?)?;
        let rows = task.history.rows.iter().map(|r| {
            [r.iteration.to_string(), r.train_loss.to_string(), r.val_loss.map(|v| v.to_string()).unwrap_or_default()]
        });
        write_csv(&out.join("history").join(format!("{stem}.csv")), &["iteration", "train_loss", "val_loss"], rows)?;
        tasks.push(TaskSummary {
            result,
            iterations: task.history.rows.len(),
            stopped_at: task.history.stopped_at,
            best_iteration: task.history.best_iteration,
            best_val_loss: task.history.best_val_loss,
        });
    }
    let warnings = ctx.warnings().iter().chain(&run.metrics.warnings).map(|w| w.render(&ds.categories)).collect();
    let summary = TrainSummary {
        strategy: strategy.tag().to_string(),
        categories: strategy.category_list(&ds.categories),
        seed: cfg.pipeline.seed,
        fingerprint: cfg.pipeline.fingerprint(),
        tasks,
        warnings,
    };
    let path = out.join("metrics.json");
    let mut json = serde_json::to_vec_pretty(&summary).map_err(|e| CliError::Json { path: path.clone(), source: e })?;
    json.push(b'\n');
    write_atomic(&path, &json)?;
    Ok(summary)
}

/// Re-read `report.json`, refresh `report.csv` and render the table.
pub fn cmd_report(dir: &Path) -> Result<String> {
    let report = ReportFile::read(dir)?;
    report.write(dir)?;
    Ok(report.table())
}
