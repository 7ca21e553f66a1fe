use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use heg_core::graphcore::load_dataset;
use heg_core::opspace::{AggOpKind, FuserKind};
use heg_core::pipeline::{
    dataset_stats, evaluate, read_json, run_pipeline, run_search, select_all, synthesize, train_model, tune,
    write_report, write_run, write_search, Checkpoint, HyperparamSpace, Hyperparams, ModelSpec, PipelineError,
    RunConfig,
};
use heg_core::selector::{select, Criterion, SelectOptions};
use heg_core::supernet::{GraphContext, SplitRows};

#[derive(Parser)]
#[command(name = "heg", version, about = "Heterophily-aware graph architecture search")]
struct Cli {
    /// JSON run configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configured seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DatasetArg {
    /// Dataset directory (meta.json, X.csv, y.txt, edges.txt, splits/).
    #[arg(long)]
    dataset: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArg {
    /// Genotype JSON file.
    #[arg(long, conflicts_with = "mlp")]
    genotype: Option<PathBuf>,
    /// Use the no-propagation baseline instead of a genotype.
    #[arg(long)]
    mlp: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print node, edge, feature and class counts and node homophily.
    Stats(DatasetArg),
    /// Write a stochastic block model dataset with generated splits.
    Synth,
    /// Progressive supernet training and selection, once per seed.
    Search {
        #[command(flatten)]
        data: DatasetArg,
        /// Also select with every criterion.
        #[arg(long)]
        ablation: bool,
    },
    /// Select from a saved compact supernet.
    Select {
        #[command(flatten)]
        data: DatasetArg,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        criterion: Option<Criterion>,
        /// Select with all four criteria.
        #[arg(long)]
        all_criteria: bool,
    },
    /// Random hyperparameter search for a fixed architecture.
    Tune {
        #[command(flatten)]
        data: DatasetArg,
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        iters: Option<usize>,
    },
    /// Train on one split and report accuracies.
    Train {
        #[command(flatten)]
        data: DatasetArg,
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        hparams: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        split: usize,
    },
    /// Train from scratch on every split and write report.json and splits.csv.
    Eval {
        #[command(flatten)]
        data: DatasetArg,
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        hparams: Option<PathBuf>,
        /// Number of splits to evaluate.
        #[arg(long)]
        splits: Option<usize>,
    },
    /// List the candidate operations.
    Ops {
        #[arg(long, default_value_t = 64)]
        hidden: usize,
        #[arg(long, default_value_t = 3)]
        layers: usize,
    },
    /// Search, tune and evaluate the result and two baselines.
    Run(DatasetArg),
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    message: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = ErrorRecord {
                error: e.kind(),
                message: e.to_string(),
            };
            eprintln!("{}", serde_json::to_string(&record).unwrap_or_else(|_| e.to_string()));
            ExitCode::FAILURE
        }
    }
}

fn print_json<T: Serialize>(value: &T) {
    let text = serde_json::to_string_pretty(value).expect("report types serialize");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn config(cli: &Cli) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
        cfg.synth.seed = seed;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dataset_path(arg: &DatasetArg, cfg: &RunConfig) -> Result<PathBuf, PipelineError> {
    arg.dataset
        .clone()
        .or_else(|| cfg.dataset.clone())
        .ok_or_else(|| PipelineError::Config("no dataset given (--dataset or config.dataset)".into()))
}

fn out_dir(cfg: &RunConfig) -> Result<&Path, PipelineError> {
    cfg.out
        .as_deref()
        .ok_or_else(|| PipelineError::Config("no output directory given (--out or config.out)".into()))
}

fn model_spec(arg: &ModelArg) -> Result<ModelSpec, PipelineError> {
    match (&arg.genotype, arg.mlp) {
        (_, true) => Ok(ModelSpec::Mlp),
        (Some(path), false) => Ok(ModelSpec::Genotype(read_json(path)?)),
        (None, false) => Err(PipelineError::Config("give --genotype FILE or --mlp".into())),
    }
}

fn hyperparams(path: &Option<PathBuf>) -> Result<Hyperparams, PipelineError> {
    match path {
        Some(p) => read_json(p),
        None => Ok(Hyperparams::default()),
    }
}

fn execute(cli: Cli) -> Result<(), PipelineError> {
    let cfg = config(&cli)?;
    let seed = cfg.seeds[0];
    match &cli.command {
        Command::Stats(data) => {
            let (graph, _) = load_dataset(dataset_path(data, &cfg)?)?;
            let stats = dataset_stats(&graph);
            if let Some(out) = &cfg.out {
                heg_write(&out.join("stats.json"), &stats)?;
            }
            print_json(&stats);
        }
        Command::Synth => {
            let out = out_dir(&cfg)?;
            let (graph, splits) = synthesize(&cfg.synth, out)?;
            print_json(&serde_json::json!({
                "dataset": out,
                "name": graph.name,
                "nodes": graph.num_nodes(),
                "splits": splits.splits.len(),
            }));
        }
        Command::Search { data, ablation } => {
            let (graph, splits) = load_dataset(dataset_path(data, &cfg)?)?;
            let mut cfg = cfg.clone();
            cfg.ablation |= ablation;
            let output = run_search(&graph, &splits, &cfg)?;
            write_search(&output, out_dir(&cfg)?)?;
            print_json(&output.best().genotype);
        }
        Command::Select {
            data,
            checkpoint,
            criterion,
            all_criteria,
        } => {
            let (graph, splits) = load_dataset(dataset_path(data, &cfg)?)?;
            let ckpt: Checkpoint = read_json(checkpoint)?;
            let split = splits
                .splits
                .get(ckpt.search_split)
                .ok_or_else(|| PipelineError::Config("checkpoint split missing from dataset".into()))?;
            let ctx = GraphContext::new(&graph, ckpt.supernet.micro.len())?;
            let rows = SplitRows::new(split);
            let opts = SelectOptions {
                criterion: criterion.unwrap_or(cfg.selection.criterion),
                seed,
                source: Some(checkpoint.display().to_string()),
                ..cfg.selection.clone()
            };
            let out = out_dir(&cfg)?;
            if *all_criteria {
                let selections = select_all(&ckpt.supernet, &ctx, &rows, &opts)?;
                for s in &selections {
                    heg_write(&out.join(format!("genotype-{}.json", s.criterion)), &s.genotype)?;
                    heg_write(&out.join(format!("selection-{}.json", s.criterion)), &s.report)?;
                }
                let genotypes: Vec<_> = selections.iter().map(|s| &s.genotype).collect();
                print_json(&genotypes);
            } else {
                let (genotype, report) = select(&ckpt.supernet, &ctx, &rows, &opts)?;
                heg_write(&out.join("genotype.json"), &genotype)?;
                heg_write(&out.join("selection.json"), &report)?;
                print_json(&genotype);
            }
        }
        Command::Tune { data, model, iters } => {
            let (graph, splits) = load_dataset(dataset_path(data, &cfg)?)?;
            let spec = model_spec(model)?;
            let ctx = GraphContext::new(&graph, spec.hops())?;
            let split = splits
                .splits
                .get(cfg.tune.split)
                .ok_or_else(|| PipelineError::Config(format!("tune split {} missing", cfg.tune.split)))?;
            let result = tune(
                &spec,
                &ctx,
                split,
                &HyperparamSpace::default(),
                iters.unwrap_or(cfg.tune.iters),
                &cfg.train,
                &cfg.search.hyper,
                seed,
            )?;
            if let Some(out) = &cfg.out {
                heg_write(&out.join("tune.json"), &result)?;
                heg_write(&out.join("hparams.json"), &result.best)?;
            }
            print_json(&result.best);
        }
        Command::Train {
            data,
            model,
            hparams,
            split,
        } => {
            let (graph, splits) = load_dataset(dataset_path(data, &cfg)?)?;
            let spec = model_spec(model)?;
            let hp = hyperparams(hparams)?;
            let ctx = GraphContext::new(&graph, spec.hops())?;
            let s = splits
                .splits
                .get(*split)
                .ok_or_else(|| PipelineError::Config(format!("split {split} missing")))?;
            let mut net = spec.build(graph.feature_dim(), graph.num_classes, &hp, &cfg.search.hyper, seed)?;
            let outcome = train_model(net.as_mut(), &ctx, &SplitRows::new(s), &hp, &cfg.train, seed)?;
            if let Some(out) = &cfg.out {
                heg_write(&out.join("train.json"), &outcome)?;
            }
            print_json(&outcome);
        }
        Command::Eval {
            data,
            model,
            hparams,
            splits: count,
        } => {
            let (graph, splits) = load_dataset(dataset_path(data, &cfg)?)?;
            let spec = model_spec(model)?;
            let hp = hyperparams(hparams)?;
            let ctx = GraphContext::new(&graph, spec.hops())?;
            let mut report = evaluate(
                &spec,
                &hp,
                &graph,
                &ctx,
                &splits,
                count.or(cfg.eval_splits),
                &cfg.train,
                &cfg.search.hyper,
                seed,
            )?;
            report.config = serde_json::to_value(&cfg).unwrap_or_default();
            write_report(&report, out_dir(&cfg)?)?;
            print_json(&serde_json::json!({ "mean": report.mean, "std": report.std }));
        }
        Command::Ops { hidden, layers } => {
            println!("{:<12} {:<5} {:>10}", "kind", "tag", "params");
            for k in AggOpKind::ALL {
                println!("{:<12} {:<5} {:>10}", k.name(), k.tag().name(), k.param_count(*hidden));
            }
            for g in ["l_skip", "l_zero"] {
                println!("{:<12} {:<5} {:>10}", g, "gate", 0);
            }
            for f in FuserKind::ALL {
                println!("{:<12} {:<5} {:>10}", f.name(), "fuser", f.param_count(*layers, *hidden));
            }
        }
        Command::Run(data) => {
            let (graph, splits) = load_dataset(dataset_path(data, &cfg)?)?;
            let summary = run_pipeline(&graph, &splits, &cfg)?;
            write_run(&summary, out_dir(&cfg)?)?;
            print_json(&serde_json::json!({
                "genotype": summary.search.best().genotype,
                "searched": summary.searched.report.mean,
                "gcn_baseline": summary.gcn_baseline.report.mean,
                "mlp_baseline": summary.mlp_baseline.report.mean,
            }));
        }
    }
    Ok(())
}

fn heg_write<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    heg_core::pipeline::write_json_file(path, value)
}
