use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use ngram_tensor::classifier::Optimizer;
use ngram_tensor::corpus::Subset;
use ngram_tensor::decomp::DecompKind;
use ngram_tensor::experiment::{self, BaselineMethod, ExperimentConfig, DEFAULT_GROUP_SIZES};
use ngram_tensor::synthetic::{self, SyntheticConfig};
use ngram_tensor::tensor::Variant;

/// N-gram tensor features for hallucination detection.
#[derive(Parser)]
#[command(name = "ngt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-label document counts, token lengths and repeated n-grams.
    Stats(RunArgs),
    /// Build group tensors and write train/eval feature CSVs.
    Features(RunArgs),
    /// Train the MLP on group features and evaluate it.
    TrainEval(RunArgs),
    /// Score with a calibrated ROUGE-L or perplexity baseline.
    Baseline {
        #[arg(long, default_value = "perplexity")]
        method: BaselineMethod,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run features + train-eval for several group sizes.
    Sweep {
        /// Comma-separated group sizes.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_GROUP_SIZES)]
        sizes: Vec<usize>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Write a synthetic labelled corpus as JSONL.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        docs_per_class: Option<usize>,
        #[arg(long)]
        bias: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Flags override the config file, which overrides built-in defaults.
#[derive(Args)]
struct RunArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSONL dataset.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Schema preset name or descriptor file.
    #[arg(long)]
    schema: Option<String>,
    #[arg(long)]
    subset: Option<Subset>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "group-size", short = 'm')]
    group_size: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    decomp: Option<DecompKind>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    cp_rank: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    tucker_ranks: Option<Vec<usize>>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, value_parser = parse_optimizer)]
    optimizer: Option<Optimizer>,
    #[arg(long)]
    lm_order: Option<usize>,
    #[arg(long)]
    memory_budget_mb: Option<u64>,
    /// Read precomputed features from this directory.
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_optimizer(s: &str) -> std::result::Result<Optimizer, String> {
    match s {
        "sgd" => Ok(Optimizer::Sgd),
        "adam" => Ok(Optimizer::Adam),
        other => Err(format!(
            "unknown optimizer `{other}` (expected sgd or adam)"
        )),
    }
}

macro_rules! apply {
    ($cfg:ident, $args:ident, $($field:ident => $target:ident),* $(,)?) => {
        $(if let Some(v) = $args.$field { $cfg.$target = v; })*
    };
}

impl RunArgs {
    fn resolve(self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_toml_file(p)?,
            None => ExperimentConfig::default(),
        };
        let args = self;
        apply!(cfg, args,
            data => dataset, schema => schema, n => n, group_size => group_size,
            decomp => decomp, variant => variant, max_iters => max_iters, tol => tol,
            seed => seed, split_seed => split_seed, train_fraction => train_fraction,
            epochs => epochs, lr => lr, batch_size => batch_size, optimizer => optimizer,
            lm_order => lm_order, memory_budget_mb => memory_budget_mb, out => out,
        );
        if args.subset.is_some() {
            cfg.subset = args.subset;
        }
        if args.k.is_some() {
            cfg.k = args.k;
        }
        if args.cp_rank.is_some() {
            cfg.cp_rank = args.cp_rank;
        }
        if args.tucker_ranks.is_some() {
            cfg.tucker_ranks = args.tucker_ranks;
        }
        if args.features.is_some() {
            cfg.features_dir = args.features;
        }
        Ok(cfg)
    }

    fn resolve_with_data(self) -> Result<ExperimentConfig> {
        let cfg = self.resolve()?;
        anyhow::ensure!(
            !cfg.dataset.as_os_str().is_empty(),
            "no dataset given (use --data or `dataset` in the config)"
        );
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Stats(args) => {
            let cfg = args.resolve_with_data()?;
            let stats = experiment::run_stats(&cfg)?;
            print!("{}", stats.to_table());
        }
        Command::Features(args) => {
            let cfg = args.resolve_with_data()?;
            let set = experiment::run_features(&cfg)?;
            println!(
                "{} train / {} eval groups, k = {}, written to {}",
                set.train.len(),
                set.eval.len(),
                set.meta.k,
                cfg.out.display()
            );
        }
        Command::TrainEval(args) => {
            let cfg = args.resolve()?;
            anyhow::ensure!(
                cfg.features_dir.is_some() || !cfg.dataset.as_os_str().is_empty(),
                "no dataset or feature directory given"
            );
            let outcome = experiment::run_train_eval(&cfg)?;
            println!("{}", ngram_tensor::metrics::EvalReport::TABLE_HEADER);
            println!("{}", outcome.report.table_row());
        }
        Command::Baseline { method, run } => {
            let cfg = run.resolve_with_data()?;
            let outcome = experiment::run_baseline(&cfg, method)?;
            println!("{}", ngram_tensor::metrics::EvalReport::TABLE_HEADER);
            println!("{}", outcome.report.table_row());
        }
        Command::Sweep { sizes, run } => {
            let cfg = run.resolve_with_data()?;
            let rows = experiment::run_sweep(&cfg, &sizes)?;
            for r in rows {
                let cell = |v: Option<f64>| v.map_or_else(|| "--".into(), |x| format!("{x:.4}"));
                println!(
                    "M={:<3} k={:<3} AUROC={} AUPR={} F1={} Acc={} {}",
                    r.group_size,
                    r.k,
                    cell(r.auroc),
                    cell(r.aupr),
                    cell(r.f1),
                    cell(r.accuracy),
                    r.status
                );
            }
        }
        Command::Synth {
            out,
            docs_per_class,
            bias,
            seed,
        } => {
            let mut cfg = SyntheticConfig::default();
            if let Some(v) = docs_per_class {
                cfg.docs_per_class = v;
            }
            if let Some(v) = bias {
                cfg.bias = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            let docs = synthetic::generate(&cfg)?;
            synthetic::write_jsonl(&docs, &out)?;
            println!("{} documents written to {}", docs.len(), out.display());
        }
    }
    Ok(())
}

/// Joins the error chain, skipping causes already quoted by their parent.
fn one_line(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if msg.contains(&text) {
            continue;
        }
        if !msg.is_empty() {
            msg.push_str(": ");
        }
        msg.push_str(&text);
    }
    msg.replace('\n', " ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            ExitCode::FAILURE
        }
    }
}
