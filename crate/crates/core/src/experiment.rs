//! End-to-end experiment runs: corpus statistics, feature extraction, MLP
//! training/evaluation, calibrated baselines and group-size sweeps.
//!
//! Every output directory carries the full resolved [`ExperimentConfig`]
//! (inside the report/sidecar JSON) so a run can be replayed exactly.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    perplexity, rouge_l, threshold_classify, train_ngram_lm, youden_threshold, CalibratedThreshold,
    Direction,
};
use crate::classifier::{
    init_model, predict, train, MlpModel, Optimizer, Standardizer, TrainConfig,
};
use crate::corpus::{
    corpus_stats, group_by_label, load_jsonl, split_train_eval, CorpusStats, Document,
    LabeledGroup, SchemaDescriptor, SplitConfig, Subset,
};
use crate::decomp::{
    assemble_feature_vector, estimate_work_bytes, extract_segments, DecompConfig, DecompKind,
    FeatureVector, Provenance,
};
use crate::error::{Error, Result};
use crate::metrics::{emit_report, EvalReport};
use crate::ngram::tokenize;
use crate::tensor::{apply_variant, build_group_tensor, Variant};

/// Group sizes swept by default.
pub const DEFAULT_GROUP_SIZES: [usize; 4] = [1, 5, 20, 40];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    /// Schema preset name or descriptor file.
    pub schema: String,
    /// Overrides the schema's subset tag when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset: Option<Subset>,
    pub n: usize,
    pub group_size: usize,
    /// Feature length; `None` binds it to the group size (20 below M = 20, else 40).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub decomp: DecompKind,
    pub variant: Variant,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cp_rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tucker_ranks: Option<Vec<usize>>,
    pub max_iters: usize,
    pub tol: f64,
    /// Seeds grouping, decomposition init, model init and batch shuffling.
    pub seed: u64,
    pub split_seed: u64,
    pub train_fraction: f64,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub lm_order: usize,
    pub memory_budget_mb: u64,
    pub out: PathBuf,
    /// Read features from here instead of computing them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let d = DecompConfig::default();
        let t = TrainConfig::default();
        ExperimentConfig {
            dataset: PathBuf::new(),
            schema: "identity".into(),
            subset: None,
            n: 2,
            group_size: 1,
            k: None,
            decomp: d.kind,
            variant: Variant::Frequency,
            cp_rank: None,
            tucker_ranks: None,
            max_iters: d.max_iters,
            tol: d.tol,
            seed: 0,
            split_seed: 0,
            train_fraction: 0.8,
            epochs: t.epochs,
            lr: t.learning_rate,
            batch_size: t.batch_size,
            optimizer: t.optimizer,
            lm_order: 2,
            memory_budget_mb: 4096,
            out: PathBuf::from("out"),
            features_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&raw).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn effective_k(&self) -> usize {
        self.k
            .unwrap_or(if self.group_size >= 20 { 40 } else { 20 })
    }

    pub fn decomp_config(&self) -> DecompConfig {
        DecompConfig {
            kind: self.decomp,
            k: self.effective_k(),
            cp_rank: self.cp_rank,
            tucker_ranks: self.tucker_ranks.clone(),
            max_iters: self.max_iters,
            tol: self.tol,
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.lr,
            batch_size: self.batch_size,
            shuffle_seed: self.seed,
            optimizer: self.optimizer,
        }
    }

    pub fn split_config(&self) -> SplitConfig {
        SplitConfig {
            train_fraction: self.train_fraction,
            seed: self.split_seed,
        }
    }

    /// The config with `k` resolved, as embedded in outputs.
    pub fn echo(&self) -> serde_json::Value {
        let mut c = self.clone();
        c.k = Some(self.effective_k());
        serde_json::to_value(c).expect("config serializes")
    }

    pub fn method_name(&self) -> String {
        let mut s = format!(
            "{}-G{}",
            self.decomp.as_str().to_uppercase(),
            self.group_size
        );
        if self.variant != Variant::Frequency {
            s.push('-');
            s.push_str(self.variant.as_str());
        }
        s
    }

    pub fn dataset_name(&self, docs: &[Document]) -> String {
        self.subset
            .or_else(|| docs.first().map(|d| d.subset))
            .unwrap_or_default()
            .to_string()
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config("n must be at least 2".into()));
        }
        if self.group_size < 1 {
            return Err(Error::Config("group size must be at least 1".into()));
        }
        self.decomp_config().validate()
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn load_documents(cfg: &ExperimentConfig) -> Result<Vec<Document>> {
    let schema = SchemaDescriptor::resolve(&cfg.schema)?;
    let mut docs = load_jsonl(&cfg.dataset, &schema)?;
    if let Some(s) = cfg.subset {
        docs.iter_mut().for_each(|d| d.subset = s);
    }
    Ok(docs)
}

/// Writes `stats.txt` and `stats.json` under `cfg.out`.
pub fn run_stats(cfg: &ExperimentConfig) -> Result<CorpusStats> {
    let docs = load_documents(cfg)?;
    let stats = corpus_stats(&docs, cfg.n)?;
    ensure_dir(&cfg.out)?;
    write_file(&cfg.out.join("stats.txt"), stats.to_table())?;
    let mut json = serde_json::to_string_pretty(&stats)?;
    json.push('\n');
    write_file(&cfg.out.join("stats.json"), json)?;
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub config: serde_json::Value,
    pub decomp: DecompConfig,
    pub n: usize,
    pub group_size: usize,
    pub k: usize,
    pub variant: Variant,
    pub seed: u64,
    pub split_seed: u64,
    pub train_vocab_sizes: Vec<usize>,
    pub eval_vocab_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub train: Vec<FeatureVector>,
    pub eval: Vec<FeatureVector>,
    pub meta: FeatureMeta,
}

/// Feature vector of one group plus its vocabulary size.
pub fn group_features(
    group: &LabeledGroup,
    group_id: String,
    n: usize,
    variant: Variant,
    decomp: &DecompConfig,
    memory_budget_mb: u64,
) -> Result<(FeatureVector, usize)> {
    let (vocab, tensor) = build_group_tensor(group, n)?;
    let tensor = apply_variant(&tensor, variant)?;
    let estimate = estimate_work_bytes(&tensor, decomp);
    let budget = memory_budget_mb as f64 * 1024.0 * 1024.0;
    if estimate > budget {
        return Err(Error::MemoryBudget {
            estimated_mb: estimate / (1024.0 * 1024.0),
            budget_mb: memory_budget_mb,
            what: format!(
                "{} on group {group_id} with |V| = {}",
                decomp.kind,
                vocab.len()
            ),
        });
    }
    let segments = extract_segments(&tensor, decomp)?;
    let provenance = Provenance {
        group_id,
        kind: decomp.kind,
        n,
        group_size: group.group_size_target,
    };
    Ok((
        assemble_feature_vector(&segments, decomp.k, group.label.as_binary(), provenance),
        vocab.len(),
    ))
}

fn side_features(
    side: &str,
    docs: &[Document],
    cfg: &ExperimentConfig,
    decomp: &DecompConfig,
) -> Result<(Vec<FeatureVector>, Vec<usize>)> {
    let groups = group_by_label(docs, cfg.group_size, cfg.seed)?;
    let mut counters = std::collections::HashMap::new();
    let ids: Vec<String> = groups
        .iter()
        .map(|g| {
            let c = counters.entry(g.label).or_insert(0usize);
            *c += 1;
            format!("{side}-{}-{}", g.label, c)
        })
        .collect();
    let results: Vec<Result<(FeatureVector, usize)>> = groups
        .par_iter()
        .zip(ids)
        .map(|(g, id)| group_features(g, id, cfg.n, cfg.variant, decomp, cfg.memory_budget_mb))
        .collect();
    let mut features = Vec::with_capacity(results.len());
    let mut vocab = Vec::with_capacity(results.len());
    for r in results {
        let (f, v) = r?;
        features.push(f);
        vocab.push(v);
    }
    Ok((features, vocab))
}

/// Split, group within each side, build tensors and extract features.
pub fn compute_features(cfg: &ExperimentConfig, docs: &[Document]) -> Result<FeatureSet> {
    cfg.validate()?;
    let (train_docs, eval_docs) = split_train_eval(docs, &cfg.split_config())?;
    let decomp = cfg.decomp_config();
    let (train, train_vocab) = side_features("train", &train_docs, cfg, &decomp)?;
    let (eval, eval_vocab) = side_features("eval", &eval_docs, cfg, &decomp)?;
    Ok(FeatureSet {
        train,
        eval,
        meta: FeatureMeta {
            config: cfg.echo(),
            decomp: decomp.clone(),
            n: cfg.n,
            group_size: cfg.group_size,
            k: decomp.k,
            variant: cfg.variant,
            seed: cfg.seed,
            split_seed: cfg.split_seed,
            train_vocab_sizes: train_vocab,
            eval_vocab_sizes: eval_vocab,
        },
    })
}

pub const TRAIN_FEATURES: &str = "train_features.csv";
pub const EVAL_FEATURES: &str = "eval_features.csv";
pub const FEATURES_SIDECAR: &str = "features.json";

/// CSV with header `label,v1,…,vk`.
pub fn write_feature_csv(path: &Path, features: &[FeatureVector], k: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["label".to_string()];
    header.extend((1..=k).map(|i| format!("v{i}")));
    w.write_record(&header)?;
    for f in features {
        let mut rec = vec![f.label.to_string()];
        rec.extend(f.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_feature_csv(path: &Path, meta: &FeatureMeta) -> Result<Vec<FeatureVector>> {
    let bad = |message: String| Error::FeatureFile {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::Reader::from_path(path)?;
    let k = r.headers()?.len().saturating_sub(1);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let label: u8 = rec[0]
            .parse()
            .map_err(|_| bad(format!("row {}: bad label `{}`", i + 1, &rec[0])))?;
        let values = rec
            .iter()
            .skip(1)
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| bad(format!("row {}: bad value `{s}`", i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != k || label > 1 {
            return Err(bad(format!("row {} malformed", i + 1)));
        }
        out.push(FeatureVector {
            values,
            label,
            provenance: Provenance {
                group_id: format!("row-{}", i + 1),
                kind: meta.decomp.kind,
                n: meta.n,
                group_size: meta.group_size,
            },
        });
    }
    Ok(out)
}

pub fn write_features(dir: &Path, set: &FeatureSet) -> Result<()> {
    ensure_dir(dir)?;
    write_feature_csv(&dir.join(TRAIN_FEATURES), &set.train, set.meta.k)?;
    write_feature_csv(&dir.join(EVAL_FEATURES), &set.eval, set.meta.k)?;
    let mut json = serde_json::to_string_pretty(&set.meta)?;
    json.push('\n');
    write_file(&dir.join(FEATURES_SIDECAR), json)
}

pub fn read_features(dir: &Path) -> Result<FeatureSet> {
    let side = dir.join(FEATURES_SIDECAR);
    let raw = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: FeatureMeta = serde_json::from_str(&raw)?;
    Ok(FeatureSet {
        train: read_feature_csv(&dir.join(TRAIN_FEATURES), &meta)?,
        eval: read_feature_csv(&dir.join(EVAL_FEATURES), &meta)?,
        meta,
    })
}

/// Loads the dataset, computes features and writes them under `cfg.out`.
pub fn run_features(cfg: &ExperimentConfig) -> Result<FeatureSet> {
    let docs = load_documents(cfg)?;
    let set = compute_features(cfg, &docs)?;
    write_features(&cfg.out, &set)?;
    Ok(set)
}

#[derive(Debug, Clone)]
pub struct TrainEvalOutcome {
    pub report: EvalReport,
    pub model: MlpModel,
    pub loss_trace: Vec<f64>,
}

/// Standardizes with train statistics, trains the MLP and scores the eval side.
pub fn train_and_evaluate(
    set: &FeatureSet,
    cfg: &ExperimentConfig,
    dataset: &str,
) -> Result<TrainEvalOutcome> {
    let positives = set.train.iter().filter(|f| f.label == 1).count();
    if positives == 0 || positives == set.train.len() {
        return Err(Error::DegenerateTrainingSet(format!(
            "train side has {} groups, {positives} hallucinated",
            set.train.len()
        )));
    }
    let rows: Vec<Vec<f64>> = set.train.iter().map(|f| f.values.clone()).collect();
    let standardizer = Standardizer::fit(&rows)?;
    let standardized: Vec<FeatureVector> = set
        .train
        .iter()
        .map(|f| FeatureVector {
            values: standardizer.apply(&f.values),
            ..f.clone()
        })
        .collect();
    let init = init_model(set.meta.k, cfg.seed)?;
    let (mut model, loss_trace) = train(&init, &standardized, &cfg.train_config())?;
    model.standardizer = Some(standardizer);

    let mut scores = Vec::with_capacity(set.eval.len());
    let mut preds = Vec::with_capacity(set.eval.len());
    for f in &set.eval {
        let (p, l) = predict(&model, &f.values)?;
        scores.push(p);
        preds.push(l);
    }
    let labels: Vec<u8> = set.eval.iter().map(|f| f.label).collect();
    let report = EvalReport::from_scores(
        dataset,
        cfg.method_name(),
        &scores,
        &preds,
        &labels,
        cfg.echo(),
    )?;
    Ok(TrainEvalOutcome {
        report,
        model,
        loss_trace,
    })
}

fn write_outcome(dir: &Path, outcome: &TrainEvalOutcome) -> Result<()> {
    ensure_dir(dir)?;
    outcome.model.save(dir.join("model.json"))?;
    let mut trace = String::from("epoch,loss\n");
    for (i, l) in outcome.loss_trace.iter().enumerate() {
        trace.push_str(&format!("{},{l}\n", i + 1));
    }
    write_file(&dir.join("loss.csv"), trace)?;
    emit_report(&outcome.report, dir.join("report.json"))
}

/// Features (read from `features_dir` or computed inline), training and evaluation.
pub fn run_train_eval(cfg: &ExperimentConfig) -> Result<TrainEvalOutcome> {
    let (set, dataset) = match &cfg.features_dir {
        Some(dir) => {
            let set = read_features(dir)?;
            let name = set
                .meta
                .config
                .get("subset")
                .and_then(|v| v.as_str())
                .map(str::to_owned)
                .or_else(|| cfg.subset.map(|s| s.to_string()))
                .unwrap_or_else(|| Subset::Other.to_string());
            (set, name)
        }
        None => {
            let docs = load_documents(cfg)?;
            let set = compute_features(cfg, &docs)?;
            write_features(&cfg.out, &set)?;
            let name = cfg.dataset_name(&docs);
            (set, name)
        }
    };
    let outcome = train_and_evaluate(&set, cfg, &dataset)?;
    write_outcome(&cfg.out, &outcome)?;
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    RougeL,
    Perplexity,
}

impl BaselineMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineMethod::RougeL => "rouge_l",
            BaselineMethod::Perplexity => "perplexity",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            BaselineMethod::RougeL => "ROUGE-L",
            BaselineMethod::Perplexity => "Perplexity",
        }
    }
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rouge_l" | "rouge-l" | "rougel" => Ok(BaselineMethod::RougeL),
            "perplexity" | "ppl" => Ok(BaselineMethod::Perplexity),
            other => Err(Error::InvalidArgument(format!(
                "unknown baseline `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub report: EvalReport,
    pub calibration: CalibratedThreshold,
    pub train_scores: Vec<f64>,
    pub eval_scores: Vec<f64>,
}

/// Raw per-document scores for `method`; `lm_docs` trains the perplexity model.
pub fn baseline_scores(
    method: BaselineMethod,
    docs: &[Document],
    lm_docs: &[Document],
    lm_order: usize,
) -> Result<Vec<f64>> {
    match method {
        BaselineMethod::RougeL => docs
            .iter()
            .map(|d| {
                let reference = d.reference.as_deref().ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "document {} has no reference text for ROUGE-L",
                        d.id
                    ))
                })?;
                Ok(rouge_l(&tokenize(&d.text), &tokenize(reference)))
            })
            .collect(),
        BaselineMethod::Perplexity => {
            let lm = train_ngram_lm(lm_docs, lm_order)?;
            docs.iter().map(|d| perplexity(&lm, d)).collect()
        }
    }
}

/// Calibrates on the train side, classifies the eval side. AUROC/AUPR use the
/// raw scores oriented by the calibrated direction.
pub fn evaluate_baseline(
    method: BaselineMethod,
    train_docs: &[Document],
    eval_docs: &[Document],
    cfg: &ExperimentConfig,
    dataset: &str,
) -> Result<BaselineOutcome> {
    let train_scores = baseline_scores(method, train_docs, train_docs, cfg.lm_order)?;
    let eval_scores = baseline_scores(method, eval_docs, train_docs, cfg.lm_order)?;
    let train_labels: Vec<u8> = train_docs.iter().map(|d| d.label.as_binary()).collect();
    let eval_labels: Vec<u8> = eval_docs.iter().map(|d| d.label.as_binary()).collect();
    let calibration = youden_threshold(&train_scores, &train_labels)?;
    let preds = threshold_classify(&eval_scores, &calibration);
    let oriented: Vec<f64> = match calibration.direction {
        Direction::HigherIsPositive => eval_scores.clone(),
        Direction::LowerIsPositive => eval_scores.iter().map(|s| -s).collect(),
    };
    let mut config = cfg.echo();
    config["baseline"] = serde_json::to_value(method)?;
    config["calibration"] = serde_json::to_value(calibration)?;
    let report = EvalReport::from_scores(
        dataset,
        method.display_name(),
        &oriented,
        &preds,
        &eval_labels,
        config,
    )?;
    Ok(BaselineOutcome {
        report,
        calibration,
        train_scores,
        eval_scores,
    })
}

pub fn run_baseline(cfg: &ExperimentConfig, method: BaselineMethod) -> Result<BaselineOutcome> {
    let docs = load_documents(cfg)?;
    let usable: Vec<Document> = docs
        .iter()
        .filter(|d| !tokenize(&d.text).is_empty())
        .cloned()
        .collect();
    if usable.len() < docs.len() {
        log::warn!(
            "{} documents have no tokens and are left out of the baseline",
            docs.len() - usable.len()
        );
    }
    let (train_docs, eval_docs) = split_train_eval(&usable, &cfg.split_config())?;
    let outcome = evaluate_baseline(
        method,
        &train_docs,
        &eval_docs,
        cfg,
        &cfg.dataset_name(&docs),
    )?;
    ensure_dir(&cfg.out)?;
    emit_report(
        &outcome.report,
        cfg.out.join(format!("baseline-{method}.json")),
    )?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub group_size: usize,
    pub k: usize,
    pub auroc: Option<f64>,
    pub aupr: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: Option<f64>,
    pub status: String,
}

/// Features + train/eval per group size over already-loaded documents.
/// Failures are recorded per row and the sweep continues.
pub fn sweep_documents(
    cfg: &ExperimentConfig,
    docs: &[Document],
    group_sizes: &[usize],
) -> Result<Vec<SweepRow>> {
    ensure_dir(&cfg.out)?;
    let dataset = cfg.dataset_name(docs);
    let mut rows = Vec::with_capacity(group_sizes.len());
    for &m in group_sizes {
        let mut run = cfg.clone();
        run.group_size = m;
        run.out = cfg.out.join(format!("G{m}"));
        run.features_dir = None;
        let k = run.effective_k();
        let result = compute_features(&run, docs).and_then(|set| {
            write_features(&run.out, &set)?;
            let outcome = train_and_evaluate(&set, &run, &dataset)?;
            write_outcome(&run.out, &outcome)?;
            Ok(outcome.report)
        });
        rows.push(match result {
            Ok(r) => SweepRow {
                group_size: m,
                k,
                auroc: r.auroc,
                aupr: r.aupr,
                f1: Some(r.f1),
                accuracy: Some(r.accuracy),
                status: "ok".into(),
            },
            Err(e) => {
                log::warn!("group size {m} failed: {e}");
                SweepRow {
                    group_size: m,
                    k,
                    auroc: None,
                    aupr: None,
                    f1: None,
                    accuracy: None,
                    status: e.to_string(),
                }
            }
        });
    }
    write_sweep(&cfg.out, cfg, group_sizes, &rows)?;
    Ok(rows)
}

fn write_sweep(
    dir: &Path,
    cfg: &ExperimentConfig,
    sizes: &[usize],
    rows: &[SweepRow],
) -> Result<()> {
    let cell = |v: Option<f64>| v.map_or_else(|| "--".to_string(), |x| format!("{x:.6}"));
    let sizes_str: Vec<String> = sizes.iter().map(|s| s.to_string()).collect();
    let mut out = format!("# group_sizes: {}\n", sizes_str.join(" "));
    out.push_str("group_size,k,auroc,aupr,f1,accuracy,status\n");
    for r in rows {
        let status = if r.status == "ok" {
            "ok".to_string()
        } else {
            format!("\"{}\"", r.status.replace('"', "'"))
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.group_size,
            r.k,
            cell(r.auroc),
            cell(r.aupr),
            cell(r.f1),
            cell(r.accuracy),
            status
        ));
    }
    write_file(&dir.join("sweep.csv"), out)?;
    let summary = serde_json::json!({
        "group_sizes": sizes,
        "rows": rows,
        "config": cfg.echo(),
    });
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    write_file(&dir.join("sweep.json"), json)
}

pub fn run_sweep(cfg: &ExperimentConfig, group_sizes: &[usize]) -> Result<Vec<SweepRow>> {
    let docs = load_documents(cfg)?;
    sweep_documents(cfg, &docs, group_sizes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;

    #[test]
    fn k_binds_to_group_size() {
        let mut c = ExperimentConfig::default();
        for (m, k) in [(1, 20), (5, 20), (20, 40), (40, 40)] {
            c.group_size = m;
            assert_eq!(c.effective_k(), k);
        }
        c.k = Some(7);
        assert_eq!(c.effective_k(), 7);
    }

    #[test]
    fn config_toml_overrides_defaults() {
        let c: ExperimentConfig =
            toml::from_str("group_size = 20\ndecomp = \"tucker\"\nvariant = \"log\"\n").unwrap();
        assert_eq!(c.group_size, 20);
        assert_eq!(c.decomp, DecompKind::Tucker);
        assert_eq!(c.variant, Variant::LogFrequency);
        assert_eq!(c.epochs, 20);
        assert_eq!(c.method_name(), "TUCKER-G20-log");
        assert!(toml::from_str::<ExperimentConfig>("bogus = 1").is_err());
    }

    #[test]
    fn memory_guard_trips() {
        let group = LabeledGroup {
            members: vec![Document {
                id: "1".into(),
                text: "a b c d e f g a b".into(),
                label: Label::Factual,
                subset: Subset::Other,
                reference: None,
            }],
            label: Label::Factual,
            group_size_target: 1,
        };
        let err = group_features(
            &group,
            "g".into(),
            2,
            Variant::Frequency,
            &DecompConfig::default(),
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::MemoryBudget { .. }));
        assert!(err.to_string().contains("memory guard"));
        assert!(group_features(
            &group,
            "g".into(),
            2,
            Variant::Frequency,
            &DecompConfig::default(),
            1
        )
        .is_ok());
    }
}
