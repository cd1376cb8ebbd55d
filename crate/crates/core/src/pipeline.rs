//! Experiment orchestration: run configuration, the BDCORP/1 corpus cache,
//! task grids, report tables, and the predict bundle. The CLI binary is a
//! thin wrapper over this module.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::binio::{BinError, CrcReader, CrcWriter};
use crate::corpus::{
    self, BugReport, ColumnMapping, CorpusSplit, IngestSummary, LabeledExample, QuantileBasis,
    Resolution, TimeClass,
};
use crate::eval::{self, ClassificationReport, RegressionReport};
use crate::features::{
    build_features, smote_oversample, EmotionEncoding, FeatureConfig, Standardizer,
};
use crate::learn::{
    self, svr, ModelKind, ModelSpec, Optimizer, OutputKind, Prediction, Target, TrainConfig,
    TrainedModel,
};
use crate::sentiment::{score_document, SentimentLexicon, SentimentScore};
use crate::textprep::{self, PrepConfig, TokenStream};
use crate::topics::{assign_topic, fit_topics, EmbeddingBackend, HashedTfidf, TopicModel};

pub const CORPUS_MAGIC: &str = "BDCORP/1";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Sentiment(#[from] crate::sentiment::SentimentError),
    #[error(transparent)]
    Prep(#[from] crate::textprep::PrepError),
    #[error(transparent)]
    Topics(#[from] crate::topics::TopicError),
    #[error(transparent)]
    Learn(#[from] learn::LearnError),
    #[error(transparent)]
    Svr(#[from] svr::SvrError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
    #[error("cache file error: {0}")]
    Cache(#[from] BinError),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("missing model file {0}; run the experiment command first")]
    MissingModel(String),
}

impl PipelineError {
    /// Process exit code: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Corpus(corpus::CorpusError::MissingColumn(_)) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    TimeToResolution,
    TimeToFix,
    NumericTime,
    Destiny,
    Correlation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Balancing {
    None,
    Smote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subset {
    Full,
    Short,
    Long,
}

impl Subset {
    pub fn label(self) -> &'static str {
        match self {
            Subset::Full => "Full Dataset",
            Subset::Short => "Short",
            Subset::Long => "Long",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathsConfig {
    pub corpus: PathBuf,
    pub lexicon: PathBuf,
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    pub out: PathBuf,
    #[serde(default)]
    pub external_vectors: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TopicConfig {
    pub k: usize,
    pub dimension: usize,
    pub hash_seed: u64,
}

impl Default for TopicConfig {
    fn default() -> Self {
        Self { k: 20, dimension: 256, hash_seed: 42 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub short_fraction: f64,
    /// "train-only" or "whole".
    pub basis: String,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { train_fraction: 0.80, short_fraction: 0.70, basis: "train-only".into() }
    }
}

impl SplitConfig {
    pub fn quantile_basis(&self) -> Result<QuantileBasis, PipelineError> {
        match self.basis.as_str() {
            "train-only" => Ok(QuantileBasis::TrainOnly),
            "whole" => Ok(QuantileBasis::Whole),
            other => Err(PipelineError::Config(format!(
                "unknown quantile basis {other:?} (expected \"train-only\" or \"whole\")"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// "adam" or "sgd".
    pub optimizer: String,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self { epochs: 50, batch_size: 64, learning_rate: 1e-3, optimizer: "adam".into() }
    }
}

impl TrainingConfig {
    pub fn to_train_config(&self, seed: u64) -> Result<TrainConfig, PipelineError> {
        let optimizer = match self.optimizer.as_str() {
            "adam" => Optimizer::Adam,
            "sgd" => Optimizer::Sgd,
            other => {
                return Err(PipelineError::Config(format!(
                    "unknown optimizer {other:?} (expected \"adam\" or \"sgd\")"
                )))
            }
        };
        Ok(TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            optimizer,
            seed,
            ..TrainConfig::default()
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureKnobs {
    /// "signed-value" or "binary".
    pub emotion_encoding: String,
    pub standardize: bool,
}

impl Default for FeatureKnobs {
    fn default() -> Self {
        Self { emotion_encoding: "signed-value".into(), standardize: true }
    }
}

impl FeatureKnobs {
    pub fn encoding(&self) -> Result<EmotionEncoding, PipelineError> {
        match self.emotion_encoding.as_str() {
            "signed-value" => Ok(EmotionEncoding::SignedValue),
            "binary" => Ok(EmotionEncoding::Binary),
            other => Err(PipelineError::Config(format!(
                "unknown emotion encoding {other:?} (expected \"signed-value\" or \"binary\")"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub paths: PathsConfig,
    pub mapping: ColumnMapping,
    #[serde(default = "default_task")]
    pub task: Task,
    #[serde(default)]
    pub balancing: Option<Balancing>,
    #[serde(default)]
    pub subset: Option<Subset>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub topics: TopicConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub features: FeatureKnobs,
}

fn default_task() -> Task {
    Task::TimeToResolution
}

fn default_seed() -> u64 {
    42
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<RunConfig, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            PipelineError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(self).expect("config serializes"));
        format!("{:x}", hasher.finalize())
    }

    pub fn cache_path(&self) -> PathBuf {
        self.paths.out.join("corpus.bdcorp")
    }
}

// ---------------------------------------------------------------------------
// Corpus cache (BDCORP/1)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusCache {
    pub reports: Vec<BugReport>,
    pub examples: Vec<LabeledExample>,
    /// Destiny-task examples after unseen-label pruning.
    pub destiny_examples: Vec<LabeledExample>,
    pub split: CorpusSplit,
    pub summary: IngestSummary,
    pub examples_skipped: usize,
}

impl CorpusCache {
    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        let file = std::fs::File::create(path).map_err(io_err(path))?;
        let mut w = CrcWriter::new(std::io::BufWriter::new(file));
        w.write_str(CORPUS_MAGIC)?;
        let payload = serde_json::to_vec(self).expect("cache serializes");
        w.write_u64(payload.len() as u64)?;
        w.write_bytes(&payload)?;
        let mut inner = w.finish()?;
        inner.flush().map_err(io_err(path))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<CorpusCache, PipelineError> {
        let file = std::fs::File::open(path).map_err(io_err(path))?;
        let mut r = CrcReader::new(std::io::BufReader::new(file))?;
        r.expect_magic(CORPUS_MAGIC)?;
        let len = r.read_u64()? as usize;
        let bytes = r.read_bytes(len)?;
        serde_json::from_slice(&bytes)
            .map_err(|e| PipelineError::Config(format!("corrupt cache payload: {e}")))
    }

    pub fn train_id_set(&self) -> BTreeSet<String> {
        self.split.train_ids.iter().cloned().collect()
    }

    pub fn test_id_set(&self) -> BTreeSet<String> {
        self.split.test_ids.iter().cloned().collect()
    }
}

// ---------------------------------------------------------------------------
// Ingest
// ---------------------------------------------------------------------------

/// Manifest written by every command before its outputs; contains no
/// timestamps so reruns are byte-identical.
#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_digest: String,
    seed: u64,
    crate_version: &'a str,
    formats: BTreeMap<&'a str, &'a str>,
}

pub fn write_manifest(config: &RunConfig, command: &str) -> Result<(), PipelineError> {
    std::fs::create_dir_all(&config.paths.out).map_err(io_err(&config.paths.out))?;
    let manifest = Manifest {
        command,
        config_digest: config.digest(),
        seed: config.seed,
        crate_version: env!("CARGO_PKG_VERSION"),
        formats: BTreeMap::from([
            ("corpus_cache", CORPUS_MAGIC),
            ("topic_model", crate::topics::TOPIC_MAGIC),
            ("trained_model", learn::MODEL_MAGIC),
        ]),
    };
    let path = config.paths.out.join(format!("manifest_{command}.json"));
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, json).map_err(io_err(&path))?;
    Ok(())
}

pub fn cmd_ingest(config: &RunConfig) -> Result<CorpusCache, PipelineError> {
    write_manifest(config, "ingest")?;
    let (reports, summary) = corpus::parse_corpus(&config.paths.corpus, &config.mapping)?;
    let (examples, examples_skipped) = corpus::derive_examples(&reports);
    let mut split = corpus::chronological_split(&reports, config.split.train_fraction)?;
    let destiny_examples = corpus::prune_unseen_labels(&mut split, &examples);
    let cache = CorpusCache { reports, examples, destiny_examples, split, summary, examples_skipped };
    cache.save(&config.cache_path())?;

    let summary_text = ingest_summary_text(&cache);
    print!("{summary_text}");
    let path = config.paths.out.join("ingest_summary.txt");
    std::fs::write(&path, &summary_text).map_err(io_err(&path))?;
    Ok(cache)
}

pub fn ingest_summary_text(cache: &CorpusCache) -> String {
    let dropped: Vec<&str> =
        cache.split.dropped_labels.iter().map(|l| l.as_str()).collect();
    format!(
        "rows read:             {}\n\
         reports ingested:      {}\n\
         rejected (timestamp):  {}\n\
         rejected (order):      {}\n\
         labeled examples:      {}\n\
         examples skipped:      {}\n\
         train/test:            {}/{}\n\
         dropped test labels:   {}\n",
        cache.summary.rows_read,
        cache.summary.reports,
        cache.summary.rejected_timestamp,
        cache.summary.rejected_order,
        cache.examples.len(),
        cache.examples_skipped,
        cache.split.train_ids.len(),
        cache.split.test_ids.len(),
        if dropped.is_empty() { "(none)".to_string() } else { dropped.join(", ") },
    )
}

// ---------------------------------------------------------------------------
// Shared experiment state
// ---------------------------------------------------------------------------

/// Everything computed once per experiment run: token streams, sentiment
/// scores, the fitted topic model, and per-report topic assignments.
pub struct Prepared {
    pub streams: BTreeMap<String, TokenStream>,
    pub scores: BTreeMap<String, SentimentScore>,
    pub priorities: BTreeMap<String, f64>,
    pub topic_model: TopicModel,
    pub backend: EmbeddingBackend,
    pub topic_of: BTreeMap<String, usize>,
}

pub fn prepare(config: &RunConfig, cache: &CorpusCache) -> Result<Prepared, PipelineError> {
    let stopwords = match &config.paths.stopwords {
        Some(path) => textprep::load_stopwords(path)?,
        None => textprep::builtin_stopwords(),
    };
    let prep = PrepConfig { stopwords, spelling: None };
    let lexicon = SentimentLexicon::load(&config.paths.lexicon)?;

    let mut streams = BTreeMap::new();
    let mut scores = BTreeMap::new();
    let mut priorities = BTreeMap::new();
    for report in &cache.reports {
        let stream = textprep::preprocess(&report.id, &report.description, &prep);
        scores.insert(report.id.clone(), score_document(&stream, &lexicon));
        priorities.insert(report.id.clone(), report.priority_value());
        streams.insert(report.id.clone(), stream);
    }

    let backend = match &config.paths.external_vectors {
        Some(path) => EmbeddingBackend::ExternalVectors(crate::topics::ExternalVectors::load(path)?),
        None => {
            let train_streams: Vec<TokenStream> = cache
                .split
                .train_ids
                .iter()
                .filter_map(|id| streams.get(id).cloned())
                .collect();
            EmbeddingBackend::HashedTfidf(HashedTfidf::fit(
                &train_streams,
                config.topics.dimension,
                config.topics.hash_seed,
            ))
        }
    };
    let train_streams: Vec<TokenStream> = cache
        .split
        .train_ids
        .iter()
        .filter_map(|id| streams.get(id).cloned())
        .collect();
    let (topic_model, _) = fit_topics(&train_streams, config.topics.k, &backend, config.seed)?;

    let mut topic_of = BTreeMap::new();
    for (id, stream) in &streams {
        topic_of.insert(id.clone(), assign_topic(stream, &topic_model, &backend)?);
    }
    Ok(Prepared { streams, scores, priorities, topic_model, backend, topic_of })
}

// ---------------------------------------------------------------------------
// Classification grids
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct GridRow {
    pub label: String,
    pub model: String,
    pub with_topic: bool,
    pub balanced: bool,
    pub report: ClassificationReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct NumericRow {
    pub label: String,
    pub model: String,
    pub subset: Subset,
    pub report: RegressionReport,
}

fn feature_label(with_topic: bool, balanced: bool) -> String {
    let mut label = String::from("(Emotion, Emotionality, Priority");
    if with_topic {
        label.push_str(", Predicted Topic");
    }
    label.push(')');
    if balanced {
        label.push_str(" Weighted");
    }
    label
}

struct TaskData {
    /// (report_id, dense features, time_class, destiny index) for examples in
    /// the task population.
    train: Vec<Row>,
    test: Vec<Row>,
    threshold: f64,
    classes: Vec<String>,
}

struct Row {
    dense: Vec<f64>,
    topic: usize,
    class: usize,
    duration: f64,
}

fn build_task_rows(
    config: &RunConfig,
    cache: &CorpusCache,
    prepared: &Prepared,
    task: Task,
) -> Result<TaskData, PipelineError> {
    let encoding = config.features.encoding()?;
    let feature_config = FeatureConfig {
        use_topic: false,
        topic_count: config.topics.k,
        emotion_encoding: encoding,
        standardize: config.features.standardize,
    };

    let mut examples: Vec<LabeledExample> = match task {
        Task::TimeToFix => corpus::filter_fixed(&cache.examples)?,
        Task::Destiny => cache.destiny_examples.clone(),
        _ => cache.examples.clone(),
    };
    let train_ids = cache.train_id_set();
    let test_ids = cache.test_id_set();
    let basis = config.split.quantile_basis()?;
    let (threshold, _) = corpus::assign_time_classes(
        &mut examples,
        config.split.short_fraction,
        basis,
        &train_ids,
    )?;

    let classes: Vec<String> = match task {
        Task::Destiny => {
            let train_labels: BTreeSet<Resolution> = examples
                .iter()
                .filter(|e| train_ids.contains(&e.report_id))
                .map(|e| e.destiny_label)
                .collect();
            train_labels.iter().map(|l| l.as_str().to_string()).collect()
        }
        _ => vec!["SHORT".into(), "LONG".into()],
    };
    let class_index: BTreeMap<&str, usize> =
        classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();

    let mut train = Vec::new();
    let mut test = Vec::new();
    for example in &examples {
        let id = &example.report_id;
        let score = &prepared.scores[id];
        let priority = prepared.priorities[id];
        let dense = build_features(score, priority, None, &feature_config);
        let class = match task {
            Task::Destiny => class_index[example.destiny_label.as_str()],
            _ => match example.time_class.unwrap() {
                TimeClass::Short => 0,
                TimeClass::Long => 1,
            },
        };
        let row = Row {
            dense,
            topic: prepared.topic_of[id],
            class,
            duration: example.duration_hours,
        };
        if train_ids.contains(id) {
            train.push(row);
        } else if test_ids.contains(id) {
            test.push(row);
        }
    }
    Ok(TaskData { train, test, threshold, classes })
}

fn assemble(
    rows: &[Row],
    standardizer: &Standardizer,
    with_topic: bool,
    k: usize,
) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|row| {
            let mut v = row.dense.clone();
            standardizer.apply(&mut v);
            if with_topic {
                for i in 0..k {
                    v.push(if i == row.topic { 1.0 } else { 0.0 });
                }
            }
            v
        })
        .collect()
}

fn run_classification_cell(
    config: &RunConfig,
    data: &TaskData,
    kind: ModelKind,
    with_topic: bool,
    balanced: bool,
) -> Result<(ClassificationReport, TrainedModel, Standardizer), PipelineError> {
    let k = config.topics.k;
    let dense_cols: Vec<Vec<f64>> = data.train.iter().map(|r| r.dense.clone()).collect();
    let standardizer = if config.features.standardize {
        Standardizer::fit(&dense_cols, FeatureConfig::DENSE_COLUMNS)
    } else {
        Standardizer { mean: vec![], std: vec![] }
    };
    let train_x = assemble(&data.train, &standardizer, with_topic, k);
    let test_x = assemble(&data.test, &standardizer, with_topic, k);

    let mut labeled: Vec<(Vec<f64>, usize)> = train_x
        .into_iter()
        .zip(data.train.iter().map(|r| r.class))
        .collect();
    if balanced {
        labeled = smote_oversample(&labeled, 5, FeatureConfig::DENSE_COLUMNS, config.seed);
    }
    let n_classes = data.classes.len();
    let output = if n_classes == 2 { OutputKind::Binary } else { OutputKind::Multiclass(n_classes) };
    let input_dim = labeled[0].0.len();
    let spec = ModelSpec::new(kind, input_dim, output);
    let train_config = config.training.to_train_config(config.seed)?;
    let rows: Vec<(Vec<f64>, Target)> =
        labeled.into_iter().map(|(x, c)| (x, Target::Class(c))).collect();
    let model = learn::train(&spec, &train_config, &rows)?;

    let truth: Vec<String> =
        data.test.iter().map(|r| data.classes[r.class].clone()).collect();
    let mut predicted = Vec::with_capacity(test_x.len());
    for x in &test_x {
        let class = learn::predict(&model, x)?.class().expect("classifier output");
        predicted.push(data.classes[class].clone());
    }
    let cm = eval::confusion(&truth, &predicted, &data.classes)?;
    let report = eval::classification_report(&cm)?;
    Ok((report, model, standardizer))
}

pub fn run_classification_grid(
    config: &RunConfig,
    cache: &CorpusCache,
    prepared: &Prepared,
    task: Task,
) -> Result<(Vec<GridRow>, f64), PipelineError> {
    let data = build_task_rows(config, cache, prepared, task)?;
    let mut rows = Vec::new();
    for &balanced in &[false, true] {
        if let Some(wanted) = config.balancing {
            if (wanted == Balancing::Smote) != balanced {
                continue;
            }
        }
        for &with_topic in &[false, true] {
            for &kind in &[ModelKind::Mlp, ModelKind::Cnn1d] {
                let (report, model, standardizer) =
                    run_classification_cell(config, &data, kind, with_topic, balanced)?;
                rows.push(GridRow {
                    label: format!("{} {}", kind.as_str(), feature_label(with_topic, balanced)),
                    model: kind.as_str().to_string(),
                    with_topic,
                    balanced,
                    report,
                });
                // The unbalanced MLP-with-topic cell doubles as the predict
                // bundle model for this task.
                if kind == ModelKind::Mlp && with_topic && !balanced {
                    save_bundle_model(config, task, &model, &standardizer, &data)?;
                }
            }
        }
    }
    Ok((rows, data.threshold))
}

// Table ordering: the four unbalanced rows first (MLP/CNN without topic,
// then with), then the four weighted rows.
fn grid_order(rows: &mut [GridRow]) {
    rows.sort_by_key(|r| {
        (r.balanced, r.with_topic, if r.model == "MLP" { 0 } else { 1 })
    });
}

// ---------------------------------------------------------------------------
// Numeric time grids
// ---------------------------------------------------------------------------

fn run_numeric_cell(
    config: &RunConfig,
    data: &TaskData,
    kind: ModelKind,
    subset: Subset,
) -> Result<RegressionReport, PipelineError> {
    let wanted = |row: &Row| match subset {
        Subset::Full => true,
        Subset::Short => row.class == 0,
        Subset::Long => row.class == 1,
    };
    let train: Vec<&Row> = data.train.iter().filter(|r| wanted(r)).collect();
    let test: Vec<&Row> = data.test.iter().filter(|r| wanted(r)).collect();
    if train.len() < 2 || test.is_empty() {
        return Err(PipelineError::Config(format!(
            "subset {subset:?} leaves too few rows (train {}, test {})",
            train.len(),
            test.len()
        )));
    }
    let dense_train: Vec<Vec<f64>> = train.iter().map(|r| r.dense.clone()).collect();
    let standardizer = Standardizer::fit(&dense_train, FeatureConfig::DENSE_COLUMNS);
    // Targets are scaled by a positive factor so the non-negative clamp on
    // predictions stays meaningful.
    let y_scale = (train.iter().map(|r| r.duration * r.duration).sum::<f64>()
        / train.len() as f64)
        .sqrt()
        .max(1e-9);

    let rows: Vec<(Vec<f64>, Target)> = train
        .iter()
        .map(|r| {
            let mut x = r.dense.clone();
            standardizer.apply(&mut x);
            (x, Target::Value(r.duration / y_scale))
        })
        .collect();
    let spec = ModelSpec::new(kind, rows[0].0.len(), OutputKind::Scalar);
    let train_config = config.training.to_train_config(config.seed)?;
    let model = learn::train(&spec, &train_config, &rows)?;

    let mut truth = Vec::with_capacity(test.len());
    let mut predicted = Vec::with_capacity(test.len());
    for r in &test {
        let mut x = r.dense.clone();
        standardizer.apply(&mut x);
        let hours = match learn::predict(&model, &x)? {
            Prediction::Hours(h) => h * y_scale,
            _ => unreachable!("scalar model"),
        };
        truth.push(r.duration);
        predicted.push(hours);
    }
    Ok(eval::regression_report(&truth, &predicted)?)
}

pub fn run_numeric_grid(
    config: &RunConfig,
    cache: &CorpusCache,
    prepared: &Prepared,
    task: Task,
) -> Result<Vec<NumericRow>, PipelineError> {
    let data = build_task_rows(config, cache, prepared, task)?;
    let mut rows = Vec::new();
    for &kind in &[ModelKind::Cnn1d, ModelKind::LinReg] {
        for &subset in &[Subset::Full, Subset::Short, Subset::Long] {
            if let Some(wanted) = config.subset {
                if wanted != subset {
                    continue;
                }
            }
            let report = run_numeric_cell(config, &data, kind, subset)?;
            let name = if kind == ModelKind::LinReg { "Linear Regression" } else { "CNN" };
            rows.push(NumericRow {
                label: format!("{name} ({})", subset.label()),
                model: name.to_string(),
                subset,
                report,
            });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Correlation (SVR + scatter)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationResult {
    pub slope: f64,
    pub intercept: f64,
    pub r2: Option<f64>,
    pub test_points: usize,
}

pub fn run_correlation(
    config: &RunConfig,
    cache: &CorpusCache,
    prepared: &Prepared,
) -> Result<CorrelationResult, PipelineError> {
    let train_ids = cache.train_id_set();
    let test_ids = cache.test_id_set();
    let point = |e: &LabeledExample| {
        (prepared.scores[&e.report_id].emotionality, e.duration_hours)
    };
    let train: Vec<(f64, f64)> = cache
        .examples
        .iter()
        .filter(|e| train_ids.contains(&e.report_id))
        .map(point)
        .collect();
    let test: Vec<(f64, f64)> = cache
        .examples
        .iter()
        .filter(|e| test_ids.contains(&e.report_id))
        .map(point)
        .collect();
    let fit = svr::train_svr(&train, 0.1, 1e-3)?;
    let truth: Vec<f64> = test.iter().map(|&(_, y)| y).collect();
    let predicted: Vec<f64> = test.iter().map(|&(x, _)| fit.predict(x)).collect();
    let report = eval::regression_report(&truth, &predicted)?;

    // Two-column scatter data over the test split.
    let mut csv = String::from("emotionality,duration_hours\n");
    for &(x, y) in &test {
        csv.push_str(&format!("{x},{y}\n"));
    }
    let csv_path = config.paths.out.join("scatter_emotionality.csv");
    std::fs::write(&csv_path, &csv).map_err(io_err(&csv_path))?;

    let svg_path = config.paths.out.join("scatter_emotionality.svg");
    std::fs::write(&svg_path, scatter_svg(&test, &fit)).map_err(io_err(&svg_path))?;

    let result = CorrelationResult {
        slope: fit.slope,
        intercept: fit.intercept,
        r2: report.r2,
        test_points: test.len(),
    };
    let meta_path = config.paths.out.join("scatter_metadata.json");
    std::fs::write(&meta_path, serde_json::to_string_pretty(&result).unwrap())
        .map_err(io_err(&meta_path))?;
    Ok(result)
}

fn scatter_svg(points: &[(f64, f64)], fit: &svr::SvrFit) -> String {
    let (w, h, margin) = (640.0, 480.0, 40.0);
    let x_max = points.iter().map(|p| p.0).fold(1e-9f64, f64::max);
    let y_max = points.iter().map(|p| p.1).fold(1e-9f64, f64::max);
    let sx = |x: f64| margin + x / x_max * (w - 2.0 * margin);
    let sy = |y: f64| h - margin - y / y_max * (h - 2.0 * margin);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <line x1=\"{m}\" y1=\"{yb}\" x2=\"{xr}\" y2=\"{yb}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{yb}\" stroke=\"black\"/>\n",
        m = margin,
        yb = h - margin,
        xr = w - margin,
    );
    for &(x, y) in points {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"steelblue\" fill-opacity=\"0.5\"/>\n",
            sx(x),
            sy(y)
        ));
    }
    let y0 = fit.predict(0.0).clamp(0.0, y_max);
    let y1 = fit.predict(x_max).clamp(0.0, y_max);
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"crimson\" stroke-width=\"1.5\"/>\n",
        sx(0.0),
        sy(y0),
        sx(x_max),
        sy(y1)
    ));
    svg.push_str("</svg>\n");
    svg
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

pub fn classification_table(title: &str, rows: &[GridRow]) -> String {
    let mut out = format!("{title}\n");
    let label_width = rows.iter().map(|r| r.label.len()).max().unwrap_or(5).max(5);
    out.push_str(&format!(
        "{:<label_width$}  {:>9}  {:>6}  {:>8}  {:>8}\n",
        "Model", "Precision", "Recall", "F1 Score", "Accuracy"
    ));
    for row in rows {
        out.push_str(&format!(
            "{:<label_width$}  {:>9.2}  {:>6.2}  {:>8.2}  {:>8.2}\n",
            row.label,
            row.report.weighted_precision,
            row.report.weighted_recall,
            row.report.weighted_f1,
            row.report.accuracy
        ));
    }
    out
}

pub fn numeric_table(title: &str, rows: &[NumericRow]) -> String {
    let mut out = format!("{title}\n");
    let label_width = rows.iter().map(|r| r.label.len()).max().unwrap_or(5).max(5);
    out.push_str(&format!(
        "{:<label_width$}  {:>19}  {:>18}\n",
        "Model", "Mean Absolute Error", "Mean Squared Error"
    ));
    for row in rows {
        out.push_str(&format!(
            "{:<label_width$}  {:>19.0}  {:>18.0}\n",
            row.label, row.report.mae, row.report.mse
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Experiment command
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Serialize)]
pub struct ExperimentOutput {
    pub tables: BTreeMap<String, String>,
    pub thresholds: BTreeMap<String, f64>,
}

pub fn cmd_experiment(config: &RunConfig) -> Result<ExperimentOutput, PipelineError> {
    if let (Task::Destiny, Some(subset)) = (config.task, config.subset) {
        if subset != Subset::Full {
            return Err(PipelineError::Config(format!(
                "subset {subset:?} is only meaningful for the numeric-time task"
            )));
        }
    }
    write_manifest(config, "experiment")?;
    let cache = CorpusCache::load(&config.cache_path())?;
    let prepared = prepare(config, &cache)?;
    prepared.topic_model.save(&config.paths.out.join("topic_model.bdtopic"))?;

    let mut output = ExperimentOutput::default();
    match config.task {
        Task::TimeToResolution | Task::TimeToFix | Task::Destiny => {
            let (mut rows, threshold) =
                run_classification_grid(config, &cache, &prepared, config.task)?;
            grid_order(&mut rows);
            let (name, title) = match config.task {
                Task::TimeToResolution => {
                    ("time_to_resolution", "Comparison between time-to-resolution models")
                }
                Task::TimeToFix => ("time_to_fix", "Comparison between time-to-fix models"),
                _ => ("destiny", "Comparison between Destiny models"),
            };
            let table = classification_table(title, &rows);
            write_table(config, name, &table, &rows)?;
            output.tables.insert(name.to_string(), table);
            output.thresholds.insert(name.to_string(), threshold);
        }
        Task::NumericTime => {
            for (task, name, title) in [
                (
                    Task::TimeToResolution,
                    "numeric_time_to_resolution",
                    "Comparison between numeric time models for Time-to-Resolution",
                ),
                (
                    Task::TimeToFix,
                    "numeric_time_to_fix",
                    "Comparison between numeric time models for Time-to-Fix",
                ),
            ] {
                let rows = run_numeric_grid(config, &cache, &prepared, task)?;
                let table = numeric_table(title, &rows);
                write_table(config, name, &table, &rows)?;
                output.tables.insert(name.to_string(), table);
            }
        }
        Task::Correlation => {
            let result = run_correlation(config, &cache, &prepared)?;
            let table = format!(
                "Emotionality vs time-to-resolution (linear SVR)\n\
                 slope      {:.6}\n\
                 intercept  {:.6}\n\
                 R^2        {}\n",
                result.slope,
                result.intercept,
                result.r2.map_or("(undefined)".to_string(), |v| format!("{v:.4}")),
            );
            write_table(config, "correlation", &table, &result)?;
            output.tables.insert("correlation".to_string(), table);
        }
    }
    for table in output.tables.values() {
        print!("{table}\n");
    }
    Ok(output)
}

fn write_table<T: Serialize>(
    config: &RunConfig,
    name: &str,
    table: &str,
    rows: &T,
) -> Result<(), PipelineError> {
    let txt_path = config.paths.out.join(format!("table_{name}.txt"));
    std::fs::write(&txt_path, table).map_err(io_err(&txt_path))?;
    let json_path = config.paths.out.join(format!("metrics_{name}.json"));
    std::fs::write(&json_path, serde_json::to_string_pretty(rows).unwrap())
        .map_err(io_err(&json_path))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Predict bundle
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct BundleEntry {
    model_file: String,
    classes: Vec<String>,
    threshold_hours: f64,
    standardizer: Standardizer,
    with_topic: bool,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct PredictBundle {
    entries: BTreeMap<String, BundleEntry>,
}

fn bundle_path(config: &RunConfig) -> PathBuf {
    config.paths.out.join("predict_bundle.json")
}

fn save_bundle_model(
    config: &RunConfig,
    task: Task,
    model: &TrainedModel,
    standardizer: &Standardizer,
    data: &TaskData,
) -> Result<(), PipelineError> {
    let name = match task {
        Task::TimeToResolution => "time_to_resolution",
        Task::TimeToFix => "time_to_fix",
        Task::Destiny => "destiny",
        _ => return Ok(()),
    };
    let file = format!("model_{name}.bdmodel");
    model.save(&config.paths.out.join(&file))?;
    let path = bundle_path(config);
    let mut bundle: PredictBundle = match std::fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str(&text).unwrap_or_default(),
        Err(_) => PredictBundle::default(),
    };
    bundle.entries.insert(
        name.to_string(),
        BundleEntry {
            model_file: file,
            classes: data.classes.clone(),
            threshold_hours: data.threshold,
            standardizer: standardizer.clone(),
            with_topic: true,
        },
    );
    std::fs::write(&path, serde_json::to_string_pretty(&bundle).unwrap())
        .map_err(io_err(&path))?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct PredictionRecord {
    pub input_id: String,
    pub time_class: Option<String>,
    pub time_class_probs: Option<BTreeMap<String, f64>>,
    pub destiny: Option<String>,
    pub destiny_probs: Option<BTreeMap<String, f64>>,
}

/// Scores one or many new reports with the models saved by the experiment
/// command. Each input is (id, description, priority 1..5).
pub fn cmd_predict(
    config: &RunConfig,
    inputs: &[(String, String, f64)],
) -> Result<Vec<PredictionRecord>, PipelineError> {
    write_manifest(config, "predict")?;
    let path = bundle_path(config);
    let bundle: PredictBundle = serde_json::from_str(
        &std::fs::read_to_string(&path)
            .map_err(|_| PipelineError::MissingModel(path.display().to_string()))?,
    )
    .map_err(|e| PipelineError::Config(format!("corrupt predict bundle: {e}")))?;
    let topic_path = config.paths.out.join("topic_model.bdtopic");
    let topic_model = TopicModel::load(&topic_path)
        .map_err(|_| PipelineError::MissingModel(topic_path.display().to_string()))?;
    let backend = topic_model.backend();

    let stopwords = match &config.paths.stopwords {
        Some(path) => textprep::load_stopwords(path)?,
        None => textprep::builtin_stopwords(),
    };
    let prep = PrepConfig { stopwords, spelling: None };
    let lexicon = SentimentLexicon::load(&config.paths.lexicon)?;
    let encoding = config.features.encoding()?;

    let mut records = Vec::with_capacity(inputs.len());
    for (id, text, priority) in inputs {
        let stream = textprep::preprocess(id, text, &prep);
        let score = score_document(&stream, &lexicon);
        let topic = assign_topic(&stream, &topic_model, &backend)?;
        let mut record = PredictionRecord {
            input_id: id.clone(),
            time_class: None,
            time_class_probs: None,
            destiny: None,
            destiny_probs: None,
        };
        for (task_name, entry) in &bundle.entries {
            let feature_config = FeatureConfig {
                use_topic: entry.with_topic,
                topic_count: topic_model.k,
                emotion_encoding: encoding,
                standardize: config.features.standardize,
            };
            let mut x = build_features(
                &score,
                *priority,
                entry.with_topic.then_some(topic),
                &feature_config,
            );
            entry.standardizer.apply(&mut x);
            let model_path = config.paths.out.join(&entry.model_file);
            let model = TrainedModel::load(&model_path)
                .map_err(|_| PipelineError::MissingModel(model_path.display().to_string()))?;
            match learn::predict(&model, &x)? {
                Prediction::Distribution(p) => {
                    let probs: BTreeMap<String, f64> =
                        entry.classes.iter().cloned().zip(p.iter().copied()).collect();
                    let best = learn::Prediction::Distribution(p).class().unwrap();
                    let label = entry.classes[best].clone();
                    if task_name == "destiny" {
                        record.destiny = Some(label);
                        record.destiny_probs = Some(probs);
                    } else if task_name == "time_to_resolution" {
                        record.time_class = Some(label);
                        record.time_class_probs = Some(probs);
                    }
                }
                Prediction::Hours(_) => {}
            }
        }
        records.push(record);
    }
    Ok(records)
}
