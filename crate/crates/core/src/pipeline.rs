//! Run configuration, the four serial phases (acquire, label, train/evaluate,
//! report) and the artifact manifest.
//!
//! Per dataset `<name>` the run writes, under the output directory:
//! `<name>/corpus.jsonl`, `<name>/labeled.jsonl`, `<name>/vocab.tsv`,
//! `<name>/models/<algorithm>.model`, `<name>/reports/<algorithm>.{json,csv}`,
//! `<name>/comparison.{csv,json,svg}` and
//! `<name>/polarity_histogram.{csv,svg}`, plus one `manifest.json` listing
//! every other file with its SHA-256.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifiers::{self, Algorithm, ClassifierError, TrainingConfig};
use crate::corpus::{self, CorpusError, Dataset, Provenance};
use crate::evaluation::{self, EvaluationError, EvaluationReport};
use crate::polarity::{self, Lexicon, LexiconError};
use crate::report::{self, ComparisonTable, ReportError};
use crate::synthetic::{self, SyntheticError};
use crate::text::{LemmaRules, Preprocessor, StopwordList, TextError};
use crate::vectorizer::{FeatureKind, Featurizer, VectorizerError};
use crate::youtube::{self, CommentOrder, FetchRequest, FixtureTransport, HttpTransport, YoutubeClient, YoutubeError};

pub const DEFAULT_SEED: u64 = 42;
pub const MANIFEST_FILE: &str = "manifest.json";

/// Process exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Io = 1,
    Remote = 2,
    Config = 3,
    Numerical = 4,
}

#[derive(Debug)]
pub struct PipelineError {
    pub kind: ExitKind,
    pub phase: Option<String>,
    pub message: String,
}

impl PipelineError {
    pub fn new(kind: ExitKind, message: impl Into<String>) -> Self {
        PipelineError {
            kind,
            phase: None,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Config, message)
    }

    /// Prefixes the phase name unless an inner phase already did.
    pub fn in_phase(mut self, phase: &str) -> Self {
        if self.phase.is_none() {
            self.phase = Some(phase.to_string());
        }
        self
    }

    pub fn exit_code(&self) -> u8 {
        self.kind as u8
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.phase {
            Some(phase) => write!(f, "{phase}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for PipelineError {}

macro_rules! classify {
    ($err:ty, |$e:ident| $kind:expr) => {
        impl From<$err> for PipelineError {
            fn from($e: $err) -> Self {
                let kind = $kind;
                PipelineError::new(kind, $e.to_string())
            }
        }
    };
}

classify!(CorpusError, |e| match e {
    CorpusError::NotFound(_) | CorpusError::Io { .. } => ExitKind::Io,
    _ => ExitKind::Config,
});
classify!(LexiconError, |e| match e {
    LexiconError::NotFound(_) | LexiconError::Io { .. } => ExitKind::Io,
    _ => ExitKind::Config,
});
classify!(TextError, |e| match e {
    TextError::Io { .. } => ExitKind::Io,
    _ => ExitKind::Config,
});
classify!(VectorizerError, |e| match e {
    VectorizerError::Io { .. } => ExitKind::Io,
    _ => ExitKind::Config,
});
classify!(ClassifierError, |e| match e {
    ClassifierError::Io { .. } => ExitKind::Io,
    ClassifierError::Divergence { .. } => ExitKind::Numerical,
    _ => ExitKind::Config,
});
classify!(ReportError, |e| match e {
    ReportError::Io { .. } => ExitKind::Io,
    _ => ExitKind::Config,
});
classify!(YoutubeError, |e| match e {
    YoutubeError::MissingKey | YoutubeError::ZeroMax => ExitKind::Config,
    _ => ExitKind::Remote,
});
classify!(SyntheticError, |_e| ExitKind::Config);

impl From<EvaluationError> for PipelineError {
    fn from(e: EvaluationError) -> Self {
        match e {
            EvaluationError::Classifier(inner) => inner.into(),
            other => PipelineError::config(other.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::new(ExitKind::Io, format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub ratio: f64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratio: evaluation::DEFAULT_RATIO,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n: usize,
    #[serde(default = "default_noise")]
    pub noise_rate: f64,
}

fn default_noise() -> f64 {
    0.1
}

/// One input: exactly one of `corpus`, `video_ids` or `synthetic`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    /// Output subdirectory; derived from the source when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub video_ids: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_comments: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
}

impl DatasetSpec {
    pub fn synthetic(n: usize, noise_rate: f64) -> Self {
        DatasetSpec {
            synthetic: Some(SyntheticSpec { n, noise_rate }),
            ..Default::default()
        }
    }

    fn derived_name(&self) -> String {
        if let Some(s) = &self.synthetic {
            format!("synthetic-{}", s.n)
        } else if let Some(p) = &self.corpus {
            p.file_stem().map_or("corpus".to_string(), |s| s.to_string_lossy().into_owned())
        } else {
            self.video_ids.join("+")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FetchConfig {
    /// Replay `<video_id>.page<N>.json` files instead of calling the API.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixtures_dir: Option<PathBuf>,
    pub order: CommentOrder,
    pub max_comments: usize,
}

impl Default for FetchConfig {
    fn default() -> Self {
        FetchConfig {
            fixtures_dir: None,
            order: CommentOrder::Relevance,
            max_comments: 1000,
        }
    }
}

/// The JSON run configuration. Relative paths are resolved against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// The only seed in a run: synthetic corpus `i` uses `seed + i`, splits use `seed`.
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma_exceptions: Option<PathBuf>,
    pub neutral_band: f64,
    pub datasets: Vec<DatasetSpec>,
    pub algorithms: Vec<String>,
    pub training: TrainingConfig,
    pub split: SplitConfig,
    pub features: FeatureKind,
    pub min_df: usize,
    pub histogram_bins: usize,
    pub fetch: FetchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: DEFAULT_SEED,
            output_dir: PathBuf::from("sentimill-out"),
            lexicon: None,
            stopwords: None,
            lemma_exceptions: None,
            neutral_band: 0.0,
            datasets: Vec::new(),
            algorithms: Algorithm::ALL.iter().map(|a| a.name().to_string()).collect(),
            training: TrainingConfig::default(),
            split: SplitConfig::default(),
            features: FeatureKind::Tfidf,
            min_df: 1,
            histogram_bins: report::DEFAULT_BINS,
            fetch: FetchConfig::default(),
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| PipelineError::config(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        resolve(base, &mut cfg.output_dir);
        for p in [&mut cfg.lexicon, &mut cfg.stopwords, &mut cfg.lemma_exceptions, &mut cfg.fetch.fixtures_dir]
            .into_iter()
            .flatten()
        {
            resolve(base, p);
        }
        for d in &mut cfg.datasets {
            if let Some(p) = &mut d.corpus {
                resolve(base, p);
            }
        }
        Ok(cfg)
    }

    /// Fills in derived names, copies the global seed into `training`, and
    /// checks every field.
    pub fn materialize(mut self) -> Result<Self, PipelineError> {
        self.training.seed = self.seed;
        self.training.validate()?;
        self.algorithms()?;
        if !(self.split.ratio > 0.0 && self.split.ratio < 1.0) {
            return Err(PipelineError::config(format!("split.ratio {} must be in (0, 1)", self.split.ratio)));
        }
        if self.histogram_bins < 2 {
            return Err(PipelineError::config("histogram_bins must be at least 2"));
        }
        if self.min_df < 1 {
            return Err(PipelineError::config("min_df must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.neutral_band) {
            return Err(PipelineError::config("neutral_band must be in [0, 1)"));
        }
        if self.datasets.is_empty() {
            return Err(PipelineError::config("config lists no datasets"));
        }
        let mut names = BTreeSet::new();
        for d in &mut self.datasets {
            let sources = d.corpus.is_some() as usize + !d.video_ids.is_empty() as usize + d.synthetic.is_some() as usize;
            if sources != 1 {
                return Err(PipelineError::config(
                    "each dataset needs exactly one of corpus, video_ids or synthetic",
                ));
            }
            if d.name.is_none() {
                d.name = Some(d.derived_name());
            }
            let name = d.name.clone().unwrap_or_default();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "._+-".contains(c)) || name.starts_with('.') {
                return Err(PipelineError::config(format!(
                    "dataset name {name:?} must use only ASCII letters, digits and ._+-"
                )));
            }
            if !names.insert(name.clone()) {
                return Err(PipelineError::config(format!("duplicate dataset name {name:?}")));
            }
            if let Some(s) = &d.synthetic {
                if s.n == 0 || !(0.0..=1.0).contains(&s.noise_rate) {
                    return Err(PipelineError::config(format!("dataset {name}: bad synthetic parameters")));
                }
            }
        }
        Ok(self)
    }

    /// Parsed algorithm list in config order; unknown names are errors.
    pub fn algorithms(&self) -> Result<Vec<Algorithm>, PipelineError> {
        if self.algorithms.is_empty() {
            return Err(PipelineError::config("config lists no algorithms"));
        }
        let mut out = Vec::new();
        for name in &self.algorithms {
            let alg: Algorithm = name
                .parse()
                .map_err(|bad: String| PipelineError::config(format!("unknown algorithm {bad:?}")))?;
            if !out.contains(&alg) {
                out.push(alg);
            }
        }
        Ok(out)
    }
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub no_stratify: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        if let Some(lex) = &self.lexicon {
            cfg.lexicon = Some(lex.clone());
        }
        if self.no_stratify {
            cfg.split.stratified = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub artifacts: Vec<Artifact>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn load_lexicon_or_default(path: Option<&Path>, rules: &LemmaRules) -> Result<Lexicon, PipelineError> {
    Ok(match path {
        Some(p) => polarity::load_lexicon(p)?.with_lemma_fallback(rules.clone()),
        None => Lexicon::default().with_lemma_fallback(rules.clone()),
    })
}

/// Prints `n=... negative=k (p%) ...` for a labeled dataset.
pub fn distribution_summary(dataset: &Dataset) -> String {
    let counts = polarity::distribution(dataset);
    let n: usize = counts.iter().sum();
    let pct = |k: usize| if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 };
    format!(
        "n={n} negative={} ({:.1}%) neutral={} ({:.1}%) positive={} ({:.1}%)",
        counts[0],
        pct(counts[0]),
        counts[1],
        pct(counts[1]),
        counts[2],
        pct(counts[2])
    )
}

/// Fetches one video's top-level comments, from fixtures when `fixtures` is set.
pub fn fetch_video(
    video_id: &str,
    max_comments: usize,
    api_key: Option<&str>,
    fixtures: Option<&Path>,
    order: CommentOrder,
) -> Result<Dataset, PipelineError> {
    let requests = [video_id.to_string()];
    let mut out = fetch_videos(&requests, max_comments, api_key, fixtures, order)?;
    Ok(out.remove(0))
}

fn fetch_videos(
    video_ids: &[String],
    max_comments: usize,
    api_key: Option<&str>,
    fixtures: Option<&Path>,
    order: CommentOrder,
) -> Result<Vec<Dataset>, PipelineError> {
    let api_key = match fixtures {
        Some(_) => api_key.unwrap_or("fixture").to_string(),
        None => youtube::resolve_api_key(api_key)?,
    };
    let requests: Vec<FetchRequest> = video_ids
        .iter()
        .map(|v| FetchRequest {
            video_id: v.clone(),
            max_comments,
            api_key: api_key.clone(),
            order,
        })
        .collect();
    let results = match fixtures {
        Some(dir) => YoutubeClient::new(FixtureTransport::new(dir)).fetch_many(&requests),
        None => YoutubeClient::new(HttpTransport::new()).fetch_many(&requests),
    };
    let fetched_at = chrono::Utc::now();
    video_ids
        .iter()
        .zip(results)
        .map(|(v, r)| {
            let comments = r.map_err(|e| PipelineError::from(e).in_phase(&format!("fetch {v}")))?;
            Ok(Dataset::from_comments(
                comments,
                Provenance {
                    sources: vec![v.clone()],
                    fetched_at: Some(fetched_at),
                    seed: None,
                },
            ))
        })
        .collect()
}

/// Results of one dataset's train/evaluate phase.
#[derive(Debug, Clone)]
pub struct DatasetOutcome {
    pub name: String,
    pub reports: Vec<EvaluationReport>,
    pub table: ComparisonTable,
}

pub struct Pipeline {
    cfg: RunConfig,
    algorithms: Vec<Algorithm>,
    preprocessor: Preprocessor,
    lexicon: Lexicon,
    api_key: Option<String>,
    written: BTreeSet<String>,
}

impl Pipeline {
    /// Materializes `cfg` and loads the lexicon and preprocessing resources.
    pub fn new(cfg: RunConfig, api_key: Option<String>) -> Result<Self, PipelineError> {
        let cfg = cfg.materialize()?;
        let algorithms = cfg.algorithms()?;
        let stops = match &cfg.stopwords {
            Some(p) => StopwordList::load(p)?,
            None => StopwordList::default(),
        };
        let rules = match &cfg.lemma_exceptions {
            Some(p) => LemmaRules::default().with_exceptions_file(p)?,
            None => LemmaRules::default(),
        };
        let lexicon = load_lexicon_or_default(cfg.lexicon.as_deref(), &rules)?;
        Ok(Pipeline {
            cfg,
            algorithms,
            preprocessor: Preprocessor::new(stops, rules),
            lexicon,
            api_key,
            written: BTreeSet::new(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    fn out_path(&self, rel: &str) -> PathBuf {
        self.cfg.output_dir.join(rel)
    }

    fn ensure_dir(&self, rel: &str) -> Result<(), PipelineError> {
        let dir = self.out_path(rel);
        fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))
    }

    fn record(&mut self, rel: String) {
        self.written.insert(rel);
    }

    fn write_text(&mut self, rel: String, contents: &str) -> Result<(), PipelineError> {
        let path = self.out_path(&rel);
        fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
        self.record(rel);
        Ok(())
    }

    /// Phase 1: generate, load or fetch the dataset's comments.
    pub fn acquire(&mut self, index: usize, spec: &DatasetSpec) -> Result<Dataset, PipelineError> {
        let name = spec.name.clone().expect("materialized");
        let dataset = if let Some(s) = &spec.synthetic {
            let seed = self.cfg.seed.wrapping_add(index as u64);
            synthetic::generate_synthetic(s.n, seed, s.noise_rate, &self.lexicon)?
        } else if let Some(p) = &spec.corpus {
            corpus::load_jsonl(p)?
        } else {
            let max = spec.max_comments.unwrap_or(self.cfg.fetch.max_comments);
            let parts = fetch_videos(
                &spec.video_ids,
                max,
                self.api_key.as_deref(),
                self.cfg.fetch.fixtures_dir.as_deref(),
                self.cfg.fetch.order,
            )?;
            parts.iter().skip(1).fold(parts[0].clone(), |acc, d| corpus::merge(&acc, d))
        };
        self.ensure_dir(&name)?;
        let rel = format!("{name}/corpus.jsonl");
        corpus::save_jsonl(&dataset, &self.out_path(&rel))?;
        self.record(rel);
        Ok(dataset)
    }

    /// Phase 2: score and label with the lexicon, then save.
    pub fn label(&mut self, name: &str, dataset: &Dataset) -> Result<Dataset, PipelineError> {
        let labeled = polarity::label_dataset_with_band(dataset, &self.lexicon, self.cfg.neutral_band);
        self.ensure_dir(name)?;
        let rel = format!("{name}/labeled.jsonl");
        corpus::save_jsonl(&labeled, &self.out_path(&rel))?;
        self.record(rel);
        Ok(labeled)
    }

    /// Phase 3: one split shared by every algorithm, vocabulary fitted on the
    /// training side, then fit, save, evaluate.
    pub fn train_eval(&mut self, name: &str, labeled: &Dataset) -> Result<DatasetOutcome, PipelineError> {
        let split = evaluation::split(labeled, self.cfg.split.ratio, self.cfg.seed, self.cfg.split.stratified)?;
        let texts: Vec<&str> = split.train.records().iter().map(|r| r.comment.text.as_str()).collect();
        let featurizer = Featurizer::fit(self.preprocessor.clone(), &texts, self.cfg.min_df, self.cfg.features)?;
        let vocab_id = featurizer.vocabulary.id();
        for dir in ["models", "reports"] {
            self.ensure_dir(&format!("{name}/{dir}"))?;
        }
        self.write_text(format!("{name}/vocab.tsv"), &featurizer.vocabulary.to_tsv())?;
        let x: Vec<_> = texts.iter().map(|t| featurizer.featurize(t)).collect();
        let y = evaluation::labels(&split.train)?;
        let mut reports = Vec::new();
        for alg in self.algorithms.clone() {
            let model = classifiers::fit(alg, &x, &y, &self.cfg.training)
                .map_err(|e| PipelineError::from(e).in_phase(&format!("train-eval {name} {}", alg.name())))?
                .with_vocabulary_id(vocab_id.clone());
            let rel = format!("{name}/models/{}.model", alg.name());
            classifiers::save_model(&model, &self.out_path(&rel))?;
            self.record(rel);
            let report = evaluation::evaluate(&model, &split.test, &featurizer)?;
            self.write_text(format!("{name}/reports/{}.json", alg.name()), &report.to_json())?;
            self.write_text(format!("{name}/reports/{}.csv", alg.name()), &report.to_csv())?;
            reports.push(report);
        }
        let table = ComparisonTable::from_reports(name, labeled.len(), &reports);
        self.write_text(format!("{name}/comparison.csv"), &table.to_csv())?;
        self.write_text(format!("{name}/comparison.json"), &table.to_json())?;
        Ok(DatasetOutcome {
            name: name.to_string(),
            reports,
            table,
        })
    }

    /// Phase 4: polarity histogram and comparison chart.
    pub fn report(&mut self, name: &str, labeled: &Dataset, table: Option<&ComparisonTable>) -> Result<(), PipelineError> {
        self.ensure_dir(name)?;
        let hist = report::polarity_histogram(labeled, self.cfg.histogram_bins)?;
        self.write_text(format!("{name}/polarity_histogram.csv"), &hist.to_csv())?;
        self.write_text(
            format!("{name}/polarity_histogram.svg"),
            &hist.to_svg(&format!("{name}: polarity (n = {})", labeled.len())),
        )?;
        if let Some(table) = table {
            self.write_text(format!("{name}/comparison.svg"), &table.to_svg()?)?;
        }
        Ok(())
    }

    /// Hashes every file written so far and saves `manifest.json`.
    pub fn write_manifest(&self) -> Result<Manifest, PipelineError> {
        let mut artifacts = Vec::new();
        for rel in &self.written {
            let path = self.out_path(rel);
            let bytes = fs::read(&path).map_err(|e| io_error(&path, e))?;
            artifacts.push(Artifact {
                path: rel.clone(),
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
            });
        }
        let manifest = Manifest {
            config: self.cfg.clone(),
            artifacts,
        };
        let path = self.out_path(MANIFEST_FILE);
        fs::create_dir_all(&self.cfg.output_dir).map_err(|e| io_error(&self.cfg.output_dir, e))?;
        fs::write(&path, manifest.to_json()).map_err(|e| io_error(&path, e))?;
        Ok(manifest)
    }

    /// All four phases for every dataset, in order, then the manifest.
    pub fn run_all(&mut self) -> Result<(Vec<DatasetOutcome>, Manifest), PipelineError> {
        let specs = self.cfg.datasets.clone();
        let mut outcomes = Vec::new();
        for (i, spec) in specs.iter().enumerate() {
            let name = spec.name.clone().expect("materialized");
            let raw = self.acquire(i, spec).map_err(|e| e.in_phase(&format!("acquire {name}")))?;
            let labeled = self.label(&name, &raw).map_err(|e| e.in_phase(&format!("label {name}")))?;
            let outcome = self
                .train_eval(&name, &labeled)
                .map_err(|e| e.in_phase(&format!("train-eval {name}")))?;
            self.report(&name, &labeled, Some(&outcome.table))
                .map_err(|e| e.in_phase(&format!("report {name}")))?;
            outcomes.push(outcome);
        }
        let manifest = self.write_manifest().map_err(|e| e.in_phase("manifest"))?;
        Ok((outcomes, manifest))
    }

    /// Train/evaluate on already-labeled inputs: labeled corpora or synthetic
    /// sources (which are labeled on generation). Video sources need `run-all`.
    pub fn run_train_eval(&mut self) -> Result<(Vec<DatasetOutcome>, Manifest), PipelineError> {
        let specs = self.cfg.datasets.clone();
        let mut outcomes = Vec::new();
        for (i, spec) in specs.iter().enumerate() {
            let name = spec.name.clone().expect("materialized");
            let phase = format!("train-eval {name}");
            let labeled = if let Some(p) = &spec.corpus {
                let d = corpus::load_jsonl(p).map_err(|e| PipelineError::from(e).in_phase(&phase))?;
                if !d.is_labeled() {
                    return Err(
                        PipelineError::config(format!("{} is not labeled; run `sentimill label` first", p.display()))
                            .in_phase(&phase),
                    );
                }
                d
            } else if spec.synthetic.is_some() {
                let raw = self.acquire(i, spec).map_err(|e| e.in_phase(&phase))?;
                self.label(&name, &raw).map_err(|e| e.in_phase(&phase))?
            } else {
                return Err(PipelineError::config("video sources need `run-all` (or `fetch` then `label`)").in_phase(&phase));
            };
            outcomes.push(self.train_eval(&name, &labeled).map_err(|e| e.in_phase(&phase))?);
        }
        let manifest = self.write_manifest().map_err(|e| e.in_phase("manifest"))?;
        Ok((outcomes, manifest))
    }
}

/// Loads a config file and applies overrides.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, PipelineError> {
    let mut cfg = RunConfig::load(path)?;
    overrides.apply(&mut cfg);
    Ok(cfg)
}

/// Labels a JSONL corpus; returns the labeled dataset.
pub fn label_file(input: &Path, lexicon: Option<&Path>, out: &Path, band: f64) -> Result<Dataset, PipelineError> {
    if !(0.0..1.0).contains(&band) {
        return Err(PipelineError::config("neutral band must be in [0, 1)"));
    }
    let lexicon = load_lexicon_or_default(lexicon, &LemmaRules::default())?;
    let dataset = corpus::load_jsonl(input)?;
    let labeled = polarity::label_dataset_with_band(&dataset, &lexicon, band);
    corpus::save_jsonl(&labeled, out)?;
    Ok(labeled)
}

/// Histogram (and optionally the comparison chart) for existing outputs.
pub fn report_files(
    input: &Path,
    comparison: Option<&Path>,
    out_dir: &Path,
    bins: usize,
) -> Result<Vec<PathBuf>, PipelineError> {
    let labeled = corpus::load_jsonl(input)?;
    if labeled.is_empty() {
        return Err(ReportError::EmptyDataset.into());
    }
    fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let name = input.file_stem().map_or("corpus".to_string(), |s| s.to_string_lossy().into_owned());
    let csv = out_dir.join("polarity_histogram.csv");
    let svg = out_dir.join("polarity_histogram.svg");
    report::emit_polarity_histogram(
        &labeled,
        bins,
        &format!("{name}: polarity (n = {})", labeled.len()),
        &csv,
        &svg,
    )?;
    let mut written = vec![csv, svg];
    if let Some(path) = comparison {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        let table: ComparisonTable = serde_json::from_str(&text)
            .map_err(|e| PipelineError::config(format!("{}: {e}", path.display())))?;
        let out = out_dir.join("comparison.svg");
        report::emit_comparison_chart(&table, &out)?;
        written.push(out);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dir: &Path, n: usize) -> RunConfig {
        RunConfig {
            output_dir: dir.to_path_buf(),
            datasets: vec![DatasetSpec::synthetic(n, 0.1)],
            ..RunConfig::default()
        }
    }

    #[test]
    fn run_all_writes_every_artifact_into_the_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = Pipeline::new(config(dir.path(), 300), None).unwrap();
        let (outcomes, manifest) = p.run_all().unwrap();
        assert_eq!(outcomes[0].table.rows.len(), 3);
        let paths: Vec<&str> = manifest.artifacts.iter().map(|a| a.path.as_str()).collect();
        for want in [
            "synthetic-300/comparison.csv",
            "synthetic-300/comparison.svg",
            "synthetic-300/polarity_histogram.svg",
            "synthetic-300/models/linear_svm.model",
            "synthetic-300/vocab.tsv",
        ] {
            assert!(paths.contains(&want), "{want} missing from {paths:?}");
        }
        for a in &manifest.artifacts {
            let bytes = fs::read(dir.path().join(&a.path)).unwrap();
            assert_eq!(sha256_hex(&bytes), a.sha256);
        }
        let mut sorted = paths.clone();
        sorted.sort();
        assert_eq!(paths, sorted);
        assert_eq!(manifest.config.training.seed, DEFAULT_SEED);
        let on_disk: Manifest =
            serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(on_disk, manifest);
    }

    #[test]
    fn config_validation() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path(), 10);
        cfg.algorithms = vec!["naive_bayes".into(), "random_forest".into()];
        let err = Pipeline::new(cfg, None).err().unwrap();
        assert_eq!(err.kind, ExitKind::Config);
        assert!(err.message.contains("random_forest"));

        let mut cfg = config(dir.path(), 10);
        cfg.datasets.push(DatasetSpec::synthetic(10, 0.1));
        assert!(Pipeline::new(cfg, None).err().unwrap().message.contains("duplicate"));

        let mut cfg = config(dir.path(), 10);
        cfg.datasets[0].corpus = Some("x.jsonl".into());
        assert!(Pipeline::new(cfg, None).is_err());

        let err = RunConfig::load(&dir.path().join("absent.json")).unwrap_err();
        assert_eq!(err.kind, ExitKind::Config);
        fs::write(dir.path().join("bad.json"), r#"{"sed": 1}"#).unwrap();
        assert_eq!(RunConfig::load(&dir.path().join("bad.json")).unwrap_err().kind, ExitKind::Config);
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"output_dir": "out", "datasets": [{"corpus": "data/c.jsonl"}]}"#).unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.output_dir, dir.path().join("out"));
        assert_eq!(cfg.datasets[0].corpus.as_deref(), Some(dir.path().join("data/c.jsonl").as_path()));
        let cfg = cfg.materialize().unwrap();
        assert_eq!(cfg.datasets[0].name.as_deref(), Some("c"));
    }

    #[test]
    fn phase_is_prefixed_once() {
        let e = PipelineError::config("boom").in_phase("label x").in_phase("outer");
        assert_eq!(e.to_string(), "label x: boom");
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn divergence_maps_to_numerical() {
        let e: PipelineError = ClassifierError::Divergence {
            class: crate::corpus::SentimentClass::Neutral,
            epoch: 3,
        }
        .into();
        assert_eq!(e.exit_code(), 4);
    }
}
