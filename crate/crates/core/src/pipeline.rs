//! End-to-end run: load, split, prune, reorder, generate, restore column
//! order, leakage check, evaluate, report. Driven by one TOML file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::encoding::{write_rejects, NameMode, ParsePolicy};
use crate::error::{PrroError, Result};
use crate::evaluation::{
    degenerate_positive_fix, evaluate_scenarios, train_classifier, ClassifierConfig, ClassifierKind,
    DiscountComparison, EvalConfig, LogisticConfig, NaiveBayesConfig, ScenarioReport, TreeConfig,
    DEFAULT_THRESHOLD,
};
use crate::generator::{bridge_command_from_env, fit_chain, leakage_check, run_bridge, ChainConfig, LeakageReport};
use crate::pruning::{cluster_centroids, prune_signal, random_undersample, PruneReport, PruningConfig};
use crate::reordering::{
    inverse_reorder, reorder, ColumnPermutation, ImportanceConfig, ImportanceMetric, ReorderMode,
};
use crate::seed::derive_seed;
use crate::table::{
    load_csv, load_sidecar, positive_rate, save_csv, sidecar_path_for, split, write_csv, Dataset, SchemaSidecar,
    SchemaSource, SplitBundle, SplitRatios,
};

/// Stage labels; each stage seeds its RNG with `derive_seed(root, label)`.
pub mod seeds {
    pub const SPLIT: &str = "split";
    pub const PRUNE: &str = "prune";
    pub const REORDER: &str = "reorder";
    pub const GENERATE: &str = "generate";
    pub const POSITIVE_FIX: &str = "positive_fix";
    pub const ALL: [&str; 5] = [SPLIT, PRUNE, REORDER, GENERATE, POSITIVE_FIX];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub ratios: [f64; 3],
    pub stratify: bool,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            ratios: SplitRatios::DEFAULT.0,
            stratify: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneMethod {
    Signal,
    RandomUndersample,
    ClusterCentroids,
}

impl PruneMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            PruneMethod::Signal => "signal",
            PruneMethod::RandomUndersample => "random_undersample",
            PruneMethod::ClusterCentroids => "cluster_centroids",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruningSection {
    pub enabled: bool,
    pub method: PruneMethod,
    pub tau: f64,
    /// Majority share of the output for random undersampling.
    pub majority_ratio: f64,
    /// Centroid count; defaults to the minority size.
    pub clusters: Option<usize>,
    pub max_comparisons: Option<usize>,
    /// Ordinal codes for categorical features (default: category position).
    pub ordinal_maps: BTreeMap<String, Vec<f64>>,
}

impl Default for PruningSection {
    fn default() -> Self {
        PruningSection {
            enabled: true,
            method: PruneMethod::Signal,
            tau: crate::pruning::DEFAULT_TAU,
            majority_ratio: 0.5,
            clusters: None,
            max_comparisons: None,
            ordinal_maps: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReorderingSection {
    pub mode: ReorderMode,
    /// Model whose permutation importance orders the features.
    pub classifier: ClassifierKind,
    pub repeats: usize,
    pub metric: ImportanceMetric,
}

impl Default for ReorderingSection {
    fn default() -> Self {
        ReorderingSection {
            mode: ReorderMode::PredictorLast,
            classifier: ClassifierKind::DecisionTree,
            repeats: ImportanceConfig::default().repeats,
            metric: ImportanceMetric::Accuracy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Chain,
    Bridge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSection {
    pub kind: GeneratorKind,
    pub bins: usize,
    pub alpha: f64,
    /// External command for the bridge; falls back to `PRRO_BRIDGE_CMD`.
    pub command: Option<String>,
    pub names: NameMode,
    pub parse: ParsePolicy,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        let chain = ChainConfig::default();
        GeneratorSection {
            kind: GeneratorKind::Chain,
            bins: chain.bins,
            alpha: chain.alpha,
            command: None,
            names: NameMode::Real,
            parse: ParsePolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub classifiers: Vec<ClassifierKind>,
    pub threshold: f64,
    pub logistic: LogisticConfig,
    pub tree: TreeConfig,
    pub naive_bayes: NaiveBayesConfig,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        let c = ClassifierConfig::default();
        EvaluationSection {
            classifiers: ClassifierKind::ALL.to_vec(),
            threshold: DEFAULT_THRESHOLD,
            logistic: c.logistic,
            tree: c.tree,
            naive_bayes: c.naive_bayes,
        }
    }
}

impl EvaluationSection {
    pub fn classifier_config(&self) -> ClassifierConfig {
        ClassifierConfig {
            logistic: self.logistic.clone(),
            tree: self.tree.clone(),
            naive_bayes: self.naive_bayes.clone(),
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            threshold: self.threshold,
            classifier: self.classifier_config(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeakageSection {
    pub enabled: bool,
    pub margin: f64,
}

impl Default for LeakageSection {
    fn default() -> Self {
        LeakageSection {
            enabled: true,
            margin: crate::generator::DEFAULT_MARGIN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: PathBuf,
    /// Schema sidecar; defaults to `<input stem>.schema.toml` when present.
    #[serde(default)]
    pub schema: Option<PathBuf>,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub positive: Option<String>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Synthetic row count; defaults to the generator input size.
    #[serde(default)]
    pub synthesis_n: Option<usize>,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub pruning: PruningSection,
    #[serde(default)]
    pub reordering: ReorderingSection,
    #[serde(default)]
    pub generator: GeneratorSection,
    #[serde(default)]
    pub evaluation: EvaluationSection,
    #[serde(default)]
    pub leakage: LeakageSection,
}

fn default_output() -> PathBuf {
    PathBuf::from("prro_out")
}

fn config_err(e: impl std::fmt::Display) -> PrroError {
    PrroError::Config(e.to_string())
}

/// Sets a dotted key in a TOML table. The value is read as TOML when it
/// parses, otherwise as a bare string.
fn set_override(root: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| PrroError::Config(format!("override '{assignment}' is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(PrroError::Config(format!("bad override key '{key}'")));
    }
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| PrroError::Config(format!("override '{key}': '{part}' is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl PipelineConfig {
    /// Parses TOML text, applies `key=value` overrides and resolves relative
    /// paths against `base`.
    pub fn from_toml(text: &str, overrides: &[String], base: &Path) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(config_err)?;
        for o in overrides {
            set_override(&mut table, o)?;
        }
        let mut cfg: PipelineConfig = toml::Value::Table(table).try_into().map_err(config_err)?;
        cfg.resolve(base);
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PrroError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, overrides, base)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.input);
        fix(&mut self.output);
        if let Some(s) = self.schema.as_mut() {
            fix(s);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.input.is_file() {
            return Err(PrroError::Config(format!("input {} does not exist", self.input.display())));
        }
        if let Some(s) = &self.schema {
            if !s.is_file() {
                return Err(PrroError::Config(format!("schema sidecar {} does not exist", s.display())));
            }
        }
        if self.synthesis_n == Some(0) {
            return Err(PrroError::Config("synthesis_n must be at least 1".into()));
        }
        SplitRatios(self.split.ratios).validate().map_err(config_err)?;
        if self.generator.bins < 2 {
            return Err(PrroError::Config("generator.bins must be at least 2".into()));
        }
        if !(self.generator.alpha > 0.0) {
            return Err(PrroError::Config("generator.alpha must be positive".into()));
        }
        self.generator.parse.validate()?;
        if self.evaluation.classifiers.is_empty() {
            return Err(PrroError::Config("evaluation.classifiers is empty".into()));
        }
        if !(0.0..=1.0).contains(&self.evaluation.threshold) {
            return Err(PrroError::Config("evaluation.threshold must lie in [0, 1]".into()));
        }
        if self.reordering.repeats == 0 {
            return Err(PrroError::Config("reordering.repeats must be at least 1".into()));
        }
        if !(0.0..=0.5).contains(&self.leakage.margin) {
            return Err(PrroError::Config("leakage.margin must lie in [0, 0.5]".into()));
        }
        Ok(())
    }

    /// Digest of everything that affects results (the output path excluded).
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output = PathBuf::new();
        sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of the dataset's CSV rendering.
pub fn dataset_digest(dataset: &Dataset) -> String {
    let mut buf = Vec::new();
    write_csv(dataset, &mut buf, Path::new("<memory>")).expect("in-memory write");
    sha256_hex(&buf)
}

/// Loaded input table plus its positive label.
#[derive(Debug, Clone)]
pub struct InputTable {
    pub dataset: Dataset,
    pub positive: String,
}

/// Loads a CSV with its schema. The sidecar (explicit, or next to the CSV)
/// may pin columns or just name the label; `label` and `positive` override
/// it and must agree when both are given.
pub fn load_input(csv: &Path, sidecar: Option<&Path>, label: Option<&str>, positive: Option<&str>) -> Result<InputTable> {
    std::fs::metadata(csv).map_err(|e| PrroError::io(csv, e))?;
    let default_sidecar = sidecar_path_for(csv);
    let sidecar_path = sidecar.map(Path::to_path_buf).or_else(|| default_sidecar.is_file().then_some(default_sidecar));
    let side = match &sidecar_path {
        Some(p) => load_sidecar(p)?,
        None => SchemaSidecar::default(),
    };
    if let (Some(a), Some(b)) = (label, side.label.as_deref()) {
        if a != b {
            return Err(PrroError::Config(format!("label '{a}' disagrees with the sidecar's '{b}'")));
        }
    }
    let source = match side.pinned_schema()? {
        Some(schema) => SchemaSource::Pinned(schema),
        None => SchemaSource::Infer {
            label: label
                .map(str::to_string)
                .or(side.label.clone())
                .ok_or_else(|| PrroError::Config("no label column given (flag, config or sidecar)".into()))?,
        },
    };
    let dataset = load_csv(csv, &source)?;
    let positive = match positive.map(str::to_string).or(side.positive) {
        Some(p) => p,
        None => {
            let cats = &dataset.schema().label().categories;
            if cats.len() == 2 {
                // minority class of a binary label
                let first = positive_rate(&dataset, &cats[0])?;
                if first.positives * 2 <= first.total { cats[0].clone() } else { cats[1].clone() }
            } else {
                return Err(PrroError::Config("no positive label given and the label is not binary".into()));
            }
        }
    };
    crate::table::label_code(dataset.schema(), &positive)?;
    Ok(InputTable { dataset, positive })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_digest: String,
    pub input_digest: String,
    pub seeds: BTreeMap<String, u64>,
    pub stages: Vec<StageRecord>,
    /// Digests of the files written to the output directory.
    pub outputs: BTreeMap<String, String>,
    pub positive_fix_applied: bool,
}

/// Pruning step of the pipeline.
pub fn prune_stage(
    dataset: &Dataset,
    section: &PruningSection,
    positive: &str,
    seed: u64,
) -> Result<(Dataset, PruneReport)> {
    if !section.enabled {
        let report = PruneReport::from_datasets("none", dataset, dataset, positive, None)?;
        return Ok((dataset.clone(), report));
    }
    match section.method {
        PruneMethod::Signal => {
            let mut cfg = PruningConfig::new(dataset.schema(), section.tau, positive);
            for (k, v) in &section.ordinal_maps {
                cfg.ordinal_maps.insert(k.clone(), v.clone());
            }
            cfg.max_comparisons = section.max_comparisons;
            prune_signal(dataset, &cfg)
        }
        PruneMethod::RandomUndersample => {
            let out = random_undersample(dataset, section.majority_ratio, seed)?;
            let report = PruneReport::from_datasets(section.method.as_str(), dataset, &out, positive, None)?;
            Ok((out, report))
        }
        PruneMethod::ClusterCentroids => {
            let k = match section.clusters {
                Some(k) => k,
                None => dataset.rows_with_label(positive)?.len().max(1),
            };
            let out = cluster_centroids(dataset, k, seed)?;
            let report = PruneReport::from_datasets(section.method.as_str(), dataset, &out, positive, None)?;
            Ok((out, report))
        }
    }
}

/// Reorder step; importance mode fits `section.classifier` on `dataset`.
pub fn reorder_stage(
    dataset: &Dataset,
    section: &ReorderingSection,
    positive: &str,
    classifier: &ClassifierConfig,
    seed: u64,
) -> Result<(Dataset, ColumnPermutation)> {
    let importance = ImportanceConfig {
        repeats: section.repeats,
        metric: section.metric,
    };
    let clf = match section.mode {
        ReorderMode::Importance => Some(train_classifier(section.classifier, dataset, positive, classifier)?),
        _ => None,
    };
    reorder(dataset, section.mode, clf.as_ref(), seed, &importance)
}

/// Generator step in the reordered layout. Returns the synthetic rows and
/// any lines the bridge parser dropped.
pub fn generate_stage(
    dataset: &Dataset,
    section: &GeneratorSection,
    n: usize,
    seed: u64,
    bridge_dir: &Path,
) -> Result<(Dataset, Vec<crate::encoding::RejectRecord>)> {
    match section.kind {
        GeneratorKind::Chain => {
            let model = fit_chain(
                dataset,
                &ChainConfig {
                    bins: section.bins,
                    alpha: section.alpha,
                },
            )?;
            Ok((model.sample(n, seed)?, Vec::new()))
        }
        GeneratorKind::Bridge => {
            let cmd = section
                .command
                .clone()
                .or_else(bridge_command_from_env)
                .ok_or_else(|| PrroError::Config("bridge generator needs a command or PRRO_BRIDGE_CMD".into()))?;
            let (out, rejects) = run_bridge(dataset, bridge_dir, &cmd, &section.parse, section.names)?;
            if out.is_empty() {
                return Err(PrroError::Generator("external generator produced no rows".into()));
            }
            Ok((out, rejects))
        }
    }
}

/// Everything one arm of a run produced.
#[derive(Debug, Clone)]
pub struct ArmOutcome {
    pub generator_input: Dataset,
    pub prune_report: PruneReport,
    pub permutation: ColumnPermutation,
    /// Generator output in the original column order.
    pub synthetic: Dataset,
    pub leakage: Option<LeakageReport>,
    pub positive_fix_applied: bool,
    pub scenario: ScenarioReport,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub primary: ArmOutcome,
    /// No pruning, input column order; only with `compare`.
    pub baseline: Option<ArmOutcome>,
    pub comparison: Option<DiscountComparison>,
}

struct Recorder {
    stages: Vec<StageRecord>,
    prefix: String,
}

impl Recorder {
    fn run<T>(
        &mut self,
        stage: &str,
        inputs: &[&Dataset],
        f: impl FnOnce() -> Result<T>,
        outputs: impl FnOnce(&T) -> Vec<String>,
    ) -> Result<T> {
        let name = format!("{}{stage}", self.prefix);
        log::info!("stage {name}");
        let start = Instant::now();
        let value = f().map_err(|e| PrroError::Stage {
            stage: name.clone(),
            source: Box::new(e),
        })?;
        self.stages.push(StageRecord {
            stage: name,
            inputs: inputs.iter().map(|d| dataset_digest(d)).collect(),
            outputs: outputs(&value),
            millis: start.elapsed().as_secs_f64() * 1000.0,
        });
        Ok(value)
    }
}

fn write_text(path: &Path, text: &str, files: &mut BTreeMap<String, String>, root: &Path) -> Result<()> {
    std::fs::write(path, text).map_err(|e| PrroError::io(path, e))?;
    let key = path.strip_prefix(root).unwrap_or(path).to_string_lossy().replace('\\', "/");
    files.insert(key, sha256_hex(text.as_bytes()));
    Ok(())
}

fn write_dataset(path: &Path, d: &Dataset, files: &mut BTreeMap<String, String>, root: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_csv(d, &mut buf, path)?;
    let text = String::from_utf8(buf).expect("csv output is utf-8");
    write_text(path, &text, files, root)
}

struct ArmSpec<'a> {
    pruning: PruningSection,
    reorder: Option<&'a ReorderingSection>,
    dir: PathBuf,
}

fn run_arm(
    cfg: &PipelineConfig,
    source_name: &str,
    positive: &str,
    bundle: &SplitBundle,
    spec: ArmSpec<'_>,
    rec: &mut Recorder,
    files: &mut BTreeMap<String, String>,
) -> Result<ArmOutcome> {
    let root = &cfg.output;
    let dir = &spec.dir;
    std::fs::create_dir_all(dir).map_err(|e| PrroError::io(dir, e))?;
    let seed = |label| derive_seed(cfg.seed, label);
    let train = &bundle.generator_train;

    let (generator_input, prune_report) = rec.run(
        "prune",
        &[train],
        || prune_stage(train, &spec.pruning, positive, seed(seeds::PRUNE)),
        |(d, _)| vec![dataset_digest(d)],
    )?;
    write_dataset(&dir.join("generator_input.csv"), &generator_input, files, root)?;
    write_text(&dir.join("prune_report.txt"), &prune_report.to_text(), files, root)?;

    let classifier_cfg = cfg.evaluation.classifier_config();
    let (reordered, permutation) = rec.run(
        "reorder",
        &[&generator_input],
        || match spec.reorder {
            Some(section) => reorder_stage(&generator_input, section, positive, &classifier_cfg, seed(seeds::REORDER)),
            None => {
                let names = generator_input.schema().names();
                Ok((generator_input.clone(), ColumnPermutation::identity(&names)))
            }
        },
        |(d, _)| vec![dataset_digest(d)],
    )?;
    write_text(&dir.join("permutation.json"), &(permutation.to_json() + "\n"), files, root)?;

    let n = cfg.synthesis_n.unwrap_or(generator_input.n_rows()).max(1);
    let (generated, rejects) = rec.run(
        "generate",
        &[&reordered],
        || generate_stage(&reordered, &cfg.generator, n, seed(seeds::GENERATE), &dir.join("bridge")),
        |(d, _)| vec![dataset_digest(d)],
    )?;
    if cfg.generator.kind == GeneratorKind::Bridge {
        let path = dir.join("rejects.jsonl");
        write_rejects(&path, &rejects)?;
    }

    let synthetic = rec.run(
        "inverse_reorder",
        &[&generated],
        || inverse_reorder(&generated, &permutation),
        |d| vec![dataset_digest(d)],
    )?;
    write_dataset(&dir.join("synthetic.csv"), &synthetic, files, root)?;
    write_text(
        &dir.join("synthetic.schema.toml"),
        &SchemaSidecar::from_schema(synthetic.schema(), Some(positive)).to_text(),
        files,
        root,
    )?;

    let leakage = if cfg.leakage.enabled {
        let report = rec.run(
            "leakage",
            &[&synthetic, train, &bundle.holdout],
            || leakage_check(&synthetic, train, &bundle.holdout, cfg.leakage.margin),
            |_| Vec::new(),
        )?;
        if report.flag {
            log::warn!(
                "leakage flag raised: {:.3} of synthetic rows are closer to the training rows",
                report.frac_closer_to_train
            );
        }
        write_text(&dir.join("leakage_report.json"), &(report.to_json() + "\n"), files, root)?;
        Some(report)
    } else {
        None
    };

    let evaluated = rec.run(
        "positive_fix",
        &[&synthetic],
        || degenerate_positive_fix(&synthetic, positive, seed(seeds::POSITIVE_FIX)),
        |d| vec![dataset_digest(d)],
    )?;
    let positive_fix_applied = evaluated != synthetic;
    if positive_fix_applied {
        log::warn!("synthetic set had no positive rows; relabelled one for evaluation");
    }

    let kinds = cfg.evaluation.classifiers.clone();
    let eval_cfg = cfg.evaluation.eval_config();
    let scenario = rec.run(
        "evaluate",
        &[&evaluated, &bundle.validation],
        || evaluate_scenarios(source_name, bundle, &evaluated, &kinds, positive, &eval_cfg),
        |_| Vec::new(),
    )?;
    write_text(&dir.join("scenario_report.json"), &(scenario.to_json() + "\n"), files, root)?;
    write_text(&dir.join("report.csv"), &scenario.to_csv(), files, root)?;

    Ok(ArmOutcome {
        generator_input,
        prune_report,
        permutation,
        synthetic,
        leakage,
        positive_fix_applied,
        scenario,
    })
}

/// Runs the pipeline, writing into `config.output`. With `compare`, a
/// second arm without pruning and in the input column order is written to
/// `no_prro/` together with a discount comparison.
pub fn run_pipeline(config: &PipelineConfig, compare: bool) -> Result<RunOutcome> {
    config.validate()?;
    let out = &config.output;
    std::fs::create_dir_all(out).map_err(|e| PrroError::io(out, e))?;
    let mut files = BTreeMap::new();
    let mut rec = Recorder {
        stages: Vec::new(),
        prefix: String::new(),
    };

    let input = rec.run(
        "load",
        &[],
        || {
            load_input(
                &config.input,
                config.schema.as_deref(),
                config.label.as_deref(),
                config.positive.as_deref(),
            )
        },
        |t| vec![dataset_digest(&t.dataset)],
    )?;
    let positive = input.positive.clone();
    let source = &input.dataset;
    let source_name = config
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());

    let bundle = rec.run(
        "split",
        &[source],
        || {
            split(
                source,
                SplitRatios(config.split.ratios),
                derive_seed(config.seed, seeds::SPLIT),
                config.split.stratify,
            )
        },
        |b| vec![dataset_digest(&b.generator_train), dataset_digest(&b.holdout), dataset_digest(&b.validation)],
    )?;
    let parts = out.join("split");
    std::fs::create_dir_all(&parts).map_err(|e| PrroError::io(&parts, e))?;
    write_dataset(&parts.join("generator_train.csv"), &bundle.generator_train, &mut files, out)?;
    write_dataset(&parts.join("holdout.csv"), &bundle.holdout, &mut files, out)?;
    write_dataset(&parts.join("validation.csv"), &bundle.validation, &mut files, out)?;

    let primary = run_arm(
        config,
        &source_name,
        &positive,
        &bundle,
        ArmSpec {
            pruning: config.pruning.clone(),
            reorder: Some(&config.reordering),
            dir: out.clone(),
        },
        &mut rec,
        &mut files,
    )?;

    let (baseline, comparison) = if compare {
        rec.prefix = "no_prro/".into();
        let arm = run_arm(
            config,
            &source_name,
            &positive,
            &bundle,
            ArmSpec {
                pruning: PruningSection {
                    enabled: false,
                    ..config.pruning.clone()
                },
                reorder: None,
                dir: out.join("no_prro"),
            },
            &mut rec,
            &mut files,
        )?;
        let rate = |d: &Dataset| positive_rate(d, &positive).map(|r| r.value());
        let cmp = DiscountComparison::new(
            rate(&arm.generator_input)?,
            rate(&arm.synthetic)?,
            rate(&primary.generator_input)?,
            rate(&primary.synthetic)?,
        )
        .map_err(|e| PrroError::Stage {
            stage: "compare".into(),
            source: Box::new(e),
        })?;
        write_text(&out.join("discount_comparison.csv"), &cmp.to_csv(), &mut files, out)?;
        write_text(
            &out.join("discount_comparison.json"),
            &(serde_json::to_string_pretty(&cmp).expect("serializes") + "\n"),
            &mut files,
            out,
        )?;
        (Some(arm), Some(cmp))
    } else {
        (None, None)
    };

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_digest: config.digest(),
        input_digest: dataset_digest(source),
        seeds: seeds::ALL.iter().map(|l| (l.to_string(), derive_seed(config.seed, l))).collect(),
        stages: rec.stages,
        outputs: files,
        positive_fix_applied: primary.positive_fix_applied,
    };
    let path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(&path, text).map_err(|e| PrroError::io(&path, e))?;

    Ok(RunOutcome {
        manifest,
        primary,
        baseline,
        comparison,
    })
}

/// Writes `dataset` and a pinned sidecar next to it.
pub fn save_with_sidecar(dataset: &Dataset, path: &Path, positive: Option<&str>) -> Result<()> {
    save_csv(dataset, path)?;
    SchemaSidecar::from_schema(dataset.schema(), positive).save(&sidecar_path_for(path))
}
