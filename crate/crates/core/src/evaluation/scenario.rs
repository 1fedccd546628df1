use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classifier::{train_classifier, ClassifierConfig, ClassifierKind};
use super::metrics::{metrics, MetricReport, DEFAULT_THRESHOLD};
use super::utility::{metric_values, utility, MetricDiff, Scenario, UtilityReport};
use crate::error::{PrroError, Result};
use crate::table::{concat, Dataset, SplitBundle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub threshold: f64,
    pub classifier: ClassifierConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            threshold: DEFAULT_THRESHOLD,
            classifier: ClassifierConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub classifier: ClassifierKind,
    pub baseline: MetricReport,
    /// `None` when the synthetic set is empty.
    pub replacement: Option<UtilityReport>,
    pub appendant: UtilityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub dataset: String,
    pub positive_label: String,
    pub threshold: f64,
    pub training_rows: usize,
    pub synthetic_rows: usize,
    pub validation_rows: usize,
    pub entries: Vec<ScenarioEntry>,
}

fn annotate(scenario: &str, kind: ClassifierKind) -> impl Fn(PrroError) -> PrroError + '_ {
    move |e| PrroError::Scenario {
        scenario: scenario.to_string(),
        kind: kind.to_string(),
        source: Box::new(e),
    }
}

/// Trains each classifier kind on D_T (baseline), the synthetic set
/// (replacement) and D_T followed by the synthetic rows (appendant), and
/// scores all of them on the validation part.
pub fn evaluate_scenarios(
    dataset_name: &str,
    bundle: &SplitBundle,
    synthetic: &Dataset,
    kinds: &[ClassifierKind],
    positive_label: &str,
    config: &EvalConfig,
) -> Result<ScenarioReport> {
    let training = bundle.training();
    if !training.schema().same_layout(synthetic.schema()) {
        return Err(PrroError::SchemaMismatch(format!(
            "synthetic columns [{}] do not match the source layout [{}]",
            synthetic.schema().names().join(", "),
            training.schema().names().join(", ")
        )));
    }
    let appended = concat(&training, synthetic)?;
    let validation = &bundle.validation;

    let entries: Vec<Result<ScenarioEntry>> = kinds
        .par_iter()
        .map(|&kind| {
            let fit_and_score = |train: &Dataset, scenario: &str| -> Result<MetricReport> {
                let clf = train_classifier(kind, train, positive_label, &config.classifier)
                    .map_err(annotate(scenario, kind))?;
                metrics(&clf, validation, config.threshold).map_err(annotate(scenario, kind))
            };
            let baseline = fit_and_score(&training, "baseline")?;
            let replacement = if synthetic.is_empty() {
                None
            } else {
                let m = fit_and_score(synthetic, "replacement")?;
                Some(utility(&m, &baseline, Scenario::Replacement)?)
            };
            let appendant_metrics = fit_and_score(&appended, "appendant")?;
            let appendant = utility(&appendant_metrics, &baseline, Scenario::Appendant)?;
            Ok(ScenarioEntry {
                classifier: kind,
                baseline,
                replacement,
                appendant,
            })
        })
        .collect();

    Ok(ScenarioReport {
        dataset: dataset_name.to_string(),
        positive_label: positive_label.to_string(),
        threshold: config.threshold,
        training_rows: training.n_rows(),
        synthetic_rows: synthetic.n_rows(),
        validation_rows: validation.n_rows(),
        entries: entries.into_iter().collect::<Result<_>>()?,
    })
}

impl ScenarioReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| PrroError::Metrics(format!("scenario report: {e}")))
    }

    /// Long-format table with header
    /// `dataset,scenario,classifier,metric,baseline,target,difference`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,scenario,classifier,metric,baseline,target,difference\n");
        let dataset = csv_field(&self.dataset);
        for entry in &self.entries {
            let reports = entry
                .replacement
                .iter()
                .chain(std::iter::once(&entry.appendant));
            for u in reports {
                let base = metric_values(&u.baseline);
                let target = metric_values(&u.target);
                for (k, name) in MetricDiff::NAMES.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{dataset},{},{},{name},{},{},{}",
                        u.scenario,
                        entry.classifier,
                        base[k],
                        target[k],
                        u.difference.values()[k]
                    );
                }
            }
        }
        out
    }

    pub fn entry(&self, kind: ClassifierKind) -> Option<&ScenarioEntry> {
        self.entries.iter().find(|e| e.classifier == kind)
    }
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}
